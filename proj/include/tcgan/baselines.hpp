#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "tcgan/common.hpp"
#include "tcgan/series.hpp"

// Comparison augmenters: time slicing (slice-level classification with a
// majority vote) and time warping (speed change of a random slice with
// length restoration).

namespace tcgan {

struct SlicingConfig {
    int n_slices = 3;
};

struct WarpConfig {
    std::vector<double> ratios{0.5, 2.0};
    double slice_fraction = 1.0 / 3.0;
    std::uint64_t seed = 0;
};

inline void check_warp_config(const WarpConfig& cfg) {
    if (cfg.ratios.empty()) throw ConfigError("warp ratios must be nonempty");
    for (double r : cfg.ratios)
        if (!(r > 0)) throw ConfigError("warp ratios must be positive");
    if (!(cfg.slice_fraction > 0) || cfg.slice_fraction > 1.0)
        throw ConfigError("warp slice_fraction must be in (0,1]");
}

// Contiguous partition into n_slices pieces; lengths differ by at most one,
// longer slices first.
inline std::vector<IrregularSeries> slice_series(const IrregularSeries& s, int n_slices) {
    check_series(s, "slice_series");
    const int n = s.length();
    if (n_slices < 1) throw ConfigError("slice_series: n_slices must be positive");
    if (n_slices > n)
        throw ContractError("slice_series: " + std::to_string(n_slices) +
                            " slices exceed series length " + std::to_string(n));
    const int base = n / n_slices;
    const int rem = n % n_slices;
    std::vector<IrregularSeries> out;
    out.reserve(static_cast<size_t>(n_slices));
    int pos = 0;
    for (int i = 0; i < n_slices; ++i) {
        const int len = base + (i < rem ? 1 : 0);
        IrregularSeries slice;
        slice.timestamps.assign(s.timestamps.begin() + pos, s.timestamps.begin() + pos + len);
        slice.values.assign(s.values.begin() + pos, s.values.begin() + pos + len);
        out.push_back(std::move(slice));
        pos += len;
    }
    return out;
}

// Every slice inherits its parent's label; output size is n_slices times the
// input size.
inline LabeledDataset slicing_augment(const LabeledDataset& ds, const SlicingConfig& cfg) {
    LabeledDataset out;
    out.name = ds.name + "+slices";
    out.items.reserve(ds.items.size() * static_cast<size_t>(cfg.n_slices));
    for (const auto& item : ds.items)
        for (auto& slice : slice_series(item.series, cfg.n_slices))
            out.items.push_back({std::move(slice), item.label});
    return out;
}

// Threshold each slice score at 0.5 and take the majority label; an even
// split falls back to the mean score.
inline int slicing_classify(const std::function<double(const IrregularSeries&)>& slice_scorer,
                            const IrregularSeries& series, int n_slices) {
    const auto slices = slice_series(series, n_slices);
    int votes = 0;
    double mean_score = 0.0;
    for (const auto& slice : slices) {
        const double p = slice_scorer(slice);
        votes += p >= 0.5 ? 1 : 0;
        mean_score += p;
    }
    mean_score /= static_cast<double>(slices.size());
    const int against = static_cast<int>(slices.size()) - votes;
    if (votes > against) return 1;
    if (votes < against) return 0;
    return mean_score >= 0.5 ? 1 : 0;
}

namespace detail {

// Resample a series to target_len points along its index parametrization:
// position u in [0, n-1] carries linearly interpolated (timestamp, value).
// An integral grid reproduces the original points exactly, which makes a
// ratio-1 warp the identity.
inline IrregularSeries resample_by_index(const IrregularSeries& s, int target_len) {
    const int n = s.length();
    IrregularSeries out;
    out.timestamps.resize(static_cast<size_t>(target_len));
    out.values.resize(static_cast<size_t>(target_len));
    for (int j = 0; j < target_len; ++j) {
        const double u = target_len == 1 ? 0.0
                                         : static_cast<double>(j) * (n - 1) / (target_len - 1);
        const int lo = std::min(n - 2, static_cast<int>(u));
        const double w = u - lo;
        if (w == 0.0) {  // exact knots keep exact coordinates
            out.timestamps[static_cast<size_t>(j)] = s.timestamps[static_cast<size_t>(lo)];
            out.values[static_cast<size_t>(j)] = s.values[static_cast<size_t>(lo)];
        } else if (w == 1.0) {
            out.timestamps[static_cast<size_t>(j)] = s.timestamps[static_cast<size_t>(lo + 1)];
            out.values[static_cast<size_t>(j)] = s.values[static_cast<size_t>(lo + 1)];
        } else {
            out.timestamps[static_cast<size_t>(j)] =
                s.timestamps[static_cast<size_t>(lo)] +
                w * (s.timestamps[static_cast<size_t>(lo + 1)] -
                     s.timestamps[static_cast<size_t>(lo)]);
            out.values[static_cast<size_t>(j)] =
                s.values[static_cast<size_t>(lo)] +
                w * (s.values[static_cast<size_t>(lo + 1)] - s.values[static_cast<size_t>(lo)]);
        }
    }
    return out;
}

}  // namespace detail

// Warp a random contiguous slice by a ratio drawn from config.ratios, then
// restore the original length: crop a random window when the result is
// longer, resample the whole series when shorter.
inline IrregularSeries time_warp(const IrregularSeries& s, const WarpConfig& cfg, Rng& rng) {
    check_series(s, "time_warp");
    check_warp_config(cfg);
    const int n = s.length();
    const int m = std::max(2, round_half_up(cfg.slice_fraction * n));
    if (m > n) throw ContractError("time_warp: degenerate slice (series too short)");
    const int start = static_cast<int>(rng.index(static_cast<std::uint64_t>(n - m + 1)));
    const double ratio = cfg.ratios[rng.index(cfg.ratios.size())];
    const int k = std::max(2, round_half_up(ratio * m));

    IrregularSeries slice;
    slice.timestamps.assign(s.timestamps.begin() + start, s.timestamps.begin() + start + m);
    slice.values.assign(s.values.begin() + start, s.values.begin() + start + m);
    const IrregularSeries warped = detail::resample_by_index(slice, k);

    IrregularSeries spliced;
    spliced.timestamps.reserve(static_cast<size_t>(n - m + k));
    spliced.values.reserve(static_cast<size_t>(n - m + k));
    spliced.timestamps.assign(s.timestamps.begin(), s.timestamps.begin() + start);
    spliced.values.assign(s.values.begin(), s.values.begin() + start);
    spliced.timestamps.insert(spliced.timestamps.end(), warped.timestamps.begin(),
                              warped.timestamps.end());
    spliced.values.insert(spliced.values.end(), warped.values.begin(), warped.values.end());
    spliced.timestamps.insert(spliced.timestamps.end(), s.timestamps.begin() + start + m,
                              s.timestamps.end());
    spliced.values.insert(spliced.values.end(), s.values.begin() + start + m, s.values.end());

    const int len = spliced.length();
    if (len == n) return spliced;
    if (len > n) {
        const int off = static_cast<int>(rng.index(static_cast<std::uint64_t>(len - n + 1)));
        IrregularSeries out;
        out.timestamps.assign(spliced.timestamps.begin() + off,
                              spliced.timestamps.begin() + off + n);
        out.values.assign(spliced.values.begin() + off, spliced.values.begin() + off + n);
        return out;
    }
    return detail::resample_by_index(spliced, n);
}

// Warp uniformly chosen members of class_label until its count reaches
// target_count; originals are retained and come first in the output order.
inline LabeledDataset warping_augment(const LabeledDataset& ds, int class_label, int target_count,
                                      const WarpConfig& cfg, Rng& rng) {
    std::vector<const IrregularSeries*> members = ds.of_class(class_label);
    if (members.empty())
        throw ContractError("warping_augment: class " + std::to_string(class_label) + " is empty");
    LabeledDataset out = ds;
    out.name = ds.name + "+warp";
    int have = static_cast<int>(members.size());
    while (have < target_count) {
        const IrregularSeries& src = *members[rng.index(members.size())];
        out.items.push_back({time_warp(src, cfg, rng), class_label});
        ++have;
    }
    return out;
}

}  // namespace tcgan
