#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tcgan/common.hpp"

// Irregularly sampled labeled time series: synthesis, degradation,
// interpolation, imbalance construction and CSV I/O.

namespace tcgan {

struct IrregularSeries {
    std::vector<double> timestamps;  // strictly increasing
    std::vector<double> values;      // same length, >= 2

    int length() const { return static_cast<int>(timestamps.size()); }
};

inline void check_series(const IrregularSeries& s, const std::string& where) {
    if (s.timestamps.size() != s.values.size())
        throw InvariantError(where + ": timestamp/value lengths differ (" +
                             std::to_string(s.timestamps.size()) + " vs " +
                             std::to_string(s.values.size()) + ")");
    if (s.timestamps.size() < 2)
        throw InvariantError(where + ": series needs at least 2 points");
    for (size_t i = 1; i < s.timestamps.size(); ++i)
        if (!(s.timestamps[i] > s.timestamps[i - 1]))
            throw InvariantError(where + ": timestamps not strictly increasing at index " +
                                 std::to_string(i));
}

struct LabeledItem {
    IrregularSeries series;
    int label = 0;  // 0 or 1
};

struct LabeledDataset {
    std::vector<LabeledItem> items;
    std::string name;

    int count(int label) const {
        int n = 0;
        for (const auto& it : items) n += (it.label == label) ? 1 : 0;
        return n;
    }
    std::vector<const IrregularSeries*> of_class(int label) const {
        std::vector<const IrregularSeries*> out;
        for (const auto& it : items)
            if (it.label == label) out.push_back(&it.series);
        return out;
    }
};

struct SynthesisParams {
    int length = 40;  // L
    double t_min = 0.0;
    double t_max = 12.0;
    double amplitude_base = 1.0;
    double amplitude_jitter_sigma = 0.1;
    double noise_sigma = 0.1;
    double period = 2.0 * std::numbers::pi;
    double phase_shift = 0.0;
    double vertical_shift = 0.0;
    std::uint64_t seed = 0;
};

inline void check_synthesis_params(const SynthesisParams& p) {
    if (p.length < 2) throw ConfigError("synthesis length must be >= 2");
    if (!(p.t_max > p.t_min)) throw ConfigError("synthesis t_max must exceed t_min");
    if (p.amplitude_jitter_sigma < 0 || p.noise_sigma < 0)
        throw ConfigError("synthesis sigmas must be nonnegative");
    if (!(p.period > 0)) throw ConfigError("synthesis period must be positive");
}

namespace detail {

// L sorted draws from Uniform[t_min,t_max]; equal adjacent draws (a
// probability-zero event) are replaced and the vector re-sorted so the
// strict-monotonicity invariant survives.
inline std::vector<double> draw_timestamps(int length, double t_min, double t_max, Rng& rng) {
    std::vector<double> t(static_cast<size_t>(length));
    for (double& v : t) v = rng.uniform(t_min, t_max);
    std::sort(t.begin(), t.end());
    for (;;) {
        bool clean = true;
        for (size_t i = 1; i < t.size(); ++i)
            if (t[i] == t[i - 1]) {
                t[i] = rng.uniform(t_min, t_max);
                clean = false;
            }
        if (clean) return t;
        std::sort(t.begin(), t.end());
    }
}

template <typename SignalFn>
IrregularSeries gen_wave(const SynthesisParams& p, Rng& rng, SignalFn signal) {
    check_synthesis_params(p);
    IrregularSeries s;
    s.timestamps = draw_timestamps(p.length, p.t_min, p.t_max, rng);
    const double amplitude = p.amplitude_base + (p.amplitude_jitter_sigma > 0
                                                     ? rng.normal(0.0, p.amplitude_jitter_sigma)
                                                     : 0.0);
    s.values.reserve(s.timestamps.size());
    for (double t : s.timestamps) {
        double v = amplitude * signal(t) + p.vertical_shift;
        if (p.noise_sigma > 0) v += rng.normal(0.0, p.noise_sigma);
        s.values.push_back(v);
    }
    return s;
}

}  // namespace detail

// value(t) = a*sin(2*pi*t/P + phase) + noise, amplitude jitter drawn once per
// series.
inline IrregularSeries gen_sine(const SynthesisParams& p, Rng& rng) {
    const double w = 2.0 * std::numbers::pi / p.period;
    return detail::gen_wave(p, rng,
                            [&](double t) { return std::sin(w * t + p.phase_shift); });
}

// Rising zero-centered sawtooth with range [-a, a) and period P.
inline IrregularSeries gen_sawtooth(const SynthesisParams& p, Rng& rng) {
    return detail::gen_wave(p, rng, [&](double t) {
        const double u = t / p.period + p.phase_shift / (2.0 * std::numbers::pi);
        return 2.0 * (u - std::floor(u + 0.5));
    });
}

// S sine series labeled 0 and S sawtooth series labeled 1.
inline LabeledDataset make_synthetic_dataset(int per_class, const SynthesisParams& p) {
    if (per_class < 1) throw ConfigError("per-class count must be >= 1");
    Rng rng(p.seed);
    LabeledDataset ds;
    ds.name = "synthetic";
    ds.items.reserve(static_cast<size_t>(2 * per_class));
    for (int i = 0; i < per_class; ++i) ds.items.push_back({gen_sine(p, rng), 0});
    for (int i = 0; i < per_class; ++i) ds.items.push_back({gen_sawtooth(p, rng), 1});
    return ds;
}

inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Removes round(fraction*L) points chosen uniformly without replacement;
// survivors keep their original order.
inline IrregularSeries drop_points(const IrregularSeries& s, double fraction, Rng& rng) {
    check_series(s, "drop_points");
    if (fraction < 0.0 || fraction >= 1.0)
        throw ConfigError("drop_points: fraction must be in [0,1)");
    const int n = s.length();
    const int k = round_half_up(fraction * n);
    if (n - k < 2)
        throw InvariantError("drop_points: removing " + std::to_string(k) +
                             " of " + std::to_string(n) + " points leaves fewer than 2");
    if (k == 0) return s;
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {  // partial Fisher-Yates: first k entries are removed
        const int j = i + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    std::vector<char> removed(static_cast<size_t>(n), 0);
    for (int i = 0; i < k; ++i) removed[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 1;
    IrregularSeries out;
    out.timestamps.reserve(static_cast<size_t>(n - k));
    out.values.reserve(static_cast<size_t>(n - k));
    for (int i = 0; i < n; ++i)
        if (!removed[static_cast<size_t>(i)]) {
            out.timestamps.push_back(s.timestamps[static_cast<size_t>(i)]);
            out.values.push_back(s.values[static_cast<size_t>(i)]);
        }
    return out;
}

inline double interp_at(const IrregularSeries& s, double t) {
    const auto& ts = s.timestamps;
    if (t <= ts.front()) return s.values.front();
    if (t >= ts.back()) return s.values.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const size_t hi = static_cast<size_t>(it - ts.begin());
    const size_t lo = hi - 1;
    const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return s.values[lo] + w * (s.values[hi] - s.values[lo]);
}

// Linear interpolation onto a uniform grid of target_len points spanning
// [min t, max t]; endpoints are exact.
inline IrregularSeries interpolate_regular(const IrregularSeries& s, int target_len) {
    check_series(s, "interpolate_regular");
    if (target_len < 2) throw ConfigError("interpolate_regular: target_len must be >= 2");
    IrregularSeries out;
    out.timestamps.resize(static_cast<size_t>(target_len));
    out.values.resize(static_cast<size_t>(target_len));
    const double t0 = s.timestamps.front(), t1 = s.timestamps.back();
    const double step = (t1 - t0) / (target_len - 1);
    for (int i = 0; i < target_len; ++i) {
        const double t = (i == target_len - 1) ? t1 : t0 + i * step;
        out.timestamps[static_cast<size_t>(i)] = t;
        out.values[static_cast<size_t>(i)] = interp_at(s, t);
    }
    out.values.front() = s.values.front();
    out.values.back() = s.values.back();
    return out;
}

// Affine map of timestamps onto [0,1]; values untouched.
inline IrregularSeries normalize_timestamps(const IrregularSeries& s, double t_min, double t_max) {
    check_series(s, "normalize_timestamps");
    if (!(t_max > t_min)) throw ContractError("normalize_timestamps: t_max must exceed t_min");
    IrregularSeries out = s;
    const double inv = 1.0 / (t_max - t_min);
    for (double& t : out.timestamps) t = (t - t_min) * inv;
    return out;
}

// Uniform subsample without replacement of one class down to keep_n items;
// the other class and the relative order of survivors are untouched.
inline LabeledDataset unbalance(const LabeledDataset& ds, int class_label, int keep_n, Rng& rng) {
    const int have = ds.count(class_label);
    if (keep_n > have)
        throw ContractError("unbalance: keep_n " + std::to_string(keep_n) + " exceeds class " +
                            std::to_string(class_label) + " count " + std::to_string(have));
    if (keep_n < 0) throw ConfigError("unbalance: keep_n must be nonnegative");
    std::vector<int> class_pos;
    for (size_t i = 0; i < ds.items.size(); ++i)
        if (ds.items[i].label == class_label) class_pos.push_back(static_cast<int>(i));
    // choose keep_n survivors
    std::vector<int> pool = class_pos;
    std::vector<char> keep(ds.items.size(), 0);
    for (int i = 0; i < keep_n; ++i) {
        const size_t j = static_cast<size_t>(i) +
                         static_cast<size_t>(rng.index(pool.size() - static_cast<size_t>(i)));
        std::swap(pool[static_cast<size_t>(i)], pool[j]);
        keep[static_cast<size_t>(pool[static_cast<size_t>(i)])] = 1;
    }
    LabeledDataset out;
    out.name = ds.name;
    for (size_t i = 0; i < ds.items.size(); ++i)
        if (ds.items[i].label != class_label || keep[i]) out.items.push_back(ds.items[i]);
    return out;
}

// ---------------------------------------------------------------------------
// CSV format, one series per line: label,t1:v1,t2:v2,...
// Header line "# tcgan-series v1" required; 17 significant digits on save.

inline constexpr const char* kSeriesCsvHeader = "# tcgan-series v1";

namespace detail {

inline double parse_double(std::string_view sv, int line_no, const char* what) {
    double v = 0.0;
    const char* first = sv.data();
    const char* last = sv.data() + sv.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                         std::string(sv) + "'");
    return v;
}

inline void format_double(std::string& out, double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<size_t>(n));
}

}  // namespace detail

inline LabeledDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    LabeledDataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kSeriesCsvHeader)
                throw ParseError("line 1: expected header '" + std::string(kSeriesCsvHeader) +
                                 "', got '" + line + "'");
            header_seen = true;
            continue;
        }
        std::string_view sv(line);
        const size_t comma = sv.find(',');
        if (comma == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'label,t:v,...'");
        const std::string_view label_sv = sv.substr(0, comma);
        int label;
        if (label_sv == "0")
            label = 0;
        else if (label_sv == "1")
            label = 1;
        else
            throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                             std::string(label_sv) + "'");
        IrregularSeries s;
        std::string_view rest = sv.substr(comma + 1);
        while (!rest.empty()) {
            const size_t next = rest.find(',');
            const std::string_view field =
                next == std::string_view::npos ? rest : rest.substr(0, next);
            rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next + 1);
            const size_t colon = field.find(':');
            if (colon == std::string_view::npos)
                throw ParseError("line " + std::to_string(line_no) + ": expected 't:v' pair, got '" +
                                 std::string(field) + "'");
            s.timestamps.push_back(
                detail::parse_double(field.substr(0, colon), line_no, "timestamp"));
            s.values.push_back(detail::parse_double(field.substr(colon + 1), line_no, "value"));
        }
        try {
            check_series(s, "series " + std::to_string(ds.items.size()));
        } catch (const InvariantError& e) {
            throw InvariantError("line " + std::to_string(line_no) + ": " + e.what());
        }
        ds.items.push_back({std::move(s), label});
    }
    if (!header_seen) throw ParseError("line 1: empty file, expected header");
    return ds;
}

inline void save_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings on every platform
    if (!out) throw DataError("cannot write dataset file: " + path);
    out << kSeriesCsvHeader << "\n";
    std::string line;
    for (const auto& item : ds.items) {
        check_series(item.series, "save_csv");
        line.clear();
        line.push_back(item.label ? '1' : '0');
        for (size_t i = 0; i < item.series.timestamps.size(); ++i) {
            line.push_back(',');
            detail::format_double(line, item.series.timestamps[i]);
            line.push_back(':');
            detail::format_double(line, item.series.values[i]);
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw DataError("failed writing dataset file: " + path);
}

}  // namespace tcgan
