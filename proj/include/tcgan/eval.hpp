#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tcgan/baselines.hpp"
#include "tcgan/classifier.hpp"
#include "tcgan/common.hpp"
#include "tcgan/model.hpp"
#include "tcgan/series.hpp"

// AUROC, the train-on-synthetic/test-on-real protocol, and the method
// comparison / rebalancing / missing-fraction experiment drivers.

namespace tcgan {

struct AurocResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_run;
    int n_runs = 0;
};

// Population standard deviation by default; sample_std switches to n-1.
inline AurocResult summarize_runs(std::vector<double> per_run, bool sample_std = false) {
    AurocResult r;
    r.n_runs = static_cast<int>(per_run.size());
    if (r.n_runs == 0) throw ContractError("summarize_runs: no runs");
    r.mean = std::accumulate(per_run.begin(), per_run.end(), 0.0) / r.n_runs;
    double ss = 0.0;
    for (double v : per_run) ss += (v - r.mean) * (v - r.mean);
    const int denom = sample_std ? std::max(1, r.n_runs - 1) : r.n_runs;
    r.stddev = std::sqrt(ss / denom);
    r.per_run = std::move(per_run);
    return r;
}

// Mann-Whitney rank statistic: the fraction of (positive, negative) pairs in
// which the positive scores higher, ties counted as half.
inline double auroc(const std::vector<std::pair<double, int>>& scored) {
    const size_t n = scored.size();
    size_t n_pos = 0;
    for (const auto& [s, label] : scored) {
        if (label != 0 && label != 1)
            throw ContractError("auroc: labels must be 0 or 1");
        n_pos += static_cast<size_t>(label);
    }
    const size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ContractError("undefined AUROC: only one class present");
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return scored[a].first < scored[b].first; });
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scored[idx[j]].first == scored[idx[i]].first) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k)
            if (scored[idx[k]].second == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                                        (static_cast<double>(n_pos) + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct EvalConfig {
    TcganConfig gan{};
    ClassifierConfig clf{};
    int n_runs = 10;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool sample_std = false;
};

namespace detail {

// Runs run_fn(0..n_runs) and gathers results by index; repetitions are
// independent, so the jobs count never changes the outcome.
inline std::vector<double> run_indexed(int n_runs, int jobs,
                                       const std::function<double(int)>& run_fn) {
    std::vector<double> out(static_cast<size_t>(n_runs), 0.0);
    if (jobs <= 1) {
        for (int r = 0; r < n_runs; ++r) out[static_cast<size_t>(r)] = run_fn(r);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= n_runs) return;
            try {
                out[static_cast<size_t>(r)] = run_fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int k = std::min(jobs, n_runs);
    pool.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

inline TcganConfig class_gan_config(const TcganConfig& base, int n_series, std::uint64_t seed) {
    TcganConfig cfg = base;
    cfg.seed = seed;
    cfg.series_len = 0;  // take it from the data
    cfg.batch_size = std::max(2, std::min(cfg.batch_size, n_series));
    return cfg;
}

// Timestamp vectors for generation are resampled with replacement from the
// training members' own vectors.
inline std::vector<IrregularSeries> gan_synthesize(TcganModel& model,
                                                   const std::vector<const IrregularSeries*>& members,
                                                   int count, Rng& rng) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
        vectors.push_back(members[rng.index(members.size())]->timestamps);
    return sample(model, vectors, rng);
}

inline std::vector<std::pair<double, int>> score_dataset(const TrainedClassifier& clf,
                                                         const LabeledDataset& test) {
    std::vector<const IrregularSeries*> batch;
    batch.reserve(test.items.size());
    for (const auto& item : test.items) batch.push_back(&item.series);
    const std::vector<double> probs = score(clf, batch);
    std::vector<std::pair<double, int>> scored;
    scored.reserve(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) scored.emplace_back(probs[i], test.items[i].label);
    return scored;
}

}  // namespace detail

// Classifier trained on the given set, AUROC on the test set; the "real
// data" control every protocol compares against.
inline AurocResult classifier_auroc(const LabeledDataset& train, const LabeledDataset& test,
                                    const EvalConfig& cfg) {
    auto one = [&](int run) {
        ClassifierConfig c = cfg.clf;
        c.seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(run));
        c.batch_size = std::min(c.batch_size, static_cast<int>(train.items.size()));
        TrainedClassifier clf = train_classifier(train, c);
        return auroc(detail::score_dataset(clf, test));
    };
    return summarize_runs(detail::run_indexed(cfg.n_runs, cfg.jobs, one), cfg.sample_std);
}

// Algorithm: per run, train one T-CGAN per class on the real training data,
// draw a balanced generated training set, train the classifier on generated
// data only and score the held-out real test set.
inline AurocResult tstr_protocol(const LabeledDataset& real_train, const LabeledDataset& real_test,
                                 const EvalConfig& cfg) {
    if (real_train.count(0) == 0 || real_train.count(1) == 0)
        throw ContractError("tstr_protocol: training set must contain both classes");
    auto one = [&](int run) {
        const std::uint64_t run_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(run));
        const int per_class = std::max(real_train.count(0), real_train.count(1));
        LabeledDataset generated;
        generated.name = "tstr-generated";
        for (int label = 0; label < 2; ++label) {
            auto members = real_train.of_class(label);
            TcganModel model = train_tcgan(
                members, detail::class_gan_config(cfg.gan, static_cast<int>(members.size()),
                                                  mix_seed(run_seed, 11 + static_cast<std::uint64_t>(label))));
            Rng rng(mix_seed(run_seed, 23 + static_cast<std::uint64_t>(label)));
            for (auto& s : detail::gan_synthesize(model, members, per_class, rng))
                generated.items.push_back({std::move(s), label});
        }
        ClassifierConfig c = cfg.clf;
        c.seed = mix_seed(run_seed, 37);
        c.batch_size = std::min(c.batch_size, static_cast<int>(generated.items.size()));
        TrainedClassifier clf = train_classifier(generated, c);
        return auroc(detail::score_dataset(clf, real_test));
    };
    return summarize_runs(detail::run_indexed(cfg.n_runs, cfg.jobs, one), cfg.sample_std);
}

enum class Method { None, Slicing, Warping, Tcgan };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::None: return "none";
        case Method::Slicing: return "slicing";
        case Method::Warping: return "warping";
        case Method::Tcgan: return "tcgan";
    }
    return "?";
}
inline Method method_from_string(const std::string& s) {
    if (s == "none") return Method::None;
    if (s == "slicing") return Method::Slicing;
    if (s == "warping") return Method::Warping;
    if (s == "tcgan") return Method::Tcgan;
    throw ConfigError("unknown method '" + s + "'");
}

namespace detail {

inline int minority_label_of(const LabeledDataset& ds) {
    return ds.count(0) <= ds.count(1) ? 0 : 1;
}

inline LabeledDataset interpolate_dataset(const LabeledDataset& ds, int target_len) {
    LabeledDataset out;
    out.name = ds.name;
    out.items.reserve(ds.items.size());
    for (const auto& item : ds.items)
        out.items.push_back({interpolate_regular(item.series, target_len), item.label});
    return out;
}

// One method evaluation on one split. Slicing and warping cannot consume
// irregular series, so when regular_len > 0 their train/test views are first
// interpolated onto that grid; T-CGAN and the plain classifier read the raw
// (t, x) pairs.
inline double compare_single_run(const LabeledDataset& train, const LabeledDataset& test,
                                 Method method, const EvalConfig& cfg, std::uint64_t run_seed,
                                 int regular_len) {
    ClassifierConfig clf_cfg = cfg.clf;
    clf_cfg.seed = mix_seed(run_seed, 37);
    const auto fit_batch = [&](const LabeledDataset& ds) {
        ClassifierConfig c = clf_cfg;
        c.batch_size = std::min(c.batch_size, static_cast<int>(ds.items.size()));
        return c;
    };
    switch (method) {
        case Method::None: {
            TrainedClassifier clf = train_classifier(train, fit_batch(train));
            return auroc(score_dataset(clf, test));
        }
        case Method::Slicing: {
            const LabeledDataset tr = regular_len > 0 ? interpolate_dataset(train, regular_len) : train;
            const LabeledDataset te = regular_len > 0 ? interpolate_dataset(test, regular_len) : test;
            const int full_len = tr.items.front().series.length();
            const SlicingConfig scfg{};
            const int slice_len = full_len / scfg.n_slices;
            LabeledDataset slice_train;
            slice_train.name = tr.name + "+slices";
            for (const auto& item : tr.items)
                for (const auto& slice : slice_series(item.series, scfg.n_slices))
                    slice_train.items.push_back({interpolate_regular(slice, slice_len), item.label});
            TrainedClassifier clf = train_classifier(slice_train, fit_batch(slice_train));
            // per-series score = mean probability over its slices
            std::vector<std::pair<double, int>> scored;
            scored.reserve(te.items.size());
            for (const auto& item : te.items) {
                double mean_p = 0.0;
                for (const auto& slice : slice_series(item.series, scfg.n_slices))
                    mean_p += score_one(clf, interpolate_regular(slice, slice_len));
                scored.emplace_back(mean_p / scfg.n_slices, item.label);
            }
            return auroc(scored);
        }
        case Method::Warping: {
            const LabeledDataset tr = regular_len > 0 ? interpolate_dataset(train, regular_len) : train;
            const LabeledDataset te = regular_len > 0 ? interpolate_dataset(test, regular_len) : test;
            const int minority = minority_label_of(tr);
            const int majority_count = std::max(tr.count(0), tr.count(1));
            WarpConfig wcfg{};
            Rng rng(mix_seed(run_seed, 53));
            LabeledDataset augmented = warping_augment(tr, minority, majority_count, wcfg, rng);
            TrainedClassifier clf = train_classifier(augmented, fit_batch(augmented));
            return auroc(score_dataset(clf, te));
        }
        case Method::Tcgan: {
            const int minority = minority_label_of(train);
            const int majority_count = std::max(train.count(0), train.count(1));
            auto members = train.of_class(minority);
            const int need = majority_count - static_cast<int>(members.size());
            LabeledDataset augmented = train;
            if (need > 0) {
                TcganModel model = train_tcgan(
                    members, class_gan_config(cfg.gan, static_cast<int>(members.size()),
                                              mix_seed(run_seed, 11)));
                Rng rng(mix_seed(run_seed, 23));
                for (auto& s : gan_synthesize(model, members, need, rng))
                    augmented.items.push_back({std::move(s), minority});
            }
            TrainedClassifier clf = train_classifier(augmented, fit_batch(augmented));
            return auroc(score_dataset(clf, test));
        }
    }
    throw ContractError("unreachable method");
}

}  // namespace detail

struct MethodResult {
    Method method;
    AurocResult result;
};

// Runs the requested methods on identical splits and seeds. regular_len > 0
// marks the split as irregular and gives the grid length slicing/warping
// interpolate onto.
inline std::vector<MethodResult> compare_methods(const LabeledDataset& train,
                                                 const LabeledDataset& test,
                                                 const std::vector<Method>& methods,
                                                 const EvalConfig& cfg, int regular_len = 0) {
    std::vector<MethodResult> rows;
    rows.reserve(methods.size());
    for (Method m : methods) {
        auto one = [&, m](int run) {
            return detail::compare_single_run(train, test, m, cfg,
                                              mix_seed(cfg.seed, static_cast<std::uint64_t>(run)),
                                              regular_len);
        };
        rows.push_back({m, summarize_runs(detail::run_indexed(cfg.n_runs, cfg.jobs, one),
                                          cfg.sample_std)});
    }
    return rows;
}

struct RatioResult {
    double ratio;
    bool augmented;  // false for the untouched baseline row
    AurocResult result;
};

// Table-4 style sweep: the untouched unbalanced set is the baseline row; for
// every requested ratio r the minority class is filled with T-CGAN samples
// until minority = r * majority. One generator is trained per run and reused
// across ratios.
inline std::vector<RatioResult> rebalancing_experiment(const LabeledDataset& train,
                                                       const LabeledDataset& test,
                                                       const std::vector<double>& ratios,
                                                       const EvalConfig& cfg) {
    if (ratios.empty()) throw ConfigError("rebalancing_experiment: empty ratio list");
    const int minority = detail::minority_label_of(train);
    const int minority_count = train.count(minority);
    const int majority_count = std::max(train.count(0), train.count(1));
    if (majority_count == 0 || minority_count == 0)
        throw ContractError("rebalancing_experiment: both classes required");
    const double base_ratio = static_cast<double>(minority_count) / majority_count;
    for (double r : ratios) {
        if (!(r > 0.0) || r > 1.0)
            throw ConfigError("rebalancing_experiment: ratios must lie in (0,1]");
        if (r < base_ratio - 1e-12)
            throw ContractError("rebalancing_experiment: dataset ratio " +
                                std::to_string(base_ratio) + " already exceeds requested " +
                                std::to_string(r));
    }
    auto members = train.of_class(minority);

    const int n_points = static_cast<int>(ratios.size()) + 1;
    std::vector<std::vector<double>> per_point(static_cast<size_t>(n_points));
    for (auto& v : per_point) v.resize(static_cast<size_t>(cfg.n_runs));

    auto one = [&](int run) {
        const std::uint64_t run_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(run));
        ClassifierConfig clf_cfg = cfg.clf;
        // baseline: untouched unbalanced set
        {
            ClassifierConfig c = clf_cfg;
            c.seed = mix_seed(run_seed, 37);
            c.batch_size = std::min(c.batch_size, static_cast<int>(train.items.size()));
            TrainedClassifier clf = train_classifier(train, c);
            per_point[0][static_cast<size_t>(run)] = auroc(detail::score_dataset(clf, test));
        }
        TcganModel model = train_tcgan(
            members, detail::class_gan_config(cfg.gan, static_cast<int>(members.size()),
                                              mix_seed(run_seed, 11)));
        for (size_t ri = 0; ri < ratios.size(); ++ri) {
            const int target = round_half_up(ratios[ri] * majority_count);
            const int need = std::max(0, target - minority_count);
            LabeledDataset augmented = train;
            Rng rng(mix_seed(run_seed, 100 + static_cast<std::uint64_t>(ri)));
            for (auto& s : detail::gan_synthesize(model, members, need, rng))
                augmented.items.push_back({std::move(s), minority});
            ClassifierConfig c = clf_cfg;
            c.seed = mix_seed(run_seed, 200 + static_cast<std::uint64_t>(ri));
            c.batch_size = std::min(c.batch_size, static_cast<int>(augmented.items.size()));
            TrainedClassifier clf = train_classifier(augmented, c);
            per_point[ri + 1][static_cast<size_t>(run)] = auroc(detail::score_dataset(clf, test));
        }
        return 0.0;
    };
    detail::run_indexed(cfg.n_runs, cfg.jobs, one);

    std::vector<RatioResult> rows;
    rows.reserve(static_cast<size_t>(n_points));
    rows.push_back({base_ratio, false, summarize_runs(per_point[0], cfg.sample_std)});
    for (size_t ri = 0; ri < ratios.size(); ++ri)
        rows.push_back({ratios[ri], true, summarize_runs(per_point[ri + 1], cfg.sample_std)});
    return rows;
}

struct SweepResult {
    double fraction;
    Method method;
    AurocResult result;
};

// Drops the given fraction of points from every train and test series (fresh
// removals per run), then evaluates the requested methods on the degraded
// split. regular_len for slicing/warping is the original series length.
inline std::vector<SweepResult> missing_fraction_sweep(const LabeledDataset& train,
                                                       const LabeledDataset& test,
                                                       const std::vector<double>& fractions,
                                                       const std::vector<Method>& methods,
                                                       const EvalConfig& cfg) {
    if (train.items.empty()) throw ContractError("missing_fraction_sweep: empty training set");
    const int original_len = train.items.front().series.length();
    std::vector<SweepResult> rows;
    for (size_t fi = 0; fi < fractions.size(); ++fi) {
        const double fraction = fractions[fi];
        for (Method m : methods) {
            auto one = [&, fraction, fi, m](int run) {
                const std::uint64_t run_seed =
                    mix_seed(cfg.seed, 7919 * static_cast<std::uint64_t>(fi) +
                                           static_cast<std::uint64_t>(run));
                Rng drop_rng(mix_seed(run_seed, 3));
                LabeledDataset tr, te;
                tr.name = train.name;
                te.name = test.name;
                for (const auto& item : train.items)
                    tr.items.push_back({fraction > 0 ? drop_points(item.series, fraction, drop_rng)
                                                     : item.series,
                                        item.label});
                for (const auto& item : test.items)
                    te.items.push_back({fraction > 0 ? drop_points(item.series, fraction, drop_rng)
                                                     : item.series,
                                        item.label});
                return detail::compare_single_run(tr, te, m, cfg, run_seed,
                                                  fraction > 0 ? original_len : 0);
            };
            rows.push_back({fraction, m,
                            summarize_runs(detail::run_indexed(cfg.n_runs, cfg.jobs, one),
                                           cfg.sample_std)});
        }
    }
    return rows;
}

}  // namespace tcgan
