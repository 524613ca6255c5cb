#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tcgan/common.hpp"
#include "tcgan/eval.hpp"
#include "tcgan/series.hpp"

// Experiment specification files (flat key=value text), the dispatcher that
// turns one into result tables, and the CSV emitters.

namespace tcgan {

// ---------------------------------------------------------------------------
// key=value config text: '#' comments, blank lines ignored, keys may use
// dotted prefixes (gan.epochs, clf.lr).

inline std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        if (kv.count(key))
            throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" +
                             key + "'");
        kv[key] = value;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str());
}

namespace detail {

class KvReader {
public:
    explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return false;
        used_.insert(key);
        return true;
    }
    std::string str(const std::string& key, const std::string& fallback) {
        return has(key) ? kv_.at(key) : fallback;
    }
    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        try {
            size_t pos = 0;
            const long long v = std::stoll(kv_.at(key), &pos);
            if (pos != kv_.at(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected integer, got '" + kv_.at(key) +
                              "'");
        }
    }
    double real(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        try {
            size_t pos = 0;
            const double v = std::stod(kv_.at(key), &pos);
            if (pos != kv_.at(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected number, got '" + kv_.at(key) +
                              "'");
        }
    }
    std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        std::vector<double> out;
        std::stringstream ss(kv_.at(key));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ConfigError("config key '" + key + "': bad number '" + tok + "'");
            }
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }
    std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
        if (!has(key)) return fallback;
        std::vector<int> out;
        for (double v : reals(key, {})) out.push_back(static_cast<int>(v));
        return out;
    }
    // keys never read are reported as unknown so typos fail fast
    void finish() const {
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

inline void read_gan_keys(KvReader& kv, TcganConfig& cfg, const std::string& prefix) {
    cfg.latent_dim = static_cast<int>(kv.integer(prefix + "latent_dim", cfg.latent_dim));
    cfg.series_len = static_cast<int>(kv.integer(prefix + "series_len", cfg.series_len));
    cfg.kernel_size = static_cast<int>(kv.integer(prefix + "kernel_size", cfg.kernel_size));
    cfg.batch_size = static_cast<int>(kv.integer(prefix + "batch_size", cfg.batch_size));
    cfg.epochs = static_cast<int>(kv.integer(prefix + "epochs", cfg.epochs));
    cfg.adam.lr = kv.real(prefix + "lr", cfg.adam.lr);
    cfg.adam.beta1 = kv.real(prefix + "beta1", cfg.adam.beta1);
    cfg.adam.beta2 = kv.real(prefix + "beta2", cfg.adam.beta2);
    cfg.loss_variant = loss_variant_from_string(
        kv.str(prefix + "loss", to_string(cfg.loss_variant)));
    const auto gc = kv.integers(prefix + "gen_channels",
                                {cfg.gen_channels[0], cfg.gen_channels[1], cfg.gen_channels[2],
                                 cfg.gen_channels[3]});
    if (gc.size() != 4) throw ConfigError(prefix + "gen_channels: expected 4 values");
    std::copy(gc.begin(), gc.end(), cfg.gen_channels.begin());
    const auto dc = kv.integers(prefix + "disc_channels",
                                {cfg.disc_channels[0], cfg.disc_channels[1]});
    if (dc.size() != 2) throw ConfigError(prefix + "disc_channels: expected 2 values");
    std::copy(dc.begin(), dc.end(), cfg.disc_channels.begin());
}

inline void read_clf_keys(KvReader& kv, ClassifierConfig& cfg, const std::string& prefix) {
    cfg.kernel_size = static_cast<int>(kv.integer(prefix + "kernel_size", cfg.kernel_size));
    cfg.batch_size = static_cast<int>(kv.integer(prefix + "batch_size", cfg.batch_size));
    cfg.epochs = static_cast<int>(kv.integer(prefix + "epochs", cfg.epochs));
    cfg.adam.lr = kv.real(prefix + "lr", cfg.adam.lr);
    cfg.adam.beta1 = kv.real(prefix + "beta1", cfg.adam.beta1);
    const auto ch = kv.integers(prefix + "channels", {cfg.channels[0], cfg.channels[1]});
    if (ch.size() != 2) throw ConfigError(prefix + "channels: expected 2 values");
    std::copy(ch.begin(), ch.end(), cfg.channels.begin());
}

}  // namespace detail

struct ExperimentSpec {
    std::string kind;                  // tstr | compare | rebalance | missing_sweep
    std::string source = "synthetic";  // synthetic | csv
    std::string train_csv;
    std::string test_csv;
    SynthesisParams synth;
    std::vector<int> s_grid{40};  // tstr grid
    std::vector<int> l_grid{40};
    int train_per_class = 40;
    int test_per_class = 100;
    int minority_label = 0;
    int minority_keep = 0;  // 0 = leave the class untouched
    double missing_fraction = 0.0;
    std::vector<double> ratios{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4};
    std::vector<Method> methods{Method::None, Method::Slicing, Method::Warping, Method::Tcgan};
    EvalConfig eval;
};

inline ExperimentSpec parse_experiment_spec(const std::map<std::string, std::string>& raw) {
    detail::KvReader kv(raw);
    ExperimentSpec spec;
    spec.kind = kv.str("kind", "");
    if (spec.kind != "tstr" && spec.kind != "compare" && spec.kind != "rebalance" &&
        spec.kind != "missing_sweep")
        throw ConfigError("kind must be one of tstr, compare, rebalance, missing_sweep (got '" +
                          spec.kind + "')");
    spec.source = kv.str("source", spec.source);
    if (spec.source != "synthetic" && spec.source != "csv")
        throw ConfigError("source must be synthetic or csv");
    spec.train_csv = kv.str("train_csv", "");
    spec.test_csv = kv.str("test_csv", "");
    if (spec.source == "csv" && (spec.train_csv.empty() || spec.test_csv.empty()))
        throw ConfigError("csv source requires train_csv and test_csv");

    spec.synth.length = static_cast<int>(kv.integer("L", spec.synth.length));
    spec.synth.t_min = kv.real("t_min", spec.synth.t_min);
    spec.synth.t_max = kv.real("t_max", spec.synth.t_max);
    spec.synth.noise_sigma = kv.real("noise_sigma", spec.synth.noise_sigma);
    spec.synth.amplitude_jitter_sigma =
        kv.real("amplitude_jitter_sigma", spec.synth.amplitude_jitter_sigma);
    spec.train_per_class = static_cast<int>(kv.integer("S", spec.train_per_class));
    spec.s_grid = kv.integers("S_grid", {spec.train_per_class});
    spec.l_grid = kv.integers("L_grid", {spec.synth.length});
    spec.test_per_class = static_cast<int>(kv.integer("test_per_class", spec.test_per_class));
    spec.minority_label = static_cast<int>(kv.integer("minority_label", spec.minority_label));
    spec.minority_keep = static_cast<int>(kv.integer("minority_keep", spec.minority_keep));
    spec.missing_fraction = kv.real("missing_fraction", spec.missing_fraction);
    spec.ratios = kv.reals("ratios", spec.ratios);
    spec.fractions = kv.reals("fractions", spec.fractions);
    if (kv.has("methods")) {
        spec.methods.clear();
        std::stringstream ss(raw.at("methods"));
        std::string tok;
        while (std::getline(ss, tok, ',')) spec.methods.push_back(method_from_string(tok));
        if (spec.methods.empty()) throw ConfigError("methods: empty list");
    }
    spec.eval.n_runs = static_cast<int>(kv.integer("runs", spec.eval.n_runs));
    spec.eval.seed = static_cast<std::uint64_t>(kv.integer("seed", 1));
    spec.eval.jobs = static_cast<int>(kv.integer("jobs", spec.eval.jobs));
    const std::string std_kind = kv.str("std", "population");
    if (std_kind != "population" && std_kind != "sample")
        throw ConfigError("std must be population or sample");
    spec.eval.sample_std = std_kind == "sample";
    detail::read_gan_keys(kv, spec.eval.gan, "gan.");
    detail::read_clf_keys(kv, spec.eval.clf, "clf.");
    kv.finish();
    if (spec.eval.n_runs < 1) throw ConfigError("runs must be >= 1");
    return spec;
}

// ---------------------------------------------------------------------------
// Result tables

struct ResultRow {
    std::string experiment;
    std::string method;
    std::string param;
    int run;
    double auroc_value;
};

struct SummaryRow {
    std::string experiment;
    std::string method;
    std::string param;
    AurocResult result;
};

struct ExperimentOutput {
    std::vector<ResultRow> results;
    std::vector<SummaryRow> summary;
    std::vector<SummaryRow> plot;  // one row per x-value per method, sweeps only
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void push_rows(ExperimentOutput& out, const std::string& experiment,
                      const std::string& method, const std::string& param,
                      const AurocResult& result, bool plot_row) {
    for (int r = 0; r < result.n_runs; ++r)
        out.results.push_back(
            {experiment, method, param, r, result.per_run[static_cast<size_t>(r)]});
    out.summary.push_back({experiment, method, param, result});
    if (plot_row) out.plot.push_back({experiment, method, param, result});
}

inline std::pair<LabeledDataset, LabeledDataset> load_split(const ExperimentSpec& spec) {
    if (spec.source == "csv") {
        LabeledDataset train = load_csv(spec.train_csv);
        LabeledDataset test = load_csv(spec.test_csv);
        return {std::move(train), std::move(test)};
    }
    SynthesisParams p = spec.synth;
    p.seed = mix_seed(spec.eval.seed, 0xd47a);
    LabeledDataset train = make_synthetic_dataset(spec.train_per_class, p);
    p.seed = mix_seed(spec.eval.seed, 0x7e57);
    LabeledDataset test = make_synthetic_dataset(spec.test_per_class, p);
    if (spec.minority_keep > 0) {
        Rng rng(mix_seed(spec.eval.seed, 0x0b5e));
        train = unbalance(train, spec.minority_label, spec.minority_keep, rng);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace detail

inline ExperimentOutput run_experiment(const ExperimentSpec& spec) {
    ExperimentOutput out;
    if (spec.kind == "tstr") {
        if (spec.source == "csv") {
            auto [train, test] = detail::load_split(spec);
            detail::push_rows(out, "tstr", "tcgan", train.name,
                      tstr_protocol(train, test, spec.eval), false);
            detail::push_rows(out, "tstr", "real", train.name,
                      classifier_auroc(train, test, spec.eval), false);
            return out;
        }
        for (int s : spec.s_grid)
            for (int l : spec.l_grid) {
                SynthesisParams p = spec.synth;
                p.length = l;
                p.seed = mix_seed(spec.eval.seed,
                                  0x5eedu + 131 * static_cast<std::uint64_t>(s) +
                                      static_cast<std::uint64_t>(l));
                LabeledDataset train = make_synthetic_dataset(s, p);
                p.seed = mix_seed(p.seed, 0x7e57);
                LabeledDataset test = make_synthetic_dataset(spec.test_per_class, p);
                const std::string param = "S" + std::to_string(s) + "_L" + std::to_string(l);
                detail::push_rows(out, "tstr", "tcgan", param, tstr_protocol(train, test, spec.eval),
                          false);
                detail::push_rows(out, "tstr", "real", param, classifier_auroc(train, test, spec.eval),
                          false);
            }
        return out;
    }

    auto [train, test] = detail::load_split(spec);
    if (spec.kind == "compare") {
        const std::string param = detail::fmt_param(spec.missing_fraction);
        if (spec.missing_fraction > 0.0) {
            auto rows = missing_fraction_sweep(train, test, {spec.missing_fraction}, spec.methods,
                                               spec.eval);
            for (const auto& row : rows)
                detail::push_rows(out, "compare", to_string(row.method), param, row.result, false);
        } else {
            auto rows = compare_methods(train, test, spec.methods, spec.eval);
            for (const auto& row : rows)
                detail::push_rows(out, "compare", to_string(row.method), param, row.result, false);
        }
        return out;
    }
    if (spec.kind == "rebalance") {
        auto rows = rebalancing_experiment(train, test, spec.ratios, spec.eval);
        for (const auto& row : rows)
            detail::push_rows(out, "rebalance", row.augmented ? "tcgan" : "original",
                      detail::fmt_param(row.ratio), row.result, true);
        return out;
    }
    // missing_sweep
    auto rows = missing_fraction_sweep(train, test, spec.fractions, spec.methods, spec.eval);
    for (const auto& row : rows)
        detail::push_rows(out, "missing_sweep", to_string(row.method), detail::fmt_param(row.fraction),
                  row.result, true);
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission; 17 significant digits keep reruns byte-identical.

inline void write_results_csv(const ExperimentOutput& out, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write results file: " + path);
    f << "experiment,method,param,run,auroc\n";
    for (const auto& r : out.results)
        f << r.experiment << "," << r.method << "," << r.param << "," << r.run << ","
          << detail::fmt17(r.auroc_value) << "\n";
    if (!f) throw DataError("failed writing results file: " + path);
}

inline void write_summary_csv(const ExperimentOutput& out, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write summary file: " + path);
    f << "experiment,method,param,mean,std,n_runs\n";
    for (const auto& r : out.summary)
        f << r.experiment << "," << r.method << "," << r.param << ","
          << detail::fmt17(r.result.mean) << "," << detail::fmt17(r.result.stddev) << ","
          << r.result.n_runs << "\n";
    if (!f) throw DataError("failed writing summary file: " + path);
}

inline void write_plot_csv(const ExperimentOutput& out, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write plot file: " + path);
    f << "param,method,mean,std\n";
    for (const auto& r : out.plot)
        f << r.param << "," << r.method << "," << detail::fmt17(r.result.mean) << ","
          << detail::fmt17(r.result.stddev) << "\n";
    if (!f) throw DataError("failed writing plot file: " + path);
}

inline std::string format_summary_table(const ExperimentOutput& out) {
    std::ostringstream os;
    os << "experiment      method    param        AUROC\n";
    for (const auto& r : out.summary) {
        char line[160];
        std::snprintf(line, sizeof line, "%-15s %-9s %-12s %.4f +- %.4f (n=%d)\n",
                      r.experiment.c_str(), r.method.c_str(), r.param.c_str(), r.result.mean,
                      r.result.stddev, r.result.n_runs);
        os << line;
    }
    return os.str();
}

}  // namespace tcgan
