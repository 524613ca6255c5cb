// Command-line front end: data synthesis, T-CGAN training, dataset
// augmentation, conditioned classification and the experiment protocols.
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "tcgan/classifier.hpp"
#include "tcgan/eval.hpp"
#include "tcgan/experiment.hpp"
#include "tcgan/model.hpp"
#include "tcgan/series.hpp"

namespace fs = std::filesystem;
using namespace tcgan;

namespace {

struct CliError {
    int code;
    std::string message;
};

void require_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::exists(parent))
        throw DataError("output directory does not exist: " + parent.string());
}

// ---------------------------------------------------------------------------

int cmd_synth(int S, int L, const std::string& out, std::uint64_t seed, double t_min, double t_max,
              double noise_sigma, double amp_jitter) {
    SynthesisParams p;
    p.length = L;
    p.t_min = t_min;
    p.t_max = t_max;
    p.noise_sigma = noise_sigma;
    p.amplitude_jitter_sigma = amp_jitter;
    p.seed = seed;
    require_parent_dir(out);
    save_csv(make_synthetic_dataset(S, p), out);
    std::printf("wrote %d series to %s\n", 2 * S, out.c_str());
    return 0;
}

struct TrainFlags {
    std::string data;
    std::string out;
    std::string config_path;
    bool force = false;
    // optional overrides; negative/empty means "not set"
    int epochs = -1;
    int latent_dim = -1;
    int batch_size = -1;
    int kernel_size = -1;
    double lr = -1.0;
    std::string loss;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_train(const TrainFlags& flags) {
    TcganConfig cfg;
    std::uint64_t seed = 0;
    if (!flags.config_path.empty()) {
        detail::KvReader kv(parse_kv_file(flags.config_path));
        detail::read_gan_keys(kv, cfg, "gan.");
        seed = static_cast<std::uint64_t>(kv.integer("seed", 0));
        kv.finish();
    }
    if (flags.epochs >= 0) cfg.epochs = flags.epochs;
    if (flags.latent_dim > 0) cfg.latent_dim = flags.latent_dim;
    if (flags.batch_size > 0) cfg.batch_size = flags.batch_size;
    if (flags.kernel_size > 0) cfg.kernel_size = flags.kernel_size;
    if (flags.lr > 0) cfg.adam.lr = flags.lr;
    if (!flags.loss.empty()) cfg.loss_variant = loss_variant_from_string(flags.loss);
    if (flags.seed_set) seed = flags.seed;

    if (fs::exists(flags.out) && !flags.force)
        throw ConfigError("checkpoint exists: " + flags.out + " (use --force to overwrite)");
    require_parent_dir(flags.out);

    LabeledDataset ds = load_csv(flags.data);
    std::map<int, TcganModel> models;
    for (int label = 0; label < 2; ++label) {
        auto members = ds.of_class(label);
        if (members.empty()) continue;
        TcganConfig c = cfg;
        c.seed = mix_seed(seed, static_cast<std::uint64_t>(label));
        c.batch_size = std::max(2, std::min(c.batch_size, static_cast<int>(members.size())));
        TcganModel model = train_tcgan(members, c);
        // loss trace beside the checkpoint
        const std::string loss_path = flags.out + ".class" + std::to_string(label) + ".loss.csv";
        std::ofstream lf(loss_path, std::ios::binary);
        if (!lf) throw DataError("cannot write loss trace: " + loss_path);
        lf << "epoch,d_loss,g_loss\n";
        char buf[96];
        for (size_t e = 0; e < model.loss_trace.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e, model.loss_trace[e].d_loss,
                          model.loss_trace[e].g_loss);
            lf << buf;
        }
        models.emplace(label, std::move(model));
    }
    if (models.empty()) throw DataError("dataset has no series: " + flags.data);
    save_tcgan_checkpoint(models, flags.out);
    std::printf("trained %zu class model(s), checkpoint at %s\n", models.size(),
                flags.out.c_str());
    return 0;
}

int cmd_augment(const std::string& data, const std::string& ckpt, double ratio,
                const std::string& out, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0) throw ConfigError("--ratio must lie in (0,1]");
    LabeledDataset ds = load_csv(data);
    const int c0 = ds.count(0), c1 = ds.count(1);
    if (c0 == 0 || c1 == 0) throw DataError("augment needs both classes present");
    const int minority = c0 <= c1 ? 0 : 1;
    const int majority_count = std::max(c0, c1);
    const int minority_count = std::min(c0, c1);
    const int target = round_half_up(ratio * majority_count);
    require_parent_dir(out);
    if (target <= minority_count) {
        std::fprintf(stderr,
                     "warning: minority class already holds %d series (target %d); "
                     "copying input unchanged\n",
                     minority_count, target);
        save_csv(ds, out);
        return 0;
    }
    auto models = load_tcgan_checkpoint(ckpt);
    const auto it = models.find(minority);
    if (it == models.end())
        throw DataError("checkpoint has no model for minority class " + std::to_string(minority));
    auto members = ds.of_class(minority);
    Rng rng(mix_seed(seed, 0xa9));
    std::vector<std::vector<double>> vectors;
    for (int i = 0; i < target - minority_count; ++i)
        vectors.push_back(members[rng.index(members.size())]->timestamps);
    LabeledDataset augmented = ds;  // originals first, in input order
    for (auto& s : sample(it->second, vectors, rng))
        augmented.items.push_back({std::move(s), minority});
    save_csv(augmented, out);
    std::printf("augmented class %d from %d to %d series; wrote %s\n", minority, minority_count,
                target, out.c_str());
    return 0;
}

int cmd_classify(const std::string& train_path, const std::string& test_path,
                 const std::string& scores_path, int runs, std::uint64_t seed, int epochs,
                 int batch_size) {
    LabeledDataset train = load_csv(train_path);
    LabeledDataset test = load_csv(test_path);
    EvalConfig cfg;
    if (epochs >= 0) cfg.clf.epochs = epochs;
    if (batch_size > 0) cfg.clf.batch_size = batch_size;
    cfg.n_runs = runs;
    cfg.seed = seed;
    AurocResult r = classifier_auroc(train, test, cfg);
    std::printf("AUROC %.4f +- %.4f over %d run(s)\n", r.mean, r.stddev, r.n_runs);
    if (!scores_path.empty()) {
        // scores from one classifier trained with the first run's seed
        ClassifierConfig c = cfg.clf;
        c.seed = mix_seed(cfg.seed, 1000);
        c.batch_size = std::min(c.batch_size, static_cast<int>(train.items.size()));
        TrainedClassifier clf = train_classifier(train, c);
        std::vector<const IrregularSeries*> batch;
        for (const auto& item : test.items) batch.push_back(&item.series);
        const std::vector<double> probs = score(clf, batch);
        require_parent_dir(scores_path);
        std::ofstream f(scores_path, std::ios::binary);
        if (!f) throw DataError("cannot write scores file: " + scores_path);
        f << "index,label,score\n";
        char buf[64];
        for (size_t i = 0; i < probs.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", i, test.items[i].label, probs[i]);
            f << buf;
        }
    }
    return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_dir, int jobs_override,
                   int runs_override, long long seed_override) {
    ExperimentSpec spec;
    try {
        spec = parse_experiment_spec(parse_kv_file(spec_path));
    } catch (const ParseError& e) {
        throw ConfigError(std::string("spec file: ") + e.what());
    }
    if (jobs_override > 0) spec.eval.jobs = jobs_override;
    if (runs_override > 0) spec.eval.n_runs = runs_override;
    if (seed_override >= 0) spec.eval.seed = static_cast<std::uint64_t>(seed_override);
    fs::create_directories(out_dir);
    ExperimentOutput out = run_experiment(spec);
    write_results_csv(out, (fs::path(out_dir) / "results.csv").string());
    write_summary_csv(out, (fs::path(out_dir) / "summary.csv").string());
    if (!out.plot.empty()) write_plot_csv(out, (fs::path(out_dir) / "plot.csv").string());
    std::cout << format_summary_table(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"T-CGAN: timestamp-conditioned GAN for irregular time series augmentation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled sine/sawtooth dataset");
    int s_S = 40, s_L = 40;
    std::string s_out;
    std::uint64_t s_seed = 0;
    double s_tmin = 0.0, s_tmax = 12.0, s_noise = 0.1, s_amp = 0.1;
    synth->add_option("--S", s_S, "Series per class")->capture_default_str();
    synth->add_option("--L", s_L, "Points per series")->capture_default_str();
    synth->add_option("--out", s_out, "Output CSV path")->required();
    synth->add_option("--seed", s_seed, "Random seed")->capture_default_str();
    synth->add_option("--t-min", s_tmin, "Timestamp range lower bound")->capture_default_str();
    synth->add_option("--t-max", s_tmax, "Timestamp range upper bound")->capture_default_str();
    synth->add_option("--noise-sigma", s_noise, "Per-point Gaussian noise sigma")
        ->capture_default_str();
    synth->add_option("--amp-jitter", s_amp, "Per-series amplitude jitter sigma")
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train one T-CGAN per class on a dataset");
    TrainFlags tf;
    train->add_option("--data", tf.data, "Training dataset CSV")->required();
    train->add_option("--out", tf.out, "Checkpoint output path")->required();
    train->add_option("--config", tf.config_path, "key=value config file (gan.* keys)");
    train->add_option("--epochs", tf.epochs, "Training epochs (default 600)");
    train->add_option("--latent-dim", tf.latent_dim, "Noise dimension (default 16)");
    train->add_option("--batch-size", tf.batch_size, "Minibatch size (default 32)");
    train->add_option("--kernel-size", tf.kernel_size, "Convolution kernel size (default 5)");
    train->add_option("--lr", tf.lr, "Adam learning rate (default 2e-4)");
    train->add_option("--loss", tf.loss, "minimax or non_saturating (default non_saturating)");
    auto* seed_opt = train->add_option("--seed", tf.seed, "Random seed (default 0)");
    train->add_flag("--force", tf.force, "Overwrite an existing checkpoint");

    // augment
    auto* augment = app.add_subcommand("augment", "Fill the minority class with sampled series");
    std::string a_data, a_ckpt, a_out;
    double a_ratio = 1.0;
    std::uint64_t a_seed = 0;
    augment->add_option("--data", a_data, "Dataset CSV to augment")->required();
    augment->add_option("--ckpt", a_ckpt, "Checkpoint from `train`")->required();
    augment->add_option("--ratio", a_ratio, "Target minority/majority ratio")
        ->capture_default_str();
    augment->add_option("--out", a_out, "Output CSV path")->required();
    augment->add_option("--seed", a_seed, "Random seed")->capture_default_str();

    // classify
    auto* classify = app.add_subcommand("classify",
                                        "Train the conditioned classifier and report AUROC");
    std::string c_train, c_test, c_scores;
    int c_runs = 1, c_epochs = -1, c_batch = -1;
    std::uint64_t c_seed = 1;
    classify->add_option("--train", c_train, "Training dataset CSV")->required();
    classify->add_option("--test", c_test, "Test dataset CSV")->required();
    classify->add_option("--scores", c_scores, "Optional per-series score CSV");
    classify->add_option("--runs", c_runs, "Randomized repetitions")->capture_default_str();
    classify->add_option("--seed", c_seed, "Random seed")->capture_default_str();
    classify->add_option("--epochs", c_epochs, "Classifier epochs (default 120)");
    classify->add_option("--batch-size", c_batch, "Classifier batch size (default 32)");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Run a protocol from a spec file");
    std::string e_spec, e_out = "results";
    int e_jobs = 0, e_runs = 0;
    long long e_seed = -1;
    experiment->add_option("--spec", e_spec, "Experiment spec (key=value file)")->required();
    experiment->add_option("--out-dir", e_out, "Directory for results/summary/plot CSVs")
        ->capture_default_str();
    experiment->add_option("--jobs", e_jobs, "Parallel repetitions (default from spec)");
    experiment->add_option("--runs", e_runs, "Override repetition count");
    experiment->add_option("--seed", e_seed, "Override experiment seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 1;
    }

    try {
        if (*synth) return cmd_synth(s_S, s_L, s_out, s_seed, s_tmin, s_tmax, s_noise, s_amp);
        if (*train) {
            tf.seed_set = seed_opt->count() > 0;
            return cmd_train(tf);
        }
        if (*augment) return cmd_augment(a_data, a_ckpt, a_ratio, a_out, a_seed);
        if (*classify)
            return cmd_classify(c_train, c_test, c_scores, c_runs, c_seed, c_epochs, c_batch);
        if (*experiment) return cmd_experiment(e_spec, e_out, e_jobs, e_runs, e_seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
