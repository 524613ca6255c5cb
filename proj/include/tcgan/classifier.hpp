#pragma once

#include <array>
#include <string>
#include <vector>

#include "tcgan/checkpoint.hpp"
#include "tcgan/common.hpp"
#include "tcgan/model.hpp"
#include "tcgan/series.hpp"
#include "tcgan/tensor.hpp"

// Timestamp-conditioned CNN binary classifier: same topology and conditioning
// as the discriminator, trained with binary cross-entropy. Used as the
// measurement instrument in every experiment.

namespace tcgan {

struct ClassifierConfig {
    std::array<int, 2> channels{32, 64};
    int kernel_size = 5;
    int epochs = 120;
    int batch_size = 32;
    AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
    std::uint64_t seed = 0;
};

inline void check_classifier_config(const ClassifierConfig& cfg) {
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
        throw ConfigError("classifier kernel_size must be odd");
    if (cfg.batch_size < 1) throw ConfigError("classifier batch_size must be positive");
    if (cfg.epochs < 0) throw ConfigError("classifier epochs must be nonnegative");
    for (int c : cfg.channels)
        if (c < 1) throw ConfigError("classifier channels must be positive");
}

struct TrainedClassifier {
    ClassifierConfig config;
    ConvScorer scorer;
    double t_min = 0.0;
    double t_max = 1.0;
    std::vector<double> loss_trace;  // per-epoch mean training loss
};

// Requires both labels present and a fixed series length.
inline TrainedClassifier train_classifier(const LabeledDataset& train, ClassifierConfig config) {
    check_classifier_config(config);
    if (train.items.empty()) throw ContractError("train_classifier: empty training set");
    if (train.count(0) == 0 || train.count(1) == 0)
        throw ContractError("train_classifier: degenerate training set (single class)");
    const int L = train.items.front().series.length();
    for (size_t i = 0; i < train.items.size(); ++i) {
        check_series(train.items[i].series, "train_classifier series " + std::to_string(i));
        if (train.items[i].series.length() != L)
            throw ContractError("train_classifier: series " + std::to_string(i) + " has length " +
                                std::to_string(train.items[i].series.length()) + ", expected " +
                                std::to_string(L));
    }
    const int n = static_cast<int>(train.items.size());
    if (config.batch_size > n)
        throw ContractError("train_classifier: batch_size exceeds dataset size");

    TrainedClassifier clf;
    clf.config = config;
    double t_min = train.items.front().series.timestamps.front();
    double t_max = train.items.front().series.timestamps.back();
    for (const auto& item : train.items) {
        t_min = std::min(t_min, item.series.timestamps.front());
        t_max = std::max(t_max, item.series.timestamps.back());
    }
    clf.t_min = t_min;
    clf.t_max = t_max;

    Rng rng(mix_seed(config.seed, 0x636c6673));
    clf.scorer = init_conv_scorer(L, config.channels, config.kernel_size, rng);
    std::vector<Tensor> params = clf.scorer.params();
    AdamState opt = make_adam_state(params, config.adam);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    const double inv = 1.0 / (t_max - t_min);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }
        double loss_sum = 0.0;
        int batches = 0;
        for (int begin = 0; begin < n; begin += config.batch_size) {
            const int end = std::min(n, begin + config.batch_size);
            const int b = end - begin;
            Tensor x = Tensor::zeros({b, L});
            Tensor t = Tensor::zeros({b, L});
            Tensor y = Tensor::zeros({b, 1});
            for (int r = 0; r < b; ++r) {
                const auto& item = train.items[static_cast<size_t>(order[static_cast<size_t>(begin + r)])];
                for (int i = 0; i < L; ++i) {
                    x.data()[static_cast<size_t>(r * L + i)] = item.series.values[static_cast<size_t>(i)];
                    t.data()[static_cast<size_t>(r * L + i)] =
                        (item.series.timestamps[static_cast<size_t>(i)] - t_min) * inv;
                }
                y.data()[static_cast<size_t>(r)] = item.label;
            }
            Tape tape;
            Tensor p = conv_scorer_forward(clf.scorer, x, t);
            Tensor loss = bce_loss(p, y);
            tape.backward(loss);
            adam_step(params, opt);
            loss_sum += loss.value();
            ++batches;
        }
        clf.loss_trace.push_back(loss_sum / batches);
    }
    return clf;
}

// Per-series probability of label 1, deterministic (no tape, no dropout).
inline std::vector<double> score(const TrainedClassifier& clf,
                                 const std::vector<const IrregularSeries*>& batch) {
    if (batch.empty()) return {};
    const int L = clf.scorer.series_len;
    const int n = static_cast<int>(batch.size());
    Tensor x = Tensor::zeros({n, L});
    Tensor t = Tensor::zeros({n, L});
    const double inv = 1.0 / (clf.t_max - clf.t_min);
    for (int r = 0; r < n; ++r) {
        const IrregularSeries& s = *batch[static_cast<size_t>(r)];
        if (s.length() != L)
            throw ContractError("score: series " + std::to_string(r) + " has length " +
                                std::to_string(s.length()) + ", classifier expects " +
                                std::to_string(L));
        for (int i = 0; i < L; ++i) {
            x.data()[static_cast<size_t>(r * L + i)] = s.values[static_cast<size_t>(i)];
            const double tv = (s.timestamps[static_cast<size_t>(i)] - clf.t_min) * inv;
            t.data()[static_cast<size_t>(r * L + i)] = std::min(1.0, std::max(0.0, tv));
        }
    }
    Tensor p = conv_scorer_forward(clf.scorer, x, t);
    return p.data();
}

inline std::vector<double> score(const TrainedClassifier& clf,
                                 const std::vector<IrregularSeries>& batch) {
    std::vector<const IrregularSeries*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& s : batch) ptrs.push_back(&s);
    return score(clf, ptrs);
}

inline double score_one(const TrainedClassifier& clf, const IrregularSeries& s) {
    return score(clf, std::vector<const IrregularSeries*>{&s}).front();
}

// Checkpointing shares the model format.
inline void save_classifier_checkpoint(const TrainedClassifier& clf, const std::string& path) {
    Checkpoint ckpt;
    ckpt.meta.emplace_back("classifier", "1");
    ckpt.meta.emplace_back("series_len", std::to_string(clf.scorer.series_len));
    ckpt.meta.emplace_back("kernel_size", std::to_string(clf.scorer.kernel));
    ckpt.meta.emplace_back("channels", std::to_string(clf.config.channels[0]) + "," +
                                           std::to_string(clf.config.channels[1]));
    ckpt.meta.emplace_back("t_min", detail::fmt_double_meta(clf.t_min));
    ckpt.meta.emplace_back("t_max", detail::fmt_double_meta(clf.t_max));
    ckpt.tensors.emplace_back("clf/conv0.w", clf.scorer.conv_w[0]);
    ckpt.tensors.emplace_back("clf/conv0.b", clf.scorer.conv_b[0]);
    ckpt.tensors.emplace_back("clf/conv1.w", clf.scorer.conv_w[1]);
    ckpt.tensors.emplace_back("clf/conv1.b", clf.scorer.conv_b[1]);
    ckpt.tensors.emplace_back("clf/fc.w", clf.scorer.fc_w);
    ckpt.tensors.emplace_back("clf/fc.b", clf.scorer.fc_b);
    save_checkpoint(ckpt, path);
}

inline TrainedClassifier load_classifier_checkpoint(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (!ckpt.find_meta("classifier")) throw ParseError("not a classifier checkpoint: " + path);
    TrainedClassifier clf;
    clf.config.kernel_size = std::stoi(ckpt.require_meta("kernel_size"));
    {
        std::stringstream ss(ckpt.require_meta("channels"));
        std::string tok;
        for (int i = 0; i < 2 && std::getline(ss, tok, ','); ++i)
            clf.config.channels[static_cast<size_t>(i)] = std::stoi(tok);
    }
    const int L = std::stoi(ckpt.require_meta("series_len"));
    clf.t_min = std::stod(ckpt.require_meta("t_min"));
    clf.t_max = std::stod(ckpt.require_meta("t_max"));
    Rng rng(0);
    clf.scorer = init_conv_scorer(L, clf.config.channels, clf.config.kernel_size, rng);
    clf.scorer.conv_w[0] = detail::as_param(ckpt.require_tensor("clf/conv0.w", clf.scorer.conv_w[0].shape()));
    clf.scorer.conv_b[0] = detail::as_param(ckpt.require_tensor("clf/conv0.b", clf.scorer.conv_b[0].shape()));
    clf.scorer.conv_w[1] = detail::as_param(ckpt.require_tensor("clf/conv1.w", clf.scorer.conv_w[1].shape()));
    clf.scorer.conv_b[1] = detail::as_param(ckpt.require_tensor("clf/conv1.b", clf.scorer.conv_b[1].shape()));
    clf.scorer.fc_w = detail::as_param(ckpt.require_tensor("clf/fc.w", clf.scorer.fc_w.shape()));
    clf.scorer.fc_b = detail::as_param(ckpt.require_tensor("clf/fc.b", clf.scorer.fc_b.shape()));
    return clf;
}

}  // namespace tcgan
