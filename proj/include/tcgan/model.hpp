#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tcgan/checkpoint.hpp"
#include "tcgan/common.hpp"
#include "tcgan/series.hpp"
#include "tcgan/tensor.hpp"

// Timestamp-conditioned generator/discriminator pair and the adversarial
// training loop. The generator receives the timestamp vector concatenated to
// the noise vector; the discriminator receives it stacked as a second input
// channel.

namespace tcgan {

enum class LossVariant { Minimax, NonSaturating };

inline const char* to_string(LossVariant v) {
    return v == LossVariant::Minimax ? "minimax" : "non_saturating";
}
inline LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "minimax") return LossVariant::Minimax;
    if (s == "non_saturating") return LossVariant::NonSaturating;
    throw ConfigError("unknown loss variant '" + s + "' (use minimax or non_saturating)");
}

struct TcganConfig {
    int latent_dim = 16;
    int series_len = 0;  // L; 0 means take it from the training data
    std::array<int, 4> gen_channels{16, 16, 8, 1};
    std::array<int, 2> disc_channels{32, 64};
    int kernel_size = 5;
    int batch_size = 32;
    int epochs = 600;
    AdamConfig adam{};  // lr=2e-4, beta1=0.5, beta2=0.999
    std::uint64_t seed = 0;
    LossVariant loss_variant = LossVariant::NonSaturating;
};

inline void check_tcgan_config(const TcganConfig& cfg) {
    if (cfg.latent_dim < 1) throw ConfigError("latent_dim must be positive");
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
        throw ConfigError("kernel_size must be odd (length-preserving padding)");
    if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch norm)");
    if (cfg.epochs < 0) throw ConfigError("epochs must be nonnegative");
    for (int c : cfg.gen_channels)
        if (c < 1) throw ConfigError("gen_channels must be positive");
    for (int c : cfg.disc_channels)
        if (c < 1) throw ConfigError("disc_channels must be positive");
    if (cfg.gen_channels[3] != 1)
        throw ConfigError("gen_channels[3] must be 1 (single-channel output layer)");
}

// conv+relu+maxpool(2) twice, then a dense head with sigmoid, over the two
// stacked channels (values, timestamps). Shared by the discriminator and the
// downstream classifier so both sides of every comparison use one
// architecture.
struct ConvScorer {
    std::array<Tensor, 2> conv_w;  // [C_out,C_in,K]
    std::array<Tensor, 2> conv_b;
    Tensor fc_w;  // [C1*floor(floor(L/2)/2), 1]
    Tensor fc_b;
    int kernel = 5;
    int series_len = 0;

    std::vector<Tensor> params() const {
        return {conv_w[0], conv_b[0], conv_w[1], conv_b[1], fc_w, fc_b};
    }
};

inline int scorer_flat_len(int series_len, int channels_out) {
    return channels_out * ((series_len / 2) / 2);
}

// Fan-in-scaled Gaussian init: sqrt(2/fan_in) into ReLU layers, sqrt(1/fan_in)
// into linear/sigmoid outputs. Fixed-sigma DCGAN init (0.02) leaves these
// narrow layers so small that the discriminator stays pinned at 0.5 for
// hundreds of epochs.
inline double he_sigma(int fan_in) { return std::sqrt(2.0 / fan_in); }
inline double xavier_sigma(int fan_in) { return std::sqrt(1.0 / fan_in); }

inline ConvScorer init_conv_scorer(int series_len, const std::array<int, 2>& channels, int kernel,
                                   Rng& rng) {
    if ((series_len / 2) / 2 < 1)
        throw GeometryError("series length " + std::to_string(series_len) +
                            " too short for two pooling stages");
    ConvScorer s;
    s.kernel = kernel;
    s.series_len = series_len;
    const int cin[2] = {2, channels[0]};
    for (int i = 0; i < 2; ++i) {
        s.conv_w[static_cast<size_t>(i)] =
            Tensor::randn({channels[static_cast<size_t>(i)], cin[i], kernel}, rng,
                          he_sigma(cin[i] * kernel), true);
        s.conv_b[static_cast<size_t>(i)] = Tensor::zeros({channels[static_cast<size_t>(i)]});
        s.conv_b[static_cast<size_t>(i)].set_requires_grad(true);
    }
    const int flat = scorer_flat_len(series_len, channels[1]);
    s.fc_w = Tensor::randn({flat, 1}, rng, xavier_sigma(flat), true);
    s.fc_b = Tensor::zeros({1});
    s.fc_b.set_requires_grad(true);
    return s;
}

// x,t: [N,L] -> probabilities [N,1]
inline Tensor conv_scorer_forward(const ConvScorer& s, const Tensor& x, const Tensor& t) {
    check_same_shape("conv_scorer_forward", x, t);
    if (x.rank() != 2 || x.dim(1) != s.series_len)
        throw ShapeError("conv_scorer_forward: expected [N," + std::to_string(s.series_len) +
                         "], got " + shape_str(x.shape()));
    const int pad = (s.kernel - 1) / 2;
    Tensor h = stack_channels(x, t);
    h = relu(add_channel_bias(conv1d_forward(h, s.conv_w[0], 1, pad), s.conv_b[0]));
    h = maxpool1d(h, 2);
    h = relu(add_channel_bias(conv1d_forward(h, s.conv_w[1], 1, pad), s.conv_b[1]));
    h = maxpool1d(h, 2);
    h = reshape(h, {x.dim(0), s.fc_w.dim(0)});
    return sigmoid(dense_forward(h, s.fc_w, s.fc_b));
}

struct BatchNormLayer {
    Tensor gamma;
    Tensor beta;
    RunningStats stats;
};

struct EpochLoss {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

struct TcganModel {
    TcganConfig config;
    double t_min = 0.0;  // timestamp range seen at training, used to normalize
    double t_max = 1.0;

    Tensor g_seed_w;  // [latent_dim+L, gen_channels[0]*L]
    Tensor g_seed_b;
    std::array<Tensor, 4> g_conv_w;  // transposed-conv kernels [C_in,C_out,K]
    std::array<Tensor, 4> g_conv_b;
    std::array<BatchNormLayer, 3> g_bn;  // after layers 1..3

    ConvScorer disc;

    std::vector<EpochLoss> loss_trace;

    std::vector<Tensor> generator_params() const {
        std::vector<Tensor> p{g_seed_w, g_seed_b};
        for (int i = 0; i < 4; ++i) {
            p.push_back(g_conv_w[static_cast<size_t>(i)]);
            p.push_back(g_conv_b[static_cast<size_t>(i)]);
            if (i < 3) {
                p.push_back(g_bn[static_cast<size_t>(i)].gamma);
                p.push_back(g_bn[static_cast<size_t>(i)].beta);
            }
        }
        return p;
    }
    std::vector<Tensor> discriminator_params() const { return disc.params(); }
};

// Transposed-conv layer i maps gen_in_channels(cfg,i) -> cfg.gen_channels[i];
// layer 0 consumes the dense seed projection.
inline int gen_in_channels(const TcganConfig& cfg, int layer) {
    return layer == 0 ? cfg.gen_channels[0]
                      : cfg.gen_channels[static_cast<size_t>(layer - 1)];
}

// Fan-in-scaled Gaussian weights, zero biases, gamma=1, beta=0; draw order is
// fixed so a seed pins the whole model.
inline TcganModel init_tcgan(const TcganConfig& config) {
    check_tcgan_config(config);
    if (config.series_len < 4)
        throw ConfigError("series_len must be >= 4 (two pooling stages in the discriminator)");
    TcganModel m;
    m.config = config;
    Rng rng(config.seed);
    const int L = config.series_len;
    const int c0 = config.gen_channels[0];
    m.g_seed_w = Tensor::randn({config.latent_dim + L, c0 * L}, rng,
                               he_sigma(config.latent_dim + L), true);
    m.g_seed_b = Tensor::zeros({c0 * L});
    m.g_seed_b.set_requires_grad(true);
    for (int i = 0; i < 4; ++i) {
        const int cin = gen_in_channels(config, i);
        const int cout = config.gen_channels[static_cast<size_t>(i)];
        const double sigma = i == 3 ? xavier_sigma(cin * config.kernel_size)
                                    : he_sigma(cin * config.kernel_size);
        m.g_conv_w[static_cast<size_t>(i)] =
            Tensor::randn({cin, cout, config.kernel_size}, rng, sigma, true);
        m.g_conv_b[static_cast<size_t>(i)] = Tensor::zeros({cout});
        m.g_conv_b[static_cast<size_t>(i)].set_requires_grad(true);
        if (i < 3) {
            auto& bn = m.g_bn[static_cast<size_t>(i)];
            bn.gamma = Tensor::full({cout}, 1.0);
            bn.gamma.set_requires_grad(true);
            bn.beta = Tensor::zeros({cout});
            bn.beta.set_requires_grad(true);
            bn.stats = make_running_stats(cout);
        }
    }
    m.disc = init_conv_scorer(L, config.disc_channels, config.kernel_size, rng);
    return m;
}

namespace detail {
inline void check_conditioning(const Tensor& t, int series_len, const char* where) {
    if (t.rank() != 2 || t.dim(1) != series_len)
        throw ShapeError(std::string(where) + ": timestamps must be [N," +
                         std::to_string(series_len) + "], got " + shape_str(t.shape()));
    const int n = t.dim(0), l = t.dim(1);
    for (int r = 0; r < n; ++r) {
        const double* row = t.data().data() + r * l;
        for (int i = 0; i < l; ++i) {
            if (row[i] < -1e-9 || row[i] > 1.0 + 1e-9)
                throw ContractError(std::string(where) +
                                    ": normalized timestamps must lie in [0,1]");
            if (i > 0 && row[i] < row[i - 1])
                throw ContractError(std::string(where) + ": timestamp row " + std::to_string(r) +
                                    " is not sorted ascending");
        }
    }
}
}  // namespace detail

// z: [N,latent_dim], t: [N,L] normalized timestamps -> [N,L].
// mode selects batch-norm behaviour; Train also updates the running stats.
inline Tensor generator_forward(TcganModel& model, const Tensor& z, const Tensor& t,
                                NormMode mode = NormMode::Infer) {
    const TcganConfig& cfg = model.config;
    const int L = cfg.series_len;
    if (z.rank() != 2 || z.dim(1) != cfg.latent_dim)
        throw ShapeError("generator_forward: noise must be [N," + std::to_string(cfg.latent_dim) +
                         "], got " + shape_str(z.shape()));
    if (z.dim(0) != t.dim(0))
        throw ShapeError("generator_forward: batch extents differ between z and t");
    detail::check_conditioning(t, L, "generator_forward");

    const int n = z.dim(0);
    const int pad = (cfg.kernel_size - 1) / 2;
    Tensor h = concat_cols(z, t);
    h = dense_forward(h, model.g_seed_w, model.g_seed_b);
    h = reshape(h, {n, cfg.gen_channels[0], L});
    for (int i = 0; i < 4; ++i) {
        h = conv1d_transpose_forward(h, model.g_conv_w[static_cast<size_t>(i)], 1, pad);
        h = add_channel_bias(h, model.g_conv_b[static_cast<size_t>(i)]);
        if (i < 3) {
            auto& bn = model.g_bn[static_cast<size_t>(i)];
            h = batchnorm1d_forward(h, bn.gamma, bn.beta, mode, bn.stats);
            h = relu(h);
        }
    }
    return reshape(h, {n, L});  // last layer is single-channel and linear
}

// x,t: [N,L] -> probability that x is real, strictly in (0,1).
inline Tensor discriminator_forward(const TcganModel& model, const Tensor& x, const Tensor& t) {
    detail::check_conditioning(t, model.config.series_len, "discriminator_forward");
    return conv_scorer_forward(model.disc, x, t);
}

namespace detail {

struct SeriesBatch {
    Tensor values;      // [B,L]
    Tensor timestamps;  // [B,L] normalized
};

inline SeriesBatch pack_batch(const std::vector<const IrregularSeries*>& series,
                              const std::vector<int>& order, int begin, int end, int L,
                              double t_min, double t_max) {
    const int b = end - begin;
    Tensor x = Tensor::zeros({b, L});
    Tensor t = Tensor::zeros({b, L});
    const double inv = 1.0 / (t_max - t_min);
    for (int r = 0; r < b; ++r) {
        const IrregularSeries& s = *series[static_cast<size_t>(order[static_cast<size_t>(begin + r)])];
        for (int i = 0; i < L; ++i) {
            x.data()[static_cast<size_t>(r * L + i)] = s.values[static_cast<size_t>(i)];
            t.data()[static_cast<size_t>(r * L + i)] =
                (s.timestamps[static_cast<size_t>(i)] - t_min) * inv;
        }
    }
    return {std::move(x), std::move(t)};
}

inline Tensor draw_noise(int n, int latent_dim, Rng& rng) {
    Tensor z = Tensor::zeros({n, latent_dim});
    for (double& v : z.data()) v = rng.normal(0.0, 1.0);
    return z;
}

}  // namespace detail

// Alternating updates per minibatch: one discriminator step on real
// (target 1) and generated (target 0) samples, then one generator step with
// fresh noise; both reuse the real batch's timestamp vectors. Returns the
// trained model with a per-epoch loss trace.
inline TcganModel train_tcgan(const std::vector<const IrregularSeries*>& train,
                              TcganConfig config) {
    if (train.empty()) throw ContractError("train_tcgan: empty training set");
    const int L0 = train.front()->length();
    if (config.series_len == 0) config.series_len = L0;
    for (size_t i = 0; i < train.size(); ++i) {
        check_series(*train[i], "train_tcgan series " + std::to_string(i));
        if (train[i]->length() != config.series_len)
            throw ContractError("train_tcgan: series " + std::to_string(i) + " has length " +
                                std::to_string(train[i]->length()) + ", expected " +
                                std::to_string(config.series_len));
    }
    const int n = static_cast<int>(train.size());
    if (config.batch_size > n)
        throw ContractError("train_tcgan: batch_size " + std::to_string(config.batch_size) +
                            " exceeds dataset size " + std::to_string(n));

    TcganModel model = init_tcgan(config);
    double t_min = train.front()->timestamps.front();
    double t_max = train.front()->timestamps.back();
    for (const IrregularSeries* s : train) {
        t_min = std::min(t_min, s->timestamps.front());
        t_max = std::max(t_max, s->timestamps.back());
    }
    model.t_min = t_min;
    model.t_max = t_max;

    Rng rng(mix_seed(config.seed, 0x7261696e));
    std::vector<Tensor> g_params = model.generator_params();
    std::vector<Tensor> d_params = model.discriminator_params();
    AdamState g_opt = make_adam_state(g_params, config.adam);
    AdamState d_opt = make_adam_state(d_params, config.adam);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

    const int L = config.series_len;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates shuffle from the training stream
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }
        double d_sum = 0.0, g_sum = 0.0;
        int batches = 0;
        for (int begin = 0; begin < n; begin += config.batch_size) {
            const int end = std::min(n, begin + config.batch_size);
            const int b = end - begin;
            auto batch = detail::pack_batch(train, order, begin, end, L, t_min, t_max);
            Tensor ones = Tensor::full({b, 1}, 1.0);
            Tensor zeros_t = Tensor::zeros({b, 1});

            // discriminator step; the generated batch is produced outside the
            // tape so no gradient reaches the generator
            Tensor z_d = detail::draw_noise(b, config.latent_dim, rng);
            Tensor fake = generator_forward(model, z_d, batch.timestamps, NormMode::Train);
            {
                Tape tape;
                Tensor d_real = discriminator_forward(model, batch.values, batch.timestamps);
                Tensor d_fake = discriminator_forward(model, fake, batch.timestamps);
                Tensor d_loss = bce_loss(d_real, ones) + bce_loss(d_fake, zeros_t);
                tape.backward(d_loss);
                adam_step(d_params, d_opt);
                d_sum += d_loss.value();
            }

            // generator step with fresh noise and the same timestamp vectors
            Tensor z_g = detail::draw_noise(b, config.latent_dim, rng);
            {
                Tape tape;
                Tensor fake2 = generator_forward(model, z_g, batch.timestamps, NormMode::Train);
                Tensor d_out = discriminator_forward(model, fake2, batch.timestamps);
                Tensor g_loss = config.loss_variant == LossVariant::NonSaturating
                                    ? bce_loss(d_out, ones)              // -mean log D
                                    : scale(bce_loss(d_out, zeros_t), -1.0);  // mean log(1-D)
                tape.backward(g_loss);
                adam_step(g_params, g_opt);
                g_sum += g_loss.value();
            }
            ++batches;
        }
        model.loss_trace.push_back({d_sum / batches, g_sum / batches});
    }
    return model;
}

inline TcganModel train_tcgan(const std::vector<IrregularSeries>& train, const TcganConfig& cfg) {
    std::vector<const IrregularSeries*> ptrs;
    ptrs.reserve(train.size());
    for (const auto& s : train) ptrs.push_back(&s);
    return train_tcgan(ptrs, cfg);
}

// Draws z ~ N(0,I) per requested timestamp vector and runs the generator in
// infer mode. Vectors may contain timestamps never seen at training; they are
// normalized with the training range (clamped into [0,1]) for conditioning
// and returned raw in the output series.
inline std::vector<IrregularSeries> sample(TcganModel& model,
                                           const std::vector<std::vector<double>>& timestamp_vectors,
                                           Rng& rng) {
    const int L = model.config.series_len;
    const int n = static_cast<int>(timestamp_vectors.size());
    if (n == 0) return {};
    for (int r = 0; r < n; ++r) {
        const auto& tv = timestamp_vectors[static_cast<size_t>(r)];
        if (static_cast<int>(tv.size()) != L)
            throw ContractError("sample: timestamp vector " + std::to_string(r) + " has length " +
                                std::to_string(tv.size()) + ", expected " + std::to_string(L));
        for (size_t i = 1; i < tv.size(); ++i)
            if (!(tv[i] > tv[i - 1]))
                throw InvariantError("sample: timestamp vector " + std::to_string(r) +
                                     " not strictly increasing at index " + std::to_string(i));
    }
    Tensor z = detail::draw_noise(n, model.config.latent_dim, rng);
    Tensor t = Tensor::zeros({n, L});
    const double inv = 1.0 / (model.t_max - model.t_min);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < L; ++i) {
            double v = (timestamp_vectors[static_cast<size_t>(r)][static_cast<size_t>(i)] -
                        model.t_min) * inv;
            t.data()[static_cast<size_t>(r * L + i)] = std::min(1.0, std::max(0.0, v));
        }
    Tensor x = generator_forward(model, z, t, NormMode::Infer);
    std::vector<IrregularSeries> out(static_cast<size_t>(n));
    for (int r = 0; r < n; ++r) {
        out[static_cast<size_t>(r)].timestamps = timestamp_vectors[static_cast<size_t>(r)];
        out[static_cast<size_t>(r)].values.assign(x.data().begin() + r * L,
                                                  x.data().begin() + (r + 1) * L);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpointing (one or more labeled models per file)

namespace detail {

inline std::string fmt_double_meta(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void append_model_tensors(Checkpoint& ckpt, const TcganModel& m, const std::string& prefix) {
    auto add = [&](const std::string& name, const Tensor& t) {
        ckpt.tensors.emplace_back(prefix + name, t);
    };
    add("gen/seed.w", m.g_seed_w);
    add("gen/seed.b", m.g_seed_b);
    for (int i = 0; i < 4; ++i) {
        const std::string li = std::to_string(i);
        add("gen/conv" + li + ".w", m.g_conv_w[static_cast<size_t>(i)]);
        add("gen/conv" + li + ".b", m.g_conv_b[static_cast<size_t>(i)]);
        if (i < 3) {
            const auto& bn = m.g_bn[static_cast<size_t>(i)];
            add("gen/bn" + li + ".gamma", bn.gamma);
            add("gen/bn" + li + ".beta", bn.beta);
            add("gen/bn" + li + ".running_mean", Tensor::from({static_cast<int>(bn.stats.mean.size())},
                                                              bn.stats.mean));
            add("gen/bn" + li + ".running_var", Tensor::from({static_cast<int>(bn.stats.var.size())},
                                                             bn.stats.var));
        }
    }
    add("disc/conv0.w", m.disc.conv_w[0]);
    add("disc/conv0.b", m.disc.conv_b[0]);
    add("disc/conv1.w", m.disc.conv_w[1]);
    add("disc/conv1.b", m.disc.conv_b[1]);
    add("disc/fc.w", m.disc.fc_w);
    add("disc/fc.b", m.disc.fc_b);
}

inline Tensor as_param(const Tensor& t) {
    Tensor p = t.detach();
    p.set_requires_grad(true);
    return p;
}

inline TcganModel model_from_checkpoint(const Checkpoint& ckpt, const TcganConfig& cfg,
                                        double t_min, double t_max, const std::string& prefix) {
    TcganModel m = init_tcgan(cfg);
    m.t_min = t_min;
    m.t_max = t_max;
    auto get = [&](const std::string& name, const Shape& shape) {
        return ckpt.require_tensor(prefix + name, shape);
    };
    m.g_seed_w = as_param(get("gen/seed.w", m.g_seed_w.shape()));
    m.g_seed_b = as_param(get("gen/seed.b", m.g_seed_b.shape()));
    for (int i = 0; i < 4; ++i) {
        const std::string li = std::to_string(i);
        m.g_conv_w[static_cast<size_t>(i)] =
            as_param(get("gen/conv" + li + ".w", m.g_conv_w[static_cast<size_t>(i)].shape()));
        m.g_conv_b[static_cast<size_t>(i)] =
            as_param(get("gen/conv" + li + ".b", m.g_conv_b[static_cast<size_t>(i)].shape()));
        if (i < 3) {
            auto& bn = m.g_bn[static_cast<size_t>(i)];
            bn.gamma = as_param(get("gen/bn" + li + ".gamma", bn.gamma.shape()));
            bn.beta = as_param(get("gen/bn" + li + ".beta", bn.beta.shape()));
            const int c = static_cast<int>(bn.stats.mean.size());
            bn.stats.mean = get("gen/bn" + li + ".running_mean", {c}).data();
            bn.stats.var = get("gen/bn" + li + ".running_var", {c}).data();
        }
    }
    m.disc.conv_w[0] = as_param(get("disc/conv0.w", m.disc.conv_w[0].shape()));
    m.disc.conv_b[0] = as_param(get("disc/conv0.b", m.disc.conv_b[0].shape()));
    m.disc.conv_w[1] = as_param(get("disc/conv1.w", m.disc.conv_w[1].shape()));
    m.disc.conv_b[1] = as_param(get("disc/conv1.b", m.disc.conv_b[1].shape()));
    m.disc.fc_w = as_param(get("disc/fc.w", m.disc.fc_w.shape()));
    m.disc.fc_b = as_param(get("disc/fc.b", m.disc.fc_b.shape()));
    return m;
}

}  // namespace detail

inline void save_tcgan_checkpoint(const std::map<int, TcganModel>& models,
                                  const std::string& path) {
    if (models.empty()) throw ContractError("save_tcgan_checkpoint: no models");
    const TcganConfig& cfg = models.begin()->second.config;
    Checkpoint ckpt;
    auto meta = [&](const std::string& k, const std::string& v) { ckpt.meta.emplace_back(k, v); };
    meta("latent_dim", std::to_string(cfg.latent_dim));
    meta("series_len", std::to_string(cfg.series_len));
    meta("kernel_size", std::to_string(cfg.kernel_size));
    meta("gen_channels", std::to_string(cfg.gen_channels[0]) + "," +
                             std::to_string(cfg.gen_channels[1]) + "," +
                             std::to_string(cfg.gen_channels[2]) + "," +
                             std::to_string(cfg.gen_channels[3]));
    meta("disc_channels",
         std::to_string(cfg.disc_channels[0]) + "," + std::to_string(cfg.disc_channels[1]));
    meta("loss_variant", to_string(cfg.loss_variant));
    std::string classes;
    for (const auto& [label, model] : models) {
        classes += (classes.empty() ? "" : ",") + std::to_string(label);
        meta("c" + std::to_string(label) + ".t_min", detail::fmt_double_meta(model.t_min));
        meta("c" + std::to_string(label) + ".t_max", detail::fmt_double_meta(model.t_max));
    }
    meta("classes", classes);
    for (const auto& [label, model] : models)
        detail::append_model_tensors(ckpt, model, "c" + std::to_string(label) + "/");
    save_checkpoint(ckpt, path);
}

inline std::map<int, TcganModel> load_tcgan_checkpoint(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    TcganConfig cfg;
    cfg.latent_dim = std::stoi(ckpt.require_meta("latent_dim"));
    cfg.series_len = std::stoi(ckpt.require_meta("series_len"));
    cfg.kernel_size = std::stoi(ckpt.require_meta("kernel_size"));
    {
        std::stringstream ss(ckpt.require_meta("gen_channels"));
        std::string tok;
        for (int i = 0; i < 4 && std::getline(ss, tok, ','); ++i)
            cfg.gen_channels[static_cast<size_t>(i)] = std::stoi(tok);
        std::stringstream ss2(ckpt.require_meta("disc_channels"));
        for (int i = 0; i < 2 && std::getline(ss2, tok, ','); ++i)
            cfg.disc_channels[static_cast<size_t>(i)] = std::stoi(tok);
    }
    cfg.loss_variant = loss_variant_from_string(ckpt.require_meta("loss_variant"));
    std::map<int, TcganModel> models;
    std::stringstream ss(ckpt.require_meta("classes"));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int label = std::stoi(tok);
        const double t_min = std::stod(ckpt.require_meta("c" + tok + ".t_min"));
        const double t_max = std::stod(ckpt.require_meta("c" + tok + ".t_max"));
        models.emplace(label,
                       detail::model_from_checkpoint(ckpt, cfg, t_min, t_max, "c" + tok + "/"));
    }
    return models;
}

}  // namespace tcgan
