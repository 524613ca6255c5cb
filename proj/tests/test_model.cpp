#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "tcgan/model.hpp"
#include "testutil.hpp"

using namespace tcgan;

namespace {

TcganConfig small_config(int L = 16) {
    TcganConfig cfg;
    cfg.latent_dim = 8;
    cfg.series_len = L;
    cfg.gen_channels = {8, 8, 4, 1};
    cfg.disc_channels = {8, 16};
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 42;
    return cfg;
}

std::vector<IrregularSeries> toy_series(int count, int length, std::uint64_t seed) {
    SynthesisParams p;
    p.length = length;
    Rng rng(seed);
    std::vector<IrregularSeries> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(gen_sine(p, rng));
    return out;
}

Tensor norm_stamps(const std::vector<IrregularSeries>& series, double t_min, double t_max) {
    const int n = static_cast<int>(series.size());
    const int l = series.front().length();
    Tensor t = Tensor::zeros({n, l});
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < l; ++i)
            t.data()[static_cast<size_t>(r * l + i)] =
                (series[static_cast<size_t>(r)].timestamps[static_cast<size_t>(i)] - t_min) /
                (t_max - t_min);
    return t;
}

}  // namespace

TEST_CASE("generator output shape is [N,L]") {
    for (int L : {12, 24, 40}) {
        TcganConfig cfg = small_config(L);
        TcganModel m = init_tcgan(cfg);
        Rng rng(1);
        Tensor z = Tensor::randn({3, cfg.latent_dim}, rng, 1.0);
        Tensor t = Tensor::zeros({3, L});
        for (int r = 0; r < 3; ++r)
            for (int i = 0; i < L; ++i)
                t.data()[static_cast<size_t>(r * L + i)] = static_cast<double>(i) / (L - 1);
        Tensor out = generator_forward(m, z, t);
        CHECK(out.shape() == Shape{3, L});
    }
}

TEST_CASE("generator rejects unsorted or out-of-range conditioning") {
    TcganConfig cfg = small_config();
    TcganModel m = init_tcgan(cfg);
    Rng rng(2);
    Tensor z = Tensor::randn({1, cfg.latent_dim}, rng, 1.0);
    Tensor bad = Tensor::zeros({1, cfg.series_len});
    bad.data()[0] = 0.9;
    bad.data()[1] = 0.1;  // not ascending
    CHECK_THROWS_AS(generator_forward(m, z, bad), ContractError);
    Tensor oob = Tensor::full({1, cfg.series_len}, 1.5);
    CHECK_THROWS_AS(generator_forward(m, z, oob), ContractError);
}

TEST_CASE("generator forward is deterministic in infer mode") {
    TcganConfig cfg = small_config();
    TcganModel m = init_tcgan(cfg);
    Rng rng(3);
    Tensor z = Tensor::randn({2, cfg.latent_dim}, rng, 1.0);
    Tensor t = Tensor::zeros({2, cfg.series_len});
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i < cfg.series_len; ++i)
            t.data()[static_cast<size_t>(r * cfg.series_len + i)] =
                static_cast<double>(i) / (cfg.series_len - 1);
    Tensor a = generator_forward(m, z, t, NormMode::Infer);
    Tensor b = generator_forward(m, z, t, NormMode::Infer);
    CHECK(a.data() == b.data());
}

TEST_CASE("discriminator output lies strictly in (0,1)") {
    TcganConfig cfg = small_config(24);
    TcganModel m = init_tcgan(cfg);
    Rng rng(4);
    Tensor x = testutil::random_tensor({5, 24}, rng, -2, 2);
    Tensor t = Tensor::zeros({5, 24});
    for (int r = 0; r < 5; ++r)
        for (int i = 0; i < 24; ++i)
            t.data()[static_cast<size_t>(r * 24 + i)] = static_cast<double>(i) / 23.0;
    Tensor p = discriminator_forward(m, x, t);
    CHECK(p.shape() == Shape{5, 1});
    for (double v : p.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("discriminator flattened width follows the pooling arithmetic") {
    TcganConfig cfg = small_config(24);
    TcganModel m = init_tcgan(cfg);
    // 24 -> 12 -> 6 positions, disc_channels[1] wide
    CHECK(m.disc.fc_w.dim(0) == cfg.disc_channels[1] * 6);
    CHECK_THROWS_AS(init_tcgan(small_config(3)), ConfigError);
}

TEST_CASE("discriminator is batch-order equivariant") {
    TcganConfig cfg = small_config(16);
    TcganModel m = init_tcgan(cfg);
    auto series = toy_series(4, 16, 99);
    Tensor t = norm_stamps(series, 0.0, 12.0);
    Tensor x = Tensor::zeros({4, 16});
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < 16; ++i)
            x.data()[static_cast<size_t>(r * 16 + i)] =
                series[static_cast<size_t>(r)].values[static_cast<size_t>(i)];
    Tensor p = discriminator_forward(m, x, t);
    // reverse the batch
    Tensor xr = Tensor::zeros({4, 16});
    Tensor tr = Tensor::zeros({4, 16});
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < 16; ++i) {
            xr.data()[static_cast<size_t>(r * 16 + i)] =
                x.data()[static_cast<size_t>((3 - r) * 16 + i)];
            tr.data()[static_cast<size_t>(r * 16 + i)] =
                t.data()[static_cast<size_t>((3 - r) * 16 + i)];
        }
    Tensor pr = discriminator_forward(m, xr, tr);
    for (int r = 0; r < 4; ++r) CHECK(p.data()[static_cast<size_t>(r)] ==
                                      pr.data()[static_cast<size_t>(3 - r)]);
}

TEST_CASE("zero-epoch training returns the initialization") {
    TcganConfig cfg = small_config();
    cfg.epochs = 0;
    auto series = toy_series(6, cfg.series_len, 7);
    TcganModel trained = train_tcgan(series, cfg);
    TcganModel fresh = init_tcgan(cfg);
    CHECK(trained.g_seed_w.data() == fresh.g_seed_w.data());
    CHECK(trained.disc.fc_w.data() == fresh.disc.fc_w.data());
    CHECK(trained.loss_trace.empty());
}

TEST_CASE("training errors") {
    TcganConfig cfg = small_config();
    auto series = toy_series(6, cfg.series_len, 8);
    SECTION("mixed lengths") {
        auto mixed = series;
        mixed.push_back(toy_series(1, cfg.series_len + 2, 9).front());
        CHECK_THROWS_AS(train_tcgan(mixed, cfg), ContractError);
    }
    SECTION("batch size exceeds dataset") {
        cfg.batch_size = 7;
        CHECK_THROWS_AS(train_tcgan(series, cfg), ContractError);
    }
}

TEST_CASE("training is bit-reproducible and steps only the intended network") {
    TcganConfig cfg = small_config();
    cfg.epochs = 3;
    auto series = toy_series(8, cfg.series_len, 10);
    TcganModel a = train_tcgan(series, cfg);
    TcganModel b = train_tcgan(series, cfg);
    CHECK(a.g_seed_w.data() == b.g_seed_w.data());
    CHECK(a.disc.conv_w[0].data() == b.disc.conv_w[0].data());
    REQUIRE(a.loss_trace.size() == 3);
    for (size_t e = 0; e < 3; ++e) {
        CHECK(a.loss_trace[e].d_loss == b.loss_trace[e].d_loss);
        CHECK(a.loss_trace[e].g_loss == b.loss_trace[e].g_loss);
    }
}

TEST_CASE("discriminator step leaves generator parameters bit-identical and vice versa") {
    TcganConfig cfg = small_config();
    TcganModel m = init_tcgan(cfg);
    auto series = toy_series(4, cfg.series_len, 11);
    const double t_min = 0.0, t_max = 12.0;
    Tensor x = Tensor::zeros({4, cfg.series_len});
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < cfg.series_len; ++i)
            x.data()[static_cast<size_t>(r * cfg.series_len + i)] =
                series[static_cast<size_t>(r)].values[static_cast<size_t>(i)];
    Tensor t = norm_stamps(series, t_min, t_max);
    Rng rng(12);
    Tensor z = Tensor::randn({4, cfg.latent_dim}, rng, 1.0);

    std::vector<Tensor> g_params = m.generator_params();
    std::vector<Tensor> d_params = m.discriminator_params();
    AdamState g_opt = make_adam_state(g_params, cfg.adam);
    AdamState d_opt = make_adam_state(d_params, cfg.adam);

    // discriminator step on a detached fake batch
    std::vector<std::vector<double>> g_before;
    for (auto& p : g_params) g_before.push_back(p.data());
    Tensor fake = generator_forward(m, z, t, NormMode::Train);
    {
        Tape tape;
        Tensor d_real = discriminator_forward(m, x, t);
        Tensor d_fake = discriminator_forward(m, fake, t);
        Tensor loss = bce_loss(d_real, Tensor::full({4, 1}, 1.0)) +
                      bce_loss(d_fake, Tensor::zeros({4, 1}));
        tape.backward(loss);
        adam_step(d_params, d_opt);
    }
    for (size_t i = 0; i < g_params.size(); ++i) CHECK(g_params[i].data() == g_before[i]);

    // generator step
    std::vector<std::vector<double>> d_before;
    for (auto& p : d_params) d_before.push_back(p.data());
    {
        Tape tape;
        Tensor fake2 = generator_forward(m, z, t, NormMode::Train);
        Tensor d_out = discriminator_forward(m, fake2, t);
        Tensor loss = bce_loss(d_out, Tensor::full({4, 1}, 1.0));
        tape.backward(loss);
        adam_step(g_params, g_opt);
    }
    for (size_t i = 0; i < d_params.size(); ++i) CHECK(d_params[i].data() == d_before[i]);
    // and the generator did move
    bool moved = false;
    for (size_t i = 0; i < g_params.size(); ++i) moved = moved || g_params[i].data() != g_before[i];
    CHECK(moved);
}

TEST_CASE("loss variants are finite and match their definitions") {
    TcganConfig cfg = small_config();
    TcganModel m = init_tcgan(cfg);
    Rng rng(13);
    auto series = toy_series(4, cfg.series_len, 14);
    Tensor t = norm_stamps(series, 0.0, 12.0);
    Tensor z = Tensor::randn({4, cfg.latent_dim}, rng, 1.0);
    Tensor fake = generator_forward(m, z, t, NormMode::Infer);
    Tensor d = discriminator_forward(m, fake, t);

    // minimax: mean log(1 - D); non-saturating: -mean log D
    double mm_expected = 0.0, ns_expected = 0.0;
    for (double v : d.data()) {
        mm_expected += std::log(1.0 - v);
        ns_expected += -std::log(v);
    }
    mm_expected /= d.size();
    ns_expected /= d.size();

    Tensor mm = scale(bce_loss(d, Tensor::zeros({4, 1})), -1.0);
    Tensor ns = bce_loss(d, Tensor::full({4, 1}, 1.0));
    CHECK(mm.value() == Catch::Approx(mm_expected).epsilon(1e-12));
    CHECK(ns.value() == Catch::Approx(ns_expected).epsilon(1e-12));
    CHECK(std::isfinite(mm.value()));
    CHECK(std::isfinite(ns.value()));
}

TEST_CASE("sampling basics") {
    TcganConfig cfg = small_config();
    cfg.epochs = 1;
    auto series = toy_series(6, cfg.series_len, 15);
    TcganModel m = train_tcgan(series, cfg);

    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < 3; ++i) vecs.push_back(series[static_cast<size_t>(i)].timestamps);

    SECTION("count and length") {
        Rng rng(16);
        auto out = sample(m, vecs, rng);
        REQUIRE(out.size() == 3);
        for (const auto& s : out) {
            CHECK(s.length() == cfg.series_len);
            check_series(s, "sampled");
        }
    }
    SECTION("fixed seed reproduces samples") {
        Rng r1(17), r2(17);
        auto a = sample(m, vecs, r1);
        auto b = sample(m, vecs, r2);
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
    }
    SECTION("timestamps never seen in training work") {
        std::vector<double> fresh(static_cast<size_t>(cfg.series_len));
        for (int i = 0; i < cfg.series_len; ++i)
            fresh[static_cast<size_t>(i)] = 0.3 + 11.0 * i / (cfg.series_len - 1);
        Rng rng(18);
        auto out = sample(m, {fresh}, rng);
        REQUIRE(out.size() == 1);
        CHECK(out[0].timestamps == fresh);
    }
    SECTION("wrong vector length is rejected") {
        Rng rng(19);
        std::vector<double> bad(static_cast<size_t>(cfg.series_len - 1), 0.5);
        for (size_t i = 0; i < bad.size(); ++i) bad[i] = static_cast<double>(i);
        CHECK_THROWS_AS(sample(m, {bad}, rng), ContractError);
    }
}

TEST_CASE("conditioning matters after a little training") {
    TcganConfig cfg = small_config();
    cfg.epochs = 30;
    auto series = toy_series(8, cfg.series_len, 20);
    TcganModel m = train_tcgan(series, cfg);
    // same z, two different timestamp vectors
    Rng rng(21);
    Tensor z = Tensor::randn({1, cfg.latent_dim}, rng, 1.0);
    Tensor t1 = Tensor::zeros({1, cfg.series_len});
    Tensor t2 = Tensor::zeros({1, cfg.series_len});
    for (int i = 0; i < cfg.series_len; ++i) {
        const double u = static_cast<double>(i) / (cfg.series_len - 1);
        t1.data()[static_cast<size_t>(i)] = u * 0.5;
        t2.data()[static_cast<size_t>(i)] = 0.5 + u * 0.5;
    }
    Tensor a = generator_forward(m, z, t1);
    Tensor b = generator_forward(m, z, t2);
    double diff = 0.0;
    for (int i = 0; i < a.size(); ++i) diff += std::abs(a.data()[i] - b.data()[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("checkpoint round trip reproduces forward outputs bit-exactly") {
    TcganConfig cfg = small_config();
    cfg.epochs = 2;
    auto sines = toy_series(6, cfg.series_len, 22);
    TcganConfig cfg1 = cfg;
    cfg1.seed = 43;
    std::map<int, TcganModel> models;
    models.emplace(0, train_tcgan(sines, cfg));
    models.emplace(1, train_tcgan(sines, cfg1));

    const std::string path =
        (std::filesystem::temp_directory_path() / "tcgan_test_ckpt.txt").string();
    save_tcgan_checkpoint(models, path);
    auto loaded = load_tcgan_checkpoint(path);
    REQUIRE(loaded.size() == 2);

    std::vector<std::vector<double>> vecs{sines[0].timestamps, sines[1].timestamps};
    for (int label : {0, 1}) {
        Rng r1(23), r2(23);
        auto a = sample(models.at(label), vecs, r1);
        auto b = sample(loaded.at(label), vecs, r2);
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
    }
    std::filesystem::remove(path);
}

TEST_CASE("discriminator alone learns against a frozen untrained generator") {
    // median over 5 seeds of (first-epoch loss - last-epoch loss) must be
    // positive over 20 epochs of D-only steps
    std::vector<double> improvements;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TcganConfig cfg = small_config();
        cfg.seed = 100 + seed;
        auto series = toy_series(8, cfg.series_len, 30 + seed);
        TcganModel m = init_tcgan(cfg);
        double t_min = series.front().timestamps.front(), t_max = t_min;
        for (const auto& s : series) {
            t_min = std::min(t_min, s.timestamps.front());
            t_max = std::max(t_max, s.timestamps.back());
        }
        Tensor t = norm_stamps(series, t_min, t_max);
        Tensor x = Tensor::zeros({8, cfg.series_len});
        for (int r = 0; r < 8; ++r)
            for (int i = 0; i < cfg.series_len; ++i)
                x.data()[static_cast<size_t>(r * cfg.series_len + i)] =
                    series[static_cast<size_t>(r)].values[static_cast<size_t>(i)];
        std::vector<Tensor> d_params = m.discriminator_params();
        AdamState d_opt = make_adam_state(d_params, cfg.adam);
        Rng rng(200 + seed);
        double first = 0.0, last = 0.0;
        for (int epoch = 0; epoch < 20; ++epoch) {
            Tensor z = Tensor::randn({8, cfg.latent_dim}, rng, 1.0);
            Tensor fake = generator_forward(m, z, t, NormMode::Infer);  // frozen G
            Tape tape;
            Tensor loss = bce_loss(discriminator_forward(m, x, t), Tensor::full({8, 1}, 1.0)) +
                          bce_loss(discriminator_forward(m, fake, t), Tensor::zeros({8, 1}));
            tape.backward(loss);
            adam_step(d_params, d_opt);
            if (epoch == 0) first = loss.value();
            if (epoch == 19) last = loss.value();
        }
        improvements.push_back(first - last);
    }
    std::sort(improvements.begin(), improvements.end());
    CHECK(improvements[2] > 0.0);  // median improves
}
