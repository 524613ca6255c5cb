#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <set>

#include "tcgan/series.hpp"

using namespace tcgan;
using Catch::Approx;

namespace {
std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("gen_sine timestamps lie in range, sorted, length L") {
    SynthesisParams p;
    p.length = 40;
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        IrregularSeries s = gen_sine(p, rng);
        REQUIRE(s.length() == 40);
        for (int j = 0; j < s.length(); ++j) {
            CHECK(s.timestamps[j] >= 0.0);
            CHECK(s.timestamps[j] <= 12.0);
            if (j > 0) CHECK(s.timestamps[j] > s.timestamps[j - 1]);
        }
    }
}

TEST_CASE("noiseless sine matches the closed form") {
    SynthesisParams p;
    p.length = 64;
    p.amplitude_jitter_sigma = 0.0;
    p.noise_sigma = 0.0;
    Rng rng(2);
    IrregularSeries s = gen_sine(p, rng);
    for (int i = 0; i < s.length(); ++i)
        CHECK(s.values[i] == Approx(std::sin(s.timestamps[i])).margin(1e-12));
}

TEST_CASE("noiseless sawtooth closed form and range") {
    SynthesisParams p;
    p.length = 200;
    p.amplitude_jitter_sigma = 0.0;
    p.noise_sigma = 0.0;
    Rng rng(3);
    IrregularSeries s = gen_sawtooth(p, rng);
    const double pi = std::numbers::pi;
    auto saw = [&](double t) {
        const double u = t / p.period;
        return 2.0 * (u - std::floor(u + 0.5));
    };
    for (int i = 0; i < s.length(); ++i) {
        CHECK(s.values[i] == Approx(saw(s.timestamps[i])).margin(1e-12));
        CHECK(s.values[i] >= -1.0);
        CHECK(s.values[i] < 1.0);
    }
    // period boundary values
    CHECK(saw(0.0) == 0.0);
    CHECK(saw(pi - 1e-9) == Approx(1.0).margin(1e-8));
    CHECK(saw(pi) == -1.0);
}

TEST_CASE("generators are bit-reproducible under a fixed seed") {
    SynthesisParams p;
    p.length = 30;
    Rng a(77), b(77);
    IrregularSeries s1 = gen_sine(p, a);
    IrregularSeries s2 = gen_sine(p, b);
    CHECK(s1.timestamps == s2.timestamps);
    CHECK(s1.values == s2.values);
    IrregularSeries w1 = gen_sawtooth(p, a);
    IrregularSeries w2 = gen_sawtooth(p, b);
    CHECK(w1.timestamps == w2.timestamps);
    CHECK(w1.values == w2.values);
}

TEST_CASE("make_synthetic_dataset counts") {
    SynthesisParams p;
    p.length = 40;
    p.seed = 5;
    LabeledDataset ds = make_synthetic_dataset(40, p);
    CHECK(ds.items.size() == 80);
    CHECK(ds.count(0) == 40);
    CHECK(ds.count(1) == 40);
    LabeledDataset tiny = make_synthetic_dataset(1, p);
    CHECK(tiny.items.size() == 2);
}

TEST_CASE("drop_points removes the rounded count and keeps pairs") {
    SynthesisParams p;
    p.length = 80;
    p.seed = 9;
    Rng gen(9);
    IrregularSeries s = gen_sine(p, gen);
    Rng rng(10);
    IrregularSeries d = drop_points(s, 0.20, rng);
    CHECK(d.length() == 64);

    // survivors are a subsequence of the original pairs
    std::set<std::pair<double, double>> pairs;
    for (int i = 0; i < s.length(); ++i) pairs.insert({s.timestamps[i], s.values[i]});
    for (int i = 0; i < d.length(); ++i) {
        CHECK(pairs.count({d.timestamps[i], d.values[i]}) == 1);
        if (i > 0) CHECK(d.timestamps[i] > d.timestamps[i - 1]);
    }

    CHECK(drop_points(s, 0.0, rng).length() == 80);
    CHECK_THROWS_AS(drop_points(s, 0.99, rng), InvariantError);
}

TEST_CASE("interpolate_regular endpoints, knots and linearity") {
    IrregularSeries two{{0.0, 1.0}, {0.0, 1.0}};
    IrregularSeries r = interpolate_regular(two, 3);
    CHECK(r.values == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(r.timestamps == std::vector<double>{0.0, 0.5, 1.0});

    // a uniform series resamples onto itself
    IrregularSeries uni{{0, 1, 2, 3}, {5, -1, 2, 7}};
    IrregularSeries same = interpolate_regular(uni, 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(same.timestamps[i] == Approx(uni.timestamps[i]).margin(1e-12));
        CHECK(same.values[i] == Approx(uni.values[i]).margin(1e-12));
    }

    // grid points that coincide with knots reproduce the knot values
    SynthesisParams p;
    p.length = 5;
    Rng rng(11);
    IrregularSeries s = gen_sine(p, rng);
    IrregularSeries g = interpolate_regular(s, 9);  // knots 0 and 8 coincide by construction
    CHECK(g.values.front() == s.values.front());
    CHECK(g.values.back() == s.values.back());
}

TEST_CASE("normalize_timestamps basics") {
    IrregularSeries s{{0.0, 6.0, 12.0}, {1, 2, 3}};
    IrregularSeries n = normalize_timestamps(s, 0.0, 12.0);
    CHECK(n.timestamps == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(n.values == s.values);

    // already normalized input with the unit range is untouched
    IrregularSeries again = normalize_timestamps(n, 0.0, 1.0);
    CHECK(again.timestamps == n.timestamps);

    CHECK_THROWS_AS(normalize_timestamps(s, 3.0, 3.0), ContractError);

    Rng rng(12);
    SynthesisParams p;
    p.length = 25;
    IrregularSeries r = gen_sine(p, rng);
    IrregularSeries rn = normalize_timestamps(r, 0, 12);
    for (int i = 1; i < rn.length(); ++i) CHECK(rn.timestamps[i] > rn.timestamps[i - 1]);
}

TEST_CASE("unbalance subsamples one class only") {
    SynthesisParams p;
    p.length = 20;
    p.seed = 21;
    LabeledDataset ds = make_synthetic_dataset(200, p);
    Rng rng(13);
    LabeledDataset ub = unbalance(ds, 0, 20, rng);
    CHECK(ub.count(0) == 20);
    CHECK(ub.count(1) == 200);

    LabeledDataset ecg = make_synthetic_dataset(93, p);
    Rng rng2(14);
    LabeledDataset ecg_ub = unbalance(ecg, 0, 27, rng2);
    CHECK(ecg_ub.count(0) == 27);
    CHECK(ecg_ub.count(1) == 93);

    // keep_n == count leaves the dataset unchanged
    LabeledDataset same = unbalance(ds, 0, 200, rng);
    REQUIRE(same.items.size() == ds.items.size());
    for (size_t i = 0; i < ds.items.size(); ++i)
        CHECK(same.items[i].series.timestamps == ds.items[i].series.timestamps);

    CHECK_THROWS_AS(unbalance(ds, 0, 500, rng), ContractError);
}

TEST_CASE("csv round trip") {
    SynthesisParams p;
    p.length = 17;
    p.seed = 31;
    LabeledDataset ds = make_synthetic_dataset(50, p);
    const std::string path = temp_path("tcgan_test_roundtrip.csv");
    save_csv(ds, path);
    LabeledDataset back = load_csv(path);
    REQUIRE(back.items.size() == ds.items.size());
    for (size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(back.items[i].label == ds.items[i].label);
        CHECK(back.items[i].series.timestamps == ds.items[i].series.timestamps);
        CHECK(back.items[i].series.values == ds.items[i].series.values);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv parses the documented one-line example") {
    const std::string path = temp_path("tcgan_test_oneline.csv");
    {
        std::ofstream out(path);
        out << "# tcgan-series v1\n1,0.0:0.5,1.0:0.7\n";
    }
    LabeledDataset ds = load_csv(path);
    REQUIRE(ds.items.size() == 1);
    CHECK(ds.items[0].label == 1);
    CHECK(ds.items[0].series.timestamps == std::vector<double>{0.0, 1.0});
    CHECK(ds.items[0].series.values == std::vector<double>{0.5, 0.7});
    std::filesystem::remove(path);
}

TEST_CASE("csv rejects malformed input with line numbers") {
    const std::string path = temp_path("tcgan_test_bad.csv");
    auto write = [&](const char* body) {
        std::ofstream out(path);
        out << body;
    };

    write("# tcgan-series v1\n1,2.0:0.5,1.0:0.7\n");  // t2 < t1
    CHECK_THROWS_MATCHES(load_csv(path), InvariantError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("line 2")));

    write("# tcgan-series v1\n0,1.0:0.5\n2,1.0:0.5,2.0:0.6\n");
    CHECK_THROWS_MATCHES(load_csv(path), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("line 2")));

    write("1,0.0:0.5,1.0:0.7\n");  // missing header
    CHECK_THROWS_AS(load_csv(path), ParseError);

    write("# tcgan-series v1\n1,0.0:abc\n");
    CHECK_THROWS_MATCHES(load_csv(path), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("value")));
    std::filesystem::remove(path);
}

TEST_CASE("synthetic dataset generation is reproducible across calls") {
    SynthesisParams p;
    p.length = 12;
    p.seed = 42;
    LabeledDataset a = make_synthetic_dataset(10, p);
    LabeledDataset b = make_synthetic_dataset(10, p);
    REQUIRE(a.items.size() == b.items.size());
    for (size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].series.timestamps == b.items[i].series.timestamps);
        CHECK(a.items[i].series.values == b.items[i].series.values);
    }
}
