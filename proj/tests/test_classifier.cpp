#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>

#include "tcgan/classifier.hpp"

using namespace tcgan;

namespace {

// linearly separable toy set: constant 0 values vs constant 1 values
LabeledDataset separable(int per_class, int length, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset ds;
    ds.name = "toy";
    for (int label = 0; label < 2; ++label)
        for (int i = 0; i < per_class; ++i) {
            IrregularSeries s;
            double t = 0.0;
            for (int j = 0; j < length; ++j) {
                t += rng.uniform(0.1, 1.0);
                s.timestamps.push_back(t);
                s.values.push_back(label + rng.uniform(-0.05, 0.05));
            }
            ds.items.push_back({std::move(s), label});
        }
    return ds;
}

ClassifierConfig small_config() {
    ClassifierConfig cfg;
    cfg.channels = {8, 16};
    cfg.batch_size = 8;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("separable toy set reaches training accuracy 1.0 within 50 epochs") {
    LabeledDataset ds = separable(10, 16, 2);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 50;
    TrainedClassifier clf = train_classifier(ds, cfg);
    std::vector<const IrregularSeries*> batch;
    for (const auto& it : ds.items) batch.push_back(&it.series);
    const std::vector<double> probs = score(clf, batch);
    int correct = 0;
    for (size_t i = 0; i < probs.size(); ++i)
        correct += (probs[i] >= 0.5) == (ds.items[i].label == 1);
    CHECK(correct == static_cast<int>(ds.items.size()));
}

TEST_CASE("zero epochs returns the initialization") {
    LabeledDataset ds = separable(4, 12, 3);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 0;
    TrainedClassifier clf = train_classifier(ds, cfg);
    Rng rng(mix_seed(cfg.seed, 0x636c6673));
    ConvScorer fresh = init_conv_scorer(12, cfg.channels, cfg.kernel_size, rng);
    CHECK(clf.scorer.conv_w[0].data() == fresh.conv_w[0].data());
    CHECK(clf.scorer.fc_w.data() == fresh.fc_w.data());
    CHECK(clf.loss_trace.empty());
}

TEST_CASE("single-class training set is rejected") {
    LabeledDataset ds = separable(4, 12, 4);
    LabeledDataset single;
    for (auto& it : ds.items)
        if (it.label == 0) single.items.push_back(it);
    CHECK_THROWS_MATCHES(train_classifier(single, small_config()), ContractError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("degenerate")));
}

TEST_CASE("fixed seed reproduces trained parameters") {
    LabeledDataset ds = separable(6, 16, 5);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 5;
    TrainedClassifier a = train_classifier(ds, cfg);
    TrainedClassifier b = train_classifier(ds, cfg);
    CHECK(a.scorer.conv_w[0].data() == b.scorer.conv_w[0].data());
    CHECK(a.scorer.fc_w.data() == b.scorer.fc_w.data());
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("scores are in (0,1), deterministic and batch-order equivariant") {
    LabeledDataset ds = separable(6, 16, 6);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 10;
    TrainedClassifier clf = train_classifier(ds, cfg);

    std::vector<const IrregularSeries*> batch;
    for (const auto& it : ds.items) batch.push_back(&it.series);
    const std::vector<double> p = score(clf, batch);
    for (double v : p) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    std::vector<const IrregularSeries*> reversed(batch.rbegin(), batch.rend());
    const std::vector<double> pr = score(clf, reversed);
    for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == pr[p.size() - 1 - i]);

    // identical series in one batch get identical scores
    std::vector<const IrregularSeries*> twice{batch[0], batch[0]};
    const std::vector<double> pt = score(clf, twice);
    CHECK(pt[0] == pt[1]);
}

TEST_CASE("length mismatch at scoring is rejected") {
    LabeledDataset ds = separable(4, 16, 7);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 1;
    TrainedClassifier clf = train_classifier(ds, cfg);
    LabeledDataset other = separable(1, 12, 8);
    CHECK_THROWS_AS(score_one(clf, other.items[0].series), ContractError);
}

TEST_CASE("training loss stays finite and trends down on separable data") {
    LabeledDataset ds = separable(8, 16, 9);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 40;
    TrainedClassifier clf = train_classifier(ds, cfg);
    REQUIRE(clf.loss_trace.size() == 40);
    for (double v : clf.loss_trace) CHECK(std::isfinite(v));
    // non-increasing in 10-epoch medians
    auto median10 = [&](int start) {
        std::vector<double> w(clf.loss_trace.begin() + start, clf.loss_trace.begin() + start + 10);
        std::sort(w.begin(), w.end());
        return 0.5 * (w[4] + w[5]);
    };
    double prev = median10(0);
    for (int s = 10; s + 10 <= 40; s += 10) {
        const double cur = median10(s);
        CHECK(cur <= prev + 1e-9);
        prev = cur;
    }
}

TEST_CASE("classifier checkpoint round trip preserves scores bit-exactly") {
    LabeledDataset ds = separable(5, 16, 10);
    ClassifierConfig cfg = small_config();
    cfg.epochs = 8;
    TrainedClassifier clf = train_classifier(ds, cfg);
    const std::string path =
        (std::filesystem::temp_directory_path() / "tcgan_test_clf_ckpt.txt").string();
    save_classifier_checkpoint(clf, path);
    TrainedClassifier back = load_classifier_checkpoint(path);
    std::vector<const IrregularSeries*> batch;
    for (const auto& it : ds.items) batch.push_back(&it.series);
    CHECK(score(clf, batch) == score(back, batch));
    std::filesystem::remove(path);
}
