#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "simtsc/datagen.hpp"
#include "simtsc/eval.hpp"
#include "simtsc/trainer.hpp"
#include "testutil.hpp"

using namespace simtsc;

namespace {

SplitSpec toy_split() {
    SplitSpec split;
    split.train_idx = {0, 1, 2, 3};
    split.unlabeled_idx = {4, 5, 6, 7, 8, 9};
    split.test_idx = {10, 11};
    split.labels_per_class = 2;
    split.seed = 1;
    return split;
}

// Small normalized dataset + matrix shared by the slow-path tests.
struct Fixture {
    Dataset ds;
    DistanceMatrix matrix;
    SplitSpec split;
    Fixture() {
        ds = znormalize(generate_dataset("varlen_toy"));  // n=40, C=2
        matrix = pairwise_matrix(ds, 100, 2);
        split = make_split(ds, 2, 3);
    }
};

TrainConfig quick_config(size_t epochs) {
    TrainConfig config;
    config.epochs = epochs;
    config.batch_size = 16;
    config.lr = 1e-3;
    config.seed = 5;
    return config;
}

}  // namespace

TEST_CASE("build_pools per setting") {
    const SplitSpec split = toy_split();
    CHECK(build_pools(split, Setting::supervised).negative_pool.empty());

    const Pools inductive = build_pools(split, Setting::inductive);
    CHECK(inductive.negative_pool == split.unlabeled_idx);

    const Pools transductive = build_pools(split, Setting::transductive);
    CHECK(transductive.negative_pool.size() ==
          split.unlabeled_idx.size() + split.test_idx.size());
    for (int t : split.test_idx)
        CHECK(std::count(transductive.negative_pool.begin(), transductive.negative_pool.end(),
                         t) == 1);
}

TEST_CASE("sample_batch composition") {
    Rng rng(70);
    const std::vector<int> chunk = {1, 2, 3, 4};

    // Empty pool: batch is the labeled chunk only.
    CHECK(sample_batch(chunk, {}, 4, rng) == chunk);

    // Large pool: batch fills to chunk + half_batch, labeled first.
    std::vector<int> pool;
    for (int i = 10; i < 110; ++i) pool.push_back(i);
    const auto batch = sample_batch(chunk, pool, 4, rng);
    REQUIRE(batch.size() == 8);
    for (size_t i = 0; i < 4; ++i) CHECK(batch[i] == chunk[i]);
    std::set<int> negatives(batch.begin() + 4, batch.end());
    CHECK(negatives.size() == 4);  // without replacement
    for (int n : negatives) CHECK(n >= 10);

    // Pool smaller than half batch: take the whole pool.
    const auto small = sample_batch(chunk, {50, 51}, 4, rng);
    REQUIRE(small.size() == 6);
    CHECK(std::set<int>(small.begin() + 4, small.end()) == std::set<int>{50, 51});
}

TEST_CASE("batches always contain the full labeled chunk in order") {
    Rng rng(71);
    std::vector<int> pool;
    for (int i = 100; i < 160; ++i) pool.push_back(i);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t chunk_len = 1 + rng.next_below(8);
        std::vector<int> chunk;
        for (size_t i = 0; i < chunk_len; ++i) chunk.push_back(static_cast<int>(i));
        const auto batch = sample_batch(chunk, pool, 8, rng);
        CHECK(batch.size() == chunk_len + 8);
        for (size_t i = 0; i < chunk_len; ++i) CHECK(batch[i] == chunk[i]);
        // No duplicates anywhere in the batch.
        std::set<int> all(batch.begin(), batch.end());
        CHECK(all.size() == batch.size());
    }
}

TEST_CASE("training with zero epochs returns initial weights and one evaluation") {
    Fixture f;
    TrainedModel trained = train(f.ds, f.matrix, f.split, quick_config(0));
    CHECK(trained.best_train_accuracy >= 0.0);
    CHECK(trained.best_train_accuracy <= 1.0);
    CHECK(trained.epoch_of_best == 0);
    const auto preds = predict(trained, f.ds, f.matrix, f.split);
    CHECK(preds.size() == f.split.test_idx.size());
}

TEST_CASE("training is deterministic for a fixed seed") {
    Fixture f;
    std::vector<EpochLog> log_a, log_b;
    TrainedModel a = train(f.ds, f.matrix, f.split, quick_config(3), &log_a);
    TrainedModel b = train(f.ds, f.matrix, f.split, quick_config(3), &log_b);
    REQUIRE(log_a.size() == log_b.size());
    for (size_t i = 0; i < log_a.size(); ++i) {
        CHECK(log_a[i].loss == log_b[i].loss);
        CHECK(log_a[i].train_accuracy == log_b[i].train_accuracy);
    }
    CHECK(predict(a, f.ds, f.matrix, f.split) == predict(b, f.ds, f.matrix, f.split));
}

TEST_CASE("checkpoint accuracy is the running maximum of the epoch log") {
    Fixture f;
    std::vector<EpochLog> log;
    TrainedModel trained = train(f.ds, f.matrix, f.split, quick_config(8), &log);
    double best = -1.0;
    for (const auto& e : log) best = std::max(best, e.train_accuracy);
    CHECK(trained.best_train_accuracy == best);
}

TEST_CASE("loss decreases on an easy dataset") {
    Fixture f;
    std::vector<EpochLog> log;
    TrainConfig config = quick_config(30);
    config.setting = Setting::transductive;
    train(f.ds, f.matrix, f.split, config, &log);
    REQUIRE(log.size() == 30);
    CHECK(log.back().loss < log.front().loss);
}

TEST_CASE("predict emits exactly one label per test index") {
    Fixture f;
    TrainedModel trained = train(f.ds, f.matrix, f.split, quick_config(2));
    const auto preds = predict(trained, f.ds, f.matrix, f.split);
    REQUIRE(preds.size() == f.split.test_idx.size());
    for (int p : preds) {
        CHECK(p >= 0);
        CHECK(p < static_cast<int>(f.ds.num_classes));
    }
    CHECK(predict(trained, f.ds, f.matrix, f.split) == preds);  // reproducible pass
}

TEST_CASE("supervised setting trains without a negative pool") {
    Fixture f;
    TrainConfig config = quick_config(2);
    config.setting = Setting::supervised;
    std::vector<EpochLog> log;
    TrainedModel trained = train(f.ds, f.matrix, f.split, config, &log);
    CHECK(log.size() == 2);
    const auto preds = predict(trained, f.ds, f.matrix, f.split);
    CHECK(preds.size() == f.split.test_idx.size());
}

TEST_CASE("training without labeled samples is a configuration error") {
    Fixture f;
    SplitSpec empty = f.split;
    empty.unlabeled_idx.insert(empty.unlabeled_idx.end(), empty.train_idx.begin(),
                               empty.train_idx.end());
    empty.train_idx.clear();
    CHECK_THROWS_AS(train(f.ds, f.matrix, empty, quick_config(1)), std::invalid_argument);
}

TEST_CASE("backbone classifier trains, checkpoints and predicts") {
    Fixture f;
    std::vector<EpochLog> log;
    TrainConfig config = quick_config(10);
    TrainedModel trained = train_backbone_classifier(f.ds, f.split, config, &log);
    CHECK(log.size() == 10);
    double best = -1.0;
    for (const auto& e : log) best = std::max(best, e.train_accuracy);
    CHECK(trained.best_train_accuracy == best);
    const auto preds = predict_backbone(trained, f.ds, f.split);
    CHECK(preds.size() == f.split.test_idx.size());

    // Deterministic rerun.
    std::vector<EpochLog> log2;
    TrainedModel again = train_backbone_classifier(f.ds, f.split, config, &log2);
    for (size_t i = 0; i < log.size(); ++i) CHECK(log[i].loss == log2[i].loss);
    CHECK(predict_backbone(again, f.ds, f.split) == preds);
}

TEST_CASE("1-nn dtw follows the nearest training neighbor") {
    // Hand-built 4-point matrix: two train, two test.
    DistanceMatrix m(4);
    auto set = [&](size_t i, size_t j, double v) {
        m.at(i, j) = v;
        m.at(j, i) = v;
    };
    set(0, 1, 5.0);
    set(0, 2, 1.0);
    set(0, 3, 4.0);
    set(1, 2, 3.0);
    set(1, 3, 0.5);
    set(2, 3, 9.0);
    SplitSpec split;
    split.train_idx = {0, 1};
    split.test_idx = {2, 3};
    const std::vector<int> labels = {0, 1, 9, 9};  // test labels unused
    const auto preds = knn1_dtw(m, split, labels);
    CHECK(preds == std::vector<int>{0, 1});

    // Matches an exhaustive scan on random matrices.
    Rng rng(72);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t n = 6 + rng.next_below(10);
        DistanceMatrix r(n);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const double v = rng.next_uniform(0.1, 5.0);
                r.at(i, j) = v;
                r.at(j, i) = v;
            }
        SplitSpec s;
        std::vector<int> rl(n);
        for (size_t i = 0; i < n; ++i) rl[i] = static_cast<int>(rng.next_below(3));
        for (size_t i = 0; i < n; ++i)
            (i < n / 2 ? s.train_idx : s.test_idx).push_back(static_cast<int>(i));
        const auto got = knn1_dtw(r, s, rl);
        for (size_t t = 0; t < s.test_idx.size(); ++t) {
            double best_d = 1e18;
            int best_label = -1;
            for (int tr : s.train_idx) {
                const double d = r.at(static_cast<size_t>(s.test_idx[t]),
                                      static_cast<size_t>(tr));
                if (d < best_d) {
                    best_d = d;
                    best_label = rl[static_cast<size_t>(tr)];
                }
            }
            CHECK(got[t] == best_label);
        }
    }
}

TEST_CASE("1-nn dtw edge cases") {
    DistanceMatrix m(3);
    m.at(0, 1) = m.at(1, 0) = 2.0;
    m.at(0, 2) = m.at(2, 0) = 1.0;
    m.at(1, 2) = m.at(2, 1) = 3.0;
    SplitSpec split;
    split.train_idx = {0};
    split.test_idx = {1, 2};
    const std::vector<int> labels = {4, 0, 0};
    CHECK(knn1_dtw(m, split, labels) == std::vector<int>{4, 4});  // single train label wins

    // A test point at zero distance from a training point takes its label.
    SplitSpec split2;
    split2.train_idx = {0, 1};
    split2.test_idx = {2};
    DistanceMatrix z(3);
    z.at(0, 1) = z.at(1, 0) = 2.0;
    z.at(0, 2) = z.at(2, 0) = 0.0;
    z.at(1, 2) = z.at(2, 1) = 1.0;
    CHECK(knn1_dtw(z, split2, {7, 8, 0}) == std::vector<int>{7});

    SplitSpec empty;
    empty.test_idx = {0};
    CHECK_THROWS_AS(knn1_dtw(m, empty, labels), std::invalid_argument);
}
