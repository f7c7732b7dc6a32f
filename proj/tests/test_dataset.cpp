#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "simtsc/datagen.hpp"
#include "simtsc/dataset.hpp"
#include "simtsc/rng.hpp"
#include "testutil.hpp"

using namespace simtsc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("simtsc_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("two-row file loads with sorted label remap") {
    TempDir dir;
    write_file(dir.file("tiny.tsv"), "1\t0.5\t0.5\n2\t1.0\t1.0\n");
    const Dataset ds = load_ucr_dataset(dir.file("tiny.tsv"));
    CHECK(ds.n == 2);
    CHECK(ds.num_classes == 2);
    CHECK(ds.t_max == 2);
    CHECK(ds.labels[0] == 0);
    CHECK(ds.labels[1] == 1);
    CHECK(ds.series_at(1, 0)[1] == 1.0);
}

TEST_CASE("negative raw labels remap to 0..C-1 by sorted value") {
    TempDir dir;
    write_file(dir.file("neg.tsv"), "1\t0.1\t0.2\n-1\t0.3\t0.4\n1\t0.5\t0.6\n");
    const Dataset ds = load_ucr_dataset(dir.file("neg.tsv"));
    CHECK(ds.labels[0] == 1);  // raw 1
    CHECK(ds.labels[1] == 0);  // raw -1
    CHECK(ds.labels[2] == 1);
}

TEST_CASE("label remap is a bijection over random raw label sets") {
    TempDir dir;
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t n = 4 + rng.next_below(20);
        std::string content;
        std::set<long> raw_set;
        std::vector<long> raw(n);
        for (size_t i = 0; i < n; ++i) {
            raw[i] = static_cast<long>(rng.next_below(9)) - 4;
            content += std::to_string(raw[i]) + "\t0.5\t" +
                       std::to_string(rng.next_double()) + "\n";
            raw_set.insert(raw[i]);
        }
        if (raw_set.size() < 2) continue;
        write_file(dir.file("r.tsv"), content);
        const Dataset ds = load_ucr_dataset(dir.file("r.tsv"));
        CHECK(ds.num_classes == raw_set.size());
        // same raw label -> same mapped id, different raw -> different id
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                CHECK((raw[i] == raw[j]) == (ds.labels[i] == ds.labels[j]));
    }
}

TEST_CASE("malformed rows are rejected with a line number") {
    TempDir dir;
    write_file(dir.file("bad.tsv"), "1\t0.5\t0.5\n2\t1.0\tx7\n");
    CHECK_THROWS_WITH_AS(load_ucr_dataset(dir.file("bad.tsv")),
                         doctest::Contains(":2:"), std::runtime_error);

    // value after a missing marker is malformed too
    write_file(dir.file("bad2.tsv"), "1\t0.5\tnan\t0.5\n2\t1.0\t1.0\t1.0\n");
    CHECK_THROWS_AS(load_ucr_dataset(dir.file("bad2.tsv")), std::runtime_error);
}

TEST_CASE("dimension files must agree on size and labels") {
    TempDir dir;
    write_file(dir.file("mv_dim0.tsv"), "1\t0.5\t0.5\n2\t1.0\t1.0\n");
    write_file(dir.file("mv_dim1.tsv"), "1\t0.5\t0.5\n");
    CHECK_THROWS_AS(load_ucr_dataset(dir.file("mv.tsv"), 2), std::runtime_error);

    write_file(dir.file("mv_dim1.tsv"), "1\t0.5\t0.5\n3\t1.0\t1.0\n");
    CHECK_THROWS_AS(load_ucr_dataset(dir.file("mv.tsv"), 2), std::runtime_error);

    write_file(dir.file("mv_dim1.tsv"), "1\t0.4\t0.6\n2\t1.5\t0.5\n");
    const Dataset ds = load_ucr_dataset(dir.file("mv.tsv"), 2);
    CHECK(ds.dims == 2);
    CHECK(ds.series_at(1, 1)[0] == 1.5);
}

TEST_CASE("variable-length rows keep true lengths and zero padding") {
    TempDir dir;
    write_file(dir.file("var.tsv"), "1\t0.5\t0.5\t0.5\n2\t1.0\n");
    const Dataset ds = load_ucr_dataset(dir.file("var.tsv"));
    CHECK(ds.t_max == 3);
    CHECK(ds.lengths[0] == 3);
    CHECK(ds.lengths[1] == 1);
    CHECK(ds.series_at(1, 0)[1] == 0.0);
    CHECK(ds.series_at(1, 0)[2] == 0.0);
    validate_dataset(ds);
}

TEST_CASE("znormalize examples") {
    TempDir dir;
    write_file(dir.file("z.tsv"), "1\t5\t5\t5\n2\t1\t2\t3\n");
    const Dataset ds = znormalize(load_ucr_dataset(dir.file("z.tsv")));
    CHECK(ds.normalized);
    // constant series -> zeros
    CHECK(ds.series_at(0, 0)[0] == 0.0);
    CHECK(ds.series_at(0, 0)[2] == 0.0);
    // [1,2,3] -> +-sqrt(3/2), population std
    CHECK(ds.series_at(1, 0)[0] == doctest::Approx(-1.224745).epsilon(1e-6));
    CHECK(ds.series_at(1, 0)[1] == doctest::Approx(0.0));
    CHECK(ds.series_at(1, 0)[2] == doctest::Approx(1.224745).epsilon(1e-6));
    validate_dataset(ds);

    CHECK_THROWS_AS(znormalize(ds), std::invalid_argument);
}

TEST_CASE("znormalize is idempotent within 1e-6 on already-normal values") {
    Dataset ds = generate_dataset("varlen_toy");
    Dataset once = znormalize(ds);
    Dataset again = once;
    again.normalized = false;  // values are already mean-0/std-1
    again = znormalize(again);
    for (size_t i = 0; i < once.series.size(); ++i)
        CHECK(std::abs(once.series[i] - again.series[i]) < 1e-6);
}

TEST_CASE("make_split honors the protocol arithmetic") {
    TempDir dir;
    std::string content;
    for (int i = 0; i < 10; ++i)
        content += std::to_string(i % 2) + "\t0.5\t" + std::to_string(i * 0.1) + "\n";
    write_file(dir.file("s.tsv"), content);
    const Dataset ds = load_ucr_dataset(dir.file("s.tsv"));

    const SplitSpec split = make_split(ds, 1, 7);
    CHECK(split.test_idx.size() == 2);
    CHECK(split.train_idx.size() <= 2);
    CHECK(split.train_idx.size() + split.unlabeled_idx.size() + split.test_idx.size() == 10);

    const SplitSpec split2 = make_split(ds, 1, 7);
    CHECK(split.train_idx == split2.train_idx);
    CHECK(split.unlabeled_idx == split2.unlabeled_idx);
    CHECK(split.test_idx == split2.test_idx);
}

TEST_CASE("label shortfall takes as many labels as available") {
    // Class 1 has exactly 3 members; ask for 5 labels per class.
    TempDir dir;
    std::string content;
    for (int i = 0; i < 22; ++i) content += "0\t0.5\t" + std::to_string(i) + "\n";
    for (int i = 0; i < 3; ++i) content += "1\t0.5\t" + std::to_string(100 + i) + "\n";
    write_file(dir.file("sf.tsv"), content);
    const Dataset ds = load_ucr_dataset(dir.file("sf.tsv"));

    for (uint64_t seed = 0; seed < 20; ++seed) {
        const SplitSpec split = make_split(ds, 5, seed);
        size_t class1_in_train = 0, class1_outside_test = 0;
        for (int idx : split.train_idx)
            if (ds.labels[static_cast<size_t>(idx)] == 1) ++class1_in_train;
        for (int idx : split.train_idx)
            if (ds.labels[static_cast<size_t>(idx)] == 1) ++class1_outside_test;
        for (int idx : split.unlabeled_idx)
            if (ds.labels[static_cast<size_t>(idx)] == 1) ++class1_outside_test;
        CHECK(class1_in_train == std::min<size_t>(5, class1_outside_test));
    }
}

TEST_CASE("split invariants hold across a randomized sweep") {
    Rng rng(21);
    TempDir dir;
    for (int trial = 0; trial < 40; ++trial) {
        const size_t n = 5 + rng.next_below(60);
        const size_t classes = 2 + rng.next_below(4);
        std::string content;
        for (size_t i = 0; i < n; ++i)
            content += std::to_string(i < classes ? i : rng.next_below(classes)) + "\t0.5\t" +
                       std::to_string(rng.next_double()) + "\n";
        write_file(dir.file("p.tsv"), content);
        const Dataset ds = load_ucr_dataset(dir.file("p.tsv"));
        const int lpc = 1 + static_cast<int>(rng.next_below(6));
        const SplitSpec split = make_split(ds, lpc, rng.next_u64());

        CHECK(split.test_idx.size() == n / 5);
        std::set<int> seen;
        for (int i : split.train_idx) seen.insert(i);
        for (int i : split.unlabeled_idx) seen.insert(i);
        for (int i : split.test_idx) seen.insert(i);
        CHECK(seen.size() ==
              split.train_idx.size() + split.unlabeled_idx.size() + split.test_idx.size());
        CHECK(seen.size() == n);

        // Per-class quota: min(lpc, class members outside test).
        std::vector<size_t> outside(classes, 0), in_train(classes, 0);
        for (int i : split.train_idx) {
            ++outside[ds.labels[static_cast<size_t>(i)]];
            ++in_train[ds.labels[static_cast<size_t>(i)]];
        }
        for (int i : split.unlabeled_idx) ++outside[ds.labels[static_cast<size_t>(i)]];
        for (size_t c = 0; c < classes; ++c)
            CHECK(in_train[c] == std::min<size_t>(static_cast<size_t>(lpc), outside[c]));
    }
}

TEST_CASE("dataset cache round-trips losslessly") {
    TempDir dir;
    Dataset ds = znormalize(generate_dataset("motions_like"));
    save_dataset_cache(ds, dir.file("m.stsd"));
    const Dataset back = load_dataset_cache(dir.file("m.stsd"));
    CHECK(back.n == ds.n);
    CHECK(back.dims == ds.dims);
    CHECK(back.t_max == ds.t_max);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.normalized == ds.normalized);
    CHECK(back.lengths == ds.lengths);
    CHECK(back.labels == ds.labels);
    CHECK(back.series == ds.series);

    const Dataset sniffed = load_dataset_any(dir.file("m.stsd"));
    CHECK(sniffed.series == ds.series);
}

TEST_CASE("split file round-trips") {
    TempDir dir;
    SplitSpec split;
    split.train_idx = {5, 2};
    split.unlabeled_idx = {0, 1, 3};
    split.test_idx = {4, 6};
    split.labels_per_class = 1;
    split.seed = 42;
    save_split(split, dir.file("s.txt"));
    const SplitSpec back = load_split(dir.file("s.txt"));
    CHECK(back.train_idx == split.train_idx);
    CHECK(back.unlabeled_idx == split.unlabeled_idx);
    CHECK(back.test_idx == split.test_idx);
    CHECK(back.labels_per_class == 1);
    CHECK(back.seed == 42);
}

TEST_CASE("generators are deterministic and produce valid datasets") {
    for (const auto& info : dataset_generators()) {
        const Dataset a = generate_dataset(info.name);
        const Dataset b = generate_dataset(info.name);
        CHECK(a.series == b.series);
        CHECK(a.n == info.n);
        CHECK(a.dims == info.dims);
        CHECK(a.num_classes == info.classes);
        validate_dataset(a);
    }
}

TEST_CASE("generated text round-trips through the loader") {
    TempDir dir;
    const Dataset ds = generate_dataset("motions_like");
    write_ucr_text(ds, dir.file("m.tsv"));
    const Dataset back = load_ucr_dataset(dir.file("m.tsv"), ds.dims);
    CHECK(back.n == ds.n);
    CHECK(back.labels == ds.labels);
    CHECK(back.lengths == ds.lengths);
    for (size_t i = 0; i < ds.series.size(); ++i) CHECK(back.series[i] == ds.series[i]);
}
