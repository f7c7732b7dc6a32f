// Command-line front end: precompute DTW matrices, train/evaluate models,
// aggregate result tables, and generate benchmark datasets.
//
// Exit codes: 0 success, 1 runtime error, 2 refused overwrite.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simtsc/datagen.hpp"
#include "simtsc/dataset.hpp"
#include "simtsc/dtw.hpp"
#include "simtsc/eval.hpp"
#include "simtsc/kernels.hpp"
#include "simtsc/trainer.hpp"

namespace fs = std::filesystem;
using namespace simtsc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRefused = 2;

uint64_t default_seed_from_env() {
    const char* env = std::getenv("STSC_SEED");
    if (!env) return 0;
    return std::strtoull(env, nullptr, 10);
}

struct DtwArgs {
    std::string dataset;
    size_t dims = 1;
    size_t window = 100;
    std::string out;
    std::string cache;
    size_t jobs = 1;
    bool force = false;
};

int run_dtw(const DtwArgs& args) {
    if (fs::exists(args.out) && !args.force) {
        std::cerr << "refusing to overwrite " << args.out << " (use --force)\n";
        return kExitRefused;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Dataset ds = load_dataset_any(args.dataset, args.dims);
    if (!ds.normalized) ds = znormalize(ds);
    const DistanceMatrix m = pairwise_matrix(ds, args.window, args.jobs);
    save_matrix(m, args.out);
    if (!args.cache.empty()) save_dataset_cache(ds, args.cache);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    std::cout << "dtw: n=" << m.n << " window=" << args.window << " jobs=" << args.jobs
              << " kernels=" << kernels::active().name << " elapsed=" << secs << "s -> "
              << args.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string dataset;
    std::string matrix;
    size_t dims = 1;
    int labels_per_class = 1;
    std::vector<uint64_t> seeds;
    std::string algo = "simtsc";
    std::string setting = "transductive";
    bool setting_given = false;
    std::string backbone = "resnet";
    double alpha = 0.3;
    size_t k = 3;
    size_t gcn_layers = 1;
    size_t epochs = 500;
    size_t batch_size = 128;
    double lr = 1e-4;
    std::string out;
    std::string outdir = "runs";
    std::string split_file;
    bool force = false;
};

std::string algorithm_name(const TrainArgs& args, Setting setting) {
    if (args.algo != "simtsc") return args.algo;
    std::string name = "simtsc-";
    name += setting == Setting::supervised ? "s" : setting == Setting::inductive ? "i" : "t";
    if (args.backbone != "resnet") name += "+" + args.backbone;
    return name;
}

BackboneSpec backbone_spec_for(const TrainArgs& args) {
    if (args.algo == "resnet") return BackboneSpec::resnet();
    if (args.algo == "fcn") return BackboneSpec::fcn();
    if (args.algo == "mlp") return BackboneSpec::mlp();
    BackboneSpec spec = BackboneSpec::resnet();
    if (args.backbone == "fcn") spec = BackboneSpec::fcn();
    if (args.backbone == "mlp") spec = BackboneSpec::mlp();
    return spec;
}

void write_predictions_csv(const std::string& path, const SplitSpec& split,
                           const std::vector<int>& preds, const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write predictions: " + path);
    out << "test_index,predicted,truth\n";
    for (size_t i = 0; i < split.test_idx.size(); ++i)
        out << split.test_idx[i] << ',' << preds[i] << ','
            << labels[static_cast<size_t>(split.test_idx[i])] << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

int run_train(const TrainArgs& args) {
    const Setting setting = setting_from_name(args.setting);
    if (args.algo != "simtsc" && args.setting_given)
        std::cerr << "warning: --setting is ignored for algorithm " << args.algo << "\n";

    const bool needs_matrix = args.algo == "simtsc" || args.algo == "dtw-1nn";
    if (!fs::exists(args.dataset) && !fs::exists(args.dataset + "_dim0") &&
        !fs::exists([&] {  // _dimK with extension
            std::string p = args.dataset;
            const auto dot = p.find_last_of('.');
            return dot == std::string::npos ? p + "_dim0" : p.substr(0, dot) + "_dim0" + p.substr(dot);
        }()))
        throw std::runtime_error("dataset file not found: " + args.dataset);
    if (needs_matrix && !fs::exists(args.matrix))
        throw std::runtime_error("matrix file not found: " + args.matrix);

    Dataset ds = load_dataset_any(args.dataset, args.dims);
    if (!ds.normalized) ds = znormalize(ds);
    DistanceMatrix matrix;
    if (needs_matrix) {
        matrix = load_matrix(args.matrix);
        if (matrix.n != ds.n)
            throw std::runtime_error("matrix size " + std::to_string(matrix.n) +
                                     " does not match dataset size " + std::to_string(ds.n));
    }

    const std::string algo_name = algorithm_name(args, setting);
    std::vector<ResultRow> existing;
    if (fs::exists(args.out)) existing = read_results_csv(args.out);

    // Refuse duplicate keys up front so a multi-seed run is all-or-nothing.
    for (uint64_t seed : args.seeds) {
        ResultRow key{ds.name, algo_name, args.labels_per_class, setting_name(setting), seed,
                      0.0};
        for (const auto& row : existing) {
            if (same_key(row, key)) {
                if (!args.force) {
                    std::cerr << "result already recorded for (" << ds.name << ", " << algo_name
                              << ", " << args.labels_per_class << ", " << setting_name(setting)
                              << ", seed " << seed << "); use --force to replace\n";
                    return kExitRefused;
                }
            }
        }
    }
    if (args.force && !existing.empty()) {
        std::vector<ResultRow> kept;
        for (const auto& row : existing) {
            bool drop = false;
            for (uint64_t seed : args.seeds) {
                ResultRow key{ds.name, algo_name, args.labels_per_class, setting_name(setting),
                              seed, 0.0};
                if (same_key(row, key)) drop = true;
            }
            if (!drop) kept.push_back(row);
        }
        if (kept.size() != existing.size()) write_results_csv(args.out, kept);
    }

    fs::create_directories(args.outdir);

    for (uint64_t seed : args.seeds) {
        SplitSpec split;
        if (!args.split_file.empty()) {
            split = load_split(args.split_file);
        } else {
            split = make_split(ds, args.labels_per_class, seed);
        }

        TrainConfig config;
        config.alpha = args.alpha;
        config.k = args.k;
        config.batch_size = args.batch_size;
        config.epochs = args.epochs;
        config.lr = args.lr;
        config.gcn_layers = args.gcn_layers;
        config.setting = setting;
        config.seed = seed;
        config.backbone = backbone_spec_for(args);

        const std::string base = args.outdir + "/" + ds.name + "_" + algo_name + "_l" +
                                 std::to_string(args.labels_per_class) + "_s" +
                                 std::to_string(seed);
        if (args.split_file.empty()) save_split(split, base + ".split.txt");

        std::vector<int> preds;
        std::vector<EpochLog> log;
        const auto t0 = std::chrono::steady_clock::now();
        if (args.algo == "dtw-1nn") {
            preds = knn1_dtw(matrix, split, ds.labels);
        } else if (args.algo == "simtsc") {
            TrainedModel trained = train(ds, matrix, split, config, &log);
            preds = predict(trained, ds, matrix, split);
            save_checkpoint(trained.model, base + ".stsw");
            write_runlog_csv(log, base + ".runlog.csv");
        } else {
            TrainedModel trained = train_backbone_classifier(ds, split, config, &log);
            preds = predict_backbone(trained, ds, split);
            save_checkpoint(trained.model, base + ".stsw");
            write_runlog_csv(log, base + ".runlog.csv");
        }
        const auto t1 = std::chrono::steady_clock::now();

        std::vector<int> truth;
        truth.reserve(split.test_idx.size());
        for (int t : split.test_idx) truth.push_back(ds.labels[static_cast<size_t>(t)]);
        const double acc = accuracy(preds, truth);
        write_predictions_csv(base + ".pred.csv", split, preds, ds.labels);

        append_result_csv(args.out, {ds.name, algo_name, args.labels_per_class,
                                     setting_name(setting), seed, acc});
        std::cout << ds.name << " " << algo_name << " labels=" << args.labels_per_class
                  << " seed=" << seed << " accuracy=" << acc << " elapsed="
                  << std::chrono::duration<double>(t1 - t0).count() << "s\n";
    }
    return kExitOk;
}

struct RankArgs {
    std::string results;
    std::string out;
    int labels_per_class = -1;
};

int run_rank(const RankArgs& args) {
    std::vector<ResultRow> rows = read_results_csv(args.results);
    if (args.labels_per_class >= 0) {
        std::vector<ResultRow> filtered;
        for (const auto& r : rows)
            if (r.labels_per_class == args.labels_per_class) filtered.push_back(r);
        rows = std::move(filtered);
        if (rows.empty())
            throw std::runtime_error("no rows with labels_per_class=" +
                                     std::to_string(args.labels_per_class));
    } else {
        std::vector<int> values;
        for (const auto& r : rows)
            if (std::find(values.begin(), values.end(), r.labels_per_class) == values.end())
                values.push_back(r.labels_per_class);
        if (values.size() > 1) {
            std::string msg = "results mix labels_per_class values (";
            for (size_t i = 0; i < values.size(); ++i)
                msg += (i ? ", " : "") + std::to_string(values[i]);
            throw std::runtime_error(msg + "); pass --labels-per-class");
        }
    }

    const ResultTable table = build_result_table(rows);
    const std::vector<double> ranks = average_ranks(table);
    write_rank_csv(args.out + "_ranks.csv", table, ranks);
    write_significance_csv(args.out + "_significance.csv", table, ranks);
    std::cout << "ranked " << table.algorithms.size() << " algorithms over "
              << table.datasets.size() << " datasets -> " << args.out << "_ranks.csv\n";
    return kExitOk;
}

struct GenArgs {
    std::string name;
    std::string out;
    uint64_t seed = 0;
    bool seed_given = false;
    bool list = false;
};

int run_gen(const GenArgs& args) {
    if (args.list) {
        for (const auto& info : dataset_generators())
            std::cout << info.name << "  n=" << info.n << " dims=" << info.dims
                      << " len=" << info.t_len << " classes=" << info.classes << "  ("
                      << info.summary << ")\n";
        return kExitOk;
    }
    if (args.name.empty() || args.out.empty())
        throw std::runtime_error("gen: --name and --out are required (or --list)");
    const Dataset ds = args.seed_given ? generate_dataset(args.name, args.seed)
                                       : generate_dataset(args.name);
    write_ucr_text(ds, args.out);
    std::cout << "generated " << args.name << ": n=" << ds.n << " dims=" << ds.dims
              << " t_max=" << ds.t_max << " classes=" << ds.num_classes << " -> " << args.out
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-aware time-series classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key=value file");

    DtwArgs dtw_args;
    auto* cmd_dtw = app.add_subcommand("dtw", "precompute a pairwise DTW distance matrix");
    cmd_dtw->add_option("dataset", dtw_args.dataset, "dataset file (text or STSD cache)")
        ->required();
    cmd_dtw->add_option("--dims", dtw_args.dims, "dimensions (files with _dimK suffix)");
    cmd_dtw->add_option("--window", dtw_args.window, "warping window in samples");
    cmd_dtw->add_option("--out", dtw_args.out, "output matrix file (STSM)")->required();
    cmd_dtw->add_option("--cache", dtw_args.cache, "also write the normalized dataset cache");
    cmd_dtw->add_option("--jobs", dtw_args.jobs, "worker threads for the pair loop");
    cmd_dtw->add_flag("--force", dtw_args.force, "overwrite an existing output file");

    TrainArgs train_args;
    train_args.seeds = {default_seed_from_env()};
    auto* cmd_train = app.add_subcommand("train", "train one algorithm and score the test split");
    cmd_train->add_option("dataset", train_args.dataset, "dataset file")->required();
    cmd_train->add_option("matrix", train_args.matrix, "distance matrix file (STSM)")->required();
    cmd_train->add_option("--dims", train_args.dims, "dataset dimensions");
    cmd_train->add_option("--labels-per-class", train_args.labels_per_class,
                          "training labels per class");
    cmd_train
        ->add_option("--seeds", train_args.seeds,
                     "experiment seeds (also sets the split); default from STSC_SEED or 0")
        ->delimiter(',');
    cmd_train->add_option("--seed", train_args.seeds, "alias for --seeds")->delimiter(',');
    cmd_train
        ->add_option("--algo", train_args.algo, "simtsc | resnet | fcn | mlp | dtw-1nn")
        ->check(CLI::IsMember({"simtsc", "resnet", "fcn", "mlp", "dtw-1nn"}));
    cmd_train->add_option_function<std::string>(
                 "--setting",
                 [&train_args](const std::string& v) {
                     train_args.setting = v;
                     train_args.setting_given = true;
                 },
                 "supervised | inductive | transductive")
        ->check(CLI::IsMember({"supervised", "inductive", "transductive"}));
    cmd_train->add_option("--backbone", train_args.backbone, "backbone for simtsc")
        ->check(CLI::IsMember({"resnet", "fcn", "mlp"}));
    cmd_train->add_option("--alpha", train_args.alpha, "graph scaling factor");
    cmd_train->add_option("--k", train_args.k, "neighbors kept per row");
    cmd_train->add_option("--gcn-layers", train_args.gcn_layers, "graph convolution layers");
    cmd_train->add_option("--epochs", train_args.epochs, "training epochs");
    cmd_train->add_option("--batch-size", train_args.batch_size, "batch size (even)");
    cmd_train->add_option("--lr", train_args.lr, "learning rate");
    cmd_train->add_option("--out", train_args.out, "results CSV (appended)")->required();
    cmd_train->add_option("--outdir", train_args.outdir,
                          "directory for split/checkpoint/runlog/prediction files");
    cmd_train->add_option("--split", train_args.split_file,
                          "use an existing split file instead of generating one");
    cmd_train->add_flag("--force", train_args.force, "replace already-recorded results");

    RankArgs rank_args;
    auto* cmd_rank = app.add_subcommand("rank", "aggregate results into rank tables");
    cmd_rank->add_option("results", rank_args.results, "results CSV from train")->required();
    cmd_rank->add_option("--out", rank_args.out, "output prefix")->required();
    cmd_rank->add_option("--labels-per-class", rank_args.labels_per_class,
                         "restrict to one labels-per-class value");

    GenArgs gen_args;
    auto* cmd_gen = app.add_subcommand("gen", "generate a benchmark dataset");
    cmd_gen->add_option("--name", gen_args.name, "generator name (see --list)");
    cmd_gen->add_option("--out", gen_args.out, "output text file");
    cmd_gen->add_option_function<uint64_t>(
        "--seed",
        [&gen_args](uint64_t v) {
            gen_args.seed = v;
            gen_args.seed_given = true;
        },
        "generation seed (defaults to the generator's fixed seed)");
    cmd_gen->add_flag("--list", gen_args.list, "list available generators");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_dtw->parsed()) return run_dtw(dtw_args);
        if (cmd_train->parsed()) return run_train(train_args);
        if (cmd_rank->parsed()) return run_rank(rank_args);
        if (cmd_gen->parsed()) return run_gen(gen_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
