#pragma once

// Batch training with negative sampling over per-batch DTW graphs, the three
// learning settings, checkpoint-on-best-training-accuracy, graph-batched
// prediction, plain backbone baselines, and the 1-NN DTW baseline.

#include <cstdint>
#include <string>
#include <vector>

#include "simtsc/dataset.hpp"
#include "simtsc/dtw.hpp"
#include "simtsc/nn.hpp"

namespace simtsc {

enum class Setting { supervised, inductive, transductive };

const char* setting_name(Setting setting);
Setting setting_from_name(const std::string& name);

struct TrainConfig {
    double alpha = 0.3;
    size_t k = 3;
    size_t batch_size = 128;  // must be even
    size_t epochs = 500;
    double lr = 1e-4;
    double adam_eps = 1e-8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    size_t gcn_layers = 1;
    Setting setting = Setting::transductive;
    uint64_t seed = 0;
    BackboneSpec backbone = BackboneSpec::resnet();
};

struct EpochLog {
    size_t epoch;
    double loss;
    double train_accuracy;
};

struct TrainedModel {
    Model model;  // best-epoch weights restored
    double best_train_accuracy = 0.0;
    size_t epoch_of_best = 0;
    TrainConfig config;
};

struct Pools {
    std::vector<int> labeled;
    std::vector<int> negative_pool;
};

// supervised: empty pool; inductive: unlabeled; transductive: unlabeled+test.
Pools build_pools(const SplitSpec& split, Setting setting);

// labeled chunk first, then min(half_batch, |pool|) negatives sampled
// uniformly without replacement.
std::vector<int> sample_batch(const std::vector<int>& labeled_chunk,
                              const std::vector<int>& negative_pool, size_t half_batch,
                              Rng& rng);

// Joint backbone + GCN training over per-batch graphs.
TrainedModel train(const Dataset& dataset, const DistanceMatrix& matrix, const SplitSpec& split,
                   const TrainConfig& config, std::vector<EpochLog>* log = nullptr);

// Graph-batched prediction: seeded shuffled chunks of B/2 test indices, each
// padded with B/2 partners drawn from train+unlabeled. One label per test
// index, aligned with split.test_idx.
std::vector<int> predict(TrainedModel& model, const Dataset& dataset,
                         const DistanceMatrix& matrix, const SplitSpec& split);

// Plain backbone + affine head trained on the labeled set only (no graph).
TrainedModel train_backbone_classifier(const Dataset& dataset, const SplitSpec& split,
                                       const TrainConfig& config,
                                       std::vector<EpochLog>* log = nullptr);
std::vector<int> predict_backbone(TrainedModel& model, const Dataset& dataset,
                                  const SplitSpec& split);

// 1-NN over precomputed DTW distances; ties go to the lower training index.
std::vector<int> knn1_dtw(const DistanceMatrix& matrix, const SplitSpec& split,
                          const std::vector<int>& labels);

void write_runlog_csv(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace simtsc
