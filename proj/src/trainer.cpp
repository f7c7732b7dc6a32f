#include "simtsc/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "simtsc/graph.hpp"

namespace simtsc {

namespace {

Tensor gather_series(const Dataset& ds, const std::vector<int>& indices) {
    Tensor x({indices.size(), ds.dims, ds.t_max});
    for (size_t r = 0; r < indices.size(); ++r) {
        const double* src = ds.series_at(static_cast<size_t>(indices[r]), 0);
        std::copy(src, src + ds.dims * ds.t_max, x.data.data() + r * ds.dims * ds.t_max);
    }
    return x;
}

std::vector<double> gather_submatrix(const DistanceMatrix& m, const std::vector<int>& indices) {
    const size_t k = indices.size();
    std::vector<double> sub(k * k);
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j)
            sub[i * k + j] = m.at(static_cast<size_t>(indices[i]), static_cast<size_t>(indices[j]));
    return sub;
}

std::vector<int> sample_without_replacement(const std::vector<int>& pool, size_t count,
                                            Rng& rng) {
    count = std::min(count, pool.size());
    std::vector<int> copy = pool;
    for (size_t i = 0; i < count; ++i) {
        const size_t j = i + static_cast<size_t>(rng.next_below(copy.size() - i));
        std::swap(copy[i], copy[j]);
    }
    copy.resize(count);
    return copy;
}

int argmax_row(const Tensor& logits, size_t row) {
    const size_t classes = logits.dim(1);
    const double* r = logits.data.data() + row * classes;
    int best = 0;
    for (size_t j = 1; j < classes; ++j)
        if (r[j] > r[best]) best = static_cast<int>(j);
    return best;
}

ModelConfig model_config_for(const Dataset& ds, const TrainConfig& config, HeadKind head) {
    ModelConfig mc;
    mc.backbone = config.backbone;
    mc.in_channels = ds.dims;
    mc.in_len = ds.t_max;
    mc.num_classes = ds.num_classes;
    mc.head = head;
    mc.gcn_layers = config.gcn_layers;
    return mc;
}

// Graph-batched argmax prediction: queries in seeded shuffled chunks of B/2,
// each padded with partners sampled from partner_pool. Returns labels aligned
// with `queries`.
std::vector<int> graph_batched_predict(Model& model, const Dataset& ds,
                                       const DistanceMatrix& matrix,
                                       const std::vector<int>& queries,
                                       const std::vector<int>& partner_pool,
                                       const TrainConfig& config, Rng& rng) {
    const size_t half = config.batch_size / 2;
    std::vector<int> order = queries;
    rng.shuffle(order);

    std::vector<int> pred_by_index(ds.n, -1);
    Rng no_dropout(0);
    for (size_t start = 0; start < order.size(); start += half) {
        const size_t stop = std::min(order.size(), start + half);
        std::vector<int> batch(order.begin() + start, order.begin() + stop);
        const size_t n_query = batch.size();
        const std::vector<int> partners = sample_without_replacement(partner_pool, half, rng);
        batch.insert(batch.end(), partners.begin(), partners.end());

        const SparseGraph graph =
            build_batch_graph(gather_submatrix(matrix, batch), batch.size(), config.alpha,
                              config.k);
        const Tensor x = gather_series(ds, batch);
        const Tensor logits = model.forward(x, &graph, false, no_dropout);
        for (size_t r = 0; r < n_query; ++r)
            pred_by_index[static_cast<size_t>(batch[r])] = argmax_row(logits, r);
    }

    std::vector<int> out;
    out.reserve(queries.size());
    for (int q : queries) out.push_back(pred_by_index[static_cast<size_t>(q)]);
    return out;
}

double labeled_accuracy(const std::vector<int>& preds, const std::vector<int>& indices,
                        const std::vector<int>& labels) {
    size_t hits = 0;
    for (size_t i = 0; i < indices.size(); ++i)
        if (preds[i] == labels[static_cast<size_t>(indices[i])]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

}  // namespace

const char* setting_name(Setting setting) {
    switch (setting) {
        case Setting::supervised: return "supervised";
        case Setting::inductive: return "inductive";
        case Setting::transductive: return "transductive";
    }
    return "?";
}

Setting setting_from_name(const std::string& name) {
    if (name == "supervised") return Setting::supervised;
    if (name == "inductive") return Setting::inductive;
    if (name == "transductive") return Setting::transductive;
    throw std::invalid_argument("unknown setting: " + name);
}

Pools build_pools(const SplitSpec& split, Setting setting) {
    Pools pools;
    pools.labeled = split.train_idx;
    switch (setting) {
        case Setting::supervised:
            break;
        case Setting::inductive:
            pools.negative_pool = split.unlabeled_idx;
            break;
        case Setting::transductive:
            pools.negative_pool = split.unlabeled_idx;
            pools.negative_pool.insert(pools.negative_pool.end(), split.test_idx.begin(),
                                       split.test_idx.end());
            break;
    }
    return pools;
}

std::vector<int> sample_batch(const std::vector<int>& labeled_chunk,
                              const std::vector<int>& negative_pool, size_t half_batch,
                              Rng& rng) {
    std::vector<int> batch = labeled_chunk;
    const std::vector<int> negatives = sample_without_replacement(negative_pool, half_batch, rng);
    batch.insert(batch.end(), negatives.begin(), negatives.end());
    return batch;
}

TrainedModel train(const Dataset& dataset, const DistanceMatrix& matrix, const SplitSpec& split,
                   const TrainConfig& config, std::vector<EpochLog>* log) {
    if (split.train_idx.empty()) throw std::invalid_argument("train: no labeled samples");
    if (config.batch_size % 2 != 0) throw std::invalid_argument("train: batch size must be even");
    if (matrix.n != dataset.n) throw std::invalid_argument("train: matrix does not cover dataset");

    const Pools pools = build_pools(split, config.setting);
    Rng init_rng = derive_rng(config.seed, RngStream::init);
    Rng shuffle_rng = derive_rng(config.seed, RngStream::shuffle);
    Rng negative_rng = derive_rng(config.seed, RngStream::negative);
    Rng dropout_rng = derive_rng(config.seed, RngStream::dropout);
    Rng eval_rng = derive_rng(config.seed, RngStream::train_eval);

    Model model = Model::build(model_config_for(dataset, config, HeadKind::gcn), init_rng);
    const size_t half = config.batch_size / 2;
    const size_t classes = dataset.num_classes;

    auto eval_train_accuracy = [&]() {
        const std::vector<int> preds = graph_batched_predict(
            model, dataset, matrix, split.train_idx, pools.negative_pool, config, eval_rng);
        return labeled_accuracy(preds, split.train_idx, dataset.labels);
    };

    double best_acc = -1.0;
    size_t best_epoch = 0;
    std::vector<double> best_state;

    if (config.epochs == 0) {
        best_acc = eval_train_accuracy();
        best_state = model.state();
    }

    for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<int> labeled = pools.labeled;
        shuffle_rng.shuffle(labeled);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < labeled.size(); start += half) {
            const size_t stop = std::min(labeled.size(), start + half);
            const std::vector<int> chunk(labeled.begin() + start, labeled.begin() + stop);
            const std::vector<int> batch =
                sample_batch(chunk, pools.negative_pool, half, negative_rng);

            const SparseGraph graph = build_batch_graph(gather_submatrix(matrix, batch),
                                                        batch.size(), config.alpha, config.k);
            const Tensor x = gather_series(dataset, batch);
            const Tensor logits = model.forward(x, &graph, true, dropout_rng);

            std::vector<double> onehot(batch.size() * classes, 0.0);
            std::vector<uint8_t> mask(batch.size(), 0);
            for (size_t r = 0; r < chunk.size(); ++r) {
                mask[r] = 1;
                onehot[r * classes +
                       static_cast<size_t>(dataset.labels[static_cast<size_t>(batch[r])])] = 1.0;
            }
            Tensor grad;
            epoch_loss += softmax_cross_entropy(logits, onehot, mask, grad);
            model.backward(grad);
            model.adam_step_all(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
        }

        const double acc = eval_train_accuracy();
        if (acc >= best_acc) {
            best_acc = acc;
            best_epoch = epoch;
            best_state = model.state();
        }
        if (log) log->push_back({epoch, epoch_loss, acc});
    }

    if (!best_state.empty()) model.set_state(best_state);
    TrainedModel out{std::move(model), best_acc, best_epoch, config};
    return out;
}

std::vector<int> predict(TrainedModel& trained, const Dataset& dataset,
                         const DistanceMatrix& matrix, const SplitSpec& split) {
    if (matrix.n != dataset.n)
        throw std::invalid_argument("predict: matrix does not cover dataset");
    std::vector<int> partner_pool = split.train_idx;
    partner_pool.insert(partner_pool.end(), split.unlabeled_idx.begin(),
                        split.unlabeled_idx.end());
    Rng rng = derive_rng(trained.config.seed, RngStream::predict);
    return graph_batched_predict(trained.model, dataset, matrix, split.test_idx, partner_pool,
                                 trained.config, rng);
}

TrainedModel train_backbone_classifier(const Dataset& dataset, const SplitSpec& split,
                                       const TrainConfig& config, std::vector<EpochLog>* log) {
    if (split.train_idx.empty())
        throw std::invalid_argument("train_backbone_classifier: no labeled samples");

    Rng init_rng = derive_rng(config.seed, RngStream::init);
    Rng shuffle_rng = derive_rng(config.seed, RngStream::shuffle);
    Rng dropout_rng = derive_rng(config.seed, RngStream::dropout);
    Rng no_dropout(0);

    Model model = Model::build(model_config_for(dataset, config, HeadKind::linear), init_rng);
    const size_t classes = dataset.num_classes;
    const size_t chunk_size = config.batch_size;

    auto eval_train_accuracy = [&]() {
        size_t hits = 0;
        for (size_t start = 0; start < split.train_idx.size(); start += chunk_size) {
            const size_t stop = std::min(split.train_idx.size(), start + chunk_size);
            const std::vector<int> chunk(split.train_idx.begin() + start,
                                         split.train_idx.begin() + stop);
            const Tensor logits = model.forward(gather_series(dataset, chunk), nullptr, false,
                                                no_dropout);
            for (size_t r = 0; r < chunk.size(); ++r)
                if (argmax_row(logits, r) == dataset.labels[static_cast<size_t>(chunk[r])])
                    ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(split.train_idx.size());
    };

    double best_acc = -1.0;
    size_t best_epoch = 0;
    std::vector<double> best_state;

    if (config.epochs == 0) {
        best_acc = eval_train_accuracy();
        best_state = model.state();
    }

    for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<int> order = split.train_idx;
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += chunk_size) {
            const size_t stop = std::min(order.size(), start + chunk_size);
            const std::vector<int> chunk(order.begin() + start, order.begin() + stop);
            const Tensor logits =
                model.forward(gather_series(dataset, chunk), nullptr, true, dropout_rng);
            std::vector<double> onehot(chunk.size() * classes, 0.0);
            std::vector<uint8_t> mask(chunk.size(), 1);
            for (size_t r = 0; r < chunk.size(); ++r)
                onehot[r * classes +
                       static_cast<size_t>(dataset.labels[static_cast<size_t>(chunk[r])])] = 1.0;
            Tensor grad;
            epoch_loss += softmax_cross_entropy(logits, onehot, mask, grad);
            model.backward(grad);
            model.adam_step_all(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
        }

        const double acc = eval_train_accuracy();
        if (acc >= best_acc) {
            best_acc = acc;
            best_epoch = epoch;
            best_state = model.state();
        }
        if (log) log->push_back({epoch, epoch_loss, acc});
    }

    if (!best_state.empty()) model.set_state(best_state);
    TrainedModel out{std::move(model), best_acc, best_epoch, config};
    return out;
}

std::vector<int> predict_backbone(TrainedModel& trained, const Dataset& dataset,
                                  const SplitSpec& split) {
    Rng no_dropout(0);
    const size_t chunk_size = trained.config.batch_size;
    std::vector<int> preds;
    preds.reserve(split.test_idx.size());
    for (size_t start = 0; start < split.test_idx.size(); start += chunk_size) {
        const size_t stop = std::min(split.test_idx.size(), start + chunk_size);
        const std::vector<int> chunk(split.test_idx.begin() + start,
                                     split.test_idx.begin() + stop);
        const Tensor logits =
            trained.model.forward(gather_series(dataset, chunk), nullptr, false, no_dropout);
        for (size_t r = 0; r < chunk.size(); ++r) preds.push_back(argmax_row(logits, r));
    }
    return preds;
}

std::vector<int> knn1_dtw(const DistanceMatrix& matrix, const SplitSpec& split,
                          const std::vector<int>& labels) {
    if (split.train_idx.empty()) throw std::invalid_argument("knn1_dtw: empty training set");
    std::vector<int> train_sorted = split.train_idx;
    std::sort(train_sorted.begin(), train_sorted.end());

    std::vector<int> preds;
    preds.reserve(split.test_idx.size());
    for (int t : split.test_idx) {
        int best_idx = train_sorted[0];
        double best_d = matrix.at(static_cast<size_t>(t), static_cast<size_t>(best_idx));
        for (size_t j = 1; j < train_sorted.size(); ++j) {
            const double d = matrix.at(static_cast<size_t>(t),
                                       static_cast<size_t>(train_sorted[j]));
            if (d < best_d) {
                best_d = d;
                best_idx = train_sorted[j];
            }
        }
        preds.push_back(labels[static_cast<size_t>(best_idx)]);
    }
    return preds;
}

void write_runlog_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run log: " + path);
    out << "epoch,loss,train_accuracy\n";
    char line[96];
    for (const auto& e : log) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", e.epoch, e.loss,
                      e.train_accuracy);
        out << line;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace simtsc
