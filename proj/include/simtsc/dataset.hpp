#pragma once

// Ingestion of UCR-style delimited time-series files, z-normalization, and
// the few-shot split protocol (shuffle, hold out the last 20%, then fill
// per-class label quotas from the front of the shuffle).

#include <cstdint>
#include <string>
#include <vector>

namespace simtsc {

struct Dataset {
    std::string name;
    size_t n = 0;         // number of series
    size_t dims = 0;      // dimensions per series (1 = univariate)
    size_t t_max = 0;     // padded length
    size_t num_classes = 0;
    std::vector<double> series;   // [n][dims][t_max], zero padded past lengths[i]
    std::vector<size_t> lengths;  // original length per series
    std::vector<int> labels;      // in [0, num_classes)
    bool normalized = false;

    double* series_at(size_t i, size_t m) { return series.data() + (i * dims + m) * t_max; }
    const double* series_at(size_t i, size_t m) const {
        return series.data() + (i * dims + m) * t_max;
    }
};

struct SplitSpec {
    std::vector<int> train_idx;
    std::vector<int> unlabeled_idx;
    std::vector<int> test_idx;
    int labels_per_class = 0;
    uint64_t seed = 0;
};

// Reads one delimited text file per dimension (label first on each row).
// For dims > 1 the per-dimension files carry a _dimK suffix before the
// extension, e.g. motions.tsv -> motions_dim0.tsv ... motions_dim5.tsv.
Dataset load_ucr_dataset(const std::string& path, size_t dims = 1);

// Per series and dimension, over the first lengths[i] entries: subtract the
// mean and divide by the population standard deviation; series with standard
// deviation below 1e-8 become zeros. Padding stays zero.
Dataset znormalize(const Dataset& dataset);

SplitSpec make_split(const Dataset& dataset, int labels_per_class, uint64_t seed);

// Throws std::runtime_error when a Dataset invariant does not hold.
void validate_dataset(const Dataset& dataset);

// Binary dataset cache ("STSD").
void save_dataset_cache(const Dataset& dataset, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

// Loads either the text format or an STSD cache, sniffing the magic.
Dataset load_dataset_any(const std::string& path, size_t dims = 1);

// Split files are plain text: a header line with seed and labels_per_class,
// then three lines of space-separated indices (train, unlabeled, test).
void save_split(const SplitSpec& split, const std::string& path);
SplitSpec load_split(const std::string& path);

}  // namespace simtsc
