#pragma once

// Accuracy, tie-averaged ranks across datasets, and the two-sided Wilcoxon
// signed-rank test (exact null distribution up to n = 25, normal
// approximation with tie and continuity corrections beyond).

#include <cstdint>
#include <string>
#include <vector>

namespace simtsc {

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

struct WilcoxonResult {
    double statistic;  // min of the positive- and negative-rank sums
    double p_value;    // two-sided
};

// Zero differences are dropped; tied absolute differences share average
// ranks. Throws std::invalid_argument when fewer than five nonzero
// differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// Same test with the normal approximation forced regardless of n, for
// comparing the two branches on identical data.
WilcoxonResult wilcoxon_signed_rank_approx(const std::vector<double>& a,
                                           const std::vector<double>& b);

struct ResultTable {
    std::vector<std::string> datasets;
    std::vector<std::string> algorithms;
    // accuracies[dataset][algorithm] holds one value per seed.
    std::vector<std::vector<std::vector<double>>> accuracies;

    double mean_accuracy(size_t dataset, size_t algorithm) const;
};

// Rank 1 = best mean accuracy per dataset, ties averaged; returns the mean
// rank per algorithm. Every cell must contain at least one seed.
std::vector<double> average_ranks(const ResultTable& table);

struct ResultRow {
    std::string dataset;
    std::string algorithm;
    int labels_per_class = 0;
    std::string setting;
    uint64_t seed = 0;
    double accuracy = 0.0;
};

std::vector<ResultRow> read_results_csv(const std::string& path);
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
void append_result_csv(const std::string& path, const ResultRow& row);

// Key = (dataset, algorithm, labels_per_class, setting, seed).
bool same_key(const ResultRow& a, const ResultRow& b);

// Aggregates rows into a dataset x algorithm table; throws with a listing of
// the missing (dataset, algorithm) cells when the grid is incomplete.
ResultTable build_result_table(const std::vector<ResultRow>& rows);

void write_rank_csv(const std::string& path, const ResultTable& table,
                    const std::vector<double>& ranks);

// One row per ordered algorithm pair: two-sided p-value on the paired
// per-dataset mean accuracies and whether the first algorithm is
// significantly better (p < 0.05 and lower average rank). Pairs with fewer
// than five nonzero differences get p_value "NA".
void write_significance_csv(const std::string& path, const ResultTable& table,
                            const std::vector<double>& ranks);

}  // namespace simtsc
