#include "simtsc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace simtsc {

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        throw std::invalid_argument("accuracy: label vectors must be non-empty and equal length");
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

WilcoxonResult wilcoxon_impl(const std::vector<double>& a, const std::vector<double>& b,
                             bool force_approx) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const size_t n = diffs.size();
    if (n < 5)
        throw std::invalid_argument(
            "wilcoxon_signed_rank: fewer than five nonzero differences");

    // Average ranks of |d|, in doubled units so ties stay integral.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<int64_t> rank2(n, 0);
    double tie_correction = 0.0;  // sum of t^3 - t over tie groups
    size_t pos = 0;
    while (pos < n) {
        size_t end = pos + 1;
        while (end < n && std::abs(diffs[order[end]]) == std::abs(diffs[order[pos]])) ++end;
        const size_t t = end - pos;
        // Average of ranks pos+1 .. end, doubled: (pos+1 + end).
        const int64_t r2 = static_cast<int64_t>(pos + 1 + end);
        for (size_t i = pos; i < end; ++i) rank2[order[i]] = r2;
        tie_correction += static_cast<double>(t) * t * t - static_cast<double>(t);
        pos = end;
    }

    int64_t w_pos2 = 0, w_neg2 = 0;
    for (size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0)
            w_pos2 += rank2[i];
        else
            w_neg2 += rank2[i];
    }
    const int64_t w_min2 = std::min(w_pos2, w_neg2);
    const double statistic = static_cast<double>(w_min2) / 2.0;

    double p;
    if (n <= 25 && !force_approx) {
        // Exact null distribution: counts of achievable doubled rank sums
        // over all 2^n sign assignments.
        const int64_t total2 = w_pos2 + w_neg2;
        std::vector<double> count(static_cast<size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        for (size_t i = 0; i < n; ++i) {
            const int64_t r = rank2[i];
            for (int64_t s = total2; s >= r; --s)
                count[static_cast<size_t>(s)] += count[static_cast<size_t>(s - r)];
        }
        double below = 0.0;
        for (int64_t s = 0; s <= w_min2; ++s) below += count[static_cast<size_t>(s)];
        const double cdf = below / std::pow(2.0, static_cast<double>(n));
        p = std::min(1.0, 2.0 * cdf);
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_correction / 48.0;
        const double se = std::sqrt(var);
        double shift = 0.0;  // continuity correction toward the mean
        if (statistic < mean)
            shift = -0.5;
        else if (statistic > mean)
            shift = 0.5;
        const double z = (statistic - mean - shift) / se;
        p = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    }
    return {statistic, p};
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    return wilcoxon_impl(a, b, false);
}

WilcoxonResult wilcoxon_signed_rank_approx(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    return wilcoxon_impl(a, b, true);
}

double ResultTable::mean_accuracy(size_t dataset, size_t algorithm) const {
    const auto& cell = accuracies[dataset][algorithm];
    double total = 0.0;
    for (double v : cell) total += v;
    return total / static_cast<double>(cell.size());
}

std::vector<double> average_ranks(const ResultTable& table) {
    const size_t n_data = table.datasets.size();
    const size_t n_algo = table.algorithms.size();
    for (size_t d = 0; d < n_data; ++d)
        for (size_t a = 0; a < n_algo; ++a)
            if (table.accuracies[d][a].empty())
                throw std::invalid_argument("average_ranks: missing cell " + table.datasets[d] +
                                            "/" + table.algorithms[a]);

    std::vector<double> total_rank(n_algo, 0.0);
    std::vector<size_t> order(n_algo);
    for (size_t d = 0; d < n_data; ++d) {
        std::vector<double> acc(n_algo);
        for (size_t a = 0; a < n_algo; ++a) acc[a] = table.mean_accuracy(d, a);
        for (size_t a = 0; a < n_algo; ++a) order[a] = a;
        std::sort(order.begin(), order.end(),
                  [&](size_t x, size_t y) { return acc[x] > acc[y]; });
        size_t pos = 0;
        while (pos < n_algo) {
            size_t end = pos + 1;
            while (end < n_algo && acc[order[end]] == acc[order[pos]]) ++end;
            const double shared = (static_cast<double>(pos + 1) + static_cast<double>(end)) / 2.0;
            for (size_t i = pos; i < end; ++i) total_rank[order[i]] += shared;
            pos = end;
        }
    }
    for (double& r : total_rank) r /= static_cast<double>(n_data);
    return total_rank;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

constexpr char kResultsHeader[] = "dataset,algorithm,labels_per_class,setting,seed,accuracy";

}  // namespace

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty results file");
    std::vector<ResultRow> rows;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad results row");
        ResultRow row;
        row.dataset = fields[0];
        row.algorithm = fields[1];
        row.labels_per_class = std::stoi(fields[2]);
        row.setting = fields[3];
        row.seed = std::stoull(fields[4]);
        row.accuracy = std::stod(fields[5]);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write results file: " + path);
    out << kResultsHeader << "\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.accuracy);
        out << r.dataset << ',' << r.algorithm << ',' << r.labels_per_class << ',' << r.setting
            << ',' << r.seed << ',' << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void append_result_csv(const std::string& path, const ResultRow& row) {
    const bool exists = static_cast<bool>(std::ifstream(path));
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write results file: " + path);
    if (!exists) out << kResultsHeader << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", row.accuracy);
    out << row.dataset << ',' << row.algorithm << ',' << row.labels_per_class << ','
        << row.setting << ',' << row.seed << ',' << buf << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

bool same_key(const ResultRow& a, const ResultRow& b) {
    return a.dataset == b.dataset && a.algorithm == b.algorithm &&
           a.labels_per_class == b.labels_per_class && a.setting == b.setting && a.seed == b.seed;
}

ResultTable build_result_table(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("build_result_table: no rows");
    std::set<std::string> dataset_set, algo_set;
    for (const auto& r : rows) {
        dataset_set.insert(r.dataset);
        algo_set.insert(r.algorithm);
    }
    ResultTable table;
    table.datasets.assign(dataset_set.begin(), dataset_set.end());
    table.algorithms.assign(algo_set.begin(), algo_set.end());
    table.accuracies.assign(table.datasets.size(),
                            std::vector<std::vector<double>>(table.algorithms.size()));
    std::map<std::string, size_t> d_index, a_index;
    for (size_t i = 0; i < table.datasets.size(); ++i) d_index[table.datasets[i]] = i;
    for (size_t i = 0; i < table.algorithms.size(); ++i) a_index[table.algorithms[i]] = i;
    for (const auto& r : rows)
        table.accuracies[d_index[r.dataset]][a_index[r.algorithm]].push_back(r.accuracy);

    std::string missing;
    for (size_t d = 0; d < table.datasets.size(); ++d)
        for (size_t a = 0; a < table.algorithms.size(); ++a)
            if (table.accuracies[d][a].empty())
                missing += " (" + table.datasets[d] + ", " + table.algorithms[a] + ")";
    if (!missing.empty())
        throw std::runtime_error("incomplete result grid, missing cells:" + missing);
    return table;
}

void write_rank_csv(const std::string& path, const ResultTable& table,
                    const std::vector<double>& ranks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write rank table: " + path);
    out << "algorithm,avg_rank\n";
    std::vector<size_t> order(table.algorithms.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (ranks[x] != ranks[y]) return ranks[x] < ranks[y];
        return table.algorithms[x] < table.algorithms[y];
    });
    char buf[32];
    for (size_t i : order) {
        std::snprintf(buf, sizeof(buf), "%.6g", ranks[i]);
        out << table.algorithms[i] << ',' << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_significance_csv(const std::string& path, const ResultTable& table,
                            const std::vector<double>& ranks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write significance table: " + path);
    out << "algorithm,against,avg_rank,against_avg_rank,p_value,significantly_better\n";
    const size_t n_algo = table.algorithms.size();
    const size_t n_data = table.datasets.size();
    char buf[64];
    for (size_t a = 0; a < n_algo; ++a) {
        for (size_t b = 0; b < n_algo; ++b) {
            if (a == b) continue;
            std::vector<double> va(n_data), vb(n_data);
            for (size_t d = 0; d < n_data; ++d) {
                va[d] = table.mean_accuracy(d, a);
                vb[d] = table.mean_accuracy(d, b);
            }
            std::string p_field = "NA";
            bool better = false;
            try {
                const WilcoxonResult w = wilcoxon_signed_rank(va, vb);
                std::snprintf(buf, sizeof(buf), "%.6g", w.p_value);
                p_field = buf;
                better = w.p_value < 0.05 && ranks[a] < ranks[b];
            } catch (const std::invalid_argument&) {
                // not enough nonzero differences; leave NA
            }
            out << table.algorithms[a] << ',' << table.algorithms[b] << ',' << ranks[a] << ','
                << ranks[b] << ',' << p_field << ',' << (better ? 1 : 0) << "\n";
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace simtsc
