#include "simtsc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "simtsc/binio.hpp"
#include "simtsc/kernels.hpp"
#include "simtsc/rng.hpp"

namespace simtsc {

namespace {

constexpr uint32_t kCacheVersion = 1;
constexpr char kCacheMagic[4] = {'S', 'T', 'S', 'D'};

struct RawRow {
    double label = 0.0;
    std::vector<double> values;  // finite prefix; NaN markers already stripped
};

bool is_separator(char c) { return c == '\t' || c == ',' || c == ' ' || c == '\r'; }

// Parses one line: label first, then the series values. Trailing NaNs mark
// missing values for variable-length datasets; a finite value after a NaN is
// malformed.
RawRow parse_row(const std::string& line, const std::string& file, size_t line_no) {
    RawRow row;
    const char* p = line.c_str();
    const char* end = p + line.size();
    bool have_label = false;
    bool seen_missing = false;
    while (p < end) {
        while (p < end && is_separator(*p)) ++p;
        if (p >= end) break;
        char* next = nullptr;
        const double v = std::strtod(p, &next);
        if (next == p || (next < end && !is_separator(*next))) {
            throw std::runtime_error(file + ":" + std::to_string(line_no) +
                                     ": non-numeric value in series");
        }
        if (!have_label) {
            if (std::isnan(v))
                throw std::runtime_error(file + ":" + std::to_string(line_no) + ": missing label");
            row.label = v;
            have_label = true;
        } else if (std::isnan(v)) {
            seen_missing = true;
        } else {
            if (seen_missing)
                throw std::runtime_error(file + ":" + std::to_string(line_no) +
                                         ": value after missing marker");
            row.values.push_back(v);
        }
        p = next;
    }
    if (!have_label)
        throw std::runtime_error(file + ":" + std::to_string(line_no) + ": empty row");
    if (row.values.empty())
        throw std::runtime_error(file + ":" + std::to_string(line_no) + ": empty series");
    return row;
}

std::vector<RawRow> parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::vector<RawRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char c : line)
            if (!is_separator(c)) blank = false;
        if (blank) continue;
        rows.push_back(parse_row(line, path, line_no));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no series found");
    return rows;
}

std::string dim_path(const std::string& base, size_t k) {
    const auto slash = base.find_last_of('/');
    const auto dot = base.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return base + "_dim" + std::to_string(k);
    return base.substr(0, dot) + "_dim" + std::to_string(k) + base.substr(dot);
}

std::string dataset_name_from_path(const std::string& path) {
    const auto slash = path.find_last_of('/');
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    return stem;
}

}  // namespace

Dataset load_ucr_dataset(const std::string& path, size_t dims) {
    if (dims < 1) throw std::invalid_argument("load_ucr_dataset: dims must be >= 1");

    std::vector<std::vector<RawRow>> per_dim;
    per_dim.reserve(dims);
    if (dims == 1) {
        per_dim.push_back(parse_file(path));
    } else {
        for (size_t k = 0; k < dims; ++k) per_dim.push_back(parse_file(dim_path(path, k)));
    }

    const size_t n = per_dim[0].size();
    for (size_t k = 1; k < dims; ++k) {
        if (per_dim[k].size() != n)
            throw std::runtime_error(path + ": dimension files disagree on series count");
        for (size_t i = 0; i < n; ++i) {
            if (per_dim[k][i].label != per_dim[0][i].label)
                throw std::runtime_error(path + ": dimension files disagree on labels");
            if (per_dim[k][i].values.size() != per_dim[0][i].values.size())
                throw std::runtime_error(path + ": dimension files disagree on lengths");
        }
    }

    // Remap raw labels to 0..C-1 by sorted distinct value.
    std::map<double, int> label_map;
    for (const auto& row : per_dim[0]) label_map[row.label] = 0;
    int next_id = 0;
    for (auto& [raw, id] : label_map) id = next_id++;
    if (label_map.size() < 2) throw std::runtime_error(path + ": fewer than two classes");

    Dataset ds;
    ds.name = dataset_name_from_path(path);
    ds.n = n;
    ds.dims = dims;
    ds.num_classes = label_map.size();
    ds.lengths.resize(n);
    ds.labels.resize(n);
    size_t t_max = 0;
    for (size_t i = 0; i < n; ++i) {
        ds.lengths[i] = per_dim[0][i].values.size();
        ds.labels[i] = label_map.at(per_dim[0][i].label);
        t_max = std::max(t_max, ds.lengths[i]);
    }
    ds.t_max = t_max;
    ds.series.assign(n * dims * t_max, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t m = 0; m < dims; ++m)
            std::copy(per_dim[m][i].values.begin(), per_dim[m][i].values.end(),
                      ds.series_at(i, m));
    return ds;
}

Dataset znormalize(const Dataset& dataset) {
    if (dataset.normalized)
        throw std::invalid_argument("znormalize: dataset is already normalized");
    Dataset out = dataset;
    for (size_t i = 0; i < out.n; ++i) {
        const size_t len = out.lengths[i];
        for (size_t m = 0; m < out.dims; ++m) {
            double* x = out.series_at(i, m);
            const double mean = kernels::sum(x, len) / static_cast<double>(len);
            const double var = kernels::sum_sq_diff(x, mean, len) / static_cast<double>(len);
            const double sd = std::sqrt(var);
            if (sd < 1e-8) {
                std::fill(x, x + len, 0.0);
            } else {
                const double inv = 1.0 / sd;
                for (size_t t = 0; t < len; ++t) x[t] = (x[t] - mean) * inv;
            }
        }
    }
    out.normalized = true;
    return out;
}

SplitSpec make_split(const Dataset& dataset, int labels_per_class, uint64_t seed) {
    if (labels_per_class < 1)
        throw std::invalid_argument("make_split: labels_per_class must be >= 1");
    const size_t n = dataset.n;
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng rng = derive_rng(seed, RngStream::split);
    rng.shuffle(order);

    SplitSpec split;
    split.labels_per_class = labels_per_class;
    split.seed = seed;
    const size_t n_test = n / 5;
    split.test_idx.assign(order.end() - static_cast<ptrdiff_t>(n_test), order.end());

    std::vector<int> quota(dataset.num_classes, labels_per_class);
    for (size_t pos = 0; pos < n - n_test; ++pos) {
        const int idx = order[pos];
        int& q = quota[dataset.labels[idx]];
        if (q > 0) {
            split.train_idx.push_back(idx);
            --q;
        } else {
            split.unlabeled_idx.push_back(idx);
        }
    }
    return split;
}

void validate_dataset(const Dataset& ds) {
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("dataset " + ds.name + ": " + why);
    };
    if (ds.n < 1 || ds.dims < 1 || ds.num_classes < 2) fail("bad shape");
    if (ds.series.size() != ds.n * ds.dims * ds.t_max) fail("payload size mismatch");
    if (ds.lengths.size() != ds.n || ds.labels.size() != ds.n) fail("metadata size mismatch");
    std::vector<size_t> class_count(ds.num_classes, 0);
    for (size_t i = 0; i < ds.n; ++i) {
        if (ds.labels[i] < 0 || static_cast<size_t>(ds.labels[i]) >= ds.num_classes)
            fail("label out of range");
        ++class_count[ds.labels[i]];
        if (ds.lengths[i] < 1 || ds.lengths[i] > ds.t_max) fail("length out of range");
        for (size_t m = 0; m < ds.dims; ++m) {
            const double* x = ds.series_at(i, m);
            for (size_t t = ds.lengths[i]; t < ds.t_max; ++t)
                if (x[t] != 0.0) fail("nonzero padding");
        }
    }
    for (size_t c = 0; c < ds.num_classes; ++c)
        if (class_count[c] == 0) fail("empty class");
    if (ds.normalized) {
        for (size_t i = 0; i < ds.n; ++i) {
            for (size_t m = 0; m < ds.dims; ++m) {
                const double* x = ds.series_at(i, m);
                const size_t len = ds.lengths[i];
                const double mean = kernels::sum(x, len) / static_cast<double>(len);
                const double var = kernels::sum_sq_diff(x, mean, len) / static_cast<double>(len);
                const bool all_zero = var == 0.0 && mean == 0.0;
                if (all_zero) continue;  // constant raw series, zero rule
                if (std::abs(mean) > 1e-5 || std::abs(std::sqrt(var) - 1.0) > 1e-4)
                    fail("series not z-normalized");
            }
        }
    }
}

void save_dataset_cache(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset cache: " + path);
    write_magic(out, kCacheMagic);
    write_le<uint32_t>(out, kCacheVersion);
    write_le<uint32_t>(out, static_cast<uint32_t>(ds.n));
    write_le<uint32_t>(out, static_cast<uint32_t>(ds.dims));
    write_le<uint32_t>(out, static_cast<uint32_t>(ds.t_max));
    write_le<uint32_t>(out, static_cast<uint32_t>(ds.num_classes));
    write_le<uint8_t>(out, ds.normalized ? 1 : 0);
    for (size_t len : ds.lengths) write_le<uint32_t>(out, static_cast<uint32_t>(len));
    for (int label : ds.labels) write_le<int32_t>(out, label);
    write_f64_array(out, ds.series.data(), ds.series.size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset cache: " + path);
    expect_magic(in, kCacheMagic, path);
    const uint32_t version = read_le<uint32_t>(in);
    if (version != kCacheVersion)
        throw std::runtime_error(path + ": unsupported cache version " + std::to_string(version));
    Dataset ds;
    ds.name = dataset_name_from_path(path);
    ds.n = read_le<uint32_t>(in);
    ds.dims = read_le<uint32_t>(in);
    ds.t_max = read_le<uint32_t>(in);
    ds.num_classes = read_le<uint32_t>(in);
    ds.normalized = read_le<uint8_t>(in) != 0;
    ds.lengths.resize(ds.n);
    for (auto& len : ds.lengths) len = read_le<uint32_t>(in);
    ds.labels.resize(ds.n);
    for (auto& label : ds.labels) label = read_le<int32_t>(in);
    ds.series.resize(ds.n * ds.dims * ds.t_max);
    read_f64_array(in, ds.series.data(), ds.series.size());
    return ds;
}

Dataset load_dataset_any(const std::string& path, size_t dims) {
    std::ifstream probe(path, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    if (probe) probe.read(magic, 4);
    if (probe && std::memcmp(magic, kCacheMagic, 4) == 0) return load_dataset_cache(path);
    return load_ucr_dataset(path, dims);
}

void save_split(const SplitSpec& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split file: " + path);
    out << "STSS seed=" << split.seed << " labels_per_class=" << split.labels_per_class << "\n";
    auto write_line = [&](const std::vector<int>& v) {
        for (size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
        out << "\n";
    };
    write_line(split.train_idx);
    write_line(split.unlabeled_idx);
    write_line(split.test_idx);
    if (!out) throw std::runtime_error("write failed: " + path);
}

SplitSpec load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ": empty split file");
    SplitSpec split;
    unsigned long long seed = 0;
    int lpc = 0;
    if (std::sscanf(header.c_str(), "STSS seed=%llu labels_per_class=%d", &seed, &lpc) != 2)
        throw std::runtime_error(path + ": bad split header");
    split.seed = seed;
    split.labels_per_class = lpc;
    auto read_line = [&](std::vector<int>& v) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated split file");
        std::istringstream ss(line);
        int idx;
        while (ss >> idx) v.push_back(idx);
    };
    read_line(split.train_idx);
    read_line(split.unlabeled_idx);
    read_line(split.test_idx);
    return split;
}

}  // namespace simtsc
