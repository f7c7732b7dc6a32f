#pragma once

// Deterministic benchmark dataset generators. Three of them (cbf,
// two_patterns, synthetic_control) follow the published generating processes
// of the classic synthetic TSC benchmarks; the *_like families are seeded
// stand-ins that mirror the shape (N, dimensions, length, classes) and
// difficulty profile of well-known recorded benchmarks for offline runs.
// Same name + seed always yields the same file, byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "simtsc/dataset.hpp"

namespace simtsc {

struct GeneratorInfo {
    std::string name;
    size_t n;
    size_t dims;
    size_t t_len;  // maximum length for variable-length generators
    size_t classes;
    uint64_t default_seed;
    std::string summary;
};

const std::vector<GeneratorInfo>& dataset_generators();

Dataset generate_dataset(const std::string& name, uint64_t seed);
Dataset generate_dataset(const std::string& name);  // generator's default seed

// Writes the UCR-style text format, one file per dimension (path gains a
// _dimK suffix before the extension when dims > 1).
void write_ucr_text(const Dataset& dataset, const std::string& path);

}  // namespace simtsc
