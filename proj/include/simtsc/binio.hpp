#pragma once

// Little-endian binary stream helpers shared by the dataset cache,
// distance-matrix and checkpoint file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace simtsc {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    if (!out) throw std::runtime_error("binary write failed");
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("binary read failed: truncated file");
    if constexpr (std::endian::native == std::endian::big) {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    return value;
}

inline void write_f64_array(std::ostream& out, const double* data, size_t n) {
    for (size_t i = 0; i < n; ++i) write_le<double>(out, data[i]);
}

inline void read_f64_array(std::istream& in, double* data, size_t n) {
    for (size_t i = 0; i < n; ++i) data[i] = read_le<double>(in);
}

inline void write_magic(std::ostream& out, const char magic[4]) {
    out.write(magic, 4);
    if (!out) throw std::runtime_error("binary write failed");
}

inline void expect_magic(std::istream& in, const char magic[4], const std::string& what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(what + ": bad magic");
}

}  // namespace simtsc
