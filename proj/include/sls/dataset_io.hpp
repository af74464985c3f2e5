#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sls/error.hpp"
#include "sls/model.hpp"

namespace sls {

// Dataset container, all integers and floats little-endian:
//   "SLSDATA"  7-byte magic
//   u8         format version (1)
//   u8         flags; bit 0 set when a beta* block follows y
//   u64 n, u64 p, u64 k
//   f64[n*p] X, f64[n*k] Z, f64[n] y   (row-major)
//   f64[k*p] beta*                     (optional, row-major)
inline constexpr std::array<char, 7> dataset_magic{'S', 'L', 'S', 'D', 'A', 'T', 'A'};
inline constexpr std::uint8_t dataset_version = 1;

struct StoredDataset {
    Dataset data;
    std::optional<MatrixXd> beta_star;
};

namespace detail {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::array<unsigned char, sizeof(T)> b;
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
        return v;
    }
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_matrix(std::ostream& out, const MatrixXd& m) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = to_little(m(i, j));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

inline std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("dataset: truncated header");
    return to_little(v);
}

inline MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const char* what) {
    MatrixXd m(rows, cols);
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double))))
            throw IoError(std::string("dataset: truncated ") + what + " block");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = to_little(row[static_cast<std::size_t>(j)]);
    }
    return m;
}

}  // namespace detail

inline void write_dataset(std::ostream& out, const Dataset& data, const std::optional<MatrixXd>& beta_star) {
    if (beta_star && (beta_star->rows() != data.k() || beta_star->cols() != data.p()))
        throw DimensionMismatch("write_dataset: beta_star must be k x p");
    out.write(dataset_magic.data(), dataset_magic.size());
    out.put(static_cast<char>(dataset_version));
    out.put(static_cast<char>(beta_star ? 1 : 0));
    detail::put_u64(out, static_cast<std::uint64_t>(data.n()));
    detail::put_u64(out, static_cast<std::uint64_t>(data.p()));
    detail::put_u64(out, static_cast<std::uint64_t>(data.k()));
    detail::put_matrix(out, data.X);
    detail::put_matrix(out, data.Z);
    detail::put_matrix(out, data.y);
    if (beta_star) detail::put_matrix(out, *beta_star);
}

inline StoredDataset read_dataset(std::istream& in) {
    std::array<char, 7> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != dataset_magic) throw IoError("dataset: bad magic");
    int version = in.get();
    int flags = in.get();
    if (!in) throw IoError("dataset: truncated header");
    if (version != dataset_version) throw IoError("dataset: unsupported version " + std::to_string(version));
    if (flags & ~1) throw IoError("dataset: unknown flags");
    auto n = static_cast<Eigen::Index>(detail::get_u64(in));
    auto p = static_cast<Eigen::Index>(detail::get_u64(in));
    auto k = static_cast<Eigen::Index>(detail::get_u64(in));
    constexpr std::uint64_t limit = 1ULL << 40;
    if (n <= 0 || p <= 0 || k <= 0 || static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(p + k + 1) > limit)
        throw IoError("dataset: implausible dimensions");
    StoredDataset out;
    out.data.X = detail::get_matrix(in, n, p, "X");
    out.data.Z = detail::get_matrix(in, n, k, "Z");
    out.data.y = detail::get_matrix(in, n, 1, "y");
    if (flags & 1) out.beta_star = detail::get_matrix(in, k, p, "beta*");
    return out;
}

inline void save_dataset(const std::string& path, const Dataset& data, const std::optional<MatrixXd>& beta_star) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_dataset(out, data, beta_star);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline StoredDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_dataset(in);
}

}  // namespace sls
