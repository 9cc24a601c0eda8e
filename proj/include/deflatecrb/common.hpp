#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace deflatecrb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<Eigen::Index>;

// Precondition violations (bad sizes, out-of-range parameters).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failures (rank deficiency, ill conditioning).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Deterministic sub-stream derivation: the stream for a given
// (master, grid, trial, purpose) tuple never depends on anything else,
// so adding estimators or reordering trials cannot shift the draws.
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t a = 0,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = detail::splitmix64(master);
    s = detail::splitmix64(s ^ a);
    s = detail::splitmix64(s ^ b);
    s = detail::splitmix64(s ^ c);
    return std::mt19937_64(s);
}

inline Vector gaussian_vector(Eigen::Index n, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev,
                              std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    // column-major fill, matches Eigen storage
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

inline Matrix columns_at(const Matrix& m, const IndexSet& idx) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    return out;
}

inline double db(double x) { return 10.0 * std::log10(x); }
inline double from_db(double x_db) { return std::pow(10.0, x_db / 10.0); }

} // namespace deflatecrb
