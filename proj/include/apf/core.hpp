#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apf {

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition on a caller-supplied argument.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Bad configuration or schema (missing column, invalid parameter).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage was requested before the artifact it consumes exists.
class DependencyError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during optimisation (NaN loss and friends).
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace stats {

/// Pairwise (cascade) summation; order is fixed by the input layout.
double sum(std::span<const double> values);
double mean(std::span<const double> values);
/// Population standard deviation (divides by n). Returns 0 for n <= 1.
double stddev(std::span<const double> values);
/// Empirical quantile with linear interpolation between order statistics
/// (position (n - 1) * q). Throws InvalidInput on an empty sample.
double quantile(std::span<const double> values, double q);

}  // namespace stats

/// Derive a child seed from a parent seed and a (stage, task) pair.
/// Stable across platforms and builds.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t task = 0);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// 64-bit FNV-1a, used for content hashes in the run manifest.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Number of bytes in one MB (binary megabyte).
inline constexpr double kBytesPerMB = 1024.0 * 1024.0;

}  // namespace apf
