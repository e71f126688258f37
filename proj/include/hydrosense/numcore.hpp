/**
 * @file numcore.hpp
 * @brief Dense fp64 kernels shared by the model, training and sensitivity code.
 *
 * Everything here is a pure function over immutable inputs. Accumulation
 * order in the products is fixed (ascending column index) so results are
 * bitwise reproducible across runs and thread counts.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydrosense {

using Vector = std::vector<double>;

/// Raised when a caller breaks a documented precondition (shapes, ranges).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or Inf shows up in a computation that must stay finite.
class NumericFault : public std::runtime_error {
public:
    NumericFault(const std::string& what, long step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

/// out[r] = sum_c W[r,c] * x[c], summed in ascending c.
Vector matvec(const Matrix& W, std::span<const double> x);

/// out[r] += sum_c W[r,c] * x[c]. out must already have W.rows() entries.
void matvec_acc(const Matrix& W, std::span<const double> x, std::span<double> out);

/// out[c] += sum_r W[r,c] * y[r] (transpose product, used by the adjoint).
void matTvec_acc(const Matrix& W, std::span<const double> y, std::span<double> out);

/// W[r,c] += a[r] * b[c].
void add_outer(Matrix& W, std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Nonlinearities. The derivative helpers take the *output* of the forward map.
// ---------------------------------------------------------------------------

double sigmoid(double x);
double tanh_s(double x);

Vector sigmoid(std::span<const double> x);
Vector dsigmoid(std::span<const double> y);
Vector tanh_v(std::span<const double> x);
Vector dtanh(std::span<const double> y);

// ---------------------------------------------------------------------------
// Reductions and checks
// ---------------------------------------------------------------------------

double sum(std::span<const double> v);
double mean(std::span<const double> v);
/// Population standard deviation (divides by n).
double stddev(std::span<const double> v);
bool all_finite(std::span<const double> v);

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/**
 * @brief Seeded generator used everywhere randomness is needed.
 *
 * Algorithm: std::mt19937_64 (its output sequence is fixed by the C++
 * standard). Uniforms take the top 53 bits: u = (x >> 11) * 2^-53, so
 * u is in [0, 1). Normals use Box-Muller on two uniforms, exponentials
 * use -log(1 - u). No std:: distribution objects are involved, so the
 * stream is identical on every conforming toolchain.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double exponential(double mean);
    /// Integer in [0, n).
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// n draws on [lo, hi) from a fresh Rng(seed).
Vector rng_uniform(std::uint64_t seed, double lo, double hi, std::size_t n);

/// Derives an independent stream seed from a base seed and a label.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace hydrosense
