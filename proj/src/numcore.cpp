#include "hydrosense/numcore.hpp"

#include <cmath>
#include <numbers>

namespace hydrosense {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

}  // namespace

Vector matvec(const Matrix& W, std::span<const double> x) {
    Vector out(W.rows(), 0.0);
    matvec_acc(W, x, out);
    return out;
}

void matvec_acc(const Matrix& W, std::span<const double> x, std::span<double> out) {
    require(W.cols() == x.size(), "matvec: W.cols != x.len");
    require(W.rows() == out.size(), "matvec: W.rows != out.len");
    const std::size_t n = W.cols();
    for (std::size_t r = 0; r < W.rows(); ++r) {
        const double* w = W.row(r).data();
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += w[c] * x[c];
        out[r] += acc;
    }
}

void matTvec_acc(const Matrix& W, std::span<const double> y, std::span<double> out) {
    require(W.rows() == y.size(), "matTvec: W.rows != y.len");
    require(W.cols() == out.size(), "matTvec: W.cols != out.len");
    const std::size_t n = W.cols();
    for (std::size_t r = 0; r < W.rows(); ++r) {
        const double* w = W.row(r).data();
        const double yr = y[r];
        for (std::size_t c = 0; c < n; ++c) out[c] += w[c] * yr;
    }
}

void add_outer(Matrix& W, std::span<const double> a, std::span<const double> b) {
    require(W.rows() == a.size() && W.cols() == b.size(), "add_outer: shape mismatch");
    const std::size_t n = W.cols();
    for (std::size_t r = 0; r < W.rows(); ++r) {
        double* w = W.row(r).data();
        const double ar = a[r];
        for (std::size_t c = 0; c < n; ++c) w[c] += ar * b[c];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: length mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

double sigmoid(double x) {
    // Two branches keep exp() from overflowing for large |x|.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double tanh_s(double x) { return std::tanh(x); }

Vector sigmoid(std::span<const double> x) {
    Vector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = sigmoid(x[k]);
    return out;
}

Vector dsigmoid(std::span<const double> y) {
    Vector out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[k] = y[k] * (1.0 - y[k]);
    return out;
}

Vector tanh_v(std::span<const double> x) {
    Vector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::tanh(x[k]);
    return out;
}

Vector dtanh(std::span<const double> y) {
    Vector out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[k] = 1.0 - y[k] * y[k];
    return out;
}

double sum(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
}

double mean(std::span<const double> v) {
    require(!v.empty(), "mean: empty input");
    return sum(v) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    require(lo < hi, "rng: lo must be < hi");
    const double v = lo + (hi - lo) * uniform();
    // lo + (hi-lo)*u can round up to hi when u is close to 1.
    return v < hi ? v : std::nextafter(hi, lo);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

double Rng::exponential(double mean_value) {
    require(mean_value > 0.0, "rng: exponential mean must be > 0");
    return -mean_value * std::log1p(-uniform());
}

std::size_t Rng::index(std::size_t n) {
    require(n > 0, "rng: index range must be non-empty");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

Vector rng_uniform(std::uint64_t seed, double lo, double hi, std::size_t n) {
    require(lo < hi, "rng_uniform: lo must be < hi");
    Rng rng(seed);
    Vector out(n);
    for (auto& v : out) v = rng.uniform(lo, hi);
    return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over the combined word.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace hydrosense
