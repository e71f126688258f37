/**
 * @file ealstm.hpp
 * @brief Entity-aware LSTM cell, sequence-to-one forward pass and its adjoint.
 *
 * The input gate is driven by the static catchment features only and is
 * computed once per sequence:
 *
 *   i    = sigmoid(W_i x_s + b_i)
 *   f[t] = sigmoid(W_f x_d[t] + U_f h[t-1] + b_f)
 *   g[t] = tanh   (W_g x_d[t] + U_g h[t-1] + b_g)
 *   o[t] = sigmoid(W_o x_d[t] + U_o h[t-1] + b_o)
 *   c[t] = f[t] * c[t-1] + i * g[t]
 *   h[t] = o[t] * tanh(c[t])
 *
 * followed by a linear head yhat = head_w . h[T] + head_b. Initial state is
 * h = c = 0 for every sequence.
 *
 * backward() is the hand-written reverse pass of exactly this computation.
 * The static-feature gradient only flows through the input gate, summed
 * over every time step.
 */

#pragma once

#include "hydrosense/numcore.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string_view>

namespace hydrosense::ealstm {

/// Gates that see the dynamic inputs and the recurrent state.
enum Gate : std::size_t { kForget = 0, kCell = 1, kOutput = 2 };
inline constexpr std::size_t kNumGates = 3;

struct GateParams {
    Matrix W;  ///< H x n_d
    Matrix U;  ///< H x H
    Vector b;  ///< H

    bool operator==(const GateParams&) const = default;
};

struct Params {
    std::size_t hidden = 0;
    std::size_t n_static = 0;
    std::size_t n_dynamic = 0;

    Matrix W_i;  ///< H x n_s
    Vector b_i;  ///< H
    std::array<GateParams, kNumGates> gates;
    Vector head_w;  ///< H
    double head_b = 0.0;

    /// Zero-filled parameters of the given shape.
    static Params zeros(std::size_t hidden, std::size_t n_static, std::size_t n_dynamic);

    /// Throws ContractViolation if any tensor disagrees with (H, n_s, n_d).
    void validate() const;

    std::size_t num_values() const;

    /// Visits every tensor in a fixed order: W_i, b_i, {W,U,b} for f,g,o, head_w, head_b.
    void for_each(const std::function<void(std::string_view, std::span<double>)>& fn);
    void for_each(const std::function<void(std::string_view, std::span<const double>)>& fn) const;

    bool operator==(const Params&) const = default;
};

/**
 * Uniform [-a, a] with a = 1/sqrt(H) for every W, U and head_w entry;
 * b_f = +3, all other biases 0. Draw order follows Params::for_each.
 */
Params init_params(std::size_t hidden, std::size_t n_static, std::size_t n_dynamic,
                   std::uint64_t seed);

struct CellState {
    Vector h;
    Vector c;
};

struct StepCache {
    Vector f, g, o;
};

/// Everything the adjoint needs. Row t of each matrix holds step t (0-based).
struct ForwardCache {
    Vector x_s;
    Vector i;      ///< stored once, identical at every step
    Matrix x_d;    ///< T x n_d
    Matrix f, g, o, c, h;  ///< T x H each
    CellState initial;

    std::size_t steps() const { return x_d.rows(); }
};

struct SequenceGrads {
    Params d_params;
    Vector d_xs;
    Matrix d_xd;  ///< T x n_d
};

/// i = sigmoid(W_i x_s + b_i).
Vector static_gate(const Params& p, std::span<const double> x_s);

/// One step of the recurrence given a precomputed input gate.
std::pair<CellState, StepCache> cell_step(const Params& p, std::span<const double> x_d_t,
                                          const CellState& prev, std::span<const double> i,
                                          long step = 0);

struct ForwardResult {
    double yhat = 0.0;
    ForwardCache cache;
};

/// Runs the whole window from zero state. x_d is T x n_d with T >= 1.
ForwardResult forward(const Params& p, std::span<const double> x_s, const Matrix& x_d);

/// Same computation without keeping the cache; used for plain prediction.
double predict(const Params& p, std::span<const double> x_s, const Matrix& x_d);

/// Reverse pass of forward() for output cotangent d_yhat.
SequenceGrads backward(const ForwardCache& cache, const Params& p, double d_yhat);

/// Only d_xs, skipping parameter gradients. Same arithmetic as backward().
Vector backward_static(const ForwardCache& cache, const Params& p, double d_yhat);

// Parameter-space arithmetic used by the optimizer and batch reductions.

/// acc += scale * g, tensor by tensor in for_each order.
void accumulate(Params& acc, const Params& g, double scale = 1.0);
void scale(Params& p, double factor);
/// Sum of squares over every value, in for_each order.
double squared_norm(const Params& p);
bool all_finite(const Params& p);

}  // namespace hydrosense::ealstm
