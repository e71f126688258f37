/**
 * @file kernels.hpp
 * @brief Data-parallel loops over independent windows.
 *
 * Each kernel has a serial reference and an OpenMP version. The OpenMP
 * versions compute per-window results into private slots and reduce them
 * in window order on one thread, so their output is bitwise identical to
 * the serial reference for any thread count. Tests assert exactly that.
 */

#pragma once

#include "hydrosense/ealstm.hpp"
#include "hydrosense/training.hpp"

#include <span>

namespace hydrosense::kernels {

struct BatchGradient {
    ealstm::Params grad;    ///< mean over the batch
    double loss_sum = 0.0;  ///< sum of per-sample MSE
};

/// Mean MSE gradient over samples[idx[0..n)], accumulated in idx order.
BatchGradient batch_gradient_serial(const ealstm::Params& p, std::span<const training::Sample> samples,
                                    std::span<const std::size_t> idx);
BatchGradient batch_gradient_omp(const ealstm::Params& p, std::span<const training::Sample> samples,
                                 std::span<const std::size_t> idx, int threads);

Vector predict_serial(const ealstm::Params& p, std::span<const training::Sample> samples);
Vector predict_omp(const ealstm::Params& p, std::span<const training::Sample> samples, int threads);

/// Row d = d yhat / d x_s for the window of samples[d].
Matrix static_gradients_serial(const ealstm::Params& p, std::span<const training::Sample> samples);
Matrix static_gradients_omp(const ealstm::Params& p, std::span<const training::Sample> samples,
                            int threads);

/// Dispatch: threads <= 1 runs the serial reference.
BatchGradient batch_gradient(const ealstm::Params& p, std::span<const training::Sample> samples,
                             std::span<const std::size_t> idx, int threads);
Vector predict(const ealstm::Params& p, std::span<const training::Sample> samples, int threads);
Matrix static_gradients(const ealstm::Params& p, std::span<const training::Sample> samples,
                        int threads);

}  // namespace hydrosense::kernels
