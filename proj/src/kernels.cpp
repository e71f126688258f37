#include "hydrosense/kernels.hpp"

#include <exception>

namespace hydrosense::kernels {

using ealstm::Params;
using training::Sample;

namespace {

struct SampleGrad {
    Params grad;
    double loss = 0.0;
};

SampleGrad sample_gradient(const Params& p, const Sample& s) {
    auto fwd = ealstm::forward(p, s.x_s, s.forcing);
    const auto loss = training::mse_loss(fwd.yhat, s.target);
    auto g = ealstm::backward(fwd.cache, p, loss.d_yhat);
    return {std::move(g.d_params), loss.value};
}

/// Per-index exception slots so the lowest failing window is reported,
/// independent of thread scheduling.
class IndexedErrors {
public:
    explicit IndexedErrors(std::size_t n) : errs_(n) {}
    void capture(long k) { errs_[static_cast<std::size_t>(k)] = std::current_exception(); }
    void rethrow() const {
        for (const auto& e : errs_)
            if (e) std::rethrow_exception(e);
    }

private:
    std::vector<std::exception_ptr> errs_;
};

long as_long(std::size_t n) { return static_cast<long>(n); }

}  // namespace

BatchGradient batch_gradient_serial(const Params& p, std::span<const Sample> samples,
                                    std::span<const std::size_t> idx) {
    if (idx.empty()) throw ContractViolation("batch_gradient: empty batch");
    BatchGradient out{Params::zeros(p.hidden, p.n_static, p.n_dynamic), 0.0};
    for (std::size_t k : idx) {
        const auto sg = sample_gradient(p, samples[k]);
        ealstm::accumulate(out.grad, sg.grad);
        out.loss_sum += sg.loss;
    }
    ealstm::scale(out.grad, 1.0 / static_cast<double>(idx.size()));
    return out;
}

BatchGradient batch_gradient_omp(const Params& p, std::span<const Sample> samples,
                                 std::span<const std::size_t> idx, int threads) {
    if (idx.empty()) throw ContractViolation("batch_gradient: empty batch");
    std::vector<SampleGrad> slots(idx.size());
    IndexedErrors err(idx.size());
#pragma omp parallel for num_threads(threads) schedule(static)
    for (long k = 0; k < as_long(idx.size()); ++k) {
        try {
            slots[k] = sample_gradient(p, samples[idx[k]]);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    BatchGradient out{Params::zeros(p.hidden, p.n_static, p.n_dynamic), 0.0};
    for (const auto& sg : slots) {
        ealstm::accumulate(out.grad, sg.grad);
        out.loss_sum += sg.loss;
    }
    ealstm::scale(out.grad, 1.0 / static_cast<double>(idx.size()));
    return out;
}

Vector predict_serial(const Params& p, std::span<const Sample> samples) {
    Vector out(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k)
        out[k] = ealstm::predict(p, samples[k].x_s, samples[k].forcing);
    return out;
}

Vector predict_omp(const Params& p, std::span<const Sample> samples, int threads) {
    Vector out(samples.size());
    IndexedErrors err(samples.size());
#pragma omp parallel for num_threads(threads) schedule(static)
    for (long k = 0; k < as_long(samples.size()); ++k) {
        try {
            out[k] = ealstm::predict(p, samples[k].x_s, samples[k].forcing);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    return out;
}

namespace {

void static_row(const Params& p, const Sample& s, std::span<double> row) {
    try {
        const auto fwd = ealstm::forward(p, s.x_s, s.forcing);
        const Vector d = ealstm::backward_static(fwd.cache, p, 1.0);
        std::copy(d.begin(), d.end(), row.begin());
    } catch (const NumericFault& e) {
        throw NumericFault(std::string(e.what()) + " in window ending " + format_date(s.date) +
                               " of basin '" + s.basin_id + "'",
                           e.step());
    }
}

}  // namespace

Matrix static_gradients_serial(const Params& p, std::span<const Sample> samples) {
    Matrix out(samples.size(), p.n_static);
    for (std::size_t d = 0; d < samples.size(); ++d) static_row(p, samples[d], out.row(d));
    return out;
}

Matrix static_gradients_omp(const Params& p, std::span<const Sample> samples, int threads) {
    Matrix out(samples.size(), p.n_static);
    IndexedErrors err(samples.size());
#pragma omp parallel for num_threads(threads) schedule(static)
    for (long d = 0; d < as_long(samples.size()); ++d) {
        try {
            static_row(p, samples[d], out.row(d));
        } catch (...) {
            err.capture(d);
        }
    }
    err.rethrow();
    return out;
}

BatchGradient batch_gradient(const Params& p, std::span<const Sample> samples,
                             std::span<const std::size_t> idx, int threads) {
    return threads <= 1 ? batch_gradient_serial(p, samples, idx)
                        : batch_gradient_omp(p, samples, idx, threads);
}

Vector predict(const Params& p, std::span<const Sample> samples, int threads) {
    return threads <= 1 ? predict_serial(p, samples) : predict_omp(p, samples, threads);
}

Matrix static_gradients(const Params& p, std::span<const Sample> samples, int threads) {
    return threads <= 1 ? static_gradients_serial(p, samples)
                        : static_gradients_omp(p, samples, threads);
}

}  // namespace hydrosense::kernels
