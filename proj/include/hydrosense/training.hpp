/**
 * @file training.hpp
 * @brief Window assembly, MSE loss, Adam with global-norm clipping,
 *        early stopping on validation loss, and NSE.
 */

#pragma once

#include "hydrosense/dataio.hpp"
#include "hydrosense/ealstm.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hydrosense::training {

/// One sequence-to-one example. The target is the discharge on the window's last day.
struct Sample {
    std::string basin_id;
    Matrix forcing;  ///< lookback x n_d, standardized
    Vector x_s;      ///< standardized
    double target = 0.0;
    Date date;       ///< target date
    std::size_t row = 0;  ///< target row in the basin record
};

/**
 * One sample per day in `range` that has at least lookback-1 preceding days
 * in the record, in chronological order. The range must lie inside the
 * record; pass nullopt to use the whole record.
 */
std::vector<Sample> make_windows(const BasinRecord& basin, std::size_t lookback,
                                 std::optional<DateRange> range = std::nullopt);

struct Loss {
    double value = 0.0;
    double d_yhat = 0.0;
};

/// (yhat - y)^2 and its derivative 2 (yhat - y).
Loss mse_loss(double yhat, double y);

struct TrainConfig {
    std::size_t hidden = 32;
    std::size_t lookback = 365;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::size_t max_epochs = 30;
    std::size_t patience = 10;
    double clip_norm = 1.0;
    std::uint64_t seed = 1;
    DateRange train_range{};
    DateRange val_range{};

    /// Throws ContractViolation naming the offending field.
    void validate() const;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const ealstm::Params& like, AdamConfig cfg);
    /// One bias-corrected update of params with gradient g.
    void step(ealstm::Params& params, const ealstm::Params& g);
    std::size_t steps() const { return t_; }

private:
    AdamConfig cfg_;
    ealstm::Params m_, v_;
    std::size_t t_ = 0;
};

/// Rescales g so its global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(ealstm::Params& g, double max_norm);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double grad_norm = 0.0;  ///< mean pre-clip norm over the epoch's batches
    double wall_seconds = 0.0;
};

struct TrainResult {
    ealstm::Params params;     ///< parameters of the best validation epoch
    std::vector<EpochLog> log; ///< epoch 0 is the initialization
    std::size_t best_epoch = 0;
};

class TrainingFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Trains on standardized basins. Epoch 0 evaluates the initialization;
 * each later epoch shuffles the pooled training windows (seeded), runs
 * minibatch Adam with clipping and keeps the parameters of the best
 * validation loss. Stops after `patience` epochs without improvement.
 */
TrainResult train(const TrainConfig& cfg, std::span<const BasinRecord> basins, int threads = 1,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Mean squared error over samples.
double mean_loss(const ealstm::Params& p, std::span<const Sample> samples, int threads = 1);

/// 1 - sum (yhat-y)^2 / sum (y-mean y)^2. Throws when y is constant.
double nse(std::span<const double> yhat, std::span<const double> y);

/// NSE on de-standardized discharge of a standardized basin over a date range.
double evaluate_nse(const ealstm::Params& p, const BasinRecord& basin, std::size_t lookback,
                    std::optional<DateRange> range, const Standardizer& standardizer,
                    int threads = 1);

std::string format_log_csv(std::span<const EpochLog> log);

}  // namespace hydrosense::training
