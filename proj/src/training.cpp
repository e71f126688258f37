#include "hydrosense/training.hpp"

#include "hydrosense/kernels.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace hydrosense::training {

using ealstm::Params;

std::vector<Sample> make_windows(const BasinRecord& basin, std::size_t lookback,
                                 std::optional<DateRange> range) {
    if (lookback == 0) throw ContractViolation("make_windows: lookback must be >= 1");
    if (basin.days() == 0) throw ContractViolation("make_windows: empty basin record");
    const DateRange r = range.value_or(basin.range());
    if (r.last < r.first) throw ContractViolation("make_windows: range end precedes start");
    if (!basin.row_of(r.first) || !basin.row_of(r.last))
        throw ContractViolation("make_windows: range " + format_date(r.first) + ".." +
                                format_date(r.last) + " is not inside the record of basin '" +
                                basin.id + "'");
    const std::size_t first = std::max(*basin.row_of(r.first), lookback - 1);
    const std::size_t last = *basin.row_of(r.last);
    const std::size_t nd = basin.forcing.cols();

    std::vector<Sample> out;
    for (std::size_t row = first; row <= last; ++row) {
        Sample s;
        s.basin_id = basin.id;
        s.forcing = Matrix(lookback, nd);
        for (std::size_t t = 0; t < lookback; ++t) {
            const auto src = basin.forcing.row(row + 1 - lookback + t);
            std::copy(src.begin(), src.end(), s.forcing.row(t).begin());
        }
        s.x_s = basin.x_s;
        s.target = basin.discharge[row];
        s.date = basin.date(row);
        s.row = row;
        out.push_back(std::move(s));
    }
    return out;
}

Loss mse_loss(double yhat, double y) {
    const double r = yhat - y;
    return {r * r, 2.0 * r};
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ContractViolation("train config: " + field + " " + why);
    };
    if (hidden == 0) fail("hidden", "must be > 0");
    if (lookback == 0) fail("lookback", "must be > 0");
    if (batch_size == 0) fail("batch_size", "must be > 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        fail("learning_rate", "must be finite and >= 0");
    if (patience == 0) fail("patience", "must be > 0");
    if (!(clip_norm > 0.0)) fail("clip_norm", "must be > 0");
    if (train_range.last < train_range.first) fail("train_end", "precedes train_start");
    if (val_range.last < val_range.first) fail("val_end", "precedes val_start");
    if (train_range.first <= val_range.last && val_range.first <= train_range.last)
        fail("val_start", "validation range overlaps the training range");
}

Adam::Adam(const Params& like, AdamConfig cfg)
    : cfg_(cfg),
      m_(Params::zeros(like.hidden, like.n_static, like.n_dynamic)),
      v_(Params::zeros(like.hidden, like.n_static, like.n_dynamic)) {}

void Adam::step(Params& params, const Params& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    std::vector<std::span<double>> m, v;
    std::vector<std::span<const double>> gs;
    m_.for_each([&](std::string_view, std::span<double> t) { m.push_back(t); });
    v_.for_each([&](std::string_view, std::span<double> t) { v.push_back(t); });
    g.for_each([&](std::string_view, std::span<const double> t) { gs.push_back(t); });
    std::size_t idx = 0;
    params.for_each([&](std::string_view, std::span<double> p) {
        auto& mt = m[idx];
        auto& vt = v[idx];
        const auto& gt = gs[idx];
        ++idx;
        for (std::size_t k = 0; k < p.size(); ++k) {
            mt[k] = cfg_.beta1 * mt[k] + (1.0 - cfg_.beta1) * gt[k];
            vt[k] = cfg_.beta2 * vt[k] + (1.0 - cfg_.beta2) * gt[k] * gt[k];
            const double mhat = mt[k] / bc1;
            const double vhat = vt[k] / bc2;
            p[k] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    });
}

double clip_global_norm(Params& g, double max_norm) {
    const double norm = std::sqrt(ealstm::squared_norm(g));
    if (norm > max_norm) ealstm::scale(g, max_norm / norm);
    return norm;
}

double mean_loss(const Params& p, std::span<const Sample> samples, int threads) {
    if (samples.empty()) throw ContractViolation("mean_loss: no samples");
    const Vector yhat = kernels::predict(p, samples, threads);
    double acc = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) acc += mse_loss(yhat[k], samples[k].target).value;
    return acc / static_cast<double>(samples.size());
}

namespace {

std::vector<Sample> pooled_windows(std::span<const BasinRecord> basins, std::size_t lookback,
                                   DateRange range) {
    std::vector<Sample> out;
    for (const auto& b : basins) {
        if (!b.standardized)
            throw ContractViolation("train: basin '" + b.id + "' is not standardized");
        // Clip the range to the record; basins may start or end at different dates.
        const Date first = std::max(range.first, b.start);
        const Date last = std::min(range.last, b.end());
        if (last < first) continue;
        auto w = make_windows(b, lookback, DateRange{first, last});
        std::move(w.begin(), w.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, std::span<const BasinRecord> basins, int threads,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    if (basins.empty()) throw ContractViolation("train: no basins");
    const std::size_t ns = basins.front().x_s.size();
    const std::size_t nd = basins.front().forcing.cols();
    for (const auto& b : basins)
        if (b.x_s.size() != ns || b.forcing.cols() != nd)
            throw ContractViolation("train: basin '" + b.id + "' has inconsistent feature counts");

    const auto train_set = pooled_windows(basins, cfg.lookback, cfg.train_range);
    const auto val_set = pooled_windows(basins, cfg.lookback, cfg.val_range);
    if (train_set.empty()) throw ContractViolation("train: no training windows in train range");
    if (val_set.empty()) throw ContractViolation("train: no validation windows in val range");

    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

    TrainResult res;
    Params params = ealstm::init_params(cfg.hidden, ns, nd, cfg.seed);
    Adam adam(params, AdamConfig{cfg.learning_rate});

    EpochLog e0;
    e0.epoch = 0;
    e0.train_loss = mean_loss(params, train_set, threads);
    e0.val_loss = mean_loss(params, val_set, threads);
    e0.wall_seconds = elapsed();
    res.log.push_back(e0);
    if (on_epoch) on_epoch(e0);
    res.params = params;
    res.best_epoch = 0;
    double best_val = e0.val_loss;
    std::size_t stale = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(mix_seed(cfg.seed, 0x5EED0000ULL + epoch));
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);

        double loss_sum = 0.0, norm_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const std::string where =
                "epoch " + std::to_string(epoch) + " batch " + std::to_string(batches);
            try {
                auto bg = kernels::batch_gradient(params, train_set, idx, threads);
                norm_sum += clip_global_norm(bg.grad, cfg.clip_norm);
                loss_sum += bg.loss_sum;
                adam.step(params, bg.grad);
            } catch (const NumericFault& e) {
                throw TrainingFault(where + ": " + e.what());
            }
            if (!ealstm::all_finite(params))
                throw TrainingFault(where + ": non-finite parameters after update");
            ++batches;
        }

        EpochLog e;
        e.epoch = epoch;
        e.train_loss = loss_sum / static_cast<double>(train_set.size());
        try {
            e.val_loss = mean_loss(params, val_set, threads);
        } catch (const NumericFault& err) {
            throw TrainingFault("epoch " + std::to_string(epoch) + " validation: " + err.what());
        }
        e.grad_norm = norm_sum / static_cast<double>(batches);
        e.wall_seconds = elapsed();
        res.log.push_back(e);
        if (on_epoch) on_epoch(e);

        if (e.val_loss < best_val) {
            best_val = e.val_loss;
            res.params = params;
            res.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    return res;
}

double nse(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size()) throw ContractViolation("nse: length mismatch");
    if (y.empty()) throw ContractViolation("nse: empty series");
    const double ybar = mean(y);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        num += (yhat[k] - y[k]) * (yhat[k] - y[k]);
        den += (y[k] - ybar) * (y[k] - ybar);
    }
    if (!(den > 0.0)) throw ContractViolation("nse: observed series is constant");
    return 1.0 - num / den;
}

double evaluate_nse(const Params& p, const BasinRecord& basin, std::size_t lookback,
                    std::optional<DateRange> range, const Standardizer& standardizer,
                    int threads) {
    if (!basin.standardized)
        throw ContractViolation("evaluate_nse: basin '" + basin.id + "' is not standardized");
    const auto samples = make_windows(basin, lookback, range);
    if (samples.empty()) throw ContractViolation("evaluate_nse: no windows in range");
    const Vector pred = kernels::predict(p, samples, threads);
    Vector yhat(samples.size()), y(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        yhat[k] = standardizer.to_discharge(pred[k]);
        y[k] = standardizer.to_discharge(samples[k].target);
    }
    return nse(yhat, y);
}

std::string format_log_csv(std::span<const EpochLog> log) {
    // Wall time stays out of this file so reruns are byte-identical.
    std::string out = "epoch,train_loss,val_loss,grad_norm\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
               format_double(e.val_loss) + "," + format_double(e.grad_norm) + "\n";
    }
    return out;
}

}  // namespace hydrosense::training
