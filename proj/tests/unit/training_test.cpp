#include "hydrosense/training.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace hydrosense;
using namespace hydrosense::training;

Date day(const char* s) { return *parse_date(s); }

// Standardized single-basin record whose target is a short linear filter of
// the two forcing columns.
BasinRecord linear_response_basin(std::size_t days, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    BasinRecord b;
    b.id = "lin";
    b.x_s = {0.4, -0.7};
    b.forcing_names = {"u", "v"};
    b.forcing = hydrosense::testing::random_matrix(days, 2, gen);
    b.discharge.resize(days);
    for (std::size_t t = 0; t < days; ++t) {
        double y = 0.6 * b.forcing(t, 0) - 0.3 * b.forcing(t, 1);
        if (t >= 1) y += 0.4 * b.forcing(t - 1, 0);
        if (t >= 2) y += 0.2 * b.forcing(t - 2, 1);
        b.discharge[t] = y;
    }
    b.start = day("2010-01-01");
    b.standardized = true;
    return b;
}

TrainConfig small_config(const BasinRecord& b, std::size_t train_days) {
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.lookback = 30;
    cfg.batch_size = 32;
    cfg.learning_rate = 5e-3;
    cfg.max_epochs = 50;
    cfg.patience = 50;
    cfg.seed = 3;
    cfg.train_range = {b.start, b.date(train_days - 1)};
    cfg.val_range = {b.date(train_days), b.end()};
    return cfg;
}

TEST(MakeWindows, TenDaysLookbackThree) {
    BasinRecord b = linear_response_basin(10, 1);
    const auto w = make_windows(b, 3);
    ASSERT_EQ(w.size(), 8u);
    EXPECT_EQ(format_date(w.front().date), "2010-01-03");
    EXPECT_EQ(format_date(w.back().date), "2010-01-10");
    for (std::size_t k = 0; k < w.size(); ++k) {
        EXPECT_EQ(w[k].row, k + 2);
        EXPECT_EQ(w[k].target, b.discharge[k + 2]);
        // The window ends on the target day.
        EXPECT_EQ(w[k].forcing(2, 0), b.forcing(k + 2, 0));
        EXPECT_EQ(w[k].forcing(0, 1), b.forcing(k, 1));
    }
}

TEST(MakeWindows, FullHistoryRangeGivesOneSamplePerDay) {
    const BasinRecord b = linear_response_basin(100, 2);
    const auto w = make_windows(b, 20, DateRange{b.date(40), b.date(59)});
    EXPECT_EQ(w.size(), 20u);
    for (std::size_t k = 1; k < w.size(); ++k) EXPECT_EQ((w[k].date - w[k - 1].date).count(), 1);
}

TEST(MakeWindows, RangeStartingOnDayLookback) {
    const BasinRecord b = linear_response_basin(100, 2);
    const auto w = make_windows(b, 20, DateRange{b.date(19), b.end()});
    EXPECT_EQ(w.front().date, b.date(19));
    EXPECT_EQ(w.size(), 81u);
}

TEST(MakeWindows, RangeOutsideRecordIsRejected) {
    const BasinRecord b = linear_response_basin(10, 2);
    EXPECT_THROW(make_windows(b, 3, DateRange{b.date(2), b.date(20)}), ContractViolation);
    EXPECT_THROW(make_windows(b, 0), ContractViolation);
}

TEST(MseLoss, ValuesAndDerivative) {
    EXPECT_EQ(mse_loss(1.5, 1.5).value, 0.0);
    EXPECT_EQ(mse_loss(1.5, 1.5).d_yhat, 0.0);
    EXPECT_EQ(mse_loss(3.0, 2.0).value, 1.0);
    EXPECT_EQ(mse_loss(3.0, 2.0).d_yhat, 2.0);
    const double y = 0.3, x = 1.7, h = 1e-6;
    const double fd = (mse_loss(x + h, y).value - mse_loss(x - h, y).value) / (2 * h);
    EXPECT_LT(std::abs(fd - mse_loss(x, y).d_yhat) / std::abs(fd), 1e-9);
}

TEST(Nse, DefinitionalCases) {
    const Vector y{1.0, 4.0, 2.0, 7.0};
    EXPECT_EQ(nse(y, y), 1.0);
    EXPECT_NEAR(nse(Vector(4, mean(y)), y), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(nse(Vector{1, 2, 4}, Vector{1, 2, 3}), 0.5);
    EXPECT_THROW(nse(Vector{1, 2}, Vector{3, 3}), ContractViolation);
}

TEST(Adam, ZeroGradientFromFreshStateLeavesParameters) {
    auto p = hydrosense::testing::random_params(4, 2, 2, 8);
    const auto before = p;
    Adam adam(p, AdamConfig{0.1});
    adam.step(p, ealstm::Params::zeros(4, 2, 2));
    EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesEachEntryByTheLearningRate) {
    // With bias correction the first update is lr * g / (|g| + eps).
    auto p = ealstm::Params::zeros(2, 1, 1);
    auto g = hydrosense::testing::random_params(2, 1, 1, 4);
    Adam adam(p, AdamConfig{0.01});
    adam.step(p, g);
    std::vector<double> gv;
    g.for_each([&](std::string_view, std::span<const double> v) { gv.insert(gv.end(), v.begin(), v.end()); });
    std::size_t k = 0;
    p.for_each([&](std::string_view, std::span<const double> v) {
        for (double x : v) {
            EXPECT_NEAR(x, -0.01 * gv[k] / (std::abs(gv[k]) + 1e-8), 1e-15);
            ++k;
        }
    });
}

TEST(Clipping, PostClipNormIsBounded) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = hydrosense::testing::random_params(5, 3, 2, seed, 4.0);
        const double pre = std::sqrt(ealstm::squared_norm(g));
        EXPECT_EQ(clip_global_norm(g, 1.0), pre);
        EXPECT_LE(std::sqrt(ealstm::squared_norm(g)), 1.0 + 1e-12);
    }
    auto small = hydrosense::testing::random_params(2, 1, 1, 1, 1e-3);
    const auto keep = small;
    clip_global_norm(small, 1.0);
    EXPECT_EQ(small, keep);
}

TEST(TrainConfigCheck, RejectsOverlapAndZeros) {
    const BasinRecord b = linear_response_basin(400, 1);
    auto cfg = small_config(b, 300);
    EXPECT_NO_THROW(cfg.validate());
    cfg.val_range.first = b.date(250);
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = small_config(b, 300);
    cfg.hidden = 0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
}

TEST(Train, ZeroLearningRateLeavesParametersBitwiseUnchanged) {
    const std::vector<BasinRecord> basins{linear_response_basin(200, 5)};
    auto cfg = small_config(basins[0], 150);
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 3;
    const auto res = train(cfg, basins);
    EXPECT_EQ(res.params, ealstm::init_params(8, 2, 2, cfg.seed));
    EXPECT_EQ(res.log.size(), 4u);
}

TEST(Train, ZeroEpochsReturnsTheInitialization) {
    const std::vector<BasinRecord> basins{linear_response_basin(200, 5)};
    auto cfg = small_config(basins[0], 150);
    cfg.max_epochs = 0;
    const auto res = train(cfg, basins);
    EXPECT_EQ(res.params, ealstm::init_params(8, 2, 2, cfg.seed));
    ASSERT_EQ(res.log.size(), 1u);
    EXPECT_EQ(res.best_epoch, 0u);
}

TEST(Train, SameConfigGivesIdenticalLogsAndParameters) {
    const std::vector<BasinRecord> basins{linear_response_basin(200, 6)};
    auto cfg = small_config(basins[0], 150);
    cfg.max_epochs = 4;
    const auto a = train(cfg, basins);
    const auto b = train(cfg, basins);
    EXPECT_EQ(a.params, b.params);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t k = 0; k < a.log.size(); ++k) {
        EXPECT_EQ(a.log[k].train_loss, b.log[k].train_loss);
        EXPECT_EQ(a.log[k].val_loss, b.log[k].val_loss);
        EXPECT_EQ(a.log[k].grad_norm, b.log[k].grad_norm);
    }
}

TEST(Train, ThreadCountDoesNotChangeTheResult) {
    const std::vector<BasinRecord> basins{linear_response_basin(200, 6)};
    auto cfg = small_config(basins[0], 150);
    cfg.max_epochs = 3;
    EXPECT_EQ(train(cfg, basins, 1).params, train(cfg, basins, 4).params);
}

TEST(Train, LinearResponseValidationLossHalvesWithinFiftyEpochs) {
    const std::vector<BasinRecord> basins{linear_response_basin(600, 7)};
    const auto cfg = small_config(basins[0], 400);
    const auto res = train(cfg, basins);
    double best = res.log.front().val_loss;
    for (const auto& e : res.log) best = std::min(best, e.val_loss);
    EXPECT_LE(best, 0.5 * res.log.front().val_loss)
        << "epoch 0 " << res.log.front().val_loss << " best " << best;
}

TEST(Train, ReturnsParametersOfTheBestValidationEpoch) {
    const std::vector<BasinRecord> basins{linear_response_basin(300, 9)};
    auto cfg = small_config(basins[0], 220);
    cfg.max_epochs = 12;
    cfg.patience = 3;
    cfg.learning_rate = 0.05;  // large enough that validation loss fluctuates
    const auto res = train(cfg, basins);
    double best = res.log.front().val_loss;
    std::size_t best_epoch = 0;
    for (const auto& e : res.log)
        if (e.val_loss < best) {
            best = e.val_loss;
            best_epoch = e.epoch;
        }
    EXPECT_EQ(res.best_epoch, best_epoch);
    const auto val = make_windows(basins[0], cfg.lookback, cfg.val_range);
    EXPECT_EQ(mean_loss(res.params, val), best);
}

TEST(Train, UnstandardizedInputIsRejected) {
    std::vector<BasinRecord> basins{linear_response_basin(200, 5)};
    basins[0].standardized = false;
    EXPECT_THROW(train(small_config(basins[0], 150), basins), ContractViolation);
}

TEST(EvaluateNse, PerfectPredictionScoresOneOnRawScale) {
    // A zero network with head bias b predicts b everywhere; a constant target
    // equal to b is then perfect but has zero variance, so use a two-level target.
    BasinRecord b = linear_response_basin(60, 3);
    Standardizer s;
    s.discharge = {2.0, 3.0};
    auto p = ealstm::Params::zeros(4, 2, 2);
    p.head_b = 0.25;
    for (std::size_t t = 0; t < b.days(); ++t) b.discharge[t] = 0.25;
    b.discharge[b.days() - 1] = 1.25;
    // Predictions equal the target everywhere except the last day: raw errors
    // are 3 * (1.25 - 0.25) = 3 on one day.
    const double got = evaluate_nse(p, b, 10, std::nullopt, s);
    Vector y(51, 2.0 + 3.0 * 0.25);
    y.back() = 2.0 + 3.0 * 1.25;
    const double ybar = mean(y);
    double den = 0.0;
    for (double v : y) den += (v - ybar) * (v - ybar);
    EXPECT_NEAR(got, 1.0 - 9.0 / den, 1e-12);
}

TEST(LogCsv, HeaderAndRows) {
    std::vector<EpochLog> log(2);
    log[1].epoch = 1;
    log[1].train_loss = 0.5;
    const auto csv = format_log_csv(log);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_loss,grad_norm");
    EXPECT_NE(csv.find("\n1,0.5,0,0\n"), std::string::npos) << csv;
}

}  // namespace
