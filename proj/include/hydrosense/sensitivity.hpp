/**
 * @file sensitivity.hpp
 * @brief Ranks static features by their influence on simulated streamflow
 *        during low-flow and high-flow days.
 *
 * Per basin:
 *   1. q05/q95 of observed discharge over the prediction days (type-7
 *      quantiles: linear interpolation at position (D-1)*p of the sorted
 *      values, 0-indexed).
 *   2. low = discharge < q05, high = discharge > q95 (strict).
 *   3. d yhat / d x_s for the window ending on each prediction day, with
 *      respect to the standardized static features.
 *   4. mean of |gradient| over the days of each regime.
 *   5. min-max normalization to [0,1] within the basin.
 *   6. descending ranking, ties broken by lower catalog index.
 *
 * Degenerate outcomes (too few days, constant discharge, empty mask,
 * constant sensitivity vector) are recorded and the basin is excluded from
 * that regime's cohort summary.
 */

#pragma once

#include "hydrosense/checkpoint.hpp"
#include "hydrosense/dataio.hpp"
#include "hydrosense/ealstm.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hydrosense::sensitivity {

inline constexpr std::size_t kMinDays = 40;

enum class Regime { low, high };
std::string_view regime_name(Regime r);

class DegenerateBasin : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Percentiles {
    double q05 = 0.0;
    double q95 = 0.0;
};

/// Type-7 empirical quantile of unsorted values at probability p in [0,1].
double quantile_type7(std::span<const double> values, double p);

/// Throws DegenerateBasin when D < kMinDays or q05 == q95.
Percentiles flow_percentiles(std::span<const double> discharge);

struct FlowPeriodMask {
    double q05 = 0.0;
    double q95 = 0.0;
    std::vector<bool> low;
    std::vector<bool> high;

    std::size_t count(Regime r) const;
};

FlowPeriodMask flow_masks(std::span<const double> discharge, double q05, double q95);

/// out[k] = mean over masked rows d of |grads(d, k)|. Throws DegenerateBasin on an empty mask.
Vector aggregate_sensitivity(const Matrix& grads, const std::vector<bool>& mask);

struct Normalized {
    Vector values;
    bool degenerate = false;  ///< max == min; values are all zero
};

Normalized normalize_unit(std::span<const double> v);

/// Indices sorted by value descending; equal values keep lower index first.
std::vector<std::size_t> rank_descending(std::span<const double> v);

struct SensitivityReport {
    std::string basin_id;
    Regime regime = Regime::low;
    Vector raw_mean_abs_grad;
    Vector normalized;
    std::vector<std::size_t> ranking;
    std::string top_feature;
    FeatureGroup top_group = FeatureGroup::climate;
    bool degenerate = false;
    std::size_t days = 0;  ///< days in the regime mask
};

/// Fills normalized/ranking/top_* from raw_mean_abs_grad.
void rank_and_group(SensitivityReport& report, const FeatureCatalog& catalog);

struct DailyGradients {
    std::vector<Date> dates;
    Vector observed;  ///< raw observed discharge on each date (mm/day)
    Matrix grads;     ///< D x n_s
};

/**
 * Gradient of each day's simulated streamflow w.r.t. the standardized
 * static features. `basin` must be standardized; observed discharge is
 * reported in physical units via the standardizer.
 */
DailyGradients daily_static_gradients(const ealstm::Params& params, const BasinRecord& basin,
                                      std::size_t lookback, std::optional<DateRange> range,
                                      const Standardizer& standardizer, int threads = 1);

struct Exclusion {
    std::string basin_id;
    Regime regime;
    std::string reason;
};

struct CohortRow {
    std::size_t feature = 0;
    double mean_normalized = 0.0;
    std::size_t rank = 0;  ///< 1-based
};

struct CohortSummary {
    /// Per regime: one row per feature, ordered by rank.
    std::vector<CohortRow> low;
    std::vector<CohortRow> high;
    std::size_t low_basins = 0;
    std::size_t high_basins = 0;
    /// Per regime, count of basins whose top feature belongs to each group (indexed by group).
    std::array<std::size_t, 4> low_groups{};
    std::array<std::size_t, 4> high_groups{};

    const std::vector<CohortRow>& rows(Regime r) const { return r == Regime::low ? low : high; }
};

struct PipelineResult {
    std::vector<SensitivityReport> reports;  ///< two per basin (low, high), basin order
    std::vector<Exclusion> excluded;
    CohortSummary summary;
};

/// Mean normalized vector across non-degenerate reports, ranked per regime.
CohortSummary summarize(std::span<const SensitivityReport> reports, std::size_t n_features);

/**
 * Runs the full pipeline on raw (unstandardized) basins using the
 * checkpoint's standardizer. `range` limits the prediction days; nullopt
 * uses every day with a full lookback window.
 */
PipelineResult run_pipeline(const ealstm::Params& params, std::size_t lookback,
                            std::span<const BasinRecord> basins, const Standardizer& standardizer,
                            const FeatureCatalog& catalog, std::optional<DateRange> range = std::nullopt,
                            int threads = 1);

// CSV emitters (documented in docs/formats.md).
std::string format_report_csv(std::span<const SensitivityReport> reports, const FeatureCatalog& catalog);
std::string format_summary_csv(const CohortSummary& summary, const FeatureCatalog& catalog);
std::string format_top_group_csv(std::span<const SensitivityReport> reports);
std::string format_excluded_csv(std::span<const Exclusion> excluded);

}  // namespace hydrosense::sensitivity
