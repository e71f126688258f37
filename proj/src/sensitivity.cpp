#include "hydrosense/sensitivity.hpp"

#include "hydrosense/kernels.hpp"
#include "hydrosense/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hydrosense::sensitivity {

std::string_view regime_name(Regime r) { return r == Regime::low ? "low" : "high"; }

double quantile_type7(std::span<const double> values, double p) {
    if (values.empty()) throw ContractViolation("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("quantile: p outside [0,1]");
    Vector sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Percentiles flow_percentiles(std::span<const double> discharge) {
    if (discharge.size() < kMinDays)
        throw DegenerateBasin("only " + std::to_string(discharge.size()) +
                              " prediction days, need at least " + std::to_string(kMinDays));
    Percentiles p{quantile_type7(discharge, 0.05), quantile_type7(discharge, 0.95)};
    if (!(p.q05 < p.q95))
        throw DegenerateBasin("degenerate discharge distribution (q05 == q95 == " +
                              format_double(p.q05) + ")");
    return p;
}

std::size_t FlowPeriodMask::count(Regime r) const {
    const auto& m = r == Regime::low ? low : high;
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

FlowPeriodMask flow_masks(std::span<const double> discharge, double q05, double q95) {
    FlowPeriodMask m{q05, q95, std::vector<bool>(discharge.size()),
                     std::vector<bool>(discharge.size())};
    for (std::size_t d = 0; d < discharge.size(); ++d) {
        m.low[d] = discharge[d] < q05;
        m.high[d] = discharge[d] > q95;
    }
    return m;
}

Vector aggregate_sensitivity(const Matrix& grads, const std::vector<bool>& mask) {
    if (mask.size() != grads.rows()) throw ContractViolation("aggregate: mask length != rows");
    Vector out(grads.cols(), 0.0);
    std::size_t n = 0;
    for (std::size_t d = 0; d < grads.rows(); ++d) {
        if (!mask[d]) continue;
        ++n;
        for (std::size_t k = 0; k < grads.cols(); ++k) out[k] += std::abs(grads(d, k));
    }
    if (n == 0) throw DegenerateBasin("empty flow-period mask");
    for (auto& v : out) v /= static_cast<double>(n);
    return out;
}

Normalized normalize_unit(std::span<const double> v) {
    if (v.empty()) throw ContractViolation("normalize_unit: empty vector");
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    Normalized out{Vector(v.size(), 0.0), false};
    const double lo = *mn, span = *mx - *mn;
    if (!(span > 0.0)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t k = 0; k < v.size(); ++k) out.values[k] = (v[k] - lo) / span;
    // The maximum maps to (mx-lo)/span, which is exactly 1 in IEEE arithmetic.
    return out;
}

std::vector<std::size_t> rank_descending(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

void rank_and_group(SensitivityReport& report, const FeatureCatalog& catalog) {
    if (report.raw_mean_abs_grad.size() != catalog.size())
        throw ContractViolation("rank_and_group: vector length != catalog size");
    const auto n = normalize_unit(report.raw_mean_abs_grad);
    report.normalized = n.values;
    report.degenerate = n.degenerate;
    report.ranking = rank_descending(report.normalized);
    const auto& top = catalog[report.ranking.front()];
    report.top_feature = top.name;
    report.top_group = top.group;
}

DailyGradients daily_static_gradients(const ealstm::Params& params, const BasinRecord& basin,
                                      std::size_t lookback, std::optional<DateRange> range,
                                      const Standardizer& standardizer, int threads) {
    if (!basin.standardized)
        throw ContractViolation("daily_static_gradients: basin '" + basin.id +
                                "' is not standardized");
    if (basin.x_s.size() != params.n_static)
        throw ContractViolation("daily_static_gradients: basin static size != params");
    const auto samples = training::make_windows(basin, lookback, range);
    DailyGradients out;
    out.grads = kernels::static_gradients(params, samples, threads);
    for (const auto& s : samples) {
        out.dates.push_back(s.date);
        out.observed.push_back(standardizer.to_discharge(s.target));
    }
    return out;
}

CohortSummary summarize(std::span<const SensitivityReport> reports, std::size_t n_features) {
    CohortSummary s;
    for (Regime r : {Regime::low, Regime::high}) {
        Vector acc(n_features, 0.0);
        std::size_t n = 0;
        auto& groups = r == Regime::low ? s.low_groups : s.high_groups;
        for (const auto& rep : reports) {
            if (rep.regime != r || rep.degenerate) continue;
            if (rep.normalized.size() != n_features)
                throw ContractViolation("summarize: report length != feature count");
            for (std::size_t k = 0; k < n_features; ++k) acc[k] += rep.normalized[k];
            ++groups[static_cast<std::size_t>(rep.top_group)];
            ++n;
        }
        auto& rows = r == Regime::low ? s.low : s.high;
        (r == Regime::low ? s.low_basins : s.high_basins) = n;
        if (n == 0) continue;
        for (auto& v : acc) v /= static_cast<double>(n);
        const auto order = rank_descending(acc);
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rows.push_back({order[pos], acc[order[pos]], pos + 1});
    }
    return s;
}

PipelineResult run_pipeline(const ealstm::Params& params, std::size_t lookback,
                            std::span<const BasinRecord> basins, const Standardizer& standardizer,
                            const FeatureCatalog& catalog, std::optional<DateRange> range,
                            int threads) {
    if (catalog.size() != params.n_static)
        throw ContractViolation("run_pipeline: catalog size != model static inputs");
    PipelineResult res;
    for (const auto& raw : basins) {
        const BasinRecord basin = apply(standardizer, raw);
        // Clip the requested range to the record.
        std::optional<DateRange> r = range;
        if (r) {
            r->first = std::max(r->first, basin.start);
            r->last = std::min(r->last, basin.end());
        }
        DailyGradients dg;
        FlowPeriodMask mask;
        try {
            if (r && r->last < r->first) throw DegenerateBasin("no days inside the requested range");
            dg = daily_static_gradients(params, basin, lookback, r, standardizer, threads);
            // Thresholds come from the raw observed series, not the round-tripped one.
            Vector observed(dg.dates.size());
            for (std::size_t d = 0; d < dg.dates.size(); ++d) observed[d] = raw.discharge[*raw.row_of(dg.dates[d])];
            dg.observed = observed;
            const auto q = flow_percentiles(dg.observed);
            mask = flow_masks(dg.observed, q.q05, q.q95);
        } catch (const DegenerateBasin& e) {
            for (Regime rg : {Regime::low, Regime::high}) res.excluded.push_back({raw.id, rg, e.what()});
            continue;
        }
        for (Regime rg : {Regime::low, Regime::high}) {
            SensitivityReport rep;
            rep.basin_id = raw.id;
            rep.regime = rg;
            rep.days = mask.count(rg);
            try {
                rep.raw_mean_abs_grad = aggregate_sensitivity(dg.grads, rg == Regime::low ? mask.low : mask.high);
            } catch (const DegenerateBasin& e) {
                res.excluded.push_back({raw.id, rg, e.what()});
                continue;
            }
            rank_and_group(rep, catalog);
            if (rep.degenerate)
                res.excluded.push_back({raw.id, rg, "constant sensitivity vector"});
            res.reports.push_back(std::move(rep));
        }
    }
    res.summary = summarize(res.reports, catalog.size());
    return res;
}

std::string format_report_csv(std::span<const SensitivityReport> reports, const FeatureCatalog& catalog) {
    std::string out = "basin,regime,feature,group,raw,normalized,rank,degenerate\n";
    for (const auto& rep : reports) {
        std::vector<std::size_t> rank_of(rep.ranking.size());
        for (std::size_t pos = 0; pos < rep.ranking.size(); ++pos) rank_of[rep.ranking[pos]] = pos + 1;
        for (std::size_t k = 0; k < catalog.size(); ++k) {
            out += rep.basin_id + "," + std::string(regime_name(rep.regime)) + "," + catalog[k].name +
                   "," + std::string(group_name(catalog[k].group)) + "," +
                   format_double(rep.raw_mean_abs_grad[k]) + "," + format_double(rep.normalized[k]) +
                   "," + std::to_string(rank_of[k]) + "," + (rep.degenerate ? "1" : "0") + "\n";
        }
    }
    return out;
}

std::string format_summary_csv(const CohortSummary& summary, const FeatureCatalog& catalog) {
    std::string out = "feature,group,regime,cohort_mean,rank,basins\n";
    for (Regime r : {Regime::low, Regime::high}) {
        const std::size_t n = r == Regime::low ? summary.low_basins : summary.high_basins;
        for (const auto& row : summary.rows(r)) {
            out += catalog[row.feature].name + "," + std::string(group_name(catalog[row.feature].group)) +
                   "," + std::string(regime_name(r)) + "," + format_double(row.mean_normalized) + "," +
                   std::to_string(row.rank) + "," + std::to_string(n) + "\n";
        }
    }
    return out;
}

std::string format_top_group_csv(std::span<const SensitivityReport> reports) {
    std::string out = "basin,regime,top_feature,top_group\n";
    for (const auto& rep : reports) {
        if (rep.degenerate) continue;
        out += rep.basin_id + "," + std::string(regime_name(rep.regime)) + "," + rep.top_feature + "," +
               std::string(group_name(rep.top_group)) + "\n";
    }
    return out;
}

std::string format_excluded_csv(std::span<const Exclusion> excluded) {
    std::string out = "basin,regime,reason\n";
    for (const auto& e : excluded) {
        std::string reason = e.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        out += e.basin_id + "," + std::string(regime_name(e.regime)) + "," + reason + "\n";
    }
    return out;
}

}  // namespace hydrosense::sensitivity
