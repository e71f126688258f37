#include "hydrosense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hydrosense::synth {

namespace {

constexpr std::size_t kDesignCandidates = 64;

void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ContractViolation("synth config: " + field + " " + why);
}

std::optional<std::size_t> feature_index(const SynthConfig& cfg, const std::string& name) {
    for (std::size_t k = 0; k < cfg.features.size(); ++k)
        if (cfg.features[k].name == name) return k;
    return std::nullopt;
}

int day_of_year(Date d) {
    using namespace std::chrono;
    const year_month_day ymd{d};
    return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count()) + 1;
}

double max_abs_correlation(const Matrix& m) {
    const std::size_t n = m.rows(), f = m.cols();
    double worst = 0.0;
    for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = a + 1; b < f; ++b) {
            double ma = 0, mb = 0;
            for (std::size_t r = 0; r < n; ++r) {
                ma += m(r, a);
                mb += m(r, b);
            }
            ma /= static_cast<double>(n);
            mb /= static_cast<double>(n);
            double sab = 0, saa = 0, sbb = 0;
            for (std::size_t r = 0; r < n; ++r) {
                sab += (m(r, a) - ma) * (m(r, b) - mb);
                saa += (m(r, a) - ma) * (m(r, a) - ma);
                sbb += (m(r, b) - mb) * (m(r, b) - mb);
            }
            if (saa > 0 && sbb > 0) worst = std::max(worst, std::abs(sab) / std::sqrt(saa * sbb));
        }
    }
    return worst;
}

}  // namespace

std::vector<SynthFeature> SynthConfig::default_features() {
    return {
        {"aridity", FeatureGroup::climate, 0.3, 2.5},
        {"high_prec_freq", FeatureGroup::climate, 5.0, 30.0},
        {"soil_depth", FeatureGroup::soil, 0.5, 2.0},
        {"soil_conductivity", FeatureGroup::soil, 0.5, 4.0},
        {"slope_mean", FeatureGroup::topography, 2.0, 120.0},
        {"forest_frac", FeatureGroup::vegetation, 0.0, 1.0},
    };
}

void SynthConfig::validate() const {
    require(basins >= 1, "basins", "must be >= 1");
    require(days >= 1, "days", "must be >= 1");
    require(!features.empty(), "features", "must not be empty");
    for (std::size_t k = 0; k < features.size(); ++k) {
        require(!features[k].name.empty(), "features", "contains an empty name");
        require(features[k].lo < features[k].hi, "features",
                "range of '" + features[k].name + "' must satisfy lo < hi");
        for (std::size_t j = 0; j < k; ++j)
            require(features[j].name != features[k].name, "features",
                    "duplicate name '" + features[k].name + "'");
    }
    require(high_feature.empty() || feature_index(*this, high_feature).has_value(), "high_feature",
            "'" + high_feature + "' is not a feature");
    require(low_feature.empty() || feature_index(*this, low_feature).has_value(), "low_feature",
            "'" + low_feature + "' is not a feature");
    require(high_coef >= 0.0, "high_coef", "must be >= 0");
    require(low_coef >= 0.0, "low_coef", "must be >= 0");
    require(wet_after_dry > 0.0 && wet_after_dry < 1.0, "wet_after_dry", "must be in (0,1)");
    require(wet_after_wet > 0.0 && wet_after_wet < 1.0, "wet_after_wet", "must be in (0,1)");
    require(rain_mean > 0.0, "rain_mean", "must be > 0");
    require(temp_amp >= 0.0, "temp_amp", "must be >= 0");
    require(temp_noise >= 0.0, "temp_noise", "must be >= 0");
    require(melt_factor >= 0.0, "melt_factor", "must be >= 0");
    require(pet_factor >= 0.0, "pet_factor", "must be >= 0");
    require(base_runoff > 0.0, "base_runoff", "must be > 0");
    require(base_runoff * (1.0 + high_coef) <= 1.0, "high_coef",
            "makes the runoff coefficient exceed 1 (base_runoff*(1+high_coef) > 1)");
    require(recession > 0.0 && recession < 1.0, "recession", "must be in (0,1)");
    require(groundwater_scale >= 0.0, "groundwater_scale", "must be >= 0");
}

Matrix generate_forcing(const SynthConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Matrix out(cfg.days, 3);
    bool wet = false;
    for (std::size_t t = 0; t < cfg.days; ++t) {
        const double p_wet = wet ? cfg.wet_after_wet : cfg.wet_after_dry;
        wet = rng.uniform() < p_wet;
        const double prcp = wet ? rng.exponential(cfg.rain_mean) : 0.0;
        const int doy = day_of_year(cfg.start + std::chrono::days(static_cast<long>(t)));
        const double season = std::sin(2.0 * std::numbers::pi * (doy - 105) / 365.0);
        const double tmean = cfg.temp_mean + cfg.temp_amp * season + cfg.temp_noise * rng.normal();
        out(t, 0) = prcp;
        out(t, 1) = tmean;
        out(t, 2) = cfg.pet_factor * std::max(tmean + 5.0, 0.0);
    }
    return out;
}

Vector simulate_discharge(const SynthConfig& cfg, const BasinTruth& truth, const Matrix& forcing) {
    Vector q(forcing.rows());
    double snow = 0.0, soil = 0.0;
    for (std::size_t t = 0; t < forcing.rows(); ++t) {
        const double prcp = forcing(t, 0), tmean = forcing(t, 1), pet = forcing(t, 2);
        double rain = 0.0, melt = 0.0;
        if (tmean < 0.0) {
            snow += prcp;
        } else {
            rain = prcp;
            melt = std::min(snow, cfg.melt_factor * tmean);
            snow -= melt;
        }
        const double w = rain + melt;
        const double quick = truth.runoff_coef * w;
        const double infil = w - quick;
        const double et = std::min(infil, pet);
        soil += infil - et;
        const double base = truth.recession * soil;
        soil -= base;
        q[t] = quick + base + truth.groundwater;
    }
    return q;
}

BasinTruth make_truth(const SynthConfig& cfg, std::string id, Vector position) {
    if (position.size() != cfg.features.size())
        throw ContractViolation("synth: position length != feature count");
    BasinTruth t;
    t.id = std::move(id);
    t.position = std::move(position);
    const double u_high = cfg.high_feature.empty() ? 0.0 : t.position[*feature_index(cfg, cfg.high_feature)];
    const double u_low = cfg.low_feature.empty() ? 0.0 : t.position[*feature_index(cfg, cfg.low_feature)];
    t.runoff_coef = cfg.base_runoff * (1.0 + cfg.high_coef * u_high);
    t.groundwater = cfg.groundwater_scale * cfg.low_coef * u_low;
    t.recession = cfg.recession;
    return t;
}

Matrix design_positions(std::size_t basins, std::size_t features, std::uint64_t seed) {
    Rng rng(seed);
    Matrix best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand < kDesignCandidates; ++cand) {
        Matrix m(basins, features);
        for (std::size_t f = 0; f < features; ++f) {
            std::vector<std::size_t> strata(basins);
            std::iota(strata.begin(), strata.end(), 0);
            // Fisher-Yates with our own RNG; std::shuffle is implementation-defined.
            for (std::size_t k = basins; k > 1; --k) std::swap(strata[k - 1], strata[rng.index(k)]);
            for (std::size_t b = 0; b < basins; ++b)
                m(b, f) = (static_cast<double>(strata[b]) + rng.uniform()) / static_cast<double>(basins);
        }
        const double score = max_abs_correlation(m);
        if (score < best_score) {
            best_score = score;
            best = std::move(m);
        }
    }
    return best;
}

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Dataset ds;
    std::vector<Feature> entries;
    for (const auto& f : cfg.features) entries.push_back({f.name, f.group});
    ds.catalog = FeatureCatalog(std::move(entries));

    const Matrix pos = design_positions(cfg.basins, cfg.features.size(), mix_seed(seed, 0));
    const std::size_t width = std::to_string(cfg.basins).size() < 2 ? 2 : std::to_string(cfg.basins).size();
    for (std::size_t b = 0; b < cfg.basins; ++b) {
        std::string num = std::to_string(b + 1);
        num.insert(0, width - num.size(), '0');
        const Vector position(pos.row(b).begin(), pos.row(b).end());
        BasinTruth truth = make_truth(cfg, "basin_" + num, position);

        BasinRecord rec;
        rec.id = truth.id;
        rec.x_s.resize(cfg.features.size());
        for (std::size_t k = 0; k < cfg.features.size(); ++k)
            rec.x_s[k] = cfg.features[k].lo + (cfg.features[k].hi - cfg.features[k].lo) * position[k];
        rec.forcing_names = {"prcp", "tmean", "pet"};
        rec.forcing = generate_forcing(cfg, mix_seed(seed, b + 1));
        rec.discharge = simulate_discharge(cfg, truth, rec.forcing);
        rec.start = cfg.start;
        ds.basins.push_back(std::move(rec));
        ds.truth.push_back(std::move(truth));
    }
    return ds;
}

}  // namespace hydrosense::synth
