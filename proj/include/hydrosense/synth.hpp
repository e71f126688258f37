/**
 * @file synth.hpp
 * @brief Synthetic catchments with a known dominant static feature.
 *
 * Each basin gets its own stochastic weather and a conceptual water
 * balance. One static feature can be wired to the quick-runoff path
 * (high flows) and one to a constant groundwater contribution (low
 * flows); every other static feature is inert. The generator is
 * deterministic under its seed.
 *
 * Daily recipe, in this order:
 *
 *   weather   wet/dry Markov chain; wet-day depth ~ Exp(rain_mean);
 *             tmean = temp_mean + temp_amp*sin(2*pi*(doy-105)/365) + N(0, temp_noise);
 *             pet = pet_factor * max(tmean + 5, 0)
 *   snow      tmean < 0: precipitation accumulates as snow; otherwise it is
 *             rain and melt = min(snow, melt_factor * tmean)
 *   split     w = rain + melt; quick = rc * w; infil = w - quick;
 *             et = min(infil, pet); soil += infil - et
 *   baseflow  base = recession * soil; soil -= base
 *   outflow   Q = quick + base + groundwater
 *
 *   rc          = base_runoff * (1 + high_coef * u_high)
 *   groundwater = groundwater_scale * low_coef * u_low
 *
 * where u_* in [0, 1) is the basin's position within the feature's range.
 * On days with no rain and no melt, Q - groundwater shrinks by exactly the
 * factor (1 - recession).
 */

#pragma once

#include "hydrosense/dataio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hydrosense::synth {

struct SynthFeature {
    std::string name;
    FeatureGroup group;
    double lo = 0.0;  ///< raw-unit range of the feature across basins
    double hi = 1.0;
};

struct SynthConfig {
    std::size_t basins = 8;
    std::size_t days = 1200;
    Date start = Date{std::chrono::year{2000} / std::chrono::January / 1};
    std::vector<SynthFeature> features = default_features();

    std::string high_feature = "slope_mean";  ///< empty = no high-flow wiring
    double high_coef = 3.0;
    std::string low_feature;                  ///< empty = no low-flow wiring
    double low_coef = 1.0;

    double wet_after_dry = 0.25;
    double wet_after_wet = 0.6;
    double rain_mean = 8.0;     ///< mm/day on wet days
    double temp_mean = 6.0;     ///< degC
    double temp_amp = 12.0;
    double temp_noise = 2.0;
    double melt_factor = 3.0;   ///< mm/day/degC
    double pet_factor = 0.12;   ///< mm/day/degC
    double base_runoff = 0.15;
    double recession = 0.05;    ///< fraction of soil store drained per day
    double groundwater_scale = 0.5;  ///< mm/day

    /// Six inert-by-default features spanning the four groups.
    static std::vector<SynthFeature> default_features();

    /// Throws ContractViolation naming the offending field.
    void validate() const;
};

/// Hidden per-basin parameters of the generator.
struct BasinTruth {
    std::string id;
    Vector position;  ///< u in [0,1) per feature
    double runoff_coef = 0.0;
    double groundwater = 0.0;
    double recession = 0.0;
};

struct Dataset {
    FeatureCatalog catalog;
    std::vector<BasinRecord> basins;
    std::vector<BasinTruth> truth;
};

/// Forcing columns: prcp (mm/day), tmean (degC), pet (mm/day).
Matrix generate_forcing(const SynthConfig& cfg, std::uint64_t seed);

/// Runs the water balance over a forcing matrix.
Vector simulate_discharge(const SynthConfig& cfg, const BasinTruth& truth, const Matrix& forcing);

/// Truth for a basin sitting at the given feature positions.
BasinTruth make_truth(const SynthConfig& cfg, std::string id, Vector position);

/**
 * Latin-hypercube positions for B basins and F features. Among a fixed
 * number of seeded candidates the design with the smallest maximum
 * absolute pairwise column correlation is kept.
 */
Matrix design_positions(std::size_t basins, std::size_t features, std::uint64_t seed);

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace hydrosense::synth
