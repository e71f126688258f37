/**
 * @file config.hpp
 * @brief Flat key = value configuration shared by every CLI command.
 *
 * One entry per line, `#` starts a comment, surrounding whitespace is
 * ignored. Unknown keys are rejected so typos surface immediately.
 * docs/config.md lists every key.
 */

#pragma once

#include "hydrosense/dataio.hpp"
#include "hydrosense/synth.hpp"
#include "hydrosense/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace hydrosense {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Config {
public:
    static Config parse(std::string_view text, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value);

    std::optional<std::string> get_string(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;
    std::optional<std::size_t> get_count(const std::string& key) const;
    std::optional<std::uint64_t> get_seed(const std::string& key) const;
    std::optional<Date> get_date(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// All keys any command understands.
const std::vector<std::string>& known_config_keys();

/// Builds the generator config from `basins`, `days`, `high_feature`, ... keys.
synth::SynthConfig synth_config(const Config& cfg);

/**
 * Training config from `hidden`, `lookback`, ... keys. Date ranges default
 * to a 2/3 : 1/3 chronological split of `record` when not given.
 */
training::TrainConfig train_config(const Config& cfg, DateRange record);

/// Evaluation range: eval_start/eval_end, else the validation range.
DateRange eval_range(const Config& cfg, DateRange record);

/// Sensitivity range: sens_start/sens_end, else nullopt (whole record).
std::optional<DateRange> sensitivity_range(const Config& cfg);

}  // namespace hydrosense
