#include "hydrosense/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace hydrosense {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want) {
    throw ConfigError("config field '" + key + "': invalid value '" + value + "' (" + want + ")");
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        // common
        "seed", "threads",
        // synth
        "basins", "days", "start_date", "high_feature", "high_coef", "low_feature", "low_coef",
        "wet_after_dry", "wet_after_wet", "rain_mean", "temp_mean", "temp_amp", "temp_noise",
        "melt_factor", "pet_factor", "base_runoff", "recession", "groundwater_scale",
        // train
        "hidden", "lookback", "batch_size", "learning_rate", "max_epochs", "patience",
        "clip_norm", "train_start", "train_end", "val_start", "val_end",
        // evaluate / sensitivity
        "eval_start", "eval_end", "sens_start", "sens_end",
    };
    return keys;
}

Config Config::parse(std::string_view text, const std::string& origin) {
    Config cfg;
    std::size_t lineno = 0, pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        const auto& known = known_config_keys();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(where + ": unknown config field '" + key + "'");
        if (cfg.has(key)) throw ConfigError(where + ": duplicate config field '" + key + "'");
        cfg.values_[key] = value;
        if (end == text.size()) break;
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    try {
        return parse(read_file(path), path.string());
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
}

void Config::set(const std::string& key, std::string value) {
    const auto& known = known_config_keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
        throw ConfigError("unknown config field '" + key + "'");
    values_[key] = std::move(value);
}

std::optional<std::string> Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> Config::get_double(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) return std::nullopt;
    const auto v = parse_double(*s);
    if (!v) bad(key, *s, "expected a finite number");
    return v;
}

std::optional<std::size_t> Config::get_count(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) return std::nullopt;
    const auto v = parse_double(*s);
    if (!v || *v < 0 || *v != std::floor(*v) || *v > 1e15) bad(key, *s, "expected a non-negative integer");
    return static_cast<std::size_t>(*v);
}

std::optional<std::uint64_t> Config::get_seed(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) return std::nullopt;
    std::uint64_t v = 0;
    const auto res = std::from_chars(s->data(), s->data() + s->size(), v);
    if (s->empty() || res.ec != std::errc() || res.ptr != s->data() + s->size())
        bad(key, *s, "expected an unsigned 64-bit integer");
    return v;
}

std::optional<Date> Config::get_date(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) return std::nullopt;
    const auto d = parse_date(*s);
    if (!d) bad(key, *s, "expected YYYY-MM-DD");
    return d;
}

synth::SynthConfig synth_config(const Config& cfg) {
    synth::SynthConfig s;
    if (auto v = cfg.get_count("basins")) s.basins = *v;
    if (auto v = cfg.get_count("days")) s.days = *v;
    if (auto v = cfg.get_date("start_date")) s.start = *v;
    if (auto v = cfg.get_string("high_feature")) s.high_feature = *v == "none" ? "" : *v;
    if (auto v = cfg.get_double("high_coef")) s.high_coef = *v;
    if (auto v = cfg.get_string("low_feature")) s.low_feature = *v == "none" ? "" : *v;
    if (auto v = cfg.get_double("low_coef")) s.low_coef = *v;
    if (auto v = cfg.get_double("wet_after_dry")) s.wet_after_dry = *v;
    if (auto v = cfg.get_double("wet_after_wet")) s.wet_after_wet = *v;
    if (auto v = cfg.get_double("rain_mean")) s.rain_mean = *v;
    if (auto v = cfg.get_double("temp_mean")) s.temp_mean = *v;
    if (auto v = cfg.get_double("temp_amp")) s.temp_amp = *v;
    if (auto v = cfg.get_double("temp_noise")) s.temp_noise = *v;
    if (auto v = cfg.get_double("melt_factor")) s.melt_factor = *v;
    if (auto v = cfg.get_double("pet_factor")) s.pet_factor = *v;
    if (auto v = cfg.get_double("base_runoff")) s.base_runoff = *v;
    if (auto v = cfg.get_double("recession")) s.recession = *v;
    if (auto v = cfg.get_double("groundwater_scale")) s.groundwater_scale = *v;
    try {
        s.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return s;
}

namespace {

DateRange default_train(DateRange record) {
    const long n = record.days();
    return {record.first, record.first + std::chrono::days(2 * n / 3 - 1)};
}

DateRange default_val(DateRange record) {
    const long n = record.days();
    return {record.first + std::chrono::days(2 * n / 3), record.last};
}

}  // namespace

training::TrainConfig train_config(const Config& cfg, DateRange record) {
    training::TrainConfig t;
    if (auto v = cfg.get_count("hidden")) t.hidden = *v;
    if (auto v = cfg.get_count("lookback")) t.lookback = *v;
    if (auto v = cfg.get_count("batch_size")) t.batch_size = *v;
    if (auto v = cfg.get_double("learning_rate")) t.learning_rate = *v;
    if (auto v = cfg.get_count("max_epochs")) t.max_epochs = *v;
    if (auto v = cfg.get_count("patience")) t.patience = *v;
    if (auto v = cfg.get_double("clip_norm")) t.clip_norm = *v;
    if (auto v = cfg.get_seed("seed")) t.seed = *v;
    t.train_range = default_train(record);
    t.val_range = default_val(record);
    if (auto v = cfg.get_date("train_start")) t.train_range.first = *v;
    if (auto v = cfg.get_date("train_end")) t.train_range.last = *v;
    if (auto v = cfg.get_date("val_start")) t.val_range.first = *v;
    if (auto v = cfg.get_date("val_end")) t.val_range.last = *v;
    try {
        t.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return t;
}

DateRange eval_range(const Config& cfg, DateRange record) {
    DateRange r = train_config(cfg, record).val_range;
    if (auto v = cfg.get_date("eval_start")) r.first = *v;
    if (auto v = cfg.get_date("eval_end")) r.last = *v;
    if (r.last < r.first) throw ConfigError("config field 'eval_end': precedes eval_start");
    return r;
}

std::optional<DateRange> sensitivity_range(const Config& cfg) {
    const auto a = cfg.get_date("sens_start");
    const auto b = cfg.get_date("sens_end");
    if (!a && !b) return std::nullopt;
    DateRange r{a.value_or(Date::min()), b.value_or(Date::max())};
    if (r.last < r.first) throw ConfigError("config field 'sens_end': precedes sens_start");
    return r;
}

}  // namespace hydrosense
