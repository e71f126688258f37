#include "hydrosense/cli.hpp"

#include "hydrosense/checkpoint.hpp"
#include "hydrosense/config.hpp"
#include "hydrosense/manifest.hpp"
#include "hydrosense/sensitivity.hpp"
#include "hydrosense/synth.hpp"
#include "hydrosense/training.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace hydrosense::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFile = "model.ckpt";
constexpr const char* kTrainLogFile = "train_log.csv";
constexpr const char* kNseFile = "nse.csv";
constexpr const char* kReportFile = "sensitivity_report.csv";
constexpr const char* kSummaryFile = "sensitivity_summary.csv";
constexpr const char* kTopGroupFile = "top_group.csv";
constexpr const char* kExcludedFile = "excluded.csv";
constexpr const char* kTruthFile = "synth_truth.csv";

/// Raised for bad flags or config values; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string catalog;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string report_dir;
};

void init_logging() {
    static bool done = false;
    if (!done) {
        auto logger = spdlog::stderr_logger_mt("hydrosense");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        done = true;
    }
    const char* env = std::getenv("HYDROSENSE_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") spdlog::warn("HYDROSENSE_LOG='{}' not in {{error, info, debug}}; using info", level);
    }
}

Config load_config(const Options& o) {
    Config cfg = o.config.empty() ? Config{} : Config::load(o.config);
    if (o.seed) cfg.set("seed", std::to_string(*o.seed));
    if (o.threads) cfg.set("threads", std::to_string(*o.threads));
    return cfg;
}

int thread_count(const Config& cfg) {
    const auto t = cfg.get_count("threads").value_or(1);
    if (t == 0 || t > 1024) throw ConfigError("config field 'threads': must be in [1, 1024]");
    return static_cast<int>(t);
}

void require_flag(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

fs::path catalog_path(const Options& o) {
    return o.catalog.empty() ? fs::path(o.data) / "catalog.csv" : fs::path(o.catalog);
}

/// Latest common start and earliest common end across basins.
DateRange common_record(std::span<const BasinRecord> basins) {
    DateRange r = basins.front().range();
    for (const auto& b : basins) {
        r.first = std::max(r.first, b.start);
        r.last = std::min(r.last, b.end());
    }
    if (r.last < r.first) throw LoadError("basins share no common date range");
    return r;
}

RunManifest base_manifest(const std::string& command, const Options& o, const Config& cfg) {
    RunManifest m;
    m.command = command;
    m.config_path = o.config;
    m.seed = cfg.get_seed("seed").value_or(0);
    for (const auto& p : {o.data, o.checkpoint, o.catalog})
        if (!p.empty()) m.inputs.push_back(p);
    return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    require_flag(o.out, "--out");
    const Config cfg = load_config(o);
    const auto scfg = synth_config(cfg);
    const std::uint64_t seed = cfg.get_seed("seed").value_or(1);
    spdlog::info("synth: {} basins x {} days, seed {}", scfg.basins, scfg.days, seed);
    const auto ds = synth::generate_synthetic(scfg, seed);

    const fs::path out(o.out);
    auto outputs = write_dataset(out, ds.basins, ds.catalog);
    std::string truth = "basin_id,runoff_coef,groundwater,recession\n";
    for (const auto& t : ds.truth)
        truth += t.id + "," + format_double(t.runoff_coef) + "," + format_double(t.groundwater) + "," +
                 format_double(t.recession) + "\n";
    write_file_atomic(out / kTruthFile, truth);
    outputs.push_back(out / kTruthFile);

    auto m = base_manifest("synth", o, cfg);
    m.seed = seed;
    m.wall_seconds = seconds_since(t0);
    write_manifest(m, out, outputs);
    spdlog::info("synth: wrote {} files to {}", outputs.size(), out.string());
    return kOk;
}

int cmd_train(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    require_flag(o.data, "--data");
    require_flag(o.out, "--out");
    const Config cfg = load_config(o);
    const int threads = thread_count(cfg);
    const auto catalog = load_catalog(catalog_path(o));
    const auto basins = load_dataset(o.data, catalog);
    const auto tcfg = train_config(cfg, common_record(basins));
    for (const auto& b : basins) require_history(b, tcfg.lookback);

    const auto standardizer = fit_standardizer(basins, catalog, tcfg.train_range);
    std::vector<BasinRecord> std_basins;
    for (const auto& b : basins) std_basins.push_back(apply(standardizer, b));

    spdlog::info("train: {} basins, H={}, L={}, batch={}, lr={}, epochs<={}, threads={}", basins.size(),
                 tcfg.hidden, tcfg.lookback, tcfg.batch_size, tcfg.learning_rate, tcfg.max_epochs, threads);
    const auto result = training::train(tcfg, std_basins, threads, [](const training::EpochLog& e) {
        spdlog::info("epoch {:3d}  train {:.5f}  val {:.5f}  |g| {:.4f}  {:.1f}s", e.epoch, e.train_loss,
                     e.val_loss, e.grad_norm, e.wall_seconds);
    });
    spdlog::info("train: best epoch {} (val {:.5f})", result.best_epoch, result.log[result.best_epoch].val_loss);

    const fs::path out(o.out);
    const Checkpoint ckpt{result.params, tcfg.lookback, catalog, standardizer};
    save_checkpoint(out / kCheckpointFile, ckpt);
    write_file_atomic(out / kTrainLogFile, training::format_log_csv(result.log));

    auto m = base_manifest("train", o, cfg);
    m.seed = tcfg.seed;
    m.wall_seconds = seconds_since(t0);
    write_manifest(m, out, {out / kCheckpointFile, out / kTrainLogFile});
    return kOk;
}

Checkpoint load_checked_checkpoint(const Options& o) {
    require_flag(o.checkpoint, "--checkpoint");
    if (!fs::exists(o.checkpoint)) throw LoadError(o.checkpoint + ": checkpoint not found");
    return load_checkpoint(o.checkpoint);
}

int cmd_evaluate(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    require_flag(o.data, "--data");
    require_flag(o.out, "--out");
    const Checkpoint ckpt = load_checked_checkpoint(o);
    const Config cfg = load_config(o);
    const int threads = thread_count(cfg);
    const auto basins = load_dataset(o.data, ckpt.catalog);
    const DateRange range = eval_range(cfg, common_record(basins));

    std::string csv = "basin,nse\n";
    for (const auto& b : basins) {
        const double v = training::evaluate_nse(ckpt.params, apply(ckpt.standardizer, b), ckpt.lookback, range,
                                                ckpt.standardizer, threads);
        spdlog::info("evaluate: {} NSE {:.4f}", b.id, v);
        csv += b.id + "," + format_double(v) + "\n";
    }
    const fs::path out(o.out);
    write_file_atomic(out / kNseFile, csv);
    auto m = base_manifest("evaluate", o, cfg);
    m.wall_seconds = seconds_since(t0);
    write_manifest(m, out, {out / kNseFile});
    return kOk;
}

int cmd_sensitivity(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    require_flag(o.data, "--data");
    require_flag(o.out, "--out");
    const Checkpoint ckpt = load_checked_checkpoint(o);
    const Config cfg = load_config(o);
    const int threads = thread_count(cfg);
    const auto catalog = load_catalog(catalog_path(o));
    if (!(catalog == ckpt.catalog))
        throw LoadError(catalog_path(o).string() + ": catalog does not match the checkpoint's feature list");
    const auto basins = load_dataset(o.data, catalog);

    const auto res = sensitivity::run_pipeline(ckpt.params, ckpt.lookback, basins, ckpt.standardizer, catalog,
                                               sensitivity_range(cfg), threads);
    for (const auto& e : res.excluded)
        spdlog::warn("sensitivity: {} ({}) excluded: {}", e.basin_id, sensitivity::regime_name(e.regime), e.reason);

    const fs::path out(o.out);
    const std::vector<std::pair<const char*, std::string>> files = {
        {kReportFile, sensitivity::format_report_csv(res.reports, catalog)},
        {kSummaryFile, sensitivity::format_summary_csv(res.summary, catalog)},
        {kTopGroupFile, sensitivity::format_top_group_csv(res.reports)},
        {kExcludedFile, sensitivity::format_excluded_csv(res.excluded)},
    };
    std::vector<fs::path> outputs;
    for (const auto& [name, body] : files) {
        write_file_atomic(out / name, body);
        outputs.push_back(out / name);
    }
    auto m = base_manifest("sensitivity", o, cfg);
    m.wall_seconds = seconds_since(t0);
    write_manifest(m, out, outputs);
    spdlog::info("sensitivity: {} reports, {} exclusions", res.reports.size(), res.excluded.size());
    return kOk;
}

// ---------------------------------------------------------------------------

struct ReportRow {
    std::string basin, regime, feature, group;
    double normalized = 0.0;
    std::size_t rank = 0;
    bool degenerate = false;
};

int cmd_report(const Options& o, std::ostream& out) {
    require_flag(o.report_dir, "<report-dir>");
    const fs::path path = fs::path(o.report_dir) / kReportFile;
    if (!fs::exists(path)) throw LoadError(path.string() + ": no sensitivity report found");
    const CsvTable t = read_csv(path);
    const std::vector<std::string> cols = {"basin", "regime", "feature", "group", "normalized", "rank", "degenerate"};
    std::vector<std::size_t> ix;
    for (const auto& c : cols) {
        const auto k = t.column(c);
        if (!k) throw LoadError(path.string() + ":1: missing column '" + c + "'");
        ix.push_back(*k);
    }
    std::vector<ReportRow> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        ReportRow row{f[ix[0]], f[ix[1]], f[ix[2]], f[ix[3]]};
        const auto nv = parse_double(f[ix[4]]);
        const auto rk = parse_double(f[ix[5]]);
        if (!nv || !rk) throw LoadError(t.where(r) + ": invalid number");
        if (row.regime != "low" && row.regime != "high") throw LoadError(t.where(r) + ": unknown regime '" + row.regime + "'");
        row.normalized = *nv;
        row.rank = static_cast<std::size_t>(*rk);
        row.degenerate = f[ix[6]] == "1";
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw LoadError(path.string() + ": report has no rows");

    out << "Sensitivity report: " << o.report_dir << "\n";
    for (const std::string regime : {"low", "high"}) {
        // Features in first-appearance order, which is catalog order.
        std::vector<std::string> features, groups;
        std::map<std::string, std::size_t> index;
        std::vector<double> acc;
        std::set<std::string> basins;
        std::map<std::string, std::size_t> top_groups;
        for (const auto& r : rows) {
            if (r.regime != regime || r.degenerate) continue;
            auto [it, inserted] = index.emplace(r.feature, features.size());
            if (inserted) {
                features.push_back(r.feature);
                groups.push_back(r.group);
                acc.push_back(0.0);
            }
            acc[it->second] += r.normalized;
            basins.insert(r.basin);
            if (r.rank == 1) ++top_groups[r.group];
        }
        out << "\n" << (regime == "low" ? "Low-flow" : "High-flow") << " periods (" << basins.size() << " basins)\n";
        if (basins.empty()) {
            out << "  no usable basins\n";
            continue;
        }
        for (auto& v : acc) v /= static_cast<double>(basins.size());
        const auto order = sensitivity::rank_descending(acc);
        out << "  top features (cohort mean normalized sensitivity):\n";
        for (std::size_t pos = 0; pos < std::min<std::size_t>(5, order.size()); ++pos) {
            const auto k = order[pos];
            std::ostringstream val;
            val << std::fixed << std::setprecision(4) << acc[k];
            out << "    " << pos + 1 << ". " << features[k] << " (" << groups[k] << ") " << val.str() << "\n";
        }
        out << "  top-group distribution:";
        for (const auto g : {FeatureGroup::climate, FeatureGroup::soil, FeatureGroup::topography, FeatureGroup::vegetation}) {
            const std::string name(group_name(g));
            out << " " << name << "=" << (top_groups.count(name) ? top_groups[name] : 0);
        }
        out << "\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"hydrosense: EA-LSTM rainfall-runoff model and static-feature sensitivity"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    int threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Flat key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Seed (overrides config)");
        sub->add_option("--threads", threads, "Worker threads (overrides config)")->check(CLI::Range(1, 1024));
    };
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic CSV dataset");
    add_common(synth_cmd);
    synth_cmd->add_option("--out", o.out, "Output dataset directory")->required();

    auto* train_cmd = app.add_subcommand("train", "Train an EA-LSTM on a dataset");
    add_common(train_cmd);
    train_cmd->add_option("--data", o.data, "Dataset directory")->required();
    train_cmd->add_option("--catalog", o.catalog, "Feature catalog (default <data>/catalog.csv)");
    train_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Compute per-basin NSE");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    eval_cmd->add_option("--data", o.data, "Dataset directory")->required();
    eval_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* sens_cmd = app.add_subcommand("sensitivity", "Rank static features per flow regime");
    add_common(sens_cmd);
    sens_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    sens_cmd->add_option("--data", o.data, "Dataset directory")->required();
    sens_cmd->add_option("--catalog", o.catalog, "Feature catalog (default <data>/catalog.csv)");
    sens_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* report_cmd = app.add_subcommand("report", "Print a text summary of a sensitivity run");
    report_cmd->add_option("report-dir", o.report_dir, "Directory written by 'sensitivity'");
    report_cmd->add_option("--data", o.report_dir, "Same as the positional report-dir");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    for (auto* sub : app.get_subcommands()) {
        if (auto* opt = sub->get_option_no_throw("--seed"); opt && opt->count()) o.seed = seed;
        if (auto* opt = sub->get_option_no_throw("--threads"); opt && opt->count()) o.threads = threads;
    }

    try {
        if (*synth_cmd) return cmd_synth(o);
        if (*train_cmd) return cmd_train(o);
        if (*eval_cmd) return cmd_evaluate(o);
        if (*sens_cmd) return cmd_sensitivity(o);
        if (*report_cmd) return cmd_report(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace hydrosense::cli
