// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include "hydrosense/checkpoint.hpp"
#include "hydrosense/cli.hpp"
#include "hydrosense/manifest.hpp"
#include "hydrosense/sensitivity.hpp"
#include "hydrosense/textio.hpp"
#include "hydrosense/training.hpp"

#include "gradcheck.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace hydrosense;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// 1. Adjoint against central differences.
Verdict gradient_exactness() {
    const auto t0 = Clock::now();
    std::size_t checked = 0, failures = 0;
    double worst = 0.0;
    std::string first;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = hydrosense::testing::gradient_check(seed, 8, 5, 3, 16, 1e-5, 1e-6, 1e-10);
        checked += r.checked;
        failures += r.failures;
        worst = std::max(worst, r.worst_rel);
        if (first.empty() && r.failures) first = "seed " + std::to_string(seed) + ": " + r.first_failure;
    }
    const double secs = seconds_since(t0);
    Verdict v{failures == 0 && secs < 60.0,
              "100 seeds, " + std::to_string(checked) + " components, " + std::to_string(failures) +
                  " failures, worst rel " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
    if (!first.empty()) v.detail += "; " + first;
    return v;
}

// 2. The gate used at every step equals a fresh computation from x_s alone,
// and replaying the recurrence with a per-step recomputed gate reproduces the
// forward pass bit for bit.
Verdict gate_time_invariance() {
    std::mt19937_64 gen(20240601);
    std::size_t mismatches = 0, steps = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const std::size_t H = 1 + gen() % 12, ns = 1 + gen() % 6, nd = 1 + gen() % 4, T = 1 + gen() % 24;
        const auto p = hydrosense::testing::random_params(H, ns, nd, gen(), 1.5);
        const Vector x_s = hydrosense::testing::random_vector(ns, gen, 2.0);
        const Matrix x_d = hydrosense::testing::random_matrix(T, nd, gen, 2.0);
        const auto fw = ealstm::forward(p, x_s, x_d);
        const Vector i1 = ealstm::static_gate(p, x_s);
        if (!bitwise_equal(fw.cache.i, i1)) ++mismatches;
        ealstm::CellState s{Vector(H, 0.0), Vector(H, 0.0)};
        for (std::size_t t = 0; t < T; ++t, ++steps) {
            const Vector it = ealstm::static_gate(p, x_s);
            if (!bitwise_equal(it, i1)) ++mismatches;
            s = ealstm::cell_step(p, x_d.row(t), s, it).first;
            if (!bitwise_equal(s.c, fw.cache.c.row(t)) || !bitwise_equal(s.h, fw.cache.h.row(t))) ++mismatches;
        }
    }
    return {mismatches == 0, "1000 draws, " + std::to_string(steps) + " steps, " + std::to_string(mismatches) +
                                 " mismatches"};
}

// 3. Closed input gate.
Verdict closed_gate() {
    std::mt19937_64 gen(77);
    std::size_t nonzero = 0, growth = 0, steps = 0;
    for (int draw = 0; draw < 200; ++draw) {
        const std::size_t H = 1 + gen() % 10, nd = 1 + gen() % 4, T = 1 + gen() % 40;
        auto p = hydrosense::testing::random_params(H, 3, nd, gen(), 2.0);
        const Matrix x_d = hydrosense::testing::random_matrix(T, nd, gen, 3.0);
        const Vector closed(H, 0.0);

        ealstm::CellState zero{Vector(H, 0.0), Vector(H, 0.0)};
        for (std::size_t t = 0; t < T; ++t, ++steps) {
            zero = ealstm::cell_step(p, x_d.row(t), zero, closed).first;
            for (std::size_t k = 0; k < H; ++k)
                if (zero.h[k] != 0.0 || zero.c[k] != 0.0) ++nonzero;
        }

        ealstm::CellState s{hydrosense::testing::random_vector(H, gen), hydrosense::testing::random_vector(H, gen, 3.0)};
        for (std::size_t t = 0; t < T; ++t) {
            const auto next = ealstm::cell_step(p, x_d.row(t), s, closed).first;
            for (std::size_t k = 0; k < H; ++k)
                if (std::abs(next.c[k]) > std::abs(s.c[k])) ++growth;
            s = next;
        }

        // The same through the full forward pass: a static gate driven to
        // exactly zero by a very negative bias.
        p.W_i.fill(0.0);
        std::fill(p.b_i.begin(), p.b_i.end(), -1000.0);
        const auto fw = ealstm::forward(p, hydrosense::testing::random_vector(3, gen), x_d);
        for (double v : fw.cache.i) nonzero += v != 0.0;
        for (double v : fw.cache.c.flat()) nonzero += v != 0.0;
        for (double v : fw.cache.h.flat()) nonzero += v != 0.0;
    }
    return {nonzero == 0 && growth == 0, "200 draws, " + std::to_string(steps) + " steps; nonzero state entries " +
                                             std::to_string(nonzero) + ", |c| increases " + std::to_string(growth)};
}

// 4. Percentile fixture.
Verdict percentile_fixture() {
    Vector q(100);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = static_cast<double>(k + 1);
    const auto p = sensitivity::flow_percentiles(q);
    const auto m = sensitivity::flow_masks(q, p.q05, p.q95);
    const std::size_t low = m.count(sensitivity::Regime::low), high = m.count(sensitivity::Regime::high);
    std::ostringstream d;
    d.precision(17);
    d << "q05 " << p.q05 << ", q95 " << p.q95 << ", |low| " << low << ", |high| " << high;
    return {p.q05 == 5.95 && p.q95 == 95.05 && low == 5 && high == 5, d.str()};
}

// 5. Min-max normalization contract.
Verdict normalization_contract() {
    std::mt19937_64 gen(5150);
    std::size_t bad = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const std::size_t n = 2 + gen() % 30;
        Vector raw = hydrosense::testing::random_vector(n, gen, 1.0);
        // Raw sensitivities are mean absolute gradients, so non-negative and of varying scale.
        const double s = std::exp(hydrosense::testing::random_vector(1, gen, 4.0)[0]);
        for (double& v : raw) v = std::abs(v) * s;
        const auto nv = sensitivity::normalize_unit(raw);
        bool ok = !nv.degenerate && nv.values.size() == n;
        double mx = -1.0;
        for (double v : nv.values) {
            ok = ok && v >= 0.0 && v <= 1.0;
            mx = std::max(mx, v);
        }
        ok = ok && mx == 1.0 && sensitivity::rank_descending(nv.values) == sensitivity::rank_descending(raw);
        bad += !ok;
    }
    std::size_t constant_ok = 0;
    for (double c : {0.0, 1e-300, 0.25, 7.0, 1e300})
        for (std::size_t n : {1u, 2u, 9u}) {
            const auto nv = sensitivity::normalize_unit(Vector(n, c));
            constant_ok += nv.degenerate;
        }
    return {bad == 0 && constant_ok == 15, "1000 vectors, " + std::to_string(bad) + " violations; " +
                                               std::to_string(constant_ok) + "/15 constant vectors flagged"};
}

// 9. NSE definitions.
Verdict nse_definitions() {
    const Vector y{1.0, 2.0, 3.0, 4.0, 5.0};
    const Vector mean_pred(y.size(), 3.0);
    const Vector hand{2.0, 1.0, 4.0, 3.0, 6.0};  // squared error 5, variance sum 10
    const double perfect = training::nse(y, y);
    const double mean = training::nse(mean_pred, y);
    const double half = training::nse(hand, y);

    std::mt19937_64 gen(9);
    const Vector yr = hydrosense::testing::random_vector(500, gen, 3.0);
    double avg = 0.0;
    for (double v : yr) avg += v;
    avg /= static_cast<double>(yr.size());
    const double mean_random = training::nse(Vector(yr.size(), avg), yr);

    std::ostringstream d;
    d.precision(17);
    d << "perfect " << perfect << ", mean " << mean << " / " << mean_random << ", hand " << half;
    return {perfect == 1.0 && std::abs(mean) <= 1e-12 && std::abs(mean_random) <= 1e-12 && half == 0.5, d.str()};
}

// Shared by criteria 6, 7 and 8: a full CLI run on an 8-basin synthetic cohort.
constexpr const char* kRecoveryConfig =
    "# 8 synthetic basins, slope_mean wired to the high-flow response\n"
    "basins = 8\n"
    "days = 1200\n"
    "high_feature = slope_mean\n"
    "hidden = 32\n"
    "lookback = 90\n"
    "batch_size = 32\n"
    "learning_rate = 0.005\n"
    "max_epochs = 30\n"
    "patience = 10\n";
constexpr const char* kRecoverySeed = "7";
constexpr const char* kDominant = "slope_mean";

struct PipelineRun {
    fs::path root;
    bool ok = false;
    std::string error;
    double seconds = 0.0;
};

PipelineRun run_pipeline_cli(const fs::path& root, const fs::path& cfg, const std::string& threads) {
    PipelineRun run;
    run.root = root;
    const auto t0 = Clock::now();
    const std::string c = cfg.string(), d = (root / "data").string(), m = (root / "model").string();
    const std::vector<std::vector<std::string>> steps = {
        {"synth", "--config", c, "--seed", kRecoverySeed, "--out", d},
        {"train", "--config", c, "--seed", kRecoverySeed, "--threads", threads, "--data", d, "--out", m},
        {"evaluate", "--config", c, "--threads", threads, "--checkpoint", m + "/model.ckpt", "--data", d, "--out",
         (root / "eval").string()},
        {"sensitivity", "--config", c, "--threads", threads, "--checkpoint", m + "/model.ckpt", "--data", d,
         "--out", (root / "sens").string()},
    };
    for (const auto& args : steps) {
        std::ostringstream out, err;
        if (cli::run(args, out, err) != cli::kOk) {
            run.error = args[0] + " failed: " + err.str();
            return run;
        }
    }
    run.ok = true;
    run.seconds = seconds_since(t0);
    return run;
}

Verdict synthetic_recovery(const PipelineRun& run) {
    if (!run.ok) return {false, run.error};
    const auto nse = read_csv(run.root / "eval" / "nse.csv");
    std::size_t skilled = 0;
    double worst = 1.0;
    for (const auto& row : nse.rows) {
        const double v = parse_double(row[1]).value_or(-1e300);
        skilled += v >= 0.7;
        worst = std::min(worst, v);
    }

    const auto summary = read_csv(run.root / "sens" / "sensitivity_summary.csv");
    const auto fcol = *summary.column("feature"), rcol = *summary.column("regime"), kcol = *summary.column("rank");
    bool cohort_first = false;
    for (const auto& row : summary.rows)
        if (row[rcol] == "high" && row[kcol] == "1") cohort_first = row[fcol] == kDominant;

    const auto report = read_csv(run.root / "sens" / "sensitivity_report.csv");
    const auto rg = *report.column("regime"), ft = *report.column("feature"),
               rk = *report.column("rank"), dg = *report.column("degenerate");
    std::size_t top3 = 0;
    for (const auto& row : report.rows)
        if (row[rg] == "high" && row[ft] == kDominant && row[dg] == "0" &&
            parse_double(row[rk]).value_or(99) <= 3)
            ++top3;

    const bool pass = nse.rows.size() == 8 && skilled >= 6 && cohort_first && top3 >= 6 && run.seconds < 1800.0;
    return {pass, "NSE>=0.7 on " + std::to_string(skilled) + "/8 (min " + fmt("%.3f", worst) + "), " +
                      kDominant + " cohort rank 1 (high): " + (cohort_first ? "yes" : "no") + ", top 3 in " +
                      std::to_string(top3) + "/8 basins, " + fmt("%.0f", run.seconds) + " s"};
}

// 7. An extra static feature whose W_i column is zero gets exactly zero sensitivity.
Verdict null_feature(const PipelineRun& run) {
    if (!run.ok) return {false, run.error};
    const auto ckpt = load_checkpoint(run.root / "model" / "model.ckpt");
    auto basins = load_dataset(run.root / "data", ckpt.catalog);

    const std::size_t ns = ckpt.params.n_static, H = ckpt.params.hidden;
    auto p = ealstm::Params::zeros(H, ns + 1, ckpt.params.n_dynamic);
    p.b_i = ckpt.params.b_i;
    p.gates = ckpt.params.gates;
    p.head_w = ckpt.params.head_w;
    p.head_b = ckpt.params.head_b;
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t k = 0; k < ns; ++k) p.W_i(r, k) = ckpt.params.W_i(r, k);

    auto entries = ckpt.catalog.entries();
    entries.push_back({"null_feature", FeatureGroup::vegetation});
    const FeatureCatalog catalog(entries);
    Standardizer st = ckpt.standardizer;
    st.static_names.push_back("null_feature");
    st.statics.push_back({0.5, 0.25});
    Rng rng(31337);
    for (auto& b : basins) b.x_s.push_back(rng.uniform());

    const auto res = sensitivity::run_pipeline(p, ckpt.lookback, basins, st, catalog, std::nullopt, 4);
    std::size_t nonzero = 0;
    for (const auto& r : res.reports) nonzero += r.raw_mean_abs_grad[ns] != 0.0;
    const bool pass = res.reports.size() == 2 * basins.size() && nonzero == 0;
    return {pass, std::to_string(res.reports.size()) + " basin-regime reports, " + std::to_string(nonzero) +
                      " with nonzero null-feature sensitivity"};
}

// Every output file except the manifests, which record wall time and paths.
std::map<std::string, std::string> collect_outputs(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != kManifestName)
            files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    return files;
}

std::string manifest_artifacts(const fs::path& dir) {
    std::string out;
    for (const auto& a : RunManifest::from_json(read_file(dir / kManifestName)).artifacts)
        out += a.path + " " + a.sha256 + "\n";
    return out;
}

// 8. Two runs with the same seed, four threads against one.
Verdict determinism(const PipelineRun& a, const PipelineRun& b) {
    if (!a.ok) return {false, a.error};
    if (!b.ok) return {false, b.error};
    const auto fa = collect_outputs(a.root), fb = collect_outputs(b.root);
    std::size_t differ = 0;
    std::string first;
    for (const auto& [path, bytes] : fa) {
        const auto it = fb.find(path);
        if (it == fb.end() || it->second != bytes) {
            ++differ;
            if (first.empty()) first = path;
        }
    }
    for (const char* sub : {"data", "model", "eval", "sens"}) {
        if (manifest_artifacts(a.root / sub) != manifest_artifacts(b.root / sub)) {
            ++differ;
            if (first.empty()) first = std::string(sub) + "/manifest.json artifacts";
        }
    }
    const bool pass = differ == 0 && fa.size() == fb.size() && !fa.empty();
    std::string d = std::to_string(fa.size()) + " files compared (--threads 4 vs 1), " + std::to_string(differ) +
                    " differ";
    if (!first.empty()) d += ", first: " + first;
    return {pass, d};
}

}  // namespace

int main() {
    const hydrosense::testing::TempDir work("acceptance");
    const auto cfg = work / "recovery.cfg";
    write_file_atomic(cfg, kRecoveryConfig);

    std::vector<std::pair<int, std::function<Verdict()>>> checks;
    PipelineRun run4, run1;
    checks.emplace_back(1, gradient_exactness);
    checks.emplace_back(2, gate_time_invariance);
    checks.emplace_back(3, closed_gate);
    checks.emplace_back(4, percentile_fixture);
    checks.emplace_back(5, normalization_contract);
    checks.emplace_back(6, [&] {
        run4 = run_pipeline_cli(work / "run_threads4", cfg, "4");
        return synthetic_recovery(run4);
    });
    checks.emplace_back(7, [&] { return null_feature(run4); });
    checks.emplace_back(8, [&] {
        run1 = run_pipeline_cli(work / "run_threads1", cfg, "1");
        return determinism(run4, run1);
    });
    checks.emplace_back(9, nse_definitions);

    int failed = 0;
    for (const auto& [id, check] : checks) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all passed")
              << std::endl;
    return failed ? 1 : 0;
}
