// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: acceptance <path to the emos CLI>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "emos/estimation.hpp"
#include "emos/io.hpp"
#include "emos/pipeline.hpp"
#include "emos/synthetic.hpp"
#include "emos/verification.hpp"
#include "json.hpp"

using namespace emos;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string g_cli;

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / ("emos_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Dataset as_dataset(std::vector<EnsembleForecast> cases, const GroupSpec& g) {
    Dataset ds;
    ds.cases = std::move(cases);
    ds.groups = g;
    return ds;
}

// ------------------------------------------------------------------ 1
Outcome closed_form_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst_tn = 0.0, worst_ln = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const TruncNormal<> tn(-5.0 + 20.0 * rng.uniform(), 0.1 + 4.9 * rng.uniform());
        const double x = i % 10 == 0 ? 0.0 : 25.0 * rng.uniform();
        worst_tn = std::max(worst_tn, std::abs(crps_tn(tn, x) - crps_numeric(PredictiveDistribution(tn), x)));
    }
    for (int i = 0; i < 1000; ++i) {
        const LogNormal<> ln(-1.0 + 4.0 * rng.uniform(), 0.05 + 1.45 * rng.uniform());
        const double x = i % 10 == 0 ? 0.0 : 30.0 * rng.uniform();
        worst_ln = std::max(worst_ln, std::abs(crps_ln(ln, x) - crps_numeric(PredictiveDistribution(ln), x)));
    }
    const double t = seconds_since(t0);
    return {worst_tn <= 1e-6 && worst_ln <= 1e-6 && t < 30.0,
            fmt("max |diff| TN %.2e, LN %.2e over 1000 pairs each; %.3f s", worst_tn, worst_ln, t)};
}

// ------------------------------------------------------------------ 2
Outcome transform_round_trip() {
    Rng rng(202);
    double worst_mu = 0.0, worst_sigma = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double mu = -3.0 + 6.0 * rng.uniform();
        const double sigma = 0.01 + 2.49 * rng.uniform();
        const auto back = ln_from_mean_variance(mean_variance(LogNormal<>(mu, sigma)));
        worst_mu = std::max(worst_mu, std::abs(back.mu() - mu) / std::max(1.0, std::abs(mu)));
        worst_sigma = std::max(worst_sigma, std::abs(back.sigma() - sigma) / sigma);
    }
    const double e = std::numbers::e;
    const auto pair = ln_from_mean_variance(MeanVariance<>(std::exp(0.5), e * (e - 1.0)));
    const bool pair_ok = std::abs(pair.mu()) <= 1e-12 && std::abs(pair.sigma() - 1.0) <= 1e-12;
    return {worst_mu <= 1e-12 && worst_sigma <= 1e-12 && pair_ok,
            fmt("max rel err mu %.1e, sigma %.1e over 1e4 pairs; (e^0.5, e(e-1)) -> (%.3g, %.15g)", worst_mu,
                worst_sigma, pair.mu(), pair.sigma())};
}

// ------------------------------------------------------------------ 3
std::vector<EnsembleForecast> single_member_data(TruthModel truth, std::uint64_t seed, int days = 100,
                                                 int stations = 20) {
    ScenarioConfig c;
    c.days = days;
    c.stations = stations;
    c.groups = GroupSpec::exchangeable(1);
    c.truth = std::move(truth);
    c.seed = seed;
    return generate(c);
}

const TnParams kTnTruth{0.3, Eigen::VectorXd::Constant(1, 0.8), 0.5, 1.2};
const LnParams kLnTruth{0.2, Eigen::VectorXd::Constant(1, 1.0), 0.4, 0.9};
const GevParams kGevTruth{0.5, Eigen::VectorXd::Constant(1, 1.0), 0.8, 0.2, 0.1};

Outcome estimation_oracle() {
    const GroupSpec g = GroupSpec::exchangeable(1);
    double worst_gap = 0.0, slowest = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tn = make_design(single_member_data(kTnTruth, seed), g);
        const auto ln = make_design(single_member_data(kLnTruth, seed + 100), g);
        const auto gev = make_design(single_member_data(kGevTruth, seed + 200), g);
        auto t0 = std::chrono::steady_clock::now();
        const FitResult a = fit_min_crps(default_tn(g), tn);
        slowest = std::max(slowest, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        const FitResult b = fit_min_crps(default_ln(g), ln);
        slowest = std::max(slowest, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        const FitResult c = fit_gev_ml(default_gev(g), gev);
        slowest = std::max(slowest, seconds_since(t0));
        worst_gap = std::max({worst_gap, std::abs(a.objective - mean_crps(kTnTruth, tn)),
                              std::abs(b.objective - mean_crps(kLnTruth, ln)),
                              std::abs(c.objective - mean_nll(kGevTruth, gev))});
    }
    return {worst_gap <= 0.01 && slowest < 10.0,
            fmt("max |fitted - truth| objective %.4f over 5 seeds x {TN, LN, GEV} at 2000 cases; slowest fit %.2f s",
                worst_gap, slowest)};
}

// ------------------------------------------------------------------ 4
Outcome calibration_improvement() {
    ScenarioConfig c = preset("underdispersed", 404);
    c.days = 30 + 500;
    c.stations = 20;
    const Dataset ds = as_dataset(generate(c), c.groups);

    struct Row {
        const char* name;
        double crps;
        double coverage;
    };
    std::vector<Row> rows;
    double nominal = 0.0;
    std::size_t cases = 0;
    for (Method m : {Method::raw, Method::climatology, Method::tn, Method::ln, Method::gev, Method::tn_ln,
                     Method::tn_gev}) {
        RunConfig cfg;
        cfg.method = m;
        cfg.train_days = 30;
        cfg.theta = 6.0;
        cfg.seed = 404;
        const MethodRun run = run_method(cfg, ds);
        const VerificationReport rep = build_report(std::string(method_name(m)), run.cases, {.seed = 404});
        rows.push_back({method_name(m).data(), rep.scores.mean_crps, rep.coverage_pct});
        nominal = rep.nominal_coverage_pct;
        cases = rep.cases;
    }
    const Row raw = rows[0], clim = rows[1];
    bool ok = cases >= 10000 && raw.coverage <= nominal - 15.0;
    std::string detail = fmt("%zu cases, nominal %.2f%%; raw CRPS %.3f cov %.2f%%; climatology CRPS %.3f", cases,
                             nominal, raw.crps, raw.coverage, clim.crps);
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const Row& r = rows[i];
        ok = ok && r.crps <= 0.9 * raw.crps && r.crps < clim.crps && std::abs(r.coverage - nominal) <= 3.0;
        detail += fmt("; %s CRPS %.3f cov %.2f%%", r.name, r.crps, r.coverage);
    }
    return {ok, detail};
}

// ------------------------------------------------------------------ 5
// Fit a family on data from its own law, draw fresh observations from the
// fitted predictive on new ensembles, refit on those and test the PIT.
Outcome pit_uniformity() {
    const GroupSpec g = GroupSpec::exchangeable(1);
    const std::vector<std::pair<const char*, ModelParams>> families{
        {"TN", kTnTruth}, {"LN", kLnTruth}, {"GEV", kGevTruth}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, truth] : families) {
        int passes = 0;
        double min_p = 1.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const TruthModel tm = std::visit([](const auto& p) { return TruthModel(p); }, truth);
            const auto train = make_design(single_member_data(tm, derive_seed(seed, 50)), g);
            const ModelParams init = std::visit(
                [&](const auto& p) -> ModelParams {
                    using P = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<P, TnParams>) return default_tn(g);
                    else if constexpr (std::is_same_v<P, LnParams>) return default_ln(g);
                    else return default_gev(g);
                },
                truth);
            const ModelParams fitted = fit(init, train).params;

            // Fresh ensembles; keep cases whose predictive has no mass below
            // zero so every drawn observation is a valid wind speed.
            auto fresh = single_member_data(LatentTruth{}, derive_seed(seed, 51), 1500, 20);
            Rng rng(derive_seed(seed, 52));
            std::vector<EnsembleForecast> sim;
            for (auto& f : fresh) {
                const auto d = predict(fitted, g, f).distribution;
                if (neg_mass(d) > 1e-12) continue;
                f.obs = sample(d, rng);
                sim.push_back(std::move(f));
                if (sim.size() == 10000) break;
            }
            const ModelParams refit = fit(init, make_design(sim, g)).params;
            std::vector<double> u;
            u.reserve(sim.size());
            for (const auto& f : sim) u.push_back(pit(predict(refit, g, f).distribution, *f.obs));
            const double p = ks_uniform_test(u).p_value;
            passes += p > 0.01 && sim.size() == 10000;
            min_p = std::min(min_p, p);
        }
        ok = ok && passes >= 3;
        detail += fmt("%s%s %d/5 seeds p > 0.01 (min p %.3f)", detail.empty() ? "" : "; ", name, passes, min_p);
    }
    return {ok, detail + " at n = 1e4"};
}

// ------------------------------------------------------------------ 6
Outcome regime_recovery() {
    ScenarioConfig c = preset("switching", 606);
    c.days = 50;
    c.stations = 20;
    const auto select = generate(c);
    const std::vector<int> lengths{20, 30};
    const std::vector<double> thetas = parse_double_range("4.0..8.0:0.1");
    const GridSearchResult grid = grid_search(ModelSpec{ModelKind::tn_ln}, c.groups, select, lengths, thetas);
    const bool theta_ok = std::abs(grid.chosen_theta - 6.0) <= 0.1 + 1e-9;

    // Skill on an independent period, with the chosen cell.
    ScenarioConfig v = preset("switching", 607);
    v.days = grid.chosen_train_days + 100;
    v.stations = 20;
    const Dataset ds = as_dataset(generate(v), v.groups);
    RunConfig cfg;
    cfg.train_days = grid.chosen_train_days;
    cfg.theta = grid.chosen_theta;
    cfg.method = Method::tn;
    const MethodRun tn = run_method(cfg, ds);
    cfg.method = Method::tn_ln;
    const MethodRun mix = run_method(cfg, ds);

    std::vector<double> obs;
    for (const auto& vc : tn.cases) obs.push_back(vc.obs);
    const double p90 = percentile(obs, 0.90);
    std::vector<double> thresholds;
    for (double r : skill_thresholds(obs))
        if (r > p90) thresholds.push_back(r);
    for (double p : {0.925, 0.95, 0.975, 0.99}) thresholds.push_back(percentile(obs, p));
    std::sort(thresholds.begin(), thresholds.end());

    double min_skill = std::numeric_limits<double>::infinity();
    for (const auto& row : skill_curve(mix, tn, thresholds))
        min_skill = std::min(min_skill, row.skill.value_or(-std::numeric_limits<double>::infinity()));
    return {theta_ok && min_skill > 0.0,
            fmt("chosen theta %.1f (n = %d) from a 0.1 grid over 4..8; min twCRPSS vs TN %.4f over %zu thresholds "
                "above the 90th percentile (%.2f m/s)",
                grid.chosen_theta, grid.chosen_train_days, min_skill, thresholds.size(), p90)};
}

// ------------------------------------------------------------------ 7
Outcome diagnostics_exactness() {
    std::vector<std::size_t> one_hot(9, 0);
    one_hot[3] = 7;
    const bool ok = reliability_index(RankHistogram(std::vector<std::size_t>{3, 3, 3, 3})) == 0.0 &&
                    reliability_index(RankHistogram(std::vector<std::size_t>{2, 2, 0, 0})) == 1.0 &&
                    reliability_index(RankHistogram(one_hot)) == 16.0 / 9.0 && nominal_coverage(8) == 7.0 / 9.0 &&
                    nominal_coverage(50) == 49.0 / 51.0 && nominal_coverage(11) == 10.0 / 12.0 &&
                    crps_empirical(std::vector<double>{1.0, 3.0}, 2.0) == 0.5;
    return {ok, fmt("Delta %.17g / %.17g / %.17g; coverages %.4f%% / %.4f%% / %.4f%%; crps_empirical({1,3}, 2) = %g",
                    reliability_index(RankHistogram(std::vector<std::size_t>{3, 3, 3, 3})),
                    reliability_index(RankHistogram(std::vector<std::size_t>{2, 2, 0, 0})),
                    reliability_index(RankHistogram(one_hot)), 100.0 * nominal_coverage(8),
                    100.0 * nominal_coverage(50), 100.0 * nominal_coverage(11),
                    crps_empirical(std::vector<double>{1.0, 3.0}, 2.0))};
}

// ------------------------------------------------------------------ 8
bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::vector<fs::path> left, right;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) left.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) right.push_back(fs::relative(e.path(), b));
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    if (left != right || left.empty()) return false;
    for (const auto& f : left)
        if (read_file(a / f) != read_file(b / f)) return false;
    files = left.size();
    return true;
}

Outcome determinism() {
    int failures = 0;
    for (const char* run : {"run1", "run2"}) {
        const fs::path dir = scratch() / run;
        fs::create_directories(dir);
        const std::string data = (dir / "data.csv").string();
        failures += run_cli("simulate --scenario underdispersed --seed 7 --days 60 --stations 10 -o " + data) != 0;
        failures += run_cli("calibrate -i " + data + " --model tn-ln --theta 6 -n 30 --seed 7 -j 2 -o " +
                            (dir / "calibrate").string()) != 0;
        failures += run_cli("verify -i " + data + " --model raw -n 30 --seed 7 -o " + (dir / "raw").string()) != 0;
        failures += run_cli("grid-search -i " + data + " --model tn-gev -n 20..30:10 --theta 5.5..6.5:0.5 --seed 7 -j 2 -o " +
                            (dir / "grid").string()) != 0;
    }
    std::size_t files = 0;
    const bool same = same_tree(scratch() / "run1", scratch() / "run2", files);
    return {failures == 0 && same, fmt("%d failed commands; %zu output files %s", failures, files,
                                       same ? "byte-identical" : "differ")};
}

// ------------------------------------------------------------------ 9
Outcome negative_mass_reporting() {
    const fs::path data = scratch() / "negmass.csv";
    if (run_cli("simulate --scenario underdispersed --seed 9 --days 45 --stations 10 -o " + data.string()) != 0)
        return {false, "simulate failed"};
    bool ok = true;
    std::string detail;
    for (const char* model : {"gev", "tn", "ln"}) {
        const fs::path out = scratch() / (std::string("negmass_") + model);
        if (run_cli("verify -i " + data.string() + " --model " + model + " -n 30 -o " + out.string()) != 0)
            return {false, std::string(model) + " run failed"};
        const auto rep = nlohmann::ordered_json::parse(read_file(out / "report.json"));
        const auto& nm = rep.at("negative_mass");
        if (!nm.at("mean").is_number() || !nm.at("max").is_number()) return {false, std::string(model) + ": missing"};
        const double mean = nm["mean"].get<double>(), max = nm["max"].get<double>();
        if (std::string(model) == "gev") ok = ok && mean >= 0.0 && max >= mean;
        else ok = ok && mean == 0.0 && max == 0.0;
        detail += fmt("%s%s mean %.3g max %.3g", detail.empty() ? "" : "; ", model, mean, max);
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <emos-cli>\n");
        return 2;
    }
    g_cli = argv[1];

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"closed-form CRPS matches quadrature", closed_form_fidelity},
        {"log-normal mean/variance round trip", transform_round_trip},
        {"fits reach the generating parameters' score", estimation_oracle},
        {"post-processing improves skill and calibration", calibration_improvement},
        {"PIT uniform under correct specification", pit_uniformity},
        {"regime threshold recovered and mixture skilful", regime_recovery},
        {"diagnostic unit cases exact", diagnostics_exactness},
        {"CLI runs are byte-identical", determinism},
        {"negative mass reported", negative_mass_reporting},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %zu: %s [%s] (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    fs::remove_all(scratch());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
