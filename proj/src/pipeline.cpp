#include "emos/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emos/dates.hpp"
#include "emos/errors.hpp"
#include "emos/log.hpp"
#include "emos/synthetic.hpp"

namespace emos {

namespace {

// Stream indices for derive_seed.
constexpr std::uint64_t kRankStream = 1;

constexpr std::pair<Method, std::string_view> kMethods[] = {
    {Method::tn, "tn"},       {Method::ln, "ln"},   {Method::gev, "gev"},
    {Method::tn_ln, "tn-ln"}, {Method::tn_gev, "tn-gev"}, {Method::raw, "raw"},
    {Method::climatology, "climatology"},
};

}  // namespace

Method parse_method(std::string_view name) {
    for (const auto& [m, n] : kMethods)
        if (n == name) return m;
    throw ConfigError("unknown model '" + std::string(name) +
                      "' (expected tn, ln, gev, tn-ln, tn-gev, raw or climatology)");
}

std::string_view method_name(Method m) {
    for (const auto& [k, n] : kMethods)
        if (k == m) return n;
    return "?";
}

std::optional<ModelKind> model_kind(Method m) {
    switch (m) {
        case Method::tn: return ModelKind::tn;
        case Method::ln: return ModelKind::ln;
        case Method::gev: return ModelKind::gev;
        case Method::tn_ln: return ModelKind::tn_ln;
        case Method::tn_gev: return ModelKind::tn_gev;
        default: return std::nullopt;
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.train_days < 1) throw ConfigError("--train-days must be at least 1");
    const auto kind = model_kind(cfg.method);
    if (kind && is_mixture(*kind) && !cfg.theta)
        throw ConfigError("model " + std::string(method_name(cfg.method)) + " needs --theta");
    if (cfg.theta && !std::isfinite(*cfg.theta)) throw ConfigError("--theta must be finite");
    if (cfg.alpha && !(*cfg.alpha > 0.0 && *cfg.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
    for (double r : cfg.thresholds)
        if (!std::isfinite(r)) throw ConfigError("thresholds must be finite");
    if (cfg.verify_from && cfg.verify_to && *cfg.verify_to < *cfg.verify_from)
        throw ConfigError("verification period ends before it starts");
    if (cfg.workers < 1) throw ConfigError("--workers must be at least 1");
}

MethodRun run_method(const RunConfig& cfg, const Dataset& ds) {
    MethodRun out;
    out.method = cfg.method;
    const auto& data = ds.cases;

    if (const auto kind = model_kind(cfg.method)) {
        const ModelSpec spec{*kind, cfg.theta.value_or(std::numeric_limits<double>::infinity()), cfg.strategy};
        RollingOptions opts;
        opts.first_day = cfg.verify_from;
        opts.last_day = cfg.verify_to;
        opts.optimizer = cfg.optimizer;
        RollingResult r = rolling_calibrate(spec, ds.groups, data, cfg.train_days, opts);
        for (auto& p : r.predictions) {
            const EnsembleForecast& f = data[p.case_index];
            if (!f.obs) continue;
            if (p.floored) ++out.floored_cases;
            out.cases.push_back({Forecast(std::move(p.distribution)), *f.obs, f.members});
        }
        out.fits = std::move(r.fits);
        out.skipped = std::move(r.skipped);
        out.warnings = std::move(r.warnings);
    } else {
        const DayIndex idx = index_days(data);
        const auto n = static_cast<std::size_t>(cfg.train_days);
        for (std::size_t day = 0; day < idx.dates.size(); ++day) {
            const Date date = idx.dates[day];
            if (cfg.verify_from && date < *cfg.verify_from) continue;
            if (cfg.verify_to && date > *cfg.verify_to) continue;
            if (day < n) {
                out.skipped.push_back({date, "insufficient history: " + std::to_string(day) +
                                                 " prior days with data, " + std::to_string(n) + " required"});
                continue;
            }
            const std::span<const EnsembleForecast> window_cases(data.data() + idx.begin[day - n],
                                                                 idx.begin[day] - idx.begin[day - n]);
            const TrainingWindow window{cfg.train_days, window_cases};
            for (std::size_t i = idx.begin[day]; i < idx.begin[day + 1]; ++i) {
                const EnsembleForecast& f = data[i];
                if (!f.obs) continue;
                if (cfg.method == Method::raw) {
                    std::vector<double> m(f.members.data(), f.members.data() + f.members.size());
                    out.cases.push_back({Forecast(EmpiricalDistribution(std::move(m))), *f.obs, f.members});
                    continue;
                }
                try {
                    out.cases.push_back({Forecast(climatology_forecast(window, f.station)), *f.obs, f.members});
                } catch (const InputError&) {
                    std::vector<double> pooled;
                    for (const auto& c : window_cases)
                        if (c.obs) pooled.push_back(*c.obs);
                    if (pooled.empty()) throw InsufficientData("climatology: no observations in training window");
                    out.warnings.push_back(format_date(date) + ": station " + f.station +
                                           " has no training observations; using the pooled window");
                    out.cases.push_back({Forecast(EmpiricalDistribution(std::move(pooled))), *f.obs, f.members});
                }
            }
        }
    }
    if (out.cases.empty())
        throw InsufficientData("no verification cases: the period has no day with " +
                               std::to_string(cfg.train_days) + " prior days of data");
    return out;
}

namespace {

double forecast_twcrps(const Forecast& f, double obs, double r) {
    if (const auto* d = std::get_if<PredictiveDistribution>(&f)) return twcrps(*d, obs, r);
    return twcrps(std::get<EmpiricalDistribution>(f), obs, r);
}

double mean_twcrps(const MethodRun& run, double r) {
    std::vector<double> v;
    v.reserve(run.cases.size());
    for (const auto& c : run.cases) v.push_back(forecast_twcrps(c.forecast, c.obs, r));
    return pairwise_mean(v);
}

std::vector<double> observations(const MethodRun& run) {
    std::vector<double> obs;
    obs.reserve(run.cases.size());
    for (const auto& c : run.cases) obs.push_back(c.obs);
    return obs;
}

}  // namespace

std::vector<SkillRow> skill_curve(const MethodRun& run, const MethodRun& reference, std::span<const double> thresholds) {
    if (run.cases.size() != reference.cases.size())
        throw InputError("skill curve: forecast and reference cover different cases");
    for (std::size_t i = 0; i < run.cases.size(); ++i)
        if (run.cases[i].obs != reference.cases[i].obs)
            throw InputError("skill curve: forecast and reference cover different cases");
    std::vector<SkillRow> rows;
    for (double r : thresholds) {
        SkillRow row{r, mean_twcrps(run, r), 0.0, std::nullopt};
        row.reference = &run == &reference ? row.twcrps : mean_twcrps(reference, r);
        if (row.reference > 0.0) row.skill = twcrpss(row.twcrps, row.reference);
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> skill_thresholds(std::span<const double> obs) {
    const double lo = std::ceil(2.0 * percentile(obs, 0.50)) / 2.0;
    const double hi = percentile(obs, 0.99);
    std::vector<double> out;
    for (int i = 0; lo + 0.5 * i <= hi; ++i) out.push_back(lo + 0.5 * i);
    if (out.empty()) out.push_back(lo);
    return out;
}

namespace {

using json = nlohmann::ordered_json;

json optional_number(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
}

std::string csv_number(std::optional<double> v) {
    return v && std::isfinite(*v) ? format_number(*v) : std::string("NA");
}

std::string join_weights(const Eigen::VectorXd& w) {
    std::string s;
    for (Eigen::Index i = 0; i < w.size(); ++i) s += (i ? ";" : "") + format_number(w[i]);
    return s;
}

std::string params_row(const ModelParams& p) {
    return std::visit(
        [](const auto& v) -> std::string {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, TnParams>)
                return "tn," + format_number(v.a0) + "," + join_weights(v.a) + "," + format_number(v.b0) + "," +
                       format_number(v.b1) + ",NA";
            else if constexpr (std::is_same_v<P, LnParams>)
                return "ln," + format_number(v.alpha0) + "," + join_weights(v.alpha) + "," + format_number(v.beta0) +
                       "," + format_number(v.beta1) + ",NA";
            else
                return "gev," + format_number(v.gamma0) + "," + join_weights(v.gamma) + "," +
                       format_number(v.sigma0) + "," + format_number(v.sigma1) + "," + format_number(v.xi);
        },
        p);
}

ReportOptions report_options(const RunConfig& cfg) {
    ReportOptions o;
    o.thresholds = cfg.thresholds;
    o.alpha = cfg.alpha;
    o.seed = derive_seed(cfg.seed, kRankStream);
    return o;
}

}  // namespace

nlohmann::ordered_json report_json(const RunConfig& cfg, const Dataset& ds, const MethodRun& run,
                                   const VerificationReport& rep) {
    const auto kind = model_kind(cfg.method);
    const bool mixture = kind && is_mixture(*kind);
    const bool parametric = kind.has_value();

    json j;
    j["model"] = method_name(cfg.method);
    j["train_days"] = cfg.train_days;
    j["theta"] = mixture ? optional_number(cfg.theta) : json(nullptr);
    j["training_strategy"] =
        mixture ? json(cfg.strategy == TrainingStrategy::split ? "split" : "shared") : json(nullptr);
    j["seed"] = cfg.seed;
    j["groups"] = std::vector<int>(ds.groups.sizes().begin(), ds.groups.sizes().end());
    j["members"] = ds.groups.members();
    j["dropped_rows"] = ds.dropped_rows;
    j["cases"] = rep.cases;

    json s;
    s["mean_crps"] = rep.scores.mean_crps;
    json tw = json::array();
    for (const auto& t : rep.scores.mean_twcrps) tw.push_back({{"threshold", t.threshold}, {"value", t.mean_twcrps}});
    s["mean_twcrps"] = tw;
    s["mean_log_score"] = parametric ? optional_number(rep.scores.mean_log_score) : json(nullptr);
    s["infinite_log_scores"] = parametric ? json(rep.scores.infinite_log_scores) : json(nullptr);
    s["mae_median"] = rep.scores.mae;
    s["rmse_mean"] = finite_or_null(rep.scores.rmse);
    s["undefined_mean_cases"] = rep.undefined_mean_cases;
    j["scores"] = s;

    json rh;
    rh["classes"] = rep.rank_classes;
    rh["counts"] = rep.rank_counts;
    rh["reliability_index"] = rep.reliability_index;
    rh["tie_break_seed"] = rep.seed;
    j["rank_histogram"] = rh;

    json iv;
    iv["alpha"] = rep.alpha;
    iv["nominal_coverage_pct"] = rep.nominal_coverage_pct;
    iv["coverage_pct"] = rep.coverage_pct;
    iv["average_width"] = rep.average_width;
    j["central_interval"] = iv;

    json pit;
    pit["bins"] = rep.pit_counts.empty() ? json(nullptr) : json(rep.pit_counts.size());
    pit["counts"] = rep.pit_counts.empty() ? json(nullptr) : json(rep.pit_counts);
    pit["ks_statistic"] = optional_number(rep.ks_statistic);
    pit["ks_p_value"] = optional_number(rep.ks_p_value);
    j["pit"] = pit;

    json nm;
    nm["mean"] = rep.neg_mass_mean;
    nm["max"] = rep.neg_mass_max;
    j["negative_mass"] = nm;

    json fit;
    fit["days_fitted"] = parametric ? json(run.fits.size()) : json(nullptr);
    std::size_t unconverged = 0;
    for (const auto& f : run.fits)
        if (!f.converged) ++unconverged;
    fit["unconverged_days"] = parametric ? json(unconverged) : json(nullptr);
    fit["floored_cases"] = parametric ? json(run.floored_cases) : json(nullptr);
    j["fitting"] = fit;

    j["skipped_days"] = run.skipped.size();
    j["warnings"] = run.warnings;
    return j;
}

namespace {

void run_and_write(const RunConfig& cfg, bool write_params) {
    validate(cfg);
    const Dataset ds = ingest(cfg.input, cfg.groups);
    log::info("ingested " + std::to_string(ds.cases.size()) + " cases");
    const MethodRun run = run_method(cfg, ds);
    for (const auto& w : run.warnings) log::warn(w);
    const VerificationReport rep = build_report(std::string(method_name(cfg.method)), run.cases, report_options(cfg));

    std::optional<MethodRun> tn_run;
    if (cfg.method != Method::tn) {
        RunConfig ref = cfg;
        ref.method = Method::tn;
        tn_run = run_method(ref, ds);
    }
    const MethodRun& reference = tn_run ? *tn_run : run;
    const std::vector<double> thresholds = skill_thresholds(observations(run));
    const auto rows = skill_curve(run, reference, thresholds);

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw InputError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

    write_text(cfg.output_dir / "report.json", report_json(cfg, ds, run, rep).dump(2) + "\n");

    std::ostringstream ranks;
    ranks << "rank,count\n";
    for (std::size_t i = 0; i < rep.rank_counts.size(); ++i) ranks << i + 1 << ',' << rep.rank_counts[i] << '\n';
    write_text(cfg.output_dir / "rank_histogram.csv", ranks.str());

    std::ostringstream pit;
    pit << "bin_lower,bin_upper,count\n";
    const std::size_t bins = rep.pit_counts.size();
    for (std::size_t i = 0; i < bins; ++i)
        pit << format_number(static_cast<double>(i) / bins) << ',' << format_number(static_cast<double>(i + 1) / bins)
            << ',' << rep.pit_counts[i] << '\n';
    write_text(cfg.output_dir / "pit_histogram.csv", pit.str());

    std::ostringstream skill;
    skill << "threshold,model,twcrps,reference_twcrps,twcrpss\n";
    for (const auto& r : rows) {
        const std::optional<double> self = r.reference > 0.0 ? std::optional<double>(0.0) : std::nullopt;
        skill << format_number(r.threshold) << ",tn," << format_number(r.reference) << ','
              << format_number(r.reference) << ',' << csv_number(self) << '\n';
        if (cfg.method != Method::tn)
            skill << format_number(r.threshold) << ',' << method_name(cfg.method) << ',' << format_number(r.twcrps)
                  << ',' << format_number(r.reference) << ',' << csv_number(r.skill) << '\n';
    }
    write_text(cfg.output_dir / "twcrpss.csv", skill.str());

    if (write_params && model_kind(cfg.method)) {
        std::ostringstream params;
        params << "date,regime,family,intercept,weights,scale0,scale1,shape\n";
        for (const auto& f : run.fits) {
            params << format_date(f.date) << ",low," << params_row(f.low) << '\n';
            if (f.high) params << format_date(f.date) << ",high," << params_row(*f.high) << '\n';
        }
        write_text(cfg.output_dir / "parameters.csv", params.str());
    }
    log::info("wrote outputs to " + cfg.output_dir.string());
}

}  // namespace

void calibrate(const RunConfig& cfg) { run_and_write(cfg, true); }
void verify(const RunConfig& cfg) { run_and_write(cfg, false); }

GridSearchResult grid_search(const GridConfig& cfg) {
    const RunConfig& run = cfg.run;
    RunConfig checked = run;
    checked.theta = cfg.thetas.empty() ? std::optional<double>() : std::optional<double>(cfg.thetas.front());
    validate(checked);
    const auto kind = model_kind(run.method);
    if (!kind) throw ConfigError("grid search needs a post-processing model, not " + std::string(method_name(run.method)));
    if (cfg.lengths.empty()) throw ConfigError("grid search needs at least one training length");
    for (int n : cfg.lengths)
        if (n < 1) throw ConfigError("training lengths must be at least 1");

    const Dataset ds = ingest(run.input, run.groups);
    GridSearchOptions opts;
    opts.first_day = cfg.select_from;
    opts.last_day = cfg.select_to;
    if (!cfg.select_from && !cfg.select_to && run.verify_from) opts.last_day = *run.verify_from - std::chrono::days(1);
    opts.workers = run.workers;
    opts.optimizer = run.optimizer;
    const ModelSpec spec{*kind, std::numeric_limits<double>::infinity(), run.strategy};
    const GridSearchResult result = grid_search(spec, ds.groups, ds.cases, cfg.lengths, cfg.thetas, opts);

    std::error_code ec;
    std::filesystem::create_directories(run.output_dir, ec);
    if (ec) throw InputError("cannot create " + run.output_dir.string() + ": " + ec.message());

    const bool mixture = is_mixture(*kind);
    auto theta_text = [&](double t) { return mixture ? format_number(t) : std::string("NA"); };

    std::ostringstream grid, by_length, by_theta;
    grid << "train_days,theta,mean_crps,cases\n";
    by_length << "train_days,mean_crps\n";
    by_theta << "theta,mean_crps\n";
    json cells = json::array();
    for (const auto& c : result.cells) {
        grid << c.train_days << ',' << theta_text(c.theta) << ',' << csv_number(c.mean_crps) << ',' << c.cases << '\n';
        if (!mixture || c.theta == result.chosen_theta)
            by_length << c.train_days << ',' << csv_number(c.mean_crps) << '\n';
        if (mixture && c.train_days == result.chosen_train_days)
            by_theta << format_number(c.theta) << ',' << csv_number(c.mean_crps) << '\n';
        cells.push_back({{"train_days", c.train_days},
                         {"theta", mixture ? json(c.theta) : json(nullptr)},
                         {"mean_crps", finite_or_null(c.mean_crps)},
                         {"cases", c.cases}});
    }
    write_text(run.output_dir / "grid.csv", grid.str());
    write_text(run.output_dir / "grid_crps_vs_length.csv", by_length.str());
    write_text(run.output_dir / "grid_crps_vs_theta.csv", by_theta.str());

    json j;
    j["model"] = method_name(run.method);
    j["training_strategy"] =
        mixture ? json(run.strategy == TrainingStrategy::split ? "split" : "shared") : json(nullptr);
    j["seed"] = run.seed;
    j["selection_from"] = opts.first_day ? json(format_date(*opts.first_day)) : json(nullptr);
    j["selection_to"] = opts.last_day ? json(format_date(*opts.last_day)) : json(nullptr);
    j["chosen"] = {{"train_days", result.chosen_train_days},
                   {"theta", mixture ? json(result.chosen_theta) : json(nullptr)}};
    j["cells"] = cells;
    write_text(run.output_dir / "grid.json", j.dump(2) + "\n");
    return result;
}

void simulate(const SimulateConfig& cfg) {
    ScenarioConfig sc = preset(cfg.scenario, cfg.seed);
    if (cfg.days) sc.days = *cfg.days;
    if (cfg.stations) sc.stations = *cfg.stations;
    const auto data = generate(sc);
    if (cfg.output.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.output.parent_path(), ec);
        if (ec) throw InputError("cannot create " + cfg.output.parent_path().string() + ": " + ec.message());
    }
    write_dataset(cfg.output, data, sc.groups);
    log::info("wrote " + std::to_string(data.size()) + " cases to " + cfg.output.string());
}

namespace {

template <typename T>
T parse_value(std::string_view s, std::string_view what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("cannot parse '" + std::string(s) + "' in " + std::string(what));
    return v;
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = text.find(',', start);
        out.push_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) return out;
        start = comma + 1;
    }
}

struct RangeParts {
    std::string_view lo, hi;
    std::optional<std::string_view> step;
};

std::optional<RangeParts> split_range(std::string_view tok) {
    const auto dots = tok.find("..");
    if (dots == std::string_view::npos) return std::nullopt;
    RangeParts r{tok.substr(0, dots), tok.substr(dots + 2), std::nullopt};
    if (const auto colon = r.hi.find(':'); colon != std::string_view::npos) {
        r.step = r.hi.substr(colon + 1);
        r.hi = r.hi.substr(0, colon);
    }
    return r;
}

}  // namespace

std::vector<int> parse_int_range(std::string_view text) {
    std::vector<int> out;
    for (auto tok : split_list(text)) {
        if (const auto r = split_range(tok)) {
            const int lo = parse_value<int>(r->lo, text);
            const int hi = parse_value<int>(r->hi, text);
            const int step = r->step ? parse_value<int>(*r->step, text) : 1;
            if (step < 1 || hi < lo) throw ConfigError("bad range '" + std::string(text) + "'");
            for (int v = lo; v <= hi; v += step) out.push_back(v);
        } else {
            out.push_back(parse_value<int>(tok, text));
        }
    }
    return out;
}

std::vector<double> parse_double_range(std::string_view text) {
    std::vector<double> out;
    for (auto tok : split_list(text)) {
        if (const auto r = split_range(tok)) {
            const double lo = parse_value<double>(r->lo, text);
            const double hi = parse_value<double>(r->hi, text);
            if (!r->step) throw ConfigError("range '" + std::string(tok) + "' needs a step, e.g. 4.0..8.0:0.1");
            const double step = parse_value<double>(*r->step, text);
            if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("bad range '" + std::string(text) + "'");
            const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
            for (long i = 0; i < count; ++i) out.push_back(std::round((lo + step * i) * 1e9) / 1e9);
        } else {
            out.push_back(parse_value<double>(tok, text));
        }
    }
    return out;
}

}  // namespace emos
