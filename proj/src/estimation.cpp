#include "emos/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "emos/dates.hpp"
#include "emos/errors.hpp"

namespace emos {

TrainingDesign make_design(std::span<const EnsembleForecast> cases, const GroupSpec& g,
                           const std::function<bool(const EnsembleForecast&)>& keep) {
    std::vector<const EnsembleForecast*> used;
    used.reserve(cases.size());
    for (const auto& c : cases)
        if (c.obs && (!keep || keep(c))) used.push_back(&c);

    const auto n = static_cast<Eigen::Index>(used.size());
    TrainingDesign d;
    d.group_sums.resize(n, g.groups());
    d.mean.resize(n);
    d.variance.resize(n);
    d.median.resize(n);
    d.obs.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const EnsembleForecast& c = *used[static_cast<std::size_t>(i)];
        if (c.members.size() != g.members()) throw InputError("training case does not match the group spec");
        d.group_sums.row(i) = g.group_sums(c.members).transpose();
        d.mean[i] = c.members.mean();
        d.variance[i] = link_variance(c.members);
        d.median[i] = ensemble_median(c.members);
        d.obs[i] = *c.obs;
    }
    return d;
}

bool is_mixture(ModelKind kind) { return kind == ModelKind::tn_ln || kind == ModelKind::tn_gev; }

ModelKind parse_model_kind(std::string_view name) {
    if (name == "tn") return ModelKind::tn;
    if (name == "ln") return ModelKind::ln;
    if (name == "gev") return ModelKind::gev;
    if (name == "tn-ln") return ModelKind::tn_ln;
    if (name == "tn-gev") return ModelKind::tn_gev;
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::tn: return "tn";
        case ModelKind::ln: return "ln";
        case ModelKind::gev: return "gev";
        case ModelKind::tn_ln: return "tn-ln";
        case ModelKind::tn_gev: return "tn-gev";
    }
    return "?";
}

// -------------------------------------------------------- reparameterization

namespace {

// Layout: [intercept, sqrt(weights)..., sqrt(b0), sqrt(b1)]
Eigen::VectorXd pack_nonneg(double intercept, const Eigen::VectorXd& w, double s0, double s1) {
    Eigen::VectorXd u(w.size() + 3);
    u[0] = intercept;
    u.segment(1, w.size()) = w.cwiseSqrt();
    u[w.size() + 1] = std::sqrt(s0);
    u[w.size() + 2] = std::sqrt(s1);
    return u;
}

void require_size(const Eigen::VectorXd& u, Eigen::Index expected) {
    if (u.size() != expected) throw InvalidParameter("optimizer vector has the wrong length");
}

}  // namespace

Eigen::VectorXd pack(const TnParams& p) { return pack_nonneg(p.a0, p.a, p.b0, p.b1); }
Eigen::VectorXd pack(const LnParams& p) { return pack_nonneg(p.alpha0, p.alpha, p.beta0, p.beta1); }

Eigen::VectorXd pack(const GevParams& p) {
    Eigen::VectorXd u(p.gamma.size() + 4);
    u[0] = p.gamma0;
    u.segment(1, p.gamma.size()) = p.gamma;
    u.tail(3) << p.sigma0, p.sigma1, p.xi;
    return u;
}

TnParams unpack_tn(const Eigen::VectorXd& u, int groups) {
    require_size(u, groups + 3);
    return {u[0], u.segment(1, groups).cwiseAbs2(), u[groups + 1] * u[groups + 1], u[groups + 2] * u[groups + 2]};
}

LnParams unpack_ln(const Eigen::VectorXd& u, int groups) {
    require_size(u, groups + 3);
    return {u[0], u.segment(1, groups).cwiseAbs2(), u[groups + 1] * u[groups + 1], u[groups + 2] * u[groups + 2]};
}

GevParams unpack_gev(const Eigen::VectorXd& u, int groups) {
    require_size(u, groups + 4);
    return {u[0], u.segment(1, groups), u[groups + 1], u[groups + 2], u[groups + 3]};
}

// ---------------------------------------------------------------- objectives

namespace {

void require_cases(const TrainingDesign& d) {
    if (d.cases() == 0) throw InsufficientData("training window has no cases with observations");
}

template <typename F>
double mean_over_cases(const TrainingDesign& d, F&& per_case) {
    std::vector<double> values(static_cast<std::size_t>(d.cases()));
    for (Eigen::Index i = 0; i < d.cases(); ++i) values[static_cast<std::size_t>(i)] = per_case(i);
    return pairwise_mean(values);
}

struct LinkArrays {
    Eigen::VectorXd location;
    Eigen::VectorXd spread;
};

LinkArrays tn_arrays(const TnParams& p, const TrainingDesign& d) {
    return {(d.group_sums * p.a).array() + p.a0, (p.b0 + p.b1 * d.variance.array()).matrix()};
}

LinkArrays ln_arrays(const LnParams& p, const TrainingDesign& d) {
    return {(d.group_sums * p.alpha).array() + p.alpha0, (p.beta0 + p.beta1 * d.variance.array()).matrix()};
}

LinkArrays gev_arrays(const GevParams& p, const TrainingDesign& d) {
    return {(d.group_sums * p.gamma).array() + p.gamma0, (p.sigma0 + p.sigma1 * d.mean.array()).matrix()};
}

double gev_case_nll(double location, double scale, double xi, double x, bool& feasible) {
    const Gev<double> dist = gev_link(location, scale, xi).distribution;
    const double lp = log_pdf(dist, x);
    feasible = std::isfinite(lp);
    return feasible ? -lp : kSupportPenalty;
}

}  // namespace

double mean_crps(const TnParams& p, const TrainingDesign& d) {
    require_cases(d);
    const LinkArrays a = tn_arrays(p, d);
    return mean_over_cases(d, [&](Eigen::Index i) {
        return crps_tn(tn_link(a.location[i], a.spread[i]).distribution, d.obs[i]);
    });
}

double mean_crps(const LnParams& p, const TrainingDesign& d) {
    require_cases(d);
    const LinkArrays a = ln_arrays(p, d);
    return mean_over_cases(d, [&](Eigen::Index i) {
        return crps_ln(ln_link(a.location[i], a.spread[i]).distribution, d.obs[i]);
    });
}

double mean_nll(const GevParams& p, const TrainingDesign& d) {
    require_cases(d);
    const LinkArrays a = gev_arrays(p, d);
    return mean_over_cases(d, [&](Eigen::Index i) {
        bool feasible = true;
        return gev_case_nll(a.location[i], a.spread[i], p.xi, d.obs[i], feasible);
    });
}

// -------------------------------------------------------------------- fits

namespace {

template <typename Params>
FitResult finish(const NelderMeadResult& nm, Params params, bool at_boundary) {
    FitResult r;
    r.params = std::move(params);
    r.internal = nm.x;
    r.objective = nm.value;
    r.initial_objective = nm.initial_value;
    r.converged = nm.converged;
    r.at_boundary = at_boundary;
    r.evaluations = nm.evaluations;
    r.best_history = nm.best_history;
    if (!nm.converged)
        r.warnings.push_back("optimizer stopped after " + std::to_string(nm.evaluations) +
                             " evaluations without meeting the simplex tolerance; using best-so-far");
    return r;
}

bool any_floored(const Eigen::VectorXd& spread, double floor) { return (spread.array() < floor).any(); }

}  // namespace

FitResult fit_min_crps(const TnParams& init, const TrainingDesign& d, const NelderMeadOptions& options) {
    require_cases(d);
    const int groups = static_cast<int>(init.a.size());
    auto objective = [&](const Eigen::VectorXd& u) { return mean_crps(unpack_tn(u, groups), d); };
    const NelderMeadResult nm = nelder_mead(objective, pack(init), options);
    TnParams best = unpack_tn(nm.x, groups);
    const bool boundary = any_floored(tn_arrays(best, d).spread, kScaleFloor);
    return finish(nm, std::move(best), boundary);
}

FitResult fit_min_crps(const LnParams& init, const TrainingDesign& d, const NelderMeadOptions& options) {
    require_cases(d);
    const int groups = static_cast<int>(init.alpha.size());
    auto objective = [&](const Eigen::VectorXd& u) { return mean_crps(unpack_ln(u, groups), d); };
    const NelderMeadResult nm = nelder_mead(objective, pack(init), options);
    LnParams best = unpack_ln(nm.x, groups);
    const LinkArrays a = ln_arrays(best, d);
    const bool boundary = any_floored(a.spread, kScaleFloor) || any_floored(a.location, kMeanFloor);
    return finish(nm, std::move(best), boundary);
}

FitResult fit_gev_ml(const GevParams& init, const TrainingDesign& d, const NelderMeadOptions& options) {
    require_cases(d);
    const int groups = static_cast<int>(init.gamma.size());
    {
        const LinkArrays a = gev_arrays(init, d);
        bool any_feasible = false;
        for (Eigen::Index i = 0; i < d.cases() && !any_feasible; ++i) {
            bool feasible = true;
            gev_case_nll(a.location[i], a.spread[i], init.xi, d.obs[i], feasible);
            any_feasible = feasible;
        }
        if (!any_feasible)
            throw NumericError("every training observation lies outside the GEV support at the initial "
                               "parameters; restart from a Gumbel start (xi = 0)");
    }
    auto objective = [&](const Eigen::VectorXd& u) {
        const GevParams p = unpack_gev(u, groups);
        return p.xi <= kMinFittedShape ? kSupportPenalty : mean_nll(p, d);
    };
    const NelderMeadResult nm = nelder_mead(objective, pack(init), options);
    GevParams best = unpack_gev(nm.x, groups);
    const bool boundary = any_floored(gev_arrays(best, d).spread, kScaleFloor);
    return finish(nm, std::move(best), boundary);
}

FitResult fit(const ModelParams& init, const TrainingDesign& d, const NelderMeadOptions& options) {
    return std::visit(
        [&](const auto& p) -> FitResult {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GevParams>) return fit_gev_ml(p, d, options);
            else return fit_min_crps(p, d, options);
        },
        init);
}

SwitchFit fit_switch(const RegimeSwitchConfig& c, const GroupSpec& g, const TrainingWindow& window,
                     const NelderMeadOptions& options) {
    const TrainingDesign all = make_design(window.cases, g);
    if (all.cases() == 0) throw InputError("fit_switch: empty training window");
    const ModelParams high_init = std::visit([](const auto& h) { return ModelParams(h); }, c.high);

    SwitchFit out;
    out.strategy_used = c.strategy;
    if (c.strategy == TrainingStrategy::split) {
        auto is_high = [&c](const EnsembleForecast& f) { return uses_high_regime(ensemble_median(f.members), c.theta); };
        const TrainingDesign low = make_design(window.cases, g, [&](const EnsembleForecast& f) { return !is_high(f); });
        const TrainingDesign high = make_design(window.cases, g, is_high);
        if (low.cases() >= kMinSplitCases && high.cases() >= kMinSplitCases) {
            out.low = fit_min_crps(c.low, low, options);
            out.high = fit(high_init, high, options);
            return out;
        }
        out.warnings.push_back("split training needs " + std::to_string(kMinSplitCases) +
                               " cases per regime (have " + std::to_string(low.cases()) + " low, " +
                               std::to_string(high.cases()) + " high); falling back to shared training");
        out.strategy_used = TrainingStrategy::shared;
    }
    out.low = fit_min_crps(c.low, all, options);
    out.high = fit(high_init, all, options);
    return out;
}

// ------------------------------------------------------------------ rolling

DayIndex index_days(std::span<const EnsembleForecast> dataset) {
    DayIndex idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!idx.dates.empty() && dataset[i].date < idx.dates.back())
            throw InputError("dataset must be sorted by date");
        if (idx.dates.empty() || dataset[i].date != idx.dates.back()) {
            idx.dates.push_back(dataset[i].date);
            idx.begin.push_back(i);
        }
    }
    idx.begin.push_back(dataset.size());
    return idx;
}

namespace {

ModelParams cold_start(ModelKind kind, const GroupSpec& g, bool high) {
    switch (kind) {
        case ModelKind::tn: return default_tn(g);
        case ModelKind::ln: return default_ln(g);
        case ModelKind::gev: return default_gev(g);
        case ModelKind::tn_ln: return high ? ModelParams(default_ln(g)) : ModelParams(default_tn(g));
        case ModelKind::tn_gev: return high ? ModelParams(default_gev(g)) : ModelParams(default_tn(g));
    }
    return default_tn(g);
}

// GEV fits that start outside the support are retried from a Gumbel start.
FitResult fit_with_gumbel_retry(const ModelParams& init, const TrainingDesign& d, const GroupSpec& g,
                                const NelderMeadOptions& options) {
    try {
        return fit(init, d, options);
    } catch (const NumericError& e) {
        if (!std::holds_alternative<GevParams>(init)) throw;
        GevParams gumbel = default_gev(g);
        gumbel.xi = 0.0;
        FitResult r = fit_gev_ml(gumbel, d, options);
        r.warnings.push_back(std::string(e.what()) + " (retried from xi = 0)");
        return r;
    }
}

}  // namespace

RollingResult rolling_calibrate(const ModelSpec& spec, const GroupSpec& g, std::span<const EnsembleForecast> dataset,
                                int train_days, const RollingOptions& options) {
    if (train_days < 1) throw ConfigError("training length must be at least one day");
    const DayIndex idx = index_days(dataset);
    RollingResult out;

    ModelParams low = cold_start(spec.kind, g, false);
    ModelParams high = cold_start(spec.kind, g, true);

    for (std::size_t day = 0; day < idx.dates.size(); ++day) {
        const Date date = idx.dates[day];
        if (options.first_day && date < *options.first_day) continue;
        if (options.last_day && date > *options.last_day) continue;
        if (day < static_cast<std::size_t>(train_days)) {
            out.skipped.push_back({date, "insufficient history: " + std::to_string(day) + " prior days with data, " +
                                             std::to_string(train_days) + " required"});
            continue;
        }
        const std::size_t from = idx.begin[day - static_cast<std::size_t>(train_days)];
        const TrainingWindow window{train_days, dataset.subspan(from, idx.begin[day] - from)};
        const TrainingDesign design = make_design(window.cases, g);
        if (design.cases() == 0) {
            out.skipped.push_back({date, "no observations in the training window"});
            continue;
        }

        DayFit day_fit{date, low, std::nullopt, 0.0, true};
        std::vector<std::string> warnings;
        if (is_mixture(spec.kind)) {
            RegimeSwitchConfig cfg;
            cfg.theta = spec.theta;
            cfg.strategy = spec.strategy;
            cfg.low = std::get<TnParams>(low);
            if (std::holds_alternative<LnParams>(high)) cfg.high = std::get<LnParams>(high);
            else cfg.high = std::get<GevParams>(high);
            SwitchFit sf;
            try {
                sf = fit_switch(cfg, g, window, options.optimizer);
            } catch (const NumericError&) {
                // GEV component started outside the support.
                cfg.high = [&] { GevParams p = default_gev(g); p.xi = 0.0; return p; }();
                sf = fit_switch(cfg, g, window, options.optimizer);
                sf.warnings.push_back("GEV component restarted from xi = 0");
            }
            warnings = sf.warnings;
            for (const auto& w : sf.low.warnings) warnings.push_back(w);
            for (const auto& w : sf.high.warnings) warnings.push_back(w);
            low = sf.low.params;
            high = sf.high.params;
            day_fit.low = low;
            day_fit.high = high;
            day_fit.objective = sf.low.objective;
            day_fit.converged = sf.low.converged && sf.high.converged;
        } else {
            FitResult r = fit_with_gumbel_retry(low, design, g, options.optimizer);
            warnings = r.warnings;
            low = r.params;
            day_fit.low = low;
            day_fit.objective = r.objective;
            day_fit.converged = r.converged;
        }
        for (const auto& w : warnings) out.warnings.push_back(format_date(date) + ": " + w);
        out.fits.push_back(day_fit);

        for (std::size_t i = idx.begin[day]; i < idx.begin[day + 1]; ++i) {
            const EnsembleForecast& f = dataset[i];
            Prediction<PredictiveDistribution> p =
                (is_mixture(spec.kind) && uses_high_regime(ensemble_median(f.members), spec.theta))
                    ? predict(high, g, f)
                    : predict(low, g, f);
            out.predictions.push_back({i, std::move(p.distribution), p.floored});
        }
    }
    return out;
}

// -------------------------------------------------------------- grid search

GridCell select_cell(std::span<const GridCell> cells) {
    if (cells.empty()) throw InputError("grid search produced no cells");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cells)
        if (c.mean_crps < best) best = c.mean_crps;
    const GridCell* chosen = nullptr;
    for (const auto& c : cells) {
        if (!(c.mean_crps <= best + 1e-9)) continue;
        if (!chosen || c.train_days > chosen->train_days ||
            (c.train_days == chosen->train_days && c.theta > chosen->theta))
            chosen = &c;
    }
    if (!chosen) throw NumericError("grid search: no cell has a finite mean CRPS");
    return *chosen;
}

GridSearchResult grid_search(const ModelSpec& spec, const GroupSpec& g, std::span<const EnsembleForecast> dataset,
                             std::span<const int> lengths, std::span<const double> thetas,
                             const GridSearchOptions& options) {
    if (lengths.empty()) throw ConfigError("grid search needs at least one training length");
    if (is_mixture(spec.kind) && thetas.empty()) throw ConfigError("grid search needs at least one threshold");
    const int max_length = *std::max_element(lengths.begin(), lengths.end());
    const DayIndex idx = index_days(dataset);
    if (idx.dates.size() <= static_cast<std::size_t>(max_length))
        throw InsufficientData("dataset has " + std::to_string(idx.dates.size()) +
                               " days; the longest training length needs more");

    RollingOptions rolling;
    rolling.first_day = idx.dates[static_cast<std::size_t>(max_length)];
    if (options.first_day && *options.first_day > *rolling.first_day) rolling.first_day = options.first_day;
    rolling.last_day = options.last_day;
    rolling.optimizer = options.optimizer;

    GridSearchResult result;
    for (int n : lengths) {
        if (is_mixture(spec.kind)) {
            for (double t : thetas) result.cells.push_back({n, t});
        } else {
            result.cells.push_back({n, std::numeric_limits<double>::infinity()});
        }
    }

    auto evaluate = [&](GridCell& cell) {
        ModelSpec s = spec;
        s.theta = cell.theta;
        const RollingResult r = rolling_calibrate(s, g, dataset, cell.train_days, rolling);
        std::vector<double> scores;
        scores.reserve(r.predictions.size());
        for (const auto& p : r.predictions)
            if (dataset[p.case_index].obs) scores.push_back(crps(p.distribution, *dataset[p.case_index].obs));
        cell.cases = scores.size();
        cell.mean_crps = scores.empty() ? std::numeric_limits<double>::quiet_NaN() : pairwise_mean(scores);
    };

    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(result.cells.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto worker = [&](int id) {
        try {
            for (std::size_t i; (i = next.fetch_add(1)) < result.cells.size();) evaluate(result.cells[i]);
        } catch (...) {
            errors[static_cast<std::size_t>(id)] = std::current_exception();
            next = result.cells.size();
        }
    };
    if (workers == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    const GridCell chosen = select_cell(result.cells);
    result.chosen_train_days = chosen.train_days;
    result.chosen_theta = chosen.theta;
    return result;
}

EmpiricalDistribution climatology_forecast(const TrainingWindow& window, const std::string& station) {
    std::vector<double> obs;
    for (const auto& c : window.cases)
        if (c.obs && c.station == station) obs.push_back(*c.obs);
    if (obs.empty()) throw InputError("climatology: no training observations for station " + station);
    return EmpiricalDistribution(std::move(obs));
}

}  // namespace emos
