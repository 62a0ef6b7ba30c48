#include "emos/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <type_traits>

#include "emos/errors.hpp"
#include "emos/random.hpp"

namespace emos {

void validate(const ScenarioConfig& cfg) {
    if (cfg.days < 1) throw ConfigError("scenario needs at least one day");
    if (cfg.stations < 1) throw ConfigError("scenario needs at least one station");
    if (!(cfg.deflation > 0.0 && cfg.deflation <= 1.0)) throw ConfigError("deflation must lie in (0, 1]");
    if (!(cfg.climate_mean > 0.0 && cfg.climate_sd > 0.0 && cfg.noise_sd > 0.0))
        throw ConfigError("climate mean, climate sd and noise sd must be positive");
    if (!std::isfinite(cfg.bias)) throw ConfigError("bias must be finite");
    if (!cfg.group_bias.empty() && cfg.group_bias.size() != static_cast<std::size_t>(cfg.groups.groups()))
        throw ConfigError("group_bias needs one entry per group");
    try {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, SwitchingTruth>) {
                    if (!std::isfinite(t.theta)) throw ConfigError("switching threshold must be finite");
                    validate(t.low, cfg.groups);
                    validate(t.high, cfg.groups);
                } else if constexpr (!std::is_same_v<T, LatentTruth>) {
                    validate(t, cfg.groups);
                }
            },
            cfg.truth);
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("scenario truth: ") + e.what());
    }
}

namespace {

double draw_obs(const TruthModel& truth, const GroupSpec& g, const EnsembleForecast& f, double latent,
                double noise_sd, Rng& rng) {
    return std::visit(
        [&](const auto& t) -> double {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, LatentTruth>) {
                return sample(TruncNormal<double>(latent, noise_sd), rng);
            } else if constexpr (std::is_same_v<T, SwitchingTruth>) {
                if (uses_high_regime(ensemble_median(f.members), t.theta))
                    return sample(predict_ln(t.high, g, f).distribution, rng);
                return sample(predict_tn(t.low, g, f).distribution, rng);
            } else {
                return sample(predict(ModelParams(t), g, f).distribution, rng);
            }
        },
        truth);
}

}  // namespace

std::vector<EnsembleForecast> generate(const ScenarioConfig& cfg) {
    validate(cfg);
    Rng rng(derive_seed(cfg.seed, 0));
    const MeanVariance<double> climate(cfg.climate_mean, cfg.climate_sd * cfg.climate_sd);
    const LogNormal<double> climate_ln = ln_from_mean_variance(climate);
    const GroupSpec& g = cfg.groups;
    const double member_sd = cfg.deflation * cfg.noise_sd;

    std::vector<EnsembleForecast> out;
    out.reserve(static_cast<std::size_t>(cfg.days) * static_cast<std::size_t>(cfg.stations));
    for (int day = 0; day < cfg.days; ++day) {
        const Date date = cfg.start + std::chrono::days(day);
        for (int s = 0; s < cfg.stations; ++s) {
            char name[16];
            std::snprintf(name, sizeof name, "ST%02d", s + 1);
            EnsembleForecast f{date, name, Eigen::VectorXd(g.members()), std::nullopt};
            const double latent = sample(climate_ln, rng);
            Eigen::Index m = 0;
            for (int k = 0; k < g.groups(); ++k) {
                const double shift = cfg.bias + (cfg.group_bias.empty() ? 0.0 : cfg.group_bias[k]);
                const TruncNormal<double> member_law(latent + shift, member_sd);
                for (int j = 0; j < g.sizes()[k]; ++j) f.members[m++] = sample(member_law, rng);
            }
            f.obs = std::max(0.0, draw_obs(cfg.truth, g, f, latent, cfg.noise_sd, rng));
            out.push_back(std::move(f));
        }
    }
    return out;
}

ScenarioConfig preset(std::string_view name, std::uint64_t seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.days = 150;
    c.stations = 20;
    if (name == "calibrated") {
        c.groups = GroupSpec::exchangeable(10);
    } else if (name == "underdispersed") {
        // Control member plus ten exchangeable perturbed members.
        c.groups = GroupSpec({1, 10});
        c.deflation = 0.4;
        c.bias = 0.5;
        c.group_bias = {-0.3, 0.0};
    } else if (name == "switching") {
        c.groups = GroupSpec::exchangeable(10);
        c.noise_sd = 1.0;
        SwitchingTruth t;
        t.theta = 6.0;
        t.low = TnParams{0.0, Eigen::VectorXd::Constant(1, 0.1), 0.8, 0.5};
        t.high = LnParams{3.0, Eigen::VectorXd::Constant(1, 0.1), 2.0, 1.0};
        c.truth = t;
    } else if (name == "tn") {
        c.truth = TnParams{0.3, Eigen::VectorXd::Constant(1, 0.08), 0.5, 1.2};
    } else if (name == "ln") {
        c.truth = LnParams{0.5, Eigen::VectorXd::Constant(1, 0.09), 0.5, 0.8};
    } else if (name == "gev") {
        c.truth = GevParams{0.5, Eigen::VectorXd::Constant(1, 0.1), 0.8, 0.2, 0.1};
    } else {
        throw ConfigError("unknown scenario '" + std::string(name) + "'");
    }
    return c;
}

std::vector<std::string> preset_names() { return {"calibrated", "underdispersed", "switching", "tn", "ln", "gev"}; }

}  // namespace emos
