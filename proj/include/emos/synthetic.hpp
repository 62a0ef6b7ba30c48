#pragma once

// Seeded synthetic ensemble datasets.
//
// Every case draws a latent wind speed L from a log-normal climate. Members
// are TN(L + bias + group offset, (deflation * noise_sd)^2), so deflation < 1
// gives an under-dispersive ensemble. The observation comes either from
// TN(L, noise_sd^2), which makes an undeflated, unbiased ensemble
// exchangeable with it, or from an EMOS law applied to the drawn members.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emos/models.hpp"

namespace emos {

struct LatentTruth {};

/// TN law below theta, LN law at or above it; the regime variable is the
/// ensemble median, the same quantity the mixture models route on.
struct SwitchingTruth {
    double theta = 6.0;
    TnParams low;
    LnParams high;
};

using TruthModel = std::variant<LatentTruth, TnParams, LnParams, GevParams, SwitchingTruth>;

struct ScenarioConfig {
    int days = 100;
    int stations = 10;
    GroupSpec groups = GroupSpec::exchangeable(10);
    TruthModel truth = LatentTruth{};
    double bias = 0.0;
    double deflation = 1.0;
    /// Per-group additive offsets on top of `bias`; empty means none.
    std::vector<double> group_bias;
    double climate_mean = 6.0;
    double climate_sd = 3.0;
    double noise_sd = 2.0;
    Date start = Date(std::chrono::year{2020} / 1 / 1);
    std::uint64_t seed = 0;
};

/// Throws ConfigError for days < 1, stations < 1, deflation outside (0, 1],
/// nonpositive spreads or a truth model that does not fit the groups.
void validate(const ScenarioConfig& cfg);

/// Cases ordered by date, then station ("ST01", "ST02", ...). Observations
/// are never negative (GEV draws below zero are clipped to 0).
std::vector<EnsembleForecast> generate(const ScenarioConfig& cfg);

/// Named presets: calibrated, underdispersed, switching, tn, ln, gev.
ScenarioConfig preset(std::string_view name, std::uint64_t seed);
std::vector<std::string> preset_names();

}  // namespace emos
