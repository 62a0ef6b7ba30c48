#pragma once

// End-to-end runs behind the command-line tool: rolling calibration,
// verification, grid search and simulation, with JSON reports and CSV plot
// data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "emos/estimation.hpp"
#include "emos/io.hpp"
#include "emos/verification.hpp"

namespace emos {

/// Post-processing models plus the two reference forecasts.
enum class Method { tn, ln, gev, tn_ln, tn_gev, raw, climatology };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);
std::optional<ModelKind> model_kind(Method m);

struct RunConfig {
    Method method = Method::tn;
    int train_days = 30;
    /// Required for the mixtures, ignored otherwise.
    std::optional<double> theta;
    TrainingStrategy strategy = TrainingStrategy::split;
    std::filesystem::path input;
    std::optional<std::filesystem::path> groups;
    std::optional<Date> verify_from;
    std::optional<Date> verify_to;
    /// Empty: 90th / 95th / 99th observation percentiles.
    std::vector<double> thresholds;
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    int workers = 1;
    NelderMeadOptions optimizer;
};

/// Throws ConfigError for inconsistent settings.
void validate(const RunConfig& cfg);

/// Forecasts of one method over the verification days, in dataset order.
struct MethodRun {
    Method method = Method::tn;
    std::vector<VerificationCase> cases;
    std::vector<DayFit> fits;
    std::vector<SkippedDay> skipped;
    std::vector<std::string> warnings;
    std::size_t floored_cases = 0;
};

/// Verification days follow the rolling-window rule for every method, so raw
/// and climatology forecasts are scored on the same cases as the models.
MethodRun run_method(const RunConfig& cfg, const Dataset& ds);

/// twCRPS of a method and of the TN reference at each threshold.
struct SkillRow {
    double threshold = 0.0;
    double twcrps = 0.0;
    double reference = 0.0;
    std::optional<double> skill;  // unset when the reference score is 0
};
std::vector<SkillRow> skill_curve(const MethodRun& run, const MethodRun& reference, std::span<const double> thresholds);

/// Thresholds in 0.5 m/s steps from the 50th to the 99th percentile of obs.
std::vector<double> skill_thresholds(std::span<const double> obs);

nlohmann::ordered_json report_json(const RunConfig& cfg, const Dataset& ds, const MethodRun& run,
                                   const VerificationReport& rep);

/// Ingests, runs, and writes report.json, rank_histogram.csv,
/// pit_histogram.csv and twcrpss.csv; calibrate also writes parameters.csv.
void calibrate(const RunConfig& cfg);
void verify(const RunConfig& cfg);

struct GridConfig {
    RunConfig run;
    std::vector<int> lengths;
    std::vector<double> thetas;
    /// Selection period; defaults to the days before run.verify_from when
    /// that is set, otherwise every eligible day.
    std::optional<Date> select_from;
    std::optional<Date> select_to;
};

/// Writes grid.csv, grid_crps_vs_length.csv, grid_crps_vs_theta.csv and
/// grid.json with the chosen cell.
GridSearchResult grid_search(const GridConfig& cfg);

struct SimulateConfig {
    std::string scenario = "calibrated";
    std::uint64_t seed = 0;
    std::optional<int> days;
    std::optional<int> stations;
    std::filesystem::path output = "data.csv";
};

void simulate(const SimulateConfig& cfg);

/// "15..40" (step 1), "15..40:5", "15,20,30" or "30".
std::vector<int> parse_int_range(std::string_view text);
/// "4.0..8.0:0.1", "5.5,6" or "6". Range points are lo + i * step, rounded
/// to 1e-9.
std::vector<double> parse_double_range(std::string_view text);

}  // namespace emos
