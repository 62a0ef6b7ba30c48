#pragma once

// Parameter estimation for the EMOS links.
//
// TN and LN are fitted by minimizing the mean closed-form CRPS over a
// training window, GEV by maximizing the likelihood. Nonnegative
// coefficients are optimized as u with coefficient = u * u, so the simplex
// search runs unconstrained.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emos/models.hpp"
#include "emos/nelder_mead.hpp"
#include "emos/scoring.hpp"

namespace emos {

/// Per-case summaries of a set of training forecasts, laid out for
/// vectorized link evaluation.
struct TrainingDesign {
    Eigen::MatrixXd group_sums;  // cases x groups
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // link_variance
    Eigen::VectorXd median;
    Eigen::VectorXd obs;

    Eigen::Index cases() const { return obs.size(); }
};

/// Builds the design from cases with an observation; `keep` filters cases.
TrainingDesign make_design(std::span<const EnsembleForecast> cases, const GroupSpec& g,
                           const std::function<bool(const EnsembleForecast&)>& keep = {});

/// Consecutive run of forecast cases from the `days` most recent days with
/// data before a target day.
struct TrainingWindow {
    int days = 0;
    std::span<const EnsembleForecast> cases;
};

struct FitResult {
    ModelParams params;
    /// Optimizer coordinates; squared entries give the constrained
    /// coefficients exactly.
    Eigen::VectorXd internal;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double initial_objective = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    /// A scale / variance / mean floor is active at the solution.
    bool at_boundary = false;
    int evaluations = 0;
    std::vector<double> best_history;
    std::vector<std::string> warnings;
};

enum class ModelKind { tn, ln, gev, tn_ln, tn_gev };

bool is_mixture(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::string_view model_name(ModelKind kind);

// Reparameterization between coefficient structs and optimizer vectors.
Eigen::VectorXd pack(const TnParams& p);
Eigen::VectorXd pack(const LnParams& p);
Eigen::VectorXd pack(const GevParams& p);
TnParams unpack_tn(const Eigen::VectorXd& u, int groups);
LnParams unpack_ln(const Eigen::VectorXd& u, int groups);
GevParams unpack_gev(const Eigen::VectorXd& u, int groups);

/// Mean CRPS of the TN / LN link over the design; mean negative
/// log-likelihood of the GEV link (support violations penalized).
double mean_crps(const TnParams& p, const TrainingDesign& d);
double mean_crps(const LnParams& p, const TrainingDesign& d);
double mean_nll(const GevParams& p, const TrainingDesign& d);

/// Per-case penalty for an observation outside the GEV support.
inline constexpr double kSupportPenalty = 1e6;

/// The GEV likelihood is unbounded at the upper endpoint for xi <= -1, so
/// the ML fit treats that half-line as infeasible.
inline constexpr double kMinFittedShape = -1.0;

/// Minimum-CRPS fit of a TN or LN model, started from `init`.
FitResult fit_min_crps(const TnParams& init, const TrainingDesign& d, const NelderMeadOptions& options = {});
FitResult fit_min_crps(const LnParams& init, const TrainingDesign& d, const NelderMeadOptions& options = {});

/// Maximum-likelihood GEV fit. Throws NumericError when every training
/// case lies outside the support at `init`.
FitResult fit_gev_ml(const GevParams& init, const TrainingDesign& d, const NelderMeadOptions& options = {});

/// Dispatch on the parameter type.
FitResult fit(const ModelParams& init, const TrainingDesign& d, const NelderMeadOptions& options = {});

/// Minimum cases per branch before split training falls back to shared.
inline constexpr Eigen::Index kMinSplitCases = 10;

struct SwitchFit {
    FitResult low;
    FitResult high;
    TrainingStrategy strategy_used = TrainingStrategy::split;
    std::vector<std::string> warnings;
};

/// Fits both regimes. The parameters stored in `c` are the start points.
SwitchFit fit_switch(const RegimeSwitchConfig& c, const GroupSpec& g, const TrainingWindow& window,
                     const NelderMeadOptions& options = {});

struct ModelSpec {
    ModelKind kind = ModelKind::tn;
    double theta = std::numeric_limits<double>::infinity();
    TrainingStrategy strategy = TrainingStrategy::split;
};

/// Parameters of one fitted day; `high` is set for mixtures only.
struct DayFit {
    Date date;
    ModelParams low;
    std::optional<ModelParams> high;
    double objective = 0.0;
    bool converged = true;
};

struct CalibratedCase {
    std::size_t case_index;  // into the dataset
    PredictiveDistribution distribution;
    bool floored = false;
};

struct SkippedDay {
    Date date;
    std::string reason;
};

struct RollingResult {
    std::vector<CalibratedCase> predictions;
    std::vector<DayFit> fits;
    std::vector<SkippedDay> skipped;
    std::vector<std::string> warnings;
};

struct RollingOptions {
    std::optional<Date> first_day;  // verification period, inclusive
    std::optional<Date> last_day;
    NelderMeadOptions optimizer;
};

/// Distinct days of a date-sorted dataset with the half-open case ranges
/// belonging to each. Throws InputError when the dataset is not sorted.
struct DayIndex {
    std::vector<Date> dates;
    std::vector<std::size_t> begin;  // dates.size() + 1 entries
};
DayIndex index_days(std::span<const EnsembleForecast> dataset);

/// Rolling-window calibration: for each verification day, fit on the n
/// preceding days that have data (pooled over stations), warm-started from
/// the previous fitted day, and predict every case of that day.
RollingResult rolling_calibrate(const ModelSpec& spec, const GroupSpec& g, std::span<const EnsembleForecast> dataset,
                                int train_days, const RollingOptions& options = {});

struct GridCell {
    int train_days = 0;
    double theta = std::numeric_limits<double>::infinity();
    double mean_crps = std::numeric_limits<double>::quiet_NaN();
    std::size_t cases = 0;
};

struct GridSearchResult {
    std::vector<GridCell> cells;
    int chosen_train_days = 0;
    double chosen_theta = std::numeric_limits<double>::infinity();
};

struct GridSearchOptions {
    /// Selection period; every cell is scored on the same days, none earlier
    /// than max(lengths) days into the dataset.
    std::optional<Date> first_day;
    std::optional<Date> last_day;
    int workers = 1;
    NelderMeadOptions optimizer;
};

/// Mean CRPS for every (training length, theta) cell. Thetas are ignored
/// for single-family models.
GridSearchResult grid_search(const ModelSpec& spec, const GroupSpec& g, std::span<const EnsembleForecast> dataset,
                             std::span<const int> lengths, std::span<const double> thetas,
                             const GridSearchOptions& options = {});

/// Arg-min with ties (within 1e-9) going to the larger length, then the
/// larger theta.
GridCell select_cell(std::span<const GridCell> cells);

/// Training-window observations at `station`, used as an ensemble.
EmpiricalDistribution climatology_forecast(const TrainingWindow& window, const std::string& station);

}  // namespace emos
