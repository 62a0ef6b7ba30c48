#pragma once

// EMOS link functions: ensemble forecast -> predictive distribution.
//
// Members are grouped into exchangeable groups; members of one group share a
// location (or mean) coefficient, so the links act on per-group sums.

#include <Eigen/Dense>
#include <chrono>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "emos/distributions.hpp"

namespace emos {

using Date = std::chrono::sys_days;

/// Floor on TN scale^2, LN variance and GEV scale.
inline constexpr double kScaleFloor = 1e-4;
/// Floor on the LN mean.
inline constexpr double kMeanFloor = 1e-3;

class GroupSpec {
public:
    explicit GroupSpec(std::vector<int> sizes);

    /// One group per member.
    static GroupSpec distinguishable(int members);
    /// All members in one group.
    static GroupSpec exchangeable(int members);

    std::span<const int> sizes() const { return sizes_; }
    int groups() const { return static_cast<int>(sizes_.size()); }
    int members() const { return total_; }

    /// Per-group sums of an ensemble ordered by group.
    Eigen::VectorXd group_sums(const Eigen::Ref<const Eigen::VectorXd>& members) const;

    bool operator==(const GroupSpec&) const = default;

private:
    std::vector<int> sizes_;
    int total_ = 0;
};

struct EnsembleForecast {
    Date date;
    std::string station;
    Eigen::VectorXd members;
    std::optional<double> obs;
};

struct EnsembleStats {
    double mean = 0.0;
    double variance = 0.0;  // divisor M - 1
    double median = 0.0;
};

/// Mean, unbiased variance and median (midpoint of the central pair for even
/// M). Throws InputError for fewer than two members.
EnsembleStats ensemble_stats(const Eigen::Ref<const Eigen::VectorXd>& members);

/// Variance term used inside the links: the unbiased variance for M >= 2 and
/// zero for a single-member ensemble, whose spread is carried by the
/// intercept alone.
double link_variance(const Eigen::Ref<const Eigen::VectorXd>& members);

double ensemble_median(const Eigen::Ref<const Eigen::VectorXd>& members);

/// Throws InputError when the forecast does not match the group layout or
/// holds negative / non-finite values.
void validate(const EnsembleForecast& f, const GroupSpec& g);

struct TnParams {
    double a0 = 0.0;
    Eigen::VectorXd a;  // per-group location weights, >= 0
    double b0 = 1.0;
    double b1 = 1.0;
};

struct LnParams {
    double alpha0 = 0.0;
    Eigen::VectorXd alpha;  // per-group mean weights, >= 0
    double beta0 = 1.0;
    double beta1 = 1.0;
};

struct GevParams {
    double gamma0 = 0.0;
    Eigen::VectorXd gamma;  // per-group location weights, unconstrained
    double sigma0 = 1.0;
    double sigma1 = 0.0;
    double xi = 0.05;
};

using ModelParams = std::variant<TnParams, LnParams, GevParams>;

/// Cold-start values: weights 1/M, intercepts 0, b0 = b1 = 1 (TN, LN);
/// sigma0 = 1, sigma1 = 0, xi = 0.05 (GEV).
TnParams default_tn(const GroupSpec& g);
LnParams default_ln(const GroupSpec& g);
GevParams default_gev(const GroupSpec& g);

void validate(const TnParams& p, const GroupSpec& g);
void validate(const LnParams& p, const GroupSpec& g);
void validate(const GevParams& p, const GroupSpec& g);

/// Distribution plus whether a floor had to be applied.
template <typename D>
struct Prediction {
    D distribution;
    bool floored = false;
};

// Links from already-reduced ensemble summaries. predict_* and the
// estimation objectives both go through these.
Prediction<TruncNormal<double>> tn_link(double location, double scale2);
Prediction<LogNormal<double>> ln_link(double mean, double variance);
Prediction<Gev<double>> gev_link(double location, double scale, double xi);

Prediction<TruncNormal<double>> predict_tn(const TnParams& p, const GroupSpec& g, const EnsembleForecast& f);
Prediction<LogNormal<double>> predict_ln(const LnParams& p, const GroupSpec& g, const EnsembleForecast& f);
Prediction<Gev<double>> predict_gev(const GevParams& p, const GroupSpec& g, const EnsembleForecast& f);

/// Predictive law for any single-family parameter set.
Prediction<PredictiveDistribution> predict(const ModelParams& p, const GroupSpec& g, const EnsembleForecast& f);

enum class TrainingStrategy { split, shared };

struct RegimeSwitchConfig {
    double theta = std::numeric_limits<double>::infinity();
    TnParams low;
    std::variant<LnParams, GevParams> high;
    TrainingStrategy strategy = TrainingStrategy::split;
};

/// TN when the ensemble median is below theta, the high-wind model otherwise
/// (a median equal to theta goes high).
Prediction<PredictiveDistribution> predict_switch(const RegimeSwitchConfig& c, const GroupSpec& g,
                                                  const EnsembleForecast& f);

inline bool uses_high_regime(double ensemble_median, double theta) { return !(ensemble_median < theta); }

}  // namespace emos
