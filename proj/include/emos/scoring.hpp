#pragma once

// Proper scoring rules for predictive distributions and ensembles.
//
// CRPS(F, x) = int (F(y) - 1{y >= x})^2 dy = E|X - x| - 1/2 E|X - X'|.
// Closed forms exist for the truncated normal and the log-normal; the GEV
// family is scored by adaptive quadrature, which also serves as the
// reference for both closed forms.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "emos/distributions.hpp"
#include "emos/errors.hpp"

namespace emos {

/// Deterministic pairwise summation; the result depends only on the order
/// of the input, never on scheduling.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
    return values.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : pairwise_sum(values) / static_cast<double>(values.size());
}

namespace detail {

template <typename Scalar>
void require_observation(Scalar x) {
    if (!(x >= Scalar(0)) || !std::isfinite(x))
        throw InvalidObservation("observation must be finite and nonnegative");
}

}  // namespace detail

/// Closed-form CRPS of the zero-truncated normal. The textbook expression
///   sigma Phi(a)^-2 [ z Phi(a) (2 Phi(z) + Phi(a) - 2) + 2 phi(z) Phi(a)
///                     - Phi(sqrt2 a) / sqrt(pi) ],   a = mu/sigma, z = (x-mu)/sigma
/// is evaluated with every ratio against Phi(a) formed in log space, so it
/// stays finite when the location is far below zero.
template <typename Scalar>
Scalar crps_tn(const TruncNormal<Scalar>& d, Scalar x) {
    using std::exp;
    detail::require_observation(x);
    const Scalar a = d.mu() / d.sigma();
    const Scalar z = (x - d.mu()) / d.sigma();
    const Scalar log_p = d.log_normalizer();
    const Scalar upper_tail_ratio = exp(log_norm_cdf(-z) - log_p);   // Phi(-z) / Phi(a)
    const Scalar density_ratio = exp(norm_log_pdf(z) - log_p);        // phi(z) / Phi(a)
    const Scalar pair_ratio = exp(log_norm_cdf(std::numbers::sqrt2_v<Scalar> * a) - Scalar(2) * log_p);
    const Scalar value = z * (Scalar(1) - Scalar(2) * upper_tail_ratio) + Scalar(2) * density_ratio -
                         std::numbers::inv_sqrtpi_v<Scalar> * pair_ratio;
    return std::max(Scalar(0), d.sigma() * value);
}

/// Closed-form CRPS of the log-normal:
///   x (2 Phi(z) - 1) - 2 e^{mu + sigma^2/2} (Phi(z - sigma) + Phi(sigma/sqrt2) - 1),
/// z = (log x - mu) / sigma. At x = 0 the first term vanishes.
template <typename Scalar>
Scalar crps_ln(const LogNormal<Scalar>& d, Scalar x) {
    using std::exp;
    using std::log;
    detail::require_observation(x);
    const Scalar s = d.sigma();
    const Scalar m = exp(d.mu() + Scalar(0.5) * s * s);
    const Scalar half_pair = norm_cdf(-s / std::numbers::sqrt2_v<Scalar>);
    if (x == Scalar(0)) return Scalar(2) * m * half_pair;
    const Scalar z = (log(x) - d.mu()) / s;
    const Scalar value = x * (Scalar(2) * norm_cdf(z) - Scalar(1)) - Scalar(2) * m * (norm_cdf(z - s) - half_pair);
    return std::max(Scalar(0), value);
}

template <typename Scalar>
Scalar crps_ln(const MeanVariance<Scalar>& mv, Scalar x) {
    return crps_ln(ln_from_mean_variance(mv), x);
}

struct QuadratureOptions {
    double abs_tol = 1e-8;
    /// Points where the CDF may have kinks or where most mass sits.
    std::vector<double> breakpoints;
    /// Support of the CDF, when known; the integrand is zero outside it.
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

using CdfFunction = std::function<double(double)>;

/// CRPS by adaptive quadrature of the defining integral.
double crps_numeric(const CdfFunction& cdf, double x, const QuadratureOptions& options = {});

/// Quadrature CRPS with the support and the 1e-6 / 1 - 1e-6 quantiles of d
/// supplied as breakpoints.
double crps_numeric(const PredictiveDistribution& d, double x, double abs_tol = 1e-8);

/// Threshold-weighted CRPS with weight 1{y >= r}.
double twcrps(const CdfFunction& cdf, double x, double r, const QuadratureOptions& options = {});
double twcrps(const PredictiveDistribution& d, double x, double r, double abs_tol = 1e-8);

/// CRPS dispatch: closed forms for TN and LN, quadrature for GEV.
double crps(const PredictiveDistribution& d, double x);

/// Forecast given by a finite sample (raw ensemble, climatology).
class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(std::vector<double> values);

    std::span<const double> sorted() const { return sorted_; }
    std::size_t size() const { return sorted_.size(); }
    double cdf(double y) const;
    /// Weibull plotting-position quantile: the i-th order statistic sits at
    /// p = i / (n + 1), so (1/(n+1), n/(n+1)) spans the ensemble range.
    double quantile(double p) const;
    double mean() const;
    double median() const;

private:
    std::vector<double> sorted_;
};

/// Exact E|X - x| - 1/2 E|X - X'| for the empirical law of values.
double crps_empirical(std::span<const double> values, double x);
double crps(const EmpiricalDistribution& d, double x);
/// Exact threshold-weighted CRPS of a step CDF.
double twcrps(const EmpiricalDistribution& d, double x, double r);

/// 1 - twcrps_f / twcrps_ref.
double twcrpss(double mean_twcrps_forecast, double mean_twcrps_reference);

/// -log(density); +inf for a zero density.
double log_score(double density);

double mae_median(std::span<const std::pair<double, double>> median_obs);
double rmse_mean(std::span<const std::pair<double, double>> mean_obs);

struct ThresholdScore {
    double threshold = 0.0;
    double mean_twcrps = 0.0;
};

struct ScoreSummary {
    double mean_crps = 0.0;
    std::vector<ThresholdScore> mean_twcrps;
    /// Mean over finite log scores; empty for forecasts without a density.
    std::optional<double> mean_log_score;
    std::size_t infinite_log_scores = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

}  // namespace emos
