#pragma once

// Calibration diagnostics and the verification report.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "emos/distributions.hpp"
#include "emos/random.hpp"
#include "emos/scoring.hpp"

namespace emos {

/// Rank of obs within members + {obs}, in 1..M+1. Ties are broken uniformly
/// at random among the tied positions.
int rank_of_obs(std::span<const double> members, double obs, Rng& rng);

class RankHistogram {
public:
    /// c = members + 1 classes.
    explicit RankHistogram(int members);
    explicit RankHistogram(std::vector<std::size_t> counts);

    void add(int rank);
    int classes() const { return static_cast<int>(counts_.size()); }
    std::size_t total() const { return total_; }
    std::span<const std::size_t> counts() const { return counts_; }
    std::vector<double> frequencies() const;

private:
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

/// Delta = sum_i |p_i - 1/c|.
double reliability_index(const RankHistogram& h);

/// True iff min(members) <= obs <= max(members).
bool ensemble_coverage(std::span<const double> members, double obs);

/// (M - 1) / (M + 1), the chance a calibrated M-member range covers obs.
double nominal_coverage(int members);

/// (alpha/2, 1 - alpha/2) quantiles.
std::pair<double, double> central_interval(const PredictiveDistribution& d, double alpha);
std::pair<double, double> central_interval(const EmpiricalDistribution& d, double alpha);

inline double pit(const PredictiveDistribution& d, double obs) { return cdf(d, obs); }

/// Counts over `bins` equal-width bins of [0, 1]; 1.0 falls in the last bin.
std::vector<std::size_t> pit_histogram(std::span<const double> pit_values, int bins);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function P(K > lambda).
double kolmogorov_survival(double lambda);

/// One-sample KS test of the values against Uniform(0, 1), p-value from the
/// asymptotic distribution of sqrt(n) D. Needs at least 10 values.
KsResult ks_uniform_test(std::span<const double> values);

/// Linear-interpolation sample percentile, p in [0, 1].
double percentile(std::span<const double> values, double p);

/// Observation percentiles 90 / 95 / 99, the default twCRPS thresholds.
std::vector<double> default_thresholds(std::span<const double> obs);

using Forecast = std::variant<PredictiveDistribution, EmpiricalDistribution>;

struct VerificationCase {
    Forecast forecast;
    double obs = 0.0;
    Eigen::VectorXd members;  // raw ensemble, for the rank histogram
};

struct ReportOptions {
    /// Empty: default_thresholds of the verification observations.
    std::vector<double> thresholds;
    /// Empty: 2 / (M + 1), the raw ensemble's nominal level.
    std::optional<double> alpha;
    std::optional<int> pit_bins;
    std::uint64_t seed = 0;
};

struct VerificationReport {
    std::string model;
    std::size_t cases = 0;
    ScoreSummary scores;

    // Raw-ensemble rank diagnostics.
    int rank_classes = 0;
    std::vector<std::size_t> rank_counts;
    double reliability_index = 0.0;

    double alpha = 0.0;
    double nominal_coverage_pct = 0.0;
    double coverage_pct = 0.0;
    double average_width = 0.0;

    // PIT diagnostics; empty / unset for empirical forecasts.
    std::vector<std::size_t> pit_counts;
    std::optional<double> ks_statistic;
    std::optional<double> ks_p_value;

    double neg_mass_mean = 0.0;
    double neg_mass_max = 0.0;

    std::size_t undefined_mean_cases = 0;
    std::uint64_t seed = 0;
};

VerificationReport build_report(std::string model, std::span<const VerificationCase> cases,
                                const ReportOptions& options = {});

}  // namespace emos
