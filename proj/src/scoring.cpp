#include "emos/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "emos/quadrature.hpp"

namespace emos {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double twcrps(const CdfFunction& cdf, double x, double r, const QuadratureOptions& options) {
    if (!std::isfinite(x)) throw InvalidObservation("twcrps: observation must be finite");
    const double lo = std::max(r, std::min(options.lower, x));
    const double hi = std::max(options.upper, x);
    if (!(lo < hi)) return 0.0;

    std::vector<double> points{lo, hi};
    if (x > lo && x < hi) points.push_back(x);
    for (double b : options.breakpoints)
        if (std::isfinite(b) && b > lo && b < hi) points.push_back(b);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    auto integrand = [&cdf, x](double y) {
        const double f = cdf(y);
        const double diff = y < x ? f : 1.0 - f;
        return diff * diff;
    };
    const double tol = options.abs_tol / static_cast<double>(points.size() - 1);
    std::vector<double> pieces;
    pieces.reserve(points.size() - 1);
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        pieces.push_back(integrate(integrand, points[i], points[i + 1], tol).value);
    return pairwise_sum(pieces);
}

double crps_numeric(const CdfFunction& cdf, double x, const QuadratureOptions& options) {
    return twcrps(cdf, x, -std::numeric_limits<double>::infinity(), options);
}

namespace {

QuadratureOptions options_for(const PredictiveDistribution& d, double abs_tol) {
    QuadratureOptions o;
    o.abs_tol = abs_tol;
    o.lower = support_lower(d);
    o.upper = support_upper(d);
    o.breakpoints = {quantile(d, 1e-6), median(d), quantile(d, 1.0 - 1e-6)};
    return o;
}

}  // namespace

double crps_numeric(const PredictiveDistribution& d, double x, double abs_tol) {
    return crps_numeric([&d](double y) { return cdf(d, y); }, x, options_for(d, abs_tol));
}

double twcrps(const PredictiveDistribution& d, double x, double r, double abs_tol) {
    return twcrps([&d](double y) { return cdf(d, y); }, x, r, options_for(d, abs_tol));
}

double crps(const PredictiveDistribution& d, double x) {
    switch (d.index()) {
        case 0:
            return crps_tn(std::get<0>(d), x);
        case 1:
            return crps_ln(std::get<1>(d), x);
        default:
            return crps_numeric(d, x);
    }
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw InputError("empirical distribution needs at least one value");
    for (double v : sorted_)
        if (!std::isfinite(v)) throw InputError("empirical distribution values must be finite");
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::cdf(double y) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), y);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("quantile: probability must lie in (0, 1)");
    const double n = static_cast<double>(sorted_.size());
    const double h = p * (n + 1.0);
    if (h <= 1.0) return sorted_.front();
    if (h >= n) return sorted_.back();
    const auto lower = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lower);
    return sorted_[lower - 1] + frac * (sorted_[lower] - sorted_[lower - 1]);
}

double EmpiricalDistribution::mean() const { return pairwise_mean(sorted_); }

double EmpiricalDistribution::median() const {
    const std::size_t n = sorted_.size();
    if (n % 2 == 1) return sorted_[n / 2];
    return 0.5 * (sorted_[n / 2 - 1] + sorted_[n / 2]);
}

namespace {

double crps_sorted(std::span<const double> sorted, double x) {
    const std::size_t n = sorted.size();
    double abs_dev = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        abs_dev += std::abs(sorted[i] - x);
        // sum_{i,j} |v_i - v_j| = 2 sum_i (2i - n - 1) v_(i), i 1-based
        spread += 2.0 * (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * sorted[i];
    }
    const double dn = static_cast<double>(n);
    return abs_dev / dn - 0.5 * spread / (dn * dn);
}

}  // namespace

double crps_empirical(std::span<const double> values, double x) {
    if (values.empty()) throw InputError("crps_empirical: empty ensemble");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return crps_sorted(sorted, x);
}

double crps(const EmpiricalDistribution& d, double x) { return crps_sorted(d.sorted(), x); }

double twcrps(const EmpiricalDistribution& d, double x, double r) {
    const auto values = d.sorted();
    std::vector<double> points(values.begin(), values.end());
    points.insert(std::upper_bound(points.begin(), points.end(), x), x);
    const double n = static_cast<double>(values.size());
    double total = 0.0;
    std::size_t below = 0;  // members <= points[j]
    for (std::size_t j = 0; j + 1 < points.size(); ++j) {
        while (below < values.size() && values[below] <= points[j]) ++below;
        const double left = std::max(points[j], r);
        const double right = points[j + 1];
        if (!(right > left)) continue;
        const double f = static_cast<double>(below) / n;
        const double diff = points[j] >= x ? 1.0 - f : f;
        total += diff * diff * (right - left);
    }
    return total;
}

double twcrpss(double mean_twcrps_forecast, double mean_twcrps_reference) {
    if (!(mean_twcrps_reference > 0.0)) throw UndefinedSkill("twcrpss: reference score must be positive");
    return 1.0 - mean_twcrps_forecast / mean_twcrps_reference;
}

double log_score(double density) {
    if (!(density >= 0.0)) throw InputError("log_score: density must be nonnegative");
    if (density == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(density);
}

double mae_median(std::span<const std::pair<double, double>> median_obs) {
    if (median_obs.empty()) throw InputError("mae_median: no forecast cases");
    std::vector<double> err;
    err.reserve(median_obs.size());
    for (const auto& [f, o] : median_obs) err.push_back(std::abs(f - o));
    return pairwise_mean(err);
}

double rmse_mean(std::span<const std::pair<double, double>> mean_obs) {
    if (mean_obs.empty()) throw InputError("rmse_mean: no forecast cases");
    std::vector<double> err;
    err.reserve(mean_obs.size());
    for (const auto& [f, o] : mean_obs) err.push_back((f - o) * (f - o));
    return std::sqrt(pairwise_mean(err));
}

}  // namespace emos
