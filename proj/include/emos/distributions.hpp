#pragma once

// Predictive distribution families: normal truncated at zero, log-normal and
// generalized extreme value. All types are immutable values validated on
// construction; every operation is a free function.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "emos/errors.hpp"
#include "emos/normal.hpp"
#include "emos/random.hpp"

namespace emos {

namespace detail {

template <typename Scalar>
void require_scale(Scalar mu, Scalar sigma, const char* family) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > Scalar(0)))
        throw InvalidParameter(std::string(family) + ": location must be finite and scale positive");
}

}  // namespace detail

/// Normal distribution N(mu, sigma^2) truncated to [0, inf).
template <typename Scalar = double>
class TruncNormal {
public:
    TruncNormal(Scalar mu, Scalar sigma) : mu_(mu), sigma_(sigma) { detail::require_scale(mu, sigma, "TruncNormal"); }

    Scalar mu() const { return mu_; }
    Scalar sigma() const { return sigma_; }

    /// log of the normalizing constant Phi(mu/sigma); log-space keeps the
    /// density usable when the location sits many scales below zero.
    Scalar log_normalizer() const { return log_norm_cdf(mu_ / sigma_); }

private:
    Scalar mu_;
    Scalar sigma_;
};

template <typename Scalar = double>
class LogNormal {
public:
    LogNormal(Scalar mu, Scalar sigma) : mu_(mu), sigma_(sigma) { detail::require_scale(mu, sigma, "LogNormal"); }

    Scalar mu() const { return mu_; }
    Scalar sigma() const { return sigma_; }

private:
    Scalar mu_;
    Scalar sigma_;
};

/// Log-normal law described by its mean and variance.
template <typename Scalar = double>
class MeanVariance {
public:
    MeanVariance(Scalar mean, Scalar variance) : mean_(mean), variance_(variance) {
        if (!(mean > Scalar(0)) || !(variance > Scalar(0)) || !std::isfinite(mean) || !std::isfinite(variance))
            throw InvalidParameter("MeanVariance: mean and variance must be positive and finite");
    }

    Scalar mean() const { return mean_; }
    Scalar variance() const { return variance_; }

private:
    Scalar mean_;
    Scalar variance_;
};

template <typename Scalar = double>
class Gev {
public:
    /// Below this |xi| the Gumbel limit is used.
    static constexpr Scalar kGumbelSwitch = Scalar(1e-6);

    Gev(Scalar mu, Scalar sigma, Scalar xi) : mu_(mu), sigma_(sigma), xi_(xi) {
        detail::require_scale(mu, sigma, "Gev");
        if (!std::isfinite(xi)) throw InvalidParameter("Gev: shape must be finite");
    }

    Scalar mu() const { return mu_; }
    Scalar sigma() const { return sigma_; }
    Scalar xi() const { return xi_; }
    bool is_gumbel() const { return std::abs(xi_) < kGumbelSwitch; }

private:
    Scalar mu_;
    Scalar sigma_;
    Scalar xi_;
};

template <typename Scalar>
LogNormal<Scalar> ln_from_mean_variance(const MeanVariance<Scalar>& mv) {
    using std::log;
    using std::log1p;
    using std::sqrt;
    const Scalar ratio = mv.variance() / (mv.mean() * mv.mean());
    // mu = log(m^2 / sqrt(v + m^2)), sigma = sqrt(log(1 + v/m^2))
    const Scalar shape = sqrt(log1p(ratio));
    if (!(shape > Scalar(0)))
        throw InvalidParameter("ln_from_mean_variance: variance too small relative to mean");
    return LogNormal<Scalar>(log(mv.mean()) - Scalar(0.5) * log1p(ratio), shape);
}

template <typename Scalar>
MeanVariance<Scalar> mean_variance(const LogNormal<Scalar>& d) {
    using std::exp;
    using std::expm1;
    const Scalar s2 = d.sigma() * d.sigma();
    const Scalar m = exp(d.mu() + Scalar(0.5) * s2);
    return MeanVariance<Scalar>(m, m * m * expm1(s2));
}

// ---------------------------------------------------------------- CDF

template <typename Scalar>
Scalar cdf(const TruncNormal<Scalar>& d, Scalar x) {
    using std::exp;
    if (!(x > Scalar(0))) return Scalar(0);
    if (x == std::numeric_limits<Scalar>::infinity()) return Scalar(1);
    const Scalar a = d.mu() / d.sigma();
    const Scalar z = (x - d.mu()) / d.sigma();
    Scalar p;
    if (z < Scalar(0)) {
        p = (norm_cdf(z) - norm_cdf(-a)) / norm_cdf(a);
    } else {
        p = Scalar(1) - exp(log_norm_cdf(-z) - d.log_normalizer());
    }
    return std::clamp(p, Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar cdf(const LogNormal<Scalar>& d, Scalar x) {
    using std::log;
    if (!(x > Scalar(0))) return Scalar(0);
    return norm_cdf((log(x) - d.mu()) / d.sigma());
}

namespace detail {

/// The reduced variable t^{-1/xi} with t = 1 + xi*y, or +inf / 0 outside
/// the support (returned through `outside`).
template <typename Scalar>
Scalar gev_reduced(const Gev<Scalar>& d, Scalar x, int& outside) {
    using std::exp;
    using std::log1p;
    outside = 0;
    const Scalar y = (x - d.mu()) / d.sigma();
    if (d.is_gumbel()) return exp(-y);
    const Scalar t = Scalar(1) + d.xi() * y;
    if (!(t > Scalar(0))) {
        outside = d.xi() > Scalar(0) ? -1 : 1;
        return Scalar(0);
    }
    return exp(-log1p(d.xi() * y) / d.xi());
}

}  // namespace detail

template <typename Scalar>
Scalar cdf(const Gev<Scalar>& d, Scalar x) {
    using std::exp;
    int outside = 0;
    const Scalar r = detail::gev_reduced(d, x, outside);
    if (outside < 0) return Scalar(0);
    if (outside > 0) return Scalar(1);
    return exp(-r);
}

// ---------------------------------------------------------------- PDF

template <typename Scalar>
Scalar log_pdf(const TruncNormal<Scalar>& d, Scalar x) {
    using std::log;
    if (x < Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
    const Scalar z = (x - d.mu()) / d.sigma();
    return norm_log_pdf(z) - log(d.sigma()) - d.log_normalizer();
}

template <typename Scalar>
Scalar log_pdf(const LogNormal<Scalar>& d, Scalar x) {
    using std::log;
    if (!(x > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
    const Scalar lx = log(x);
    return norm_log_pdf((lx - d.mu()) / d.sigma()) - log(d.sigma()) - lx;
}

template <typename Scalar>
Scalar log_pdf(const Gev<Scalar>& d, Scalar x) {
    using std::log;
    using std::log1p;
    const Scalar y = (x - d.mu()) / d.sigma();
    if (d.is_gumbel()) return -log(d.sigma()) - y - std::exp(-y);
    const Scalar t = Scalar(1) + d.xi() * y;
    if (!(t > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
    const Scalar lt = log1p(d.xi() * y);
    return -log(d.sigma()) - (Scalar(1) + Scalar(1) / d.xi()) * lt - std::exp(-lt / d.xi());
}

template <typename D>
auto pdf(const D& d, decltype(d.mu()) x) {
    return std::exp(log_pdf(d, x));
}

// ----------------------------------------------------------- negative mass

template <typename Scalar>
Scalar neg_mass(const TruncNormal<Scalar>&) {
    return Scalar(0);
}
template <typename Scalar>
Scalar neg_mass(const LogNormal<Scalar>&) {
    return Scalar(0);
}
/// Probability of a negative value, P(X < 0) = G(0).
template <typename Scalar>
Scalar neg_mass(const Gev<Scalar>& d) {
    return cdf(d, Scalar(0));
}

// ---------------------------------------------------------------- support

template <typename Scalar>
Scalar support_lower(const TruncNormal<Scalar>&) {
    return Scalar(0);
}
template <typename Scalar>
Scalar support_lower(const LogNormal<Scalar>&) {
    return Scalar(0);
}
template <typename Scalar>
Scalar support_lower(const Gev<Scalar>& d) {
    if (!d.is_gumbel() && d.xi() > Scalar(0)) return d.mu() - d.sigma() / d.xi();
    return -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
Scalar support_upper(const TruncNormal<Scalar>&) {
    return std::numeric_limits<Scalar>::infinity();
}
template <typename Scalar>
Scalar support_upper(const LogNormal<Scalar>&) {
    return std::numeric_limits<Scalar>::infinity();
}
template <typename Scalar>
Scalar support_upper(const Gev<Scalar>& d) {
    if (!d.is_gumbel() && d.xi() < Scalar(0)) return d.mu() - d.sigma() / d.xi();
    return std::numeric_limits<Scalar>::infinity();
}

// --------------------------------------------------------------- quantile

/// Inverts the CDF by bisection on a bracket grown from the distribution's
/// location and scale. Stops once |F(x) - p| <= 1e-13 or the bracket
/// collapses to a few ulp.
template <typename D>
auto quantile(const D& d, decltype(d.mu()) p) {
    using Scalar = decltype(d.mu());
    if (!(p > Scalar(0) && p < Scalar(1))) throw InvalidParameter("quantile: probability must lie in (0, 1)");

    const Scalar lower = support_lower(d);
    const Scalar upper = support_upper(d);
    Scalar lo = std::isfinite(lower) ? lower : d.mu() - d.sigma();
    Scalar hi = std::isfinite(upper) ? upper : std::max(d.mu(), Scalar(0)) + d.sigma();
    if constexpr (std::is_same_v<D, LogNormal<Scalar>>) hi = std::exp(d.mu() + d.sigma());

    Scalar step = d.sigma();
    for (int i = 0; i < 2100 && !std::isfinite(lower) && cdf(d, lo) > p; ++i) {
        lo -= step;
        step *= 2;
    }
    step = std::max(d.sigma(), std::abs(hi));
    for (int i = 0; i < 2100 && !std::isfinite(upper) && cdf(d, hi) < p; ++i) {
        hi += step;
        step *= 2;
    }

    const Scalar tol_p = Scalar(1e-13);
    for (int i = 0; i < 400; ++i) {
        const Scalar mid = lo + Scalar(0.5) * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const Scalar f = cdf(d, mid);
        if (std::abs(f - p) <= tol_p) return mid;
        (f < p ? lo : hi) = mid;
    }
    return lo + Scalar(0.5) * (hi - lo);
}

// ---------------------------------------------------------------- moments

template <typename Scalar>
Scalar mean(const TruncNormal<Scalar>& d) {
    const Scalar a = d.mu() / d.sigma();
    return d.mu() + d.sigma() * std::exp(norm_log_pdf(a) - d.log_normalizer());
}

template <typename Scalar>
Scalar median(const TruncNormal<Scalar>& d) {
    const Scalar a = d.mu() / d.sigma();
    if (a > Scalar(-30)) return std::max(Scalar(0), d.mu() - d.sigma() * norm_quantile(Scalar(0.5) * norm_cdf(a)));
    return quantile(d, Scalar(0.5));
}

template <typename Scalar>
Scalar mean(const LogNormal<Scalar>& d) {
    return std::exp(d.mu() + Scalar(0.5) * d.sigma() * d.sigma());
}

template <typename Scalar>
Scalar median(const LogNormal<Scalar>& d) {
    return std::exp(d.mu());
}

template <typename Scalar>
Scalar mean(const Gev<Scalar>& d) {
    if (!(d.xi() < Scalar(1))) throw UndefinedMoment("Gev: mean is infinite for shape >= 1");
    if (d.is_gumbel()) return d.mu() + d.sigma() * std::numbers::egamma_v<Scalar>;
    return d.mu() + d.sigma() * (std::tgamma(Scalar(1) - d.xi()) - Scalar(1)) / d.xi();
}

template <typename Scalar>
Scalar median(const Gev<Scalar>& d) {
    const Scalar ln2 = std::numbers::ln2_v<Scalar>;
    if (d.is_gumbel()) return d.mu() - d.sigma() * std::log(ln2);
    return d.mu() + d.sigma() * std::expm1(-d.xi() * std::log(ln2)) / d.xi();
}

// --------------------------------------------------------------- sampling

template <typename Scalar>
Scalar sample(const TruncNormal<Scalar>& d, Rng& rng) {
    const Scalar a = d.mu() / d.sigma();
    Scalar z;
    if (a > Scalar(-30)) {
        // P(Z > z | Z > -a) = Phi(-z) / Phi(a) = u
        z = -norm_quantile(Scalar(rng.uniform()) * norm_cdf(a));
    } else {
        // Exponential rejection sampler for the far tail Z > -a.
        const Scalar bound = -a;
        const Scalar rate = Scalar(0.5) * (bound + std::sqrt(bound * bound + Scalar(4)));
        for (;;) {
            z = bound + Scalar(rng.exponential()) / rate;
            const Scalar diff = z - rate;
            if (Scalar(rng.uniform()) <= std::exp(Scalar(-0.5) * diff * diff)) break;
        }
    }
    return std::max(Scalar(0), d.mu() + d.sigma() * z);
}

template <typename Scalar>
Scalar sample(const LogNormal<Scalar>& d, Rng& rng) {
    return std::exp(d.mu() + d.sigma() * Scalar(rng.normal()));
}

template <typename Scalar>
Scalar sample(const Gev<Scalar>& d, Rng& rng) {
    const Scalar e = -std::log(Scalar(rng.uniform()));
    if (d.is_gumbel()) return d.mu() - d.sigma() * std::log(e);
    return d.mu() + d.sigma() * std::expm1(-d.xi() * std::log(e)) / d.xi();
}

// ------------------------------------------------- closed predictive family

/// A fitted EMOS predictive law.
using PredictiveDistribution = std::variant<TruncNormal<double>, LogNormal<double>, Gev<double>>;

inline std::string_view family_name(const PredictiveDistribution& d) {
    static constexpr std::string_view names[] = {"tn", "ln", "gev"};
    return names[d.index()];
}

inline double cdf(const PredictiveDistribution& d, double x) {
    return std::visit([x](const auto& v) { return cdf(v, x); }, d);
}
inline double log_pdf(const PredictiveDistribution& d, double x) {
    return std::visit([x](const auto& v) { return log_pdf(v, x); }, d);
}
inline double pdf(const PredictiveDistribution& d, double x) { return std::exp(log_pdf(d, x)); }
inline double quantile(const PredictiveDistribution& d, double p) {
    return std::visit([p](const auto& v) { return quantile(v, p); }, d);
}
inline double mean(const PredictiveDistribution& d) {
    return std::visit([](const auto& v) { return mean(v); }, d);
}
inline double median(const PredictiveDistribution& d) {
    return std::visit([](const auto& v) { return median(v); }, d);
}
inline double neg_mass(const PredictiveDistribution& d) {
    return std::visit([](const auto& v) { return neg_mass(v); }, d);
}
inline double sample(const PredictiveDistribution& d, Rng& rng) {
    return std::visit([&rng](const auto& v) { return sample(v, rng); }, d);
}
inline double support_lower(const PredictiveDistribution& d) {
    return std::visit([](const auto& v) { return support_lower(v); }, d);
}
inline double support_upper(const PredictiveDistribution& d) {
    return std::visit([](const auto& v) { return support_upper(v); }, d);
}

}  // namespace emos
