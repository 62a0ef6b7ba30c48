#pragma once

// Standard normal primitives shared by every closed form in the library.
// Phi routes through std::erfc, which is accurate to a few ulp over the
// whole real line, so lower tails keep full relative precision.

#include <cmath>
#include <limits>
#include <numbers>

namespace emos {

template <typename Scalar>
inline Scalar norm_pdf(Scalar x) {
    using std::exp;
    return exp(Scalar(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar>;
}

template <typename Scalar>
inline Scalar norm_log_pdf(Scalar x) {
    using std::log;
    return Scalar(-0.5) * x * x - Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
inline Scalar norm_cdf(Scalar x) {
    using std::erfc;
    return Scalar(0.5) * erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// log Phi(x). Below x = -30 erfc is close to underflow, so the Mills-ratio
/// asymptotic series takes over.
template <typename Scalar>
inline Scalar log_norm_cdf(Scalar x) {
    using std::erfc;
    using std::log;
    using std::log1p;
    if (x > Scalar(5)) return log1p(Scalar(-0.5) * erfc(x / std::numbers::sqrt2_v<Scalar>));
    if (x > Scalar(-30)) return log(norm_cdf(x));
    // Phi(x) ~ phi(x)/|x| * sum_k (-1)^k (2k-1)!! / x^{2k}
    const Scalar inv_x2 = Scalar(1) / (x * x);
    Scalar term = Scalar(1);
    Scalar series = Scalar(1);
    for (int k = 1; k < 16; ++k) {
        term *= -Scalar(2 * k - 1) * inv_x2;
        series += term;
    }
    return norm_log_pdf(x) - log(-x) + log(series);
}

/// Inverse of Phi. Rational approximation followed by two Halley steps, which
/// brings the result to full double precision.
template <typename Scalar>
Scalar norm_quantile(Scalar p) {
    using std::exp;
    using std::log;
    using std::sqrt;
    if (!(p > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
    if (!(p < Scalar(1))) return std::numeric_limits<Scalar>::infinity();
    if (p > Scalar(0.5)) return -norm_quantile(Scalar(1) - p);

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};

    Scalar x;
    if (p < Scalar(0.02425)) {
        const Scalar q = sqrt(Scalar(-2) * log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else {
        const Scalar q = p - Scalar(0.5);
        const Scalar r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    for (int i = 0; i < 2; ++i) {
        const Scalar e = norm_cdf(x) - p;
        const Scalar u = e * sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * exp(Scalar(0.5) * x * x);
        x = x - u / (Scalar(1) + Scalar(0.5) * x * u);
    }
    return x;
}

}  // namespace emos
