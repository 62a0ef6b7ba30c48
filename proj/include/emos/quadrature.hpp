#pragma once

#include <functional>

namespace emos {

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod integration of f over [a, b].
/// Either limit may be infinite; semi-infinite ranges are mapped onto a
/// finite interval with x = a + t / (1 - t). Throws NumericError when the
/// error estimate is still above abs_tol after max_intervals subdivisions.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           int max_intervals = 4000);

}  // namespace emos
