#include "emos/quadrature.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "emos/errors.hpp"

namespace emos {

namespace {

constexpr double kNodes[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                              0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                              0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                              0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kKronrod[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes.
constexpr double kGauss[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b, int& evaluations) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrod[7];
    double gauss = fc * kGauss[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kNodes[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kKronrod[j] * sum;
        if (j % 2 == 1) gauss += kGauss[j / 2] * sum;
    }
    evaluations += 15;
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

QuadratureResult integrate_finite(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                  int max_intervals) {
    QuadratureResult result;
    if (a == b) return result;
    std::priority_queue<Segment> heap;
    Segment first = gauss_kronrod(f, a, b, result.evaluations);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    int intervals = 1;
    while (error > abs_tol && intervals < max_intervals) {
        const Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        const Segment left = gauss_kronrod(f, worst.a, mid, result.evaluations);
        const Segment right = gauss_kronrod(f, mid, worst.b, result.evaluations);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    // Re-sum from the segments: the running totals drift with cancellation.
    total = 0.0;
    error = 0.0;
    for (; !heap.empty(); heap.pop()) {
        total += heap.top().value;
        error += heap.top().error;
    }
    result.value = total;
    result.abs_error = error;
    result.intervals = intervals;
    if (!std::isfinite(total) || error > abs_tol) {
        std::ostringstream msg;
        msg << "quadrature did not converge on [" << a << ", " << b << "]: estimate " << total << ", error "
            << error << " > tolerance " << abs_tol << " after " << intervals << " intervals and "
            << result.evaluations << " evaluations";
        throw NumericError(msg.str());
    }
    return result;
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           int max_intervals) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (std::isnan(a) || std::isnan(b)) throw InvalidParameter("integrate: NaN limit");
    if (a > b) {
        QuadratureResult r = integrate(f, b, a, abs_tol, max_intervals);
        r.value = -r.value;
        return r;
    }
    if (a == -inf && b == inf) {
        QuadratureResult lo = integrate(f, -inf, 0.0, 0.5 * abs_tol, max_intervals);
        QuadratureResult hi = integrate(f, 0.0, inf, 0.5 * abs_tol, max_intervals);
        return {lo.value + hi.value, lo.abs_error + hi.abs_error, lo.evaluations + hi.evaluations,
                lo.intervals + hi.intervals};
    }
    if (b == inf) {
        auto mapped = [&f, a](double t) {
            const double s = 1.0 - t;
            return f(a + t / s) / (s * s);
        };
        return integrate_finite(mapped, 0.0, 1.0, abs_tol, max_intervals);
    }
    if (a == -inf) {
        auto mapped = [&f, b](double t) {
            const double s = 1.0 - t;
            return f(b - t / s) / (s * s);
        };
        return integrate_finite(mapped, 0.0, 1.0, abs_tol, max_intervals);
    }
    return integrate_finite(f, a, b, abs_tol, max_intervals);
}

}  // namespace emos
