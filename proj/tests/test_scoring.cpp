#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"
#include "emos/random.hpp"
#include "emos/scoring.hpp"

using namespace emos;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double brute_force_crps(const std::vector<double>& v, double x) {
    double abs_dev = 0.0, spread = 0.0;
    for (double a : v) {
        abs_dev += std::abs(a - x);
        for (double b : v) spread += std::abs(a - b);
    }
    const double n = static_cast<double>(v.size());
    return abs_dev / n - 0.5 * spread / (n * n);
}

double step_cdf(const std::vector<double>& v, double y) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), y) - v.begin()) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("truncated normal CRPS") {
    CHECK_THAT(crps_tn(TruncNormal<>(0.0, 1.0), 0.0), WithinAbs(0.467389954510218, 1e-12));
    CHECK_THAT(crps_tn(TruncNormal<>(0.0, 1.0), 0.0), WithinAbs(0.46739, 1e-5));
    CHECK_THAT(crps_tn(TruncNormal<>(10.0, 1.0), 10.0), WithinAbs(0.233694977255109, 1e-12));
    CHECK_THAT(crps_tn(TruncNormal<>(10.0, 1.0), 10.0), WithinAbs(2 * norm_pdf(0.0) - 1 / std::sqrt(std::numbers::pi), 1e-12));
    CHECK_THAT(crps_tn(TruncNormal<>(5.0, 2.0), 6.0), WithinAbs(0.653837905381441, 1e-12));
    CHECK_THAT(crps_tn(TruncNormal<>(-3.0, 1.0), 0.5), WithinAbs(0.166861330729076, 1e-11));
    CHECK_THAT(crps_tn(TruncNormal<>(2.0, 0.5), 0.0), WithinAbs(1.71802117543164, 1e-12));
    CHECK(crps_tn(TruncNormal<>(10.0, 1e-9), 10.0) < 1e-9);
    CHECK_THROWS_AS(crps_tn(TruncNormal<>(1.0, 1.0), -0.1), InvalidObservation);
}

TEST_CASE("truncated normal CRPS far below zero") {
    for (double mu : {-8.5, -20.0, -45.0}) {
        const TruncNormal<> d(mu, 1.0);
        const double closed = crps_tn(d, 0.05);
        CHECK(std::isfinite(closed));
        CHECK_THAT(closed, WithinAbs(crps_numeric(PredictiveDistribution(d), 0.05), 1e-6));
    }
}

TEST_CASE("log-normal CRPS") {
    // Quadrature gives 0.2674055; the rounded value quoted alongside the
    // formula (0.267424) is only good to about 2e-5.
    CHECK_THAT(crps_ln(LogNormal<>(0.0, 1.0), 1.0), WithinAbs(0.267405467022694, 1e-12));
    CHECK_THAT(crps_ln(LogNormal<>(0.0, 1.0), 1.0), WithinAbs(0.267424, 5e-5));
    const double e = std::numbers::e;
    CHECK_THAT(crps_ln(LogNormal<>(0.0, 1.0), e), WithinAbs(0.997583221008987, 1e-12));
    CHECK_THAT(crps_ln(LogNormal<>(0.0, 1.0), e),
               WithinAbs(crps_numeric(PredictiveDistribution(LogNormal<>(0.0, 1.0)), e), 1e-6));
    CHECK_THAT(crps_ln(LogNormal<>(1.2, 0.4), 0.0), WithinAbs(2.79565874622774, 1e-12));
    CHECK_THAT(crps_ln(LogNormal<>(1.2, 0.4), 5.0), WithinAbs(0.988872529511239, 1e-12));
    CHECK(crps_ln(LogNormal<>(0.7, 1e-9), std::exp(0.7)) < 1e-8);
    CHECK_THAT(crps_ln(MeanVariance<>(std::exp(0.5), e * (e - 1)), 1.0), WithinAbs(0.267405467022694, 1e-12));
    CHECK_THROWS_AS(crps_ln(LogNormal<>(0.0, 1.0), -1.0), InvalidObservation);
}

TEST_CASE("numeric CRPS") {
    const auto point_mass = [](double y) { return y >= 2.0 ? 1.0 : 0.0; };
    QuadratureOptions o;
    o.breakpoints = {2.0};
    o.lower = 0.0;
    o.upper = 10.0;
    CHECK(crps_numeric(point_mass, 2.0, o) == 0.0);

    CHECK_THAT(crps_numeric(PredictiveDistribution(TruncNormal<>(0.0, 1.0)), 0.0),
               WithinAbs(crps_tn(TruncNormal<>(0.0, 1.0), 0.0), 1e-6));

    const PredictiveDistribution g(Gev<>(0.0, 1.0, 0.0));
    const double coarse = crps_numeric(g, 0.0, 1e-8);
    const double fine = crps_numeric(g, 0.0, 5e-9);
    CHECK(coarse > 0.0);
    CHECK_THAT(coarse, WithinAbs(fine, 1e-8));
    CHECK_THAT(coarse, WithinAbs(0.322836353132628, 1e-7));
    CHECK_THAT(crps(PredictiveDistribution(Gev<>(0.5, 1.0, 0.2)), 1.0), WithinAbs(0.313267789512177, 1e-7));
    CHECK_THAT(crps(PredictiveDistribution(Gev<>(3.0, 1.0, -0.2)), 2.0), WithinAbs(0.878792648439603, 1e-7));
}

TEST_CASE("closed forms agree with quadrature on random parameters") {
    Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        const double mu = -4.0 + 16.0 * rng.uniform();
        const double sigma = 0.1 + 4.0 * rng.uniform();
        const double x = 15.0 * rng.uniform();
        const TruncNormal<> tn(mu, sigma);
        CHECK(std::abs(crps_tn(tn, x) - crps_numeric(PredictiveDistribution(tn), x)) <= 1e-6);

        const LogNormal<> ln(-1.0 + 3.5 * rng.uniform(), 0.05 + 1.2 * rng.uniform());
        CHECK(std::abs(crps_ln(ln, x) - crps_numeric(PredictiveDistribution(ln), x)) <= 1e-6);
    }
}

TEST_CASE("CRPS scales with the observation unit") {
    for (double a : {0.5, 2.0, 3.6}) {
        CHECK_THAT(crps_tn(TruncNormal<>(a * 4.0, a * 1.5), a * 5.0),
                   WithinRel(a * crps_tn(TruncNormal<>(4.0, 1.5), 5.0), 1e-12));
        CHECK_THAT(crps_ln(LogNormal<>(std::log(a) + 1.0, 0.4), a * 2.0),
                   WithinRel(a * crps_ln(LogNormal<>(1.0, 0.4), 2.0), 1e-12));
    }
}

TEST_CASE("CRPS is minimized at the generating parameters") {
    const double mu0 = 3.0, sigma0 = 1.5, step = 0.1;
    Rng rng(99);
    std::vector<double> xs(20000);
    for (auto& x : xs) x = sample(TruncNormal<>(mu0, sigma0), rng);
    double best = INFINITY, best_mu = 0.0, best_sigma = 0.0;
    for (int i = -5; i <= 5; ++i) {
        for (int j = -5; j <= 5; ++j) {
            const TruncNormal<> d(mu0 + i * step, sigma0 + j * step);
            std::vector<double> s;
            for (double x : xs) s.push_back(crps_tn(d, x));
            const double m = pairwise_mean(s);
            if (m < best) {
                best = m;
                best_mu = d.mu();
                best_sigma = d.sigma();
            }
        }
    }
    CHECK(std::abs(best_mu - mu0) <= step + 1e-12);
    CHECK(std::abs(best_sigma - sigma0) <= step + 1e-12);
}

TEST_CASE("empirical CRPS") {
    CHECK(crps_empirical(std::vector<double>{1.0, 3.0}, 2.0) == 0.5);
    CHECK(crps_empirical(std::vector<double>{4.2}, 4.2) == 0.0);
    CHECK(crps_empirical(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 2.5) == brute_force_crps({1, 2, 3, 4}, 2.5));
    CHECK_THROWS_AS(crps_empirical(std::vector<double>{}, 1.0), InputError);

    // Integer-valued lists keep every sum exact, so the comparison can be exact.
    Rng rng(5);
    for (int n = 1; n <= 200; n += 7) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& a : v) a = static_cast<double>(rng.below(40));
        const double x = static_cast<double>(rng.below(40));
        CHECK(crps_empirical(v, x) == brute_force_crps(v, x));
    }
}

TEST_CASE("empirical distribution") {
    const EmpiricalDistribution d({3.0, 1.0, 2.0, 5.0});
    CHECK(d.cdf(0.5) == 0.0);
    CHECK(d.cdf(2.0) == 0.5);
    CHECK(d.cdf(5.0) == 1.0);
    CHECK(d.mean() == 2.75);
    CHECK(d.median() == 2.5);
    CHECK(crps(d, 2.0) == brute_force_crps({1, 2, 3, 5}, 2.0));
    CHECK_THROWS_AS(EmpiricalDistribution({}), InputError);
}

TEST_CASE("threshold-weighted CRPS") {
    const PredictiveDistribution tn(TruncNormal<>(5.0, 2.0));
    CHECK_THAT(twcrps(tn, 6.0, -INFINITY), WithinAbs(crps_tn(TruncNormal<>(5.0, 2.0), 6.0), 1e-8));
    CHECK_THAT(twcrps(tn, 6.0, 7.0), WithinAbs(0.0146515511473234, 1e-7));
    CHECK_THAT(twcrps(tn, 8.0, 7.0), WithinAbs(0.7972669582783, 1e-7));
    CHECK(twcrps(tn, 6.0, 7.0) <= crps_tn(TruncNormal<>(5.0, 2.0), 6.0));
    CHECK(twcrps(EmpiricalDistribution({0.0}), 0.0, 1.0) == 0.0);

    double prev = INFINITY;
    for (double r = 0.0; r <= 14.0; r += 0.5) {
        const double v = twcrps(tn, 6.5, r);
        CHECK(v <= prev + 1e-9);
        prev = v;
    }
}

TEST_CASE("empirical twCRPS matches quadrature of the step function") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(11);
        for (auto& a : v) a = 12.0 * rng.uniform();
        std::sort(v.begin(), v.end());
        const double x = 12.0 * rng.uniform();
        const double r = 10.0 * rng.uniform();
        QuadratureOptions o;
        o.breakpoints = v;
        o.breakpoints.push_back(x);
        o.lower = 0.0;
        o.upper = 13.0;
        const double numeric = twcrps([&v](double y) { return step_cdf(v, y); }, x, r, o);
        CHECK_THAT(twcrps(EmpiricalDistribution(v), x, r), WithinAbs(numeric, 1e-9));
    }
}

TEST_CASE("skill, log score and point-forecast errors") {
    CHECK(twcrpss(0.7, 0.7) == 0.0);
    CHECK(twcrpss(0.5, 1.0) == 0.5);
    CHECK(twcrpss(0.0, 2.0) == 1.0);
    CHECK_THROWS_AS(twcrpss(0.5, 0.0), UndefinedSkill);

    CHECK(log_score(1.0) == 0.0);
    CHECK_THAT(log_score(std::exp(-1.0)), WithinAbs(1.0, 1e-15));
    CHECK(std::isinf(log_score(0.0)));
    CHECK_THROWS_AS(log_score(-0.1), InputError);

    const std::vector<std::pair<double, double>> perfect{{1.0, 1.0}, {2.5, 2.5}};
    CHECK(mae_median(perfect) == 0.0);
    CHECK(rmse_mean(perfect) == 0.0);
    CHECK(mae_median(std::vector<std::pair<double, double>>{{1.0, 2.0}, {3.0, 1.0}}) == 1.5);
    CHECK_THAT(rmse_mean(std::vector<std::pair<double, double>>{{0.0, 3.0}, {0.0, 4.0}}), WithinAbs(3.5355, 1e-4));
    CHECK_THROWS_AS(mae_median({}), InputError);
    CHECK_THROWS_AS(rmse_mean({}), InputError);
}

TEST_CASE("pairwise summation") {
    std::vector<double> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(i);
    CHECK(pairwise_sum(v) == 500500.0);
    CHECK(pairwise_mean(v) == 500.5);
    CHECK(std::isnan(pairwise_mean({})));
}
