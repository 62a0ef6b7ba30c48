#include "emos/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emos/errors.hpp"

namespace emos {

int rank_of_obs(std::span<const double> members, double obs, Rng& rng) {
    if (members.empty()) throw InputError("rank_of_obs: empty ensemble");
    std::size_t below = 0;
    std::size_t ties = 0;
    for (double m : members) {
        if (m < obs) ++below;
        else if (m == obs) ++ties;
    }
    const std::size_t offset = ties == 0 ? 0 : static_cast<std::size_t>(rng.below(ties + 1));
    return static_cast<int>(below + offset + 1);
}

RankHistogram::RankHistogram(int members) {
    if (members < 1) throw InputError("rank histogram needs at least one member");
    counts_.assign(static_cast<std::size_t>(members) + 1, 0);
}

RankHistogram::RankHistogram(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
    if (counts_.size() < 2) throw InputError("rank histogram needs at least two classes");
    for (auto c : counts_) total_ += c;
}

void RankHistogram::add(int rank) {
    if (rank < 1 || rank > classes()) throw InputError("rank out of range");
    ++counts_[static_cast<std::size_t>(rank - 1)];
    ++total_;
}

std::vector<double> RankHistogram::frequencies() const {
    std::vector<double> p(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i)
        p[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
    return p;
}

double reliability_index(const RankHistogram& h) {
    if (h.total() == 0) throw InputError("reliability_index: empty histogram");
    // sum_i |n_i / N - 1 / c| = sum_i |c n_i - N| / (c N), summed in integers
    // so the only rounding is the final division.
    const std::uint64_t c = static_cast<std::uint64_t>(h.classes());
    const std::uint64_t n = h.total();
    std::uint64_t numerator = 0;
    for (std::size_t k : h.counts()) {
        const std::uint64_t scaled = c * k;
        numerator += scaled > n ? scaled - n : n - scaled;
    }
    return static_cast<double>(numerator) / (static_cast<double>(c) * static_cast<double>(n));
}

bool ensemble_coverage(std::span<const double> members, double obs) {
    if (members.empty()) throw InputError("ensemble_coverage: empty ensemble");
    const auto [lo, hi] = std::minmax_element(members.begin(), members.end());
    return *lo <= obs && obs <= *hi;
}

double nominal_coverage(int members) {
    if (members < 1) throw InputError("nominal_coverage: ensemble needs at least one member");
    return static_cast<double>(members - 1) / static_cast<double>(members + 1);
}

namespace {

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("central interval: alpha must lie in (0, 1)");
}

// p * (n + 1) lands on an integer for the ensemble's own nominal level;
// snap it so the interval is exactly the ensemble range.
double snapped_quantile(const EmpiricalDistribution& d, double p) {
    const double n1 = static_cast<double>(d.size() + 1);
    const double h = p * n1;
    const double r = std::round(h);
    if (std::abs(h - r) < 1e-9 && r >= 1.0 && r <= static_cast<double>(d.size()))
        return d.sorted()[static_cast<std::size_t>(r) - 1];
    return d.quantile(p);
}

}  // namespace

std::pair<double, double> central_interval(const PredictiveDistribution& d, double alpha) {
    require_alpha(alpha);
    return {quantile(d, 0.5 * alpha), quantile(d, 1.0 - 0.5 * alpha)};
}

std::pair<double, double> central_interval(const EmpiricalDistribution& d, double alpha) {
    require_alpha(alpha);
    return {snapped_quantile(d, 0.5 * alpha), snapped_quantile(d, 1.0 - 0.5 * alpha)};
}

std::vector<std::size_t> pit_histogram(std::span<const double> pit_values, int bins) {
    if (bins < 1) throw InputError("pit_histogram: need at least one bin");
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double u : pit_values) {
        if (!(u >= 0.0 && u <= 1.0)) throw InputError("PIT values must lie in [0, 1]");
        const auto b = std::min(static_cast<std::size_t>(u * bins), counts.size() - 1);
        ++counts[b];
    }
    return counts;
}

double kolmogorov_survival(double lambda) {
    if (!(lambda > 0.0)) return 1.0;
    constexpr double kTermTolerance = 1e-10;
    if (lambda < 1.18) {
        // Jacobi theta form converges quickly for small lambda.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
            cdf += term;
            if (term < kTermTolerance) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < kTermTolerance) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform_test(std::span<const double> values) {
    if (values.size() < 10) throw InsufficientData("KS test needs at least 10 values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double u = std::clamp(sorted[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw InputError("percentile of an empty sample");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double h = (static_cast<double>(s.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

std::vector<double> default_thresholds(std::span<const double> obs) {
    return {percentile(obs, 0.90), percentile(obs, 0.95), percentile(obs, 0.99)};
}

namespace {

struct CaseScores {
    double crps = 0.0;
    std::vector<double> twcrps;
    std::optional<double> log_score;
    double median = 0.0;
    std::optional<double> mean;
    double lo = 0.0;
    double hi = 0.0;
    std::optional<double> pit;
    double neg_mass = 0.0;
};

CaseScores score_case(const Forecast& forecast, double obs, std::span<const double> thresholds, double alpha) {
    CaseScores s;
    if (const auto* d = std::get_if<PredictiveDistribution>(&forecast)) {
        s.crps = crps(*d, obs);
        for (double r : thresholds) s.twcrps.push_back(twcrps(*d, obs, r));
        s.log_score = log_score(pdf(*d, obs));
        s.median = median(*d);
        try {
            s.mean = mean(*d);
        } catch (const UndefinedMoment&) {
        }
        std::tie(s.lo, s.hi) = central_interval(*d, alpha);
        s.pit = pit(*d, obs);
        s.neg_mass = neg_mass(*d);
    } else {
        const auto& e = std::get<EmpiricalDistribution>(forecast);
        s.crps = crps(e, obs);
        for (double r : thresholds) s.twcrps.push_back(twcrps(e, obs, r));
        s.median = e.median();
        s.mean = e.mean();
        std::tie(s.lo, s.hi) = central_interval(e, alpha);
        s.neg_mass = e.cdf(std::nextafter(0.0, -1.0));
    }
    return s;
}

}  // namespace

VerificationReport build_report(std::string model, std::span<const VerificationCase> cases,
                                const ReportOptions& options) {
    if (cases.empty()) throw InputError("build_report: no verification cases");
    const int members = static_cast<int>(cases.front().members.size());
    for (const auto& c : cases)
        if (c.members.size() != members) throw InputError("build_report: ensemble size differs between cases");

    VerificationReport rep;
    rep.model = std::move(model);
    rep.cases = cases.size();
    rep.seed = options.seed;

    std::vector<double> obs;
    obs.reserve(cases.size());
    for (const auto& c : cases) obs.push_back(c.obs);
    const std::vector<double> thresholds = options.thresholds.empty() ? default_thresholds(obs) : options.thresholds;
    rep.alpha = options.alpha.value_or(2.0 / (members + 1));
    rep.nominal_coverage_pct = 100.0 * (1.0 - rep.alpha);

    Rng rng(options.seed);
    RankHistogram ranks(members);
    std::vector<double> crps_values, log_values, neg_values, widths, covered;
    std::vector<std::vector<double>> tw_values(thresholds.size());
    std::vector<std::pair<double, double>> median_pairs, mean_pairs;
    std::vector<double> pits;
    for (const auto& c : cases) {
        ranks.add(rank_of_obs(std::span<const double>(c.members.data(), static_cast<std::size_t>(c.members.size())),
                              c.obs, rng));
        const CaseScores s = score_case(c.forecast, c.obs, thresholds, rep.alpha);
        crps_values.push_back(s.crps);
        for (std::size_t j = 0; j < thresholds.size(); ++j) tw_values[j].push_back(s.twcrps[j]);
        if (s.log_score) {
            if (std::isfinite(*s.log_score)) log_values.push_back(*s.log_score);
            else ++rep.scores.infinite_log_scores;
        }
        median_pairs.emplace_back(s.median, c.obs);
        if (s.mean) mean_pairs.emplace_back(*s.mean, c.obs);
        else ++rep.undefined_mean_cases;
        widths.push_back(s.hi - s.lo);
        covered.push_back(s.lo <= c.obs && c.obs <= s.hi ? 1.0 : 0.0);
        if (s.pit) pits.push_back(*s.pit);
        neg_values.push_back(s.neg_mass);
    }

    rep.scores.mean_crps = pairwise_mean(crps_values);
    for (std::size_t j = 0; j < thresholds.size(); ++j)
        rep.scores.mean_twcrps.push_back({thresholds[j], pairwise_mean(tw_values[j])});
    if (!log_values.empty()) rep.scores.mean_log_score = pairwise_mean(log_values);
    rep.scores.mae = mae_median(median_pairs);
    rep.scores.rmse = mean_pairs.empty() ? std::numeric_limits<double>::quiet_NaN() : rmse_mean(mean_pairs);

    rep.rank_classes = ranks.classes();
    rep.rank_counts.assign(ranks.counts().begin(), ranks.counts().end());
    rep.reliability_index = reliability_index(ranks);

    rep.coverage_pct = 100.0 * pairwise_mean(covered);
    rep.average_width = pairwise_mean(widths);

    if (!pits.empty()) {
        rep.pit_counts = pit_histogram(pits, options.pit_bins.value_or(members + 1));
        if (pits.size() >= 10) {
            const KsResult ks = ks_uniform_test(pits);
            rep.ks_statistic = ks.statistic;
            rep.ks_p_value = ks.p_value;
        }
    }
    rep.neg_mass_mean = pairwise_mean(neg_values);
    rep.neg_mass_max = *std::max_element(neg_values.begin(), neg_values.end());
    return rep;
}

}  // namespace emos
