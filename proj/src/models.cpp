#include "emos/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emos/errors.hpp"

namespace emos {

GroupSpec::GroupSpec(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw ConfigError("group spec needs at least one group");
    for (int s : sizes_) {
        if (s < 1) throw ConfigError("group sizes must be at least 1");
        total_ += s;
    }
}

GroupSpec GroupSpec::distinguishable(int members) {
    if (members < 1) throw ConfigError("ensemble needs at least one member");
    return GroupSpec(std::vector<int>(static_cast<std::size_t>(members), 1));
}

GroupSpec GroupSpec::exchangeable(int members) { return GroupSpec({members}); }

Eigen::VectorXd GroupSpec::group_sums(const Eigen::Ref<const Eigen::VectorXd>& members) const {
    Eigen::VectorXd sums(groups());
    Eigen::Index offset = 0;
    for (int k = 0; k < groups(); ++k) {
        sums[k] = members.segment(offset, sizes_[static_cast<std::size_t>(k)]).sum();
        offset += sizes_[static_cast<std::size_t>(k)];
    }
    return sums;
}

double ensemble_median(const Eigen::Ref<const Eigen::VectorXd>& members) {
    if (members.size() == 0) throw InputError("empty ensemble");
    std::vector<double> v(members.data(), members.data() + members.size());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EnsembleStats ensemble_stats(const Eigen::Ref<const Eigen::VectorXd>& members) {
    if (members.size() < 2) throw InputError("ensemble variance needs at least two members");
    EnsembleStats s;
    s.mean = members.mean();
    s.variance = (members.array() - s.mean).square().sum() / static_cast<double>(members.size() - 1);
    s.median = ensemble_median(members);
    return s;
}

double link_variance(const Eigen::Ref<const Eigen::VectorXd>& members) {
    if (members.size() < 2) return 0.0;
    const double m = members.mean();
    return (members.array() - m).square().sum() / static_cast<double>(members.size() - 1);
}

void validate(const EnsembleForecast& f, const GroupSpec& g) {
    if (f.members.size() != g.members())
        throw InputError("forecast has " + std::to_string(f.members.size()) + " members, group spec expects " +
                         std::to_string(g.members()));
    if (!f.members.allFinite() || (f.members.array() < 0.0).any())
        throw InputError("ensemble members must be finite and nonnegative");
    if (f.obs && (!std::isfinite(*f.obs) || *f.obs < 0.0))
        throw InvalidObservation("observation must be finite and nonnegative");
}

namespace {

void require_weights(const Eigen::VectorXd& w, const GroupSpec& g, bool nonnegative, const char* what) {
    if (w.size() != g.groups())
        throw InvalidParameter(std::string(what) + ": expected " + std::to_string(g.groups()) + " group weights");
    if (!w.allFinite()) throw InvalidParameter(std::string(what) + ": weights must be finite");
    if (nonnegative && (w.array() < 0.0).any()) throw InvalidParameter(std::string(what) + ": weights must be >= 0");
}

}  // namespace

TnParams default_tn(const GroupSpec& g) {
    return {0.0, Eigen::VectorXd::Constant(g.groups(), 1.0 / g.members()), 1.0, 1.0};
}

LnParams default_ln(const GroupSpec& g) {
    return {0.0, Eigen::VectorXd::Constant(g.groups(), 1.0 / g.members()), 1.0, 1.0};
}

GevParams default_gev(const GroupSpec& g) {
    return {0.0, Eigen::VectorXd::Constant(g.groups(), 1.0 / g.members()), 1.0, 0.0, 0.05};
}

void validate(const TnParams& p, const GroupSpec& g) {
    require_weights(p.a, g, true, "TnParams");
    if (!(p.b0 >= 0.0 && p.b1 >= 0.0) || !std::isfinite(p.a0) || !std::isfinite(p.b0) || !std::isfinite(p.b1))
        throw InvalidParameter("TnParams: b0, b1 must be nonnegative and all coefficients finite");
}

void validate(const LnParams& p, const GroupSpec& g) {
    require_weights(p.alpha, g, true, "LnParams");
    if (!(p.beta0 >= 0.0 && p.beta1 >= 0.0) || !std::isfinite(p.alpha0) || !std::isfinite(p.beta0) ||
        !std::isfinite(p.beta1))
        throw InvalidParameter("LnParams: beta0, beta1 must be nonnegative and all coefficients finite");
}

void validate(const GevParams& p, const GroupSpec& g) {
    require_weights(p.gamma, g, false, "GevParams");
    if (!std::isfinite(p.gamma0) || !std::isfinite(p.sigma0) || !std::isfinite(p.sigma1) || !std::isfinite(p.xi))
        throw InvalidParameter("GevParams: coefficients must be finite");
}

Prediction<TruncNormal<double>> tn_link(double location, double scale2) {
    const bool floored = !(scale2 >= kScaleFloor);
    return {TruncNormal<double>(location, std::sqrt(floored ? kScaleFloor : scale2)), floored};
}

Prediction<LogNormal<double>> ln_link(double mean, double variance) {
    const bool mean_floored = !(mean >= kMeanFloor);
    const bool var_floored = !(variance >= kScaleFloor);
    const MeanVariance<double> mv(mean_floored ? kMeanFloor : mean, var_floored ? kScaleFloor : variance);
    return {ln_from_mean_variance(mv), mean_floored || var_floored};
}

Prediction<Gev<double>> gev_link(double location, double scale, double xi) {
    const bool floored = !(scale >= kScaleFloor);
    return {Gev<double>(location, floored ? kScaleFloor : scale, xi), floored};
}

Prediction<TruncNormal<double>> predict_tn(const TnParams& p, const GroupSpec& g, const EnsembleForecast& f) {
    const double location = p.a0 + g.group_sums(f.members).dot(p.a);
    return tn_link(location, p.b0 + p.b1 * link_variance(f.members));
}

Prediction<LogNormal<double>> predict_ln(const LnParams& p, const GroupSpec& g, const EnsembleForecast& f) {
    const double m = p.alpha0 + g.group_sums(f.members).dot(p.alpha);
    return ln_link(m, p.beta0 + p.beta1 * link_variance(f.members));
}

Prediction<Gev<double>> predict_gev(const GevParams& p, const GroupSpec& g, const EnsembleForecast& f) {
    const double location = p.gamma0 + g.group_sums(f.members).dot(p.gamma);
    return gev_link(location, p.sigma0 + p.sigma1 * f.members.mean(), p.xi);
}

namespace {

template <typename D>
Prediction<PredictiveDistribution> widen(Prediction<D> p) {
    return {PredictiveDistribution(std::move(p.distribution)), p.floored};
}

}  // namespace

Prediction<PredictiveDistribution> predict(const ModelParams& p, const GroupSpec& g, const EnsembleForecast& f) {
    return std::visit(
        [&](const auto& params) -> Prediction<PredictiveDistribution> {
            using P = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<P, TnParams>) return widen(predict_tn(params, g, f));
            else if constexpr (std::is_same_v<P, LnParams>) return widen(predict_ln(params, g, f));
            else return widen(predict_gev(params, g, f));
        },
        p);
}

Prediction<PredictiveDistribution> predict_switch(const RegimeSwitchConfig& c, const GroupSpec& g,
                                                  const EnsembleForecast& f) {
    if (!uses_high_regime(ensemble_median(f.members), c.theta)) return widen(predict_tn(c.low, g, f));
    return std::visit([&](const auto& high) { return predict(ModelParams(high), g, f); }, c.high);
}

}  // namespace emos
