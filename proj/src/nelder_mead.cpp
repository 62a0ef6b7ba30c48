#include "emos/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emos/errors.hpp"

namespace emos {

namespace {

class Simplex {
public:
    Simplex(const std::function<double(const Eigen::VectorXd&)>& objective, int& evaluations)
        : objective_(objective), evaluations_(evaluations) {}

    double eval(const Eigen::VectorXd& x) {
        ++evaluations_;
        const double v = objective_(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    }

    void build(const Eigen::VectorXd& start, double start_value, double step) {
        const Eigen::Index n = start.size();
        vertices_.resize(n, n + 1);
        values_.resize(n + 1);
        vertices_.col(0) = start;
        values_[0] = start_value;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd v = start;
            v[i] += step * std::max(1.0, std::abs(start[i]));
            vertices_.col(i + 1) = v;
            values_[i + 1] = eval(v);
        }
        order();
    }

    // Sort vertices best-first; ties keep their previous relative order.
    void order() {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(values_.size()));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [this](Eigen::Index a, Eigen::Index b) { return values_[a] < values_[b]; });
        Eigen::MatrixXd vs(vertices_.rows(), vertices_.cols());
        Eigen::VectorXd fs(values_.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            vs.col(static_cast<Eigen::Index>(k)) = vertices_.col(idx[k]);
            fs[static_cast<Eigen::Index>(k)] = values_[idx[k]];
        }
        vertices_.swap(vs);
        values_.swap(fs);
    }

    double size() const {
        return (vertices_.rightCols(vertices_.cols() - 1).colwise() - vertices_.col(0)).cwiseAbs().maxCoeff();
    }

    void iterate() {
        const Eigen::Index n = vertices_.rows();
        const Eigen::VectorXd centroid = vertices_.leftCols(n).rowwise().mean();
        const Eigen::VectorXd worst = vertices_.col(n);
        const double f_best = values_[0];
        const double f_second_worst = values_[n - 1];
        const double f_worst = values_[n];

        const Eigen::VectorXd reflected = centroid + (centroid - worst);
        const double f_reflected = eval(reflected);
        if (f_reflected < f_best) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) replace_worst(expanded, f_expanded);
            else replace_worst(reflected, f_reflected);
        } else if (f_reflected < f_second_worst) {
            replace_worst(reflected, f_reflected);
        } else if (f_reflected < f_worst) {
            const Eigen::VectorXd contracted = centroid + 0.5 * (reflected - centroid);
            const double f_contracted = eval(contracted);
            if (f_contracted <= f_reflected) replace_worst(contracted, f_contracted);
            else shrink();
        } else {
            const Eigen::VectorXd contracted = centroid - 0.5 * (centroid - worst);
            const double f_contracted = eval(contracted);
            if (f_contracted < f_worst) replace_worst(contracted, f_contracted);
            else shrink();
        }
        order();
    }

    const Eigen::VectorXd best() const { return vertices_.col(0); }
    double best_value() const { return values_[0]; }

private:
    void replace_worst(const Eigen::VectorXd& x, double f) {
        vertices_.col(vertices_.cols() - 1) = x;
        values_[values_.size() - 1] = f;
    }

    void shrink() {
        for (Eigen::Index i = 1; i < vertices_.cols(); ++i) {
            vertices_.col(i) = vertices_.col(0) + 0.5 * (vertices_.col(i) - vertices_.col(0));
            values_[i] = eval(vertices_.col(i));
        }
    }

    const std::function<double(const Eigen::VectorXd&)>& objective_;
    int& evaluations_;
    Eigen::MatrixXd vertices_;  // one vertex per column
    Eigen::VectorXd values_;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options) {
    if (start.size() == 0) throw InvalidParameter("nelder_mead: empty start vector");
    if (!start.allFinite()) throw InvalidParameter("nelder_mead: start vector must be finite");

    NelderMeadResult result;
    Simplex simplex(objective, result.evaluations);
    result.initial_value = simplex.eval(start);

    Eigen::VectorXd incumbent = start;
    double incumbent_value = result.initial_value;
    const int rounds = options.restart ? 2 : 1;
    // A step costs at most n + 2 evaluations (reflect, contract, shrink), so
    // only start one when it fits in the budget.
    const int n = static_cast<int>(start.size());
    for (int round = 0; round < rounds; ++round) {
        if (round > 0 && result.evaluations + n > options.max_evaluations) break;
        simplex.build(incumbent, incumbent_value, options.initial_step);
        result.converged = false;
        while (result.evaluations + n + 2 <= options.max_evaluations) {
            if (simplex.size() < options.size_tolerance) {
                result.converged = true;
                break;
            }
            simplex.iterate();
            result.best_history.push_back(simplex.best_value());
        }
        incumbent = simplex.best();
        incumbent_value = simplex.best_value();
        if (!result.converged) break;
    }
    result.x = incumbent;
    result.value = incumbent_value;
    return result;
}

}  // namespace emos
