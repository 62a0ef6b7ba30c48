#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace emos {

struct NelderMeadOptions {
    int max_evaluations = 5000;
    /// Converged once every vertex lies within this infinity-norm distance
    /// of the best vertex.
    double size_tolerance = 1e-6;
    /// Initial edge for coordinate i is initial_step * max(1, |x0_i|).
    double initial_step = 0.1;
    /// Restart once from the incumbent after the first convergence.
    bool restart = true;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double initial_value = 0.0;
    int evaluations = 0;
    bool converged = false;
    /// Best objective value after every iteration.
    std::vector<double> best_history;
};

/// Derivative-free simplex minimization (standard reflection 1, expansion
/// 2, contraction 1/2, shrink 1/2). NaN objective values rank as +inf.
/// Fully deterministic for a given objective and start point.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace emos
