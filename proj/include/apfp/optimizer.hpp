#pragma once

#include <functional>

#include <Eigen/Dense>

namespace apfp {

struct LbfgsOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-10;  // on the max-abs gradient entry
  double value_target = 0.0;          // stop once the objective reaches this
  int memory = 12;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective returns f(x) and writes the gradient into its second argument.
using GradientObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a backtracking Armijo line search.
LbfgsResult minimize_lbfgs(const GradientObjective& objective, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace apfp
