#include "apfp/optimizer.hpp"

#include <cmath>
#include <deque>

namespace apfp {

LbfgsResult minimize_lbfgs(const GradientObjective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Eigen::VectorXd g(result.x.size());
  result.value = objective(result.x, g);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(result.x.size());

  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    if (!std::isfinite(result.value)) break;
    if (result.value <= options.value_target || g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd direction = -q;
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -g / std::max(1.0, g.norm());
      slope = g.dot(direction);
    }

    double step = 1.0;
    double value_new = 0.0;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = result.x + step * direction;
      value_new = objective(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s = x_new - result.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    result.x = std::move(x_new);
    result.value = value_new;
    g = g_new;
  }
  return result;
}

}  // namespace apfp
