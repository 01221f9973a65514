#pragma once

// First-order (AdamW, plain gradient descent) and quasi-Newton (L-BFGS)
// parameter updates on a flat parameter vector.

#include <deque>
#include <functional>

#include <Eigen/Dense>

namespace anant {

struct AdamWState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long step = 0;
  Eigen::VectorXd m, v;
};

/// Decoupled weight decay followed by the bias-corrected Adam update.
/// Throws NumericError on a non-finite gradient.
void adamw_step(AdamWState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

/// params -= lr * grad. Throws NumericError on a non-finite gradient.
void gd_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

/// Returns f(theta) and, when grad is non-null, writes its gradient.
using Objective = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

struct LbfgsState {
  int history = 10;
  double armijo_c = 1e-4;
  int max_backtracks = 40;

  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;
  // Objective value and gradient at the current parameters, if known.
  bool has_current = false;
  double f = 0.0;
  Eigen::VectorXd g;
  // Diagnostics.
  long resets = 0;
  long failed_searches = 0;

  /// Forgets curvature pairs and the cached objective value.
  void reset();
};

struct LbfgsStep {
  bool accepted = false;
  double step = 0.0;          // accepted step length (0 if rejected)
  double f_before = 0.0;
  double f_after = 0.0;
  bool steepest_descent = false;  // direction was -g (empty or reset history)
};

/// Search direction -H g from the two-loop recursion over the stored pairs.
Eigen::VectorXd lbfgs_direction(const LbfgsState& state, const Eigen::VectorXd& grad);

/// Evaluates the objective at params if no value is cached.
void lbfgs_prime(LbfgsState& state, const Eigen::VectorXd& params, const Objective& fn);

/// One iteration: two-loop direction, Armijo backtracking from step = lr
/// (halving), curvature-pair update. A non-descent direction resets the
/// history and falls back to -g. The last objective evaluation made by
/// this call is at the accepted point whenever the step is accepted.
LbfgsStep lbfgs_step(LbfgsState& state, Eigen::VectorXd& params, const Objective& fn, double lr);

}  // namespace anant
