#include "anant/optim.hpp"

#include <cmath>

#include "anant/error.hpp"

namespace anant {

namespace {

void check_finite(const Eigen::VectorXd& grad, const char* who) {
  if (!grad.allFinite()) throw NumericError(std::string(who) + ": non-finite gradient");
}

}  // namespace

void adamw_step(AdamWState& st, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  require(grad.size() == params.size(), "adamw_step: gradient size mismatch");
  check_finite(grad, "adamw_step");
  if (st.m.size() != params.size()) {
    st.m = Eigen::VectorXd::Zero(params.size());
    st.v = Eigen::VectorXd::Zero(params.size());
    st.step = 0;
  }
  ++st.step;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  if (st.weight_decay != 0.0) params *= 1.0 - lr * st.weight_decay;
  params.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

void gd_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  require(grad.size() == params.size(), "gd_step: gradient size mismatch");
  check_finite(grad, "gd_step");
  params -= lr * grad;
}

void LbfgsState::reset() {
  s.clear();
  y.clear();
  rho.clear();
  has_current = false;
  ++resets;
}

Eigen::VectorXd lbfgs_direction(const LbfgsState& st, const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  const std::size_t k = st.s.size();
  std::vector<double> alpha(k);
  for (std::size_t i = k; i-- > 0;) {
    alpha[i] = st.rho[i] * st.s[i].dot(q);
    q -= alpha[i] * st.y[i];
  }
  if (k > 0) q *= st.s.back().dot(st.y.back()) / st.y.back().squaredNorm();
  for (std::size_t i = 0; i < k; ++i) {
    const double beta = st.rho[i] * st.y[i].dot(q);
    q += (alpha[i] - beta) * st.s[i];
  }
  return -q;
}

void lbfgs_prime(LbfgsState& st, const Eigen::VectorXd& params, const Objective& fn) {
  if (st.has_current) return;
  st.f = fn(params, &st.g);
  if (!std::isfinite(st.f)) throw NumericError("lbfgs: non-finite objective");
  check_finite(st.g, "lbfgs");
  st.has_current = true;
}

LbfgsStep lbfgs_step(LbfgsState& st, Eigen::VectorXd& params, const Objective& fn, double lr) {
  require(lr > 0.0, "lbfgs_step: learning rate must be positive");
  lbfgs_prime(st, params, fn);
  LbfgsStep out;
  out.f_before = out.f_after = st.f;
  if (st.g.squaredNorm() == 0.0) return out;

  Eigen::VectorXd dir = lbfgs_direction(st, st.g);
  out.steepest_descent = st.s.empty();
  double slope = st.g.dot(dir);
  if (!(slope < 0.0)) {
    st.s.clear();
    st.y.clear();
    st.rho.clear();
    ++st.resets;
    dir = -st.g;
    slope = -st.g.squaredNorm();
    out.steepest_descent = true;
  }

  double step = lr;
  Eigen::VectorXd trial, g_new;
  for (int k = 0; k <= st.max_backtracks; ++k, step *= 0.5) {
    trial = params + step * dir;
    const double f_new = fn(trial, &g_new);
    if (std::isfinite(f_new) && f_new <= st.f + st.armijo_c * step * slope) {
      Eigen::VectorXd s = trial - params, y = g_new - st.g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
        st.s.push_back(std::move(s));
        st.y.push_back(std::move(y));
        st.rho.push_back(1.0 / sy);
        if (static_cast<int>(st.s.size()) > st.history) {
          st.s.pop_front();
          st.y.pop_front();
          st.rho.pop_front();
        }
      } else {
        // Stale pairs would keep steering along an outdated direction.
        st.s.clear();
        st.y.clear();
        st.rho.clear();
        ++st.resets;
      }
      params = trial;
      st.f = f_new;
      st.g = g_new;
      check_finite(st.g, "lbfgs");
      out.accepted = true;
      out.step = step;
      out.f_after = f_new;
      return out;
    }
  }
  // No acceptable step: stay put and restart from steepest descent.
  ++st.failed_searches;
  st.s.clear();
  st.y.clear();
  st.rho.clear();
  return out;
}

}  // namespace anant
