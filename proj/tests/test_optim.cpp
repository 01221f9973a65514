#include <limits>

#include "anant/error.hpp"
#include "anant/optim.hpp"
#include "doctest.h"

using namespace anant;

namespace {

/// f = 0.5 (x0^2 + 100 x1^2).
double ill_conditioned(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  if (g) *g = Eigen::Vector2d(x(0), 100.0 * x(1));
  return 0.5 * (x(0) * x(0) + 100.0 * x(1) * x(1));
}

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
  if (g) *g = Eigen::Vector2d(-2.0 * a - 400.0 * x(0) * b, 200.0 * b);
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("first Adam step moves each parameter by the learning rate") {
  AdamWState s;
  Eigen::VectorXd p = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::VectorXd g = Eigen::Vector3d(0.3, -4.0, 1e-3);
  adamw_step(s, p, g, 0.1);
  CHECK(p(0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p(1) == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(p(2) == doctest::Approx(0.4).epsilon(1e-4));
  CHECK(s.step == 1);
}

TEST_CASE("decoupled weight decay shrinks parameters with zero gradient") {
  AdamWState s;
  s.weight_decay = 0.5;
  Eigen::VectorXd p = Eigen::Vector2d(2.0, -4.0);
  adamw_step(s, p, Eigen::Vector2d::Zero(), 0.1);
  CHECK(p(0) == doctest::Approx(2.0 * (1.0 - 0.05)).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(-4.0 * (1.0 - 0.05)).epsilon(1e-14));
}

TEST_CASE("Adam bias correction on a constant gradient") {
  AdamWState s;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  for (int k = 0; k < 5; ++k) adamw_step(s, p, Eigen::VectorXd::Constant(1, 2.0), 0.01);
  CHECK(p(0) == doctest::Approx(-0.05).epsilon(1e-6));
}

TEST_CASE("gradient descent step and non-finite gradients") {
  Eigen::VectorXd p = Eigen::Vector2d(1.0, 1.0);
  gd_step(p, Eigen::Vector2d(2.0, -1.0), 0.5);
  CHECK(p == Eigen::Vector2d(0.0, 1.5));
  const Eigen::VectorXd bad = Eigen::Vector2d(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(gd_step(p, bad, 0.1), NumericError);
  AdamWState s;
  CHECK_THROWS_AS(adamw_step(s, p, bad, 0.1), NumericError);
}

TEST_CASE("L-BFGS direction with empty history is steepest descent") {
  LbfgsState s;
  const Eigen::VectorXd g = Eigen::Vector3d(1.0, -2.0, 3.0);
  CHECK(lbfgs_direction(s, g) == -g);
}

TEST_CASE("L-BFGS two-loop recursion with one pair applies the BFGS inverse update") {
  LbfgsState st;
  const Eigen::Vector2d s(1.0, 0.5), y(2.0, 3.0);
  st.s.push_back(s);
  st.y.push_back(y);
  st.rho.push_back(1.0 / y.dot(s));
  const Eigen::Vector2d g(0.7, -1.1);
  const double rho = 1.0 / y.dot(s), gamma = s.dot(y) / y.dot(y);
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d H = (I - rho * s * y.transpose()) * (gamma * I) * (I - rho * y * s.transpose()) +
                            rho * s * s.transpose();
  CHECK((lbfgs_direction(st, g) + H * g).norm() <= 1e-14);
}

TEST_CASE("L-BFGS solves an ill-conditioned quadratic") {
  LbfgsState s;
  Eigen::VectorXd x = Eigen::Vector2d(1.0, 1.0);
  lbfgs_prime(s, x, ill_conditioned);
  int steps = 0;
  while (s.f > 1e-8 && steps < 50) {
    const LbfgsStep st = lbfgs_step(s, x, ill_conditioned, 1.0);
    CHECK(st.f_after <= st.f_before);
    ++steps;
  }
  CHECK(s.f <= 1e-8);
  CHECK(steps <= 50);
  // Gradient descent at the largest stable step is far slower.
  Eigen::VectorXd z = Eigen::Vector2d(1.0, 1.0), g;
  for (int k = 0; k < 50; ++k) {
    ill_conditioned(z, &g);
    gd_step(z, g, 0.019);
  }
  CHECK(ill_conditioned(z, nullptr) > 1e-3);
}

TEST_CASE("L-BFGS minimizes the Rosenbrock function") {
  LbfgsState s;
  Eigen::VectorXd x = Eigen::Vector2d(-1.2, 1.0);
  lbfgs_prime(s, x, rosenbrock);
  for (int k = 0; k < 200 && s.f > 1e-14; ++k) lbfgs_step(s, x, rosenbrock, 1.0);
  CHECK((x - Eigen::Vector2d(1.0, 1.0)).norm() <= 1e-5);
}

TEST_CASE("L-BFGS at a stationary point does not move") {
  LbfgsState s;
  Eigen::VectorXd x = Eigen::Vector2d::Zero();
  lbfgs_prime(s, x, ill_conditioned);
  const LbfgsStep st = lbfgs_step(s, x, ill_conditioned, 1.0);
  CHECK(x == Eigen::Vector2d::Zero());
  CHECK(st.f_after == 0.0);
}

TEST_CASE("L-BFGS keeps at most the configured history") {
  LbfgsState s;
  s.history = 3;
  Eigen::VectorXd x = Eigen::Vector2d(-1.2, 1.0);
  lbfgs_prime(s, x, rosenbrock);
  for (int k = 0; k < 10; ++k) lbfgs_step(s, x, rosenbrock, 1.0);
  CHECK(s.s.size() <= 3);
  CHECK(s.s.size() == s.y.size());
  s.reset();
  CHECK(s.s.empty());
  CHECK_FALSE(s.has_current);
}

TEST_CASE("failed line search leaves parameters unchanged") {
  // An objective whose value only increases away from x: the gradient lies.
  const Objective liar = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = Eigen::VectorXd::Ones(x.size());
    return x.squaredNorm();
  };
  LbfgsState s;
  s.max_backtracks = 5;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  lbfgs_prime(s, x, liar);
  const LbfgsStep st = lbfgs_step(s, x, liar, 1.0);
  CHECK_FALSE(st.accepted);
  CHECK(x == Eigen::VectorXd::Zero(2));
  CHECK(s.failed_searches == 1);
}
