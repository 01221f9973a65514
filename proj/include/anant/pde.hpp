#pragma once

// Benchmark problems on hypercubes with manufactured solutions that depend
// on the coordinate mean s = (1/d) sum_i x_i (and on t for the heat
// equation), plus the active-dimension residual used for training.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anant/ansatz.hpp"
#include "anant/sampling.hpp"

namespace anant {

enum class ProblemKind { Poisson, SineGordon, AllenCahn, Heat };
std::string to_string(ProblemKind k);
ProblemKind parse_problem_kind(const std::string& s);

struct Problem {
  ProblemKind kind = ProblemKind::Poisson;
  int d = 1;  // spatial dimension
  double lo = -1.0;
  double hi = 1.0;
  double T = 1.0;  // final time (heat only)

  bool transient() const { return kind == ProblemKind::Heat; }
  /// Spatial coordinates, plus the time coordinate (last) when transient.
  int coords() const { return d + (transient() ? 1 : 0); }
  int time_index() const { return d; }
  Box box() const;
  void validate() const;
};

enum class ResidualScaling { AsWritten, DOverB };
std::string to_string(ResidualScaling s);
ResidualScaling parse_residual_scaling(const std::string& s);

struct ResidualConfig {
  ResidualScaling scaling = ResidualScaling::AsWritten;
  /// Zeroth-order nonlinear terms enter once per residual, never per dimension.
  bool nonlinear_term_once = true;
};

/// Closed-form solution; T is double or Jet2. Heat points carry t last.
template <class T>
T exact_value(const Problem& p, std::span<const T> point) {
  using std::cos;
  using std::exp;
  using std::sin;
  T s = point[0];
  for (int i = 1; i < p.d; ++i) s = s + point[static_cast<std::size_t>(i)];
  s = s / static_cast<double>(p.d);
  if (p.kind == ProblemKind::Heat) return cos(s) * exp(-point[static_cast<std::size_t>(p.d)]);
  return s * s + sin(s);
}

double exact_solution(const Problem& p, std::span<const double> point);
double forcing(const Problem& p, std::span<const double> point);
/// Equals exact_solution on the boundary; strict mode rejects interior points.
double boundary_value(const Problem& p, std::span<const double> point, bool strict = false);
/// u(x, 0) for the heat equation, from the d spatial coordinates.
double initial_value(const Problem& p, std::span<const double> spatial_point);

/// Multiplier applied to the summed active second derivatives.
double laplacian_scale(const Problem& p, const ResidualConfig& rcfg, int B);

/// Residual on the sampled (active) dimensions. `second_derivs` holds the
/// spatial second-derivative tensors; `dt` the time derivative (heat only).
Eigen::ArrayXd residual(const Problem& p, const ResidualConfig& rcfg, int B, const Eigen::ArrayXd& u,
                        std::span<const Eigen::ArrayXd> second_derivs, const Eigen::ArrayXd* dt,
                        const Eigen::ArrayXd& f);

/// Reference residual of the exact solution using every dimension; the
/// second derivatives come from Jet2 evaluation of the closed form.
Eigen::VectorXd full_residual_oracle(const Problem& p, const Eigen::MatrixXd& points);
/// Reference residual of a model using every dimension.
Eigen::VectorXd full_residual_oracle(const Problem& p, const AnantModel& model,
                                     const Eigen::MatrixXd& points);

/// Field values on every point of a grid in O(points + d).
Eigen::VectorXd grid_exact(const Problem& p, const GridBatch& grid);
Eigen::VectorXd grid_forcing(const Problem& p, const GridBatch& grid);

/// Closed forms in terms of the mean coordinate s and time t.
double exact_profile(const Problem& p, double s, double t);
double forcing_profile(const Problem& p, double s, double t);

}  // namespace anant
