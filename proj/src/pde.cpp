#include "anant/pde.hpp"

#include <cmath>

#include "anant/error.hpp"
#include "residual_formula.hpp"

namespace anant {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Poisson: return "poisson";
    case ProblemKind::SineGordon: return "sine_gordon";
    case ProblemKind::AllenCahn: return "allen_cahn";
    case ProblemKind::Heat: return "heat";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "poisson") return ProblemKind::Poisson;
  if (s == "sine_gordon") return ProblemKind::SineGordon;
  if (s == "allen_cahn") return ProblemKind::AllenCahn;
  if (s == "heat") return ProblemKind::Heat;
  throw InvalidArgument("unknown problem '" + s + "'");
}

std::string to_string(ResidualScaling s) {
  return s == ResidualScaling::AsWritten ? "as_written" : "d_over_b";
}

ResidualScaling parse_residual_scaling(const std::string& s) {
  if (s == "as_written") return ResidualScaling::AsWritten;
  if (s == "d_over_b") return ResidualScaling::DOverB;
  throw InvalidArgument("unknown residual scaling '" + s + "'");
}

Box Problem::box() const {
  Box b;
  b.lo.assign(static_cast<std::size_t>(d), lo);
  b.hi.assign(static_cast<std::size_t>(d), hi);
  if (transient()) {
    b.lo.push_back(0.0);
    b.hi.push_back(T);
  }
  return b;
}

void Problem::validate() const {
  require(d >= 1, "problem: d must be >= 1");
  require(lo < hi, "problem: empty domain");
  if (transient()) require(T > 0.0, "problem: T must be positive");
}

double exact_profile(const Problem& p, double s, double t) {
  if (p.kind == ProblemKind::Heat) return std::cos(s) * std::exp(-t);
  return s * s + std::sin(s);
}

double forcing_profile(const Problem& p, double s, double t) {
  const double inv_d = 1.0 / p.d;
  const double u = exact_profile(p, s, t);
  switch (p.kind) {
    case ProblemKind::Poisson: return inv_d * (std::sin(s) - 2.0);
    case ProblemKind::SineGordon: return inv_d * (std::sin(s) - 2.0) + std::sin(u);
    case ProblemKind::AllenCahn: return inv_d * (std::sin(s) - 2.0) + u - u * u * u;
    case ProblemKind::Heat: return (inv_d - 1.0) * u;
  }
  return 0.0;
}

namespace {

void check_point(const Problem& p, std::size_t n) {
  if (static_cast<int>(n) != p.coords())
    throw InvalidArgument("point has " + std::to_string(n) + " coordinates, problem expects " +
                          std::to_string(p.coords()));
}

double mean_coordinate(const Problem& p, std::span<const double> point) {
  double s = 0.0;
  for (int i = 0; i < p.d; ++i) s += point[static_cast<std::size_t>(i)];
  return s / p.d;
}

double time_of(const Problem& p, std::span<const double> point) {
  return p.transient() ? point[static_cast<std::size_t>(p.d)] : 0.0;
}

}  // namespace

double exact_solution(const Problem& p, std::span<const double> point) {
  check_point(p, point.size());
  return exact_profile(p, mean_coordinate(p, point), time_of(p, point));
}

double forcing(const Problem& p, std::span<const double> point) {
  check_point(p, point.size());
  return forcing_profile(p, mean_coordinate(p, point), time_of(p, point));
}

double boundary_value(const Problem& p, std::span<const double> point, bool strict) {
  check_point(p, point.size());
  if (strict) {
    bool on_face = false;
    for (int i = 0; i < p.d; ++i) {
      const double x = point[static_cast<std::size_t>(i)];
      if (x == p.lo || x == p.hi) on_face = true;
    }
    if (!on_face) throw InvalidArgument("boundary_value: point is not on the boundary");
  }
  return exact_solution(p, point);
}

double initial_value(const Problem& p, std::span<const double> spatial_point) {
  require(p.transient(), "initial_value: problem is not transient");
  require(static_cast<int>(spatial_point.size()) == p.d, "initial_value: expected d coordinates");
  double s = 0.0;
  for (double x : spatial_point) s += x;
  return exact_profile(p, s / p.d, 0.0);
}

double laplacian_scale(const Problem& p, const ResidualConfig& rcfg, int B) {
  if (rcfg.scaling == ResidualScaling::AsWritten) return 1.0;
  const int blocks = p.transient() ? B - 1 : B;
  require(blocks >= 1, "laplacian_scale: no spatial body networks");
  return static_cast<double>(p.d) / blocks;
}

Eigen::ArrayXd residual(const Problem& p, const ResidualConfig& rcfg, int B, const Eigen::ArrayXd& u,
                        std::span<const Eigen::ArrayXd> second_derivs, const Eigen::ArrayXd* dt,
                        const Eigen::ArrayXd& f) {
  require(!second_derivs.empty(), "residual: missing second-derivative tensors");
  if (p.transient() && dt == nullptr) throw InvalidArgument("residual: missing time derivative");
  Eigen::ArrayXd lap = Eigen::ArrayXd::Zero(u.size());
  for (const auto& t : second_derivs) {
    require(t.size() == u.size(), "residual: derivative tensor shape mismatch");
    lap += t;
  }
  require(f.size() == u.size(), "residual: forcing shape mismatch");
  if (dt) require(dt->size() == u.size(), "residual: time derivative shape mismatch");
  return detail::residual_formula<Eigen::ArrayXd>(p.kind, laplacian_scale(p, rcfg, B), u, lap, dt, f);
}

Eigen::VectorXd full_residual_oracle(const Problem& p, const Eigen::MatrixXd& points) {
  require(points.cols() == p.coords(), "full_residual_oracle: column count mismatch");
  Eigen::VectorXd out(points.rows());
  std::vector<Jet2> x(static_cast<std::size_t>(p.coords()));
  std::vector<double> row(x.size());
  for (Eigen::Index n = 0; n < points.rows(); ++n) {
    for (int c = 0; c < p.coords(); ++c) row[c] = points(n, c);
    auto value_with_seed = [&](int seeded) {
      for (int c = 0; c < p.coords(); ++c)
        x[c] = c == seeded ? Jet2::variable(row[c]) : Jet2::constant(row[c]);
      return exact_value<Jet2>(p, std::span<const Jet2>(x));
    };
    double lap = 0.0;
    for (int c = 0; c < p.d; ++c) lap += value_with_seed(c).d2;
    const double u = value_with_seed(-1).v;
    const double dt = p.transient() ? value_with_seed(p.d).d1 : 0.0;
    out(n) = detail::residual_formula<double>(p.kind, 1.0, u, lap, &dt, forcing(p, row));
  }
  return out;
}

Eigen::VectorXd full_residual_oracle(const Problem& p, const AnantModel& model,
                                     const Eigen::MatrixXd& points) {
  require(points.cols() == p.coords() && model.coords() == p.coords(),
          "full_residual_oracle: coordinate count mismatch");
  const Eigen::ArrayXd u = predict_points(model, points).array();
  Eigen::ArrayXd lap = Eigen::ArrayXd::Zero(points.rows());
  for (int c = 0; c < p.d; ++c) lap += partial_points(model, points, c, 2).array();
  Eigen::ArrayXd dt;
  if (p.transient()) dt = partial_points(model, points, p.d, 1).array();
  Eigen::ArrayXd f(points.rows());
  std::vector<double> row(static_cast<std::size_t>(p.coords()));
  for (Eigen::Index n = 0; n < points.rows(); ++n) {
    for (int c = 0; c < p.coords(); ++c) row[c] = points(n, c);
    f(n) = forcing(p, row);
  }
  return detail::residual_formula<Eigen::ArrayXd>(p.kind, 1.0, u, lap, p.transient() ? &dt : nullptr, f)
      .matrix();
}

namespace {

/// Per-point sum over the coordinates selected by `take`, built axis by axis.
template <class Pred>
Eigen::ArrayXd separable_sum(const GridBatch& grid, Pred take) {
  double base = 0.0;
  for (int c : grid.inactive_dims())
    if (take(c)) base += grid.fixed_point(c);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Constant(1, base);
  for (std::size_t i = 0; i < grid.axis_coords.size(); ++i) {
    const auto& axis = grid.axis_coords[i];
    const bool used = take(grid.active_dims[i]);
    Eigen::ArrayXd next(acc.size() * axis.size());
    for (Eigen::Index a = 0; a < acc.size(); ++a)
      for (Eigen::Index b = 0; b < axis.size(); ++b)
        next(a * axis.size() + b) = acc(a) + (used ? axis(b) : 0.0);
    acc = std::move(next);
  }
  return acc;
}

template <class Fn>
Eigen::VectorXd grid_field(const Problem& p, const GridBatch& grid, Fn fn) {
  require(grid.fixed_point.size() == p.coords(), "grid coordinate count does not match problem");
  const Eigen::ArrayXd s = separable_sum(grid, [&](int c) { return c < p.d; }) / p.d;
  const Eigen::ArrayXd t = p.transient() ? separable_sum(grid, [&](int c) { return c == p.d; })
                                         : Eigen::ArrayXd::Zero(s.size());
  Eigen::VectorXd out(s.size());
  for (Eigen::Index n = 0; n < s.size(); ++n) out(n) = fn(s(n), t(n));
  return out;
}

}  // namespace

Eigen::VectorXd grid_exact(const Problem& p, const GridBatch& grid) {
  return grid_field(p, grid, [&](double s, double t) { return exact_profile(p, s, t); });
}

Eigen::VectorXd grid_forcing(const Problem& p, const GridBatch& grid) {
  return grid_field(p, grid, [&](double s, double t) { return forcing_profile(p, s, t); });
}

}  // namespace anant
