#include <vector>

#include "anant/error.hpp"
#include "anant/pde.hpp"
#include "doctest.h"

using namespace anant;

namespace {

Problem make_problem(ProblemKind kind, int d) {
  Problem p;
  p.kind = kind;
  p.d = d;
  return p;
}

const ProblemKind kAllKinds[] = {ProblemKind::Poisson, ProblemKind::SineGordon, ProblemKind::AllenCahn,
                                 ProblemKind::Heat};

Eigen::MatrixXd interior_points(const Problem& p, int n, std::uint64_t seed) {
  return sample_test_points(p.coords(), n, p.box(), seed);
}

/// Exact second derivative along coordinate c at a point, via Jet2.
Jet2 exact_jet(const Problem& p, const Eigen::VectorXd& point, int c) {
  std::vector<Jet2> x;
  for (int k = 0; k < point.size(); ++k) x.push_back(k == c ? Jet2::variable(point(k)) : Jet2::constant(point(k)));
  return exact_value<Jet2>(p, std::span<const Jet2>(x));
}

}  // namespace

TEST_CASE("closed-form values") {
  const Problem p1 = make_problem(ProblemKind::Poisson, 1);
  const std::vector<double> one{1.0};
  CHECK(exact_solution(p1, one) == doctest::Approx(1.0 + std::sin(1.0)).epsilon(1e-15));
  const Problem p21 = make_problem(ProblemKind::Poisson, 21);
  const std::vector<double> origin(21, 0.0);
  CHECK(exact_solution(p21, origin) == 0.0);
  CHECK(forcing(p21, origin) == doctest::Approx(-2.0 / 21.0).epsilon(1e-15));
  const Problem h = make_problem(ProblemKind::Heat, 6);
  std::vector<double> pt(7, 1.0);
  pt[6] = 0.0;
  CHECK(exact_solution(h, pt) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
  pt[6] = 1.0;
  CHECK(exact_solution(h, pt) == doctest::Approx(std::cos(1.0) * std::exp(-1.0)).epsilon(1e-15));
  CHECK(forcing(h, pt) == doctest::Approx((1.0 / 6.0 - 1.0) * std::cos(1.0) * std::exp(-1.0)).epsilon(1e-15));
  const Problem sg = make_problem(ProblemKind::SineGordon, 2);
  const std::vector<double> half{0.5, 0.5};
  const double u = 0.25 + std::sin(0.5);
  CHECK(forcing(sg, half) == doctest::Approx((std::sin(0.5) - 2.0) / 2.0 + std::sin(u)).epsilon(1e-15));
  const Problem ac = make_problem(ProblemKind::AllenCahn, 2);
  CHECK(forcing(ac, half) == doctest::Approx((std::sin(0.5) - 2.0) / 2.0 + u - u * u * u).epsilon(1e-15));
  CHECK_THROWS_AS(exact_solution(p21, one), InvalidArgument);
}

TEST_CASE("boundary and initial values") {
  const Problem p = make_problem(ProblemKind::Poisson, 3);
  const std::vector<double> face{1.0, 0.2, -0.3}, inside{0.1, 0.2, 0.3};
  CHECK(boundary_value(p, face, true) == exact_solution(p, face));
  CHECK(boundary_value(p, inside) == exact_solution(p, inside));
  CHECK_THROWS_AS(boundary_value(p, inside, true), InvalidArgument);
  const Problem h = make_problem(ProblemKind::Heat, 3);
  const std::vector<double> x{0.3, -0.6, 0.9}, xt{0.3, -0.6, 0.9, 0.0};
  CHECK(initial_value(h, x) == exact_solution(h, xt));
  CHECK_THROWS_AS(initial_value(p, x), InvalidArgument);
}

TEST_CASE("problem geometry") {
  const Problem h = make_problem(ProblemKind::Heat, 4);
  CHECK(h.coords() == 5);
  CHECK(h.time_index() == 4);
  const Box b = h.box();
  CHECK(b.lo == std::vector<double>{-1, -1, -1, -1, 0});
  CHECK(b.hi == std::vector<double>{1, 1, 1, 1, 1});
  CHECK(parse_problem_kind("sine_gordon") == ProblemKind::SineGordon);
  CHECK_THROWS_AS(parse_problem_kind("wave"), InvalidArgument);
  Problem bad = h;
  bad.T = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("exact solutions satisfy the full-dimensional equations") {
  for (ProblemKind k : kAllKinds)
    for (int d : {1, 6, 21}) {
      const Problem p = make_problem(k, d);
      const Eigen::VectorXd r = full_residual_oracle(p, interior_points(p, 200, d));
      CHECK(r.cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("laplacian scale") {
  ResidualConfig as_written, scaled;
  scaled.scaling = ResidualScaling::DOverB;
  CHECK(laplacian_scale(make_problem(ProblemKind::Poisson, 21), as_written, 3) == 1.0);
  CHECK(laplacian_scale(make_problem(ProblemKind::Poisson, 21), scaled, 3) == 7.0);
  CHECK(laplacian_scale(make_problem(ProblemKind::Heat, 6), scaled, 3) == 3.0);
}

TEST_CASE("active-dimension residual of the exact solution") {
  ResidualConfig as_written, scaled;
  scaled.scaling = ResidualScaling::DOverB;
  const int B = 3;
  for (ProblemKind k : kAllKinds) {
    const Problem p = make_problem(k, 6);
    const Eigen::MatrixXd pts = interior_points(p, 50, 7);
    // Active axes: time (if any) plus spatial coordinates 0 and 3, or 0, 2, 4.
    const std::vector<int> spatial = p.transient() ? std::vector<int>{0, 3} : std::vector<int>{0, 2, 4};
    Eigen::ArrayXd u(pts.rows()), f(pts.rows()), dt(pts.rows());
    std::vector<Eigen::ArrayXd> d2(spatial.size(), Eigen::ArrayXd(pts.rows()));
    Eigen::ArrayXd s(pts.rows());
    for (Eigen::Index n = 0; n < pts.rows(); ++n) {
      const Eigen::VectorXd x = pts.row(n).transpose();
      std::vector<double> row(x.data(), x.data() + x.size());
      u(n) = exact_solution(p, row);
      f(n) = forcing(p, row);
      s(n) = x.head(6).mean();
      for (std::size_t i = 0; i < spatial.size(); ++i) d2[i](n) = exact_jet(p, x, spatial[i]).d2;
      if (p.transient()) dt(n) = exact_jet(p, x, 6).d1;
    }
    const Eigen::ArrayXd* dtp = p.transient() ? &dt : nullptr;
    const Eigen::ArrayXd r_scaled = residual(p, scaled, B, u, d2, dtp, f);
    CHECK(r_scaled.abs().maxCoeff() <= 1e-12);
    const Eigen::ArrayXd r_plain = residual(p, as_written, B, u, d2, dtp, f);
    // The missing d - |active| second derivatives, each u''(s)/d^2, are left over.
    const double missing = 6.0 - static_cast<double>(spatial.size());
    const Eigen::ArrayXd profile2 = p.transient() ? Eigen::ArrayXd(-u) : Eigen::ArrayXd(2.0 - s.sin());
    const Eigen::ArrayXd expected = missing / 36.0 * profile2;
    CHECK((r_plain - expected).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("residual argument checks") {
  const Problem h = make_problem(ProblemKind::Heat, 6);
  const Eigen::ArrayXd z = Eigen::ArrayXd::Zero(4);
  const std::vector<Eigen::ArrayXd> d2{z};
  CHECK_THROWS_AS(residual(h, {}, 3, z, d2, nullptr, z), InvalidArgument);
  const std::vector<Eigen::ArrayXd> wrong{Eigen::ArrayXd::Zero(3)};
  CHECK_THROWS_AS(residual(make_problem(ProblemKind::Poisson, 6), {}, 3, z, wrong, nullptr, z), InvalidArgument);
}

TEST_CASE("zero model leaves minus the forcing") {
  for (ProblemKind k : kAllKinds) {
    const Problem p = make_problem(k, 6);
    const std::optional<int> time = p.transient() ? std::optional<int>(6) : std::nullopt;
    const Partition part = partition_dimensions(6, 3, time);
    std::vector<BodySpec> specs;
    for (const auto& set : part) {
      MlpSpec s;
      s.input_dim = static_cast<int>(set.size());
      s.hidden_widths = {4};
      s.embedding_dim = 2;
      specs.emplace_back(s);
    }
    AnantModel m = make_model(specs, part, time ? std::optional<int>(0) : std::nullopt, 1);
    m.params.values.setZero();
    const Eigen::MatrixXd pts = interior_points(p, 30, 2);
    const Eigen::VectorXd r = full_residual_oracle(p, m, pts);
    for (Eigen::Index n = 0; n < pts.rows(); ++n) {
      std::vector<double> row(pts.cols());
      for (Eigen::Index c = 0; c < pts.cols(); ++c) row[c] = pts(n, c);
      CHECK(r(n) == doctest::Approx(-forcing(p, row)).epsilon(1e-14));
    }
  }
}

TEST_CASE("grid fields equal pointwise evaluation") {
  for (ProblemKind k : kAllKinds) {
    const Problem p = make_problem(k, 7);
    SamplerConfig cfg;
    cfg.coords = p.coords();
    cfg.B = 3;
    cfg.box = p.box();
    cfg.n_collocation = 4;
    if (p.transient()) cfg.time_dim = 7;
    Rng rng(5);
    const std::vector<int> active = p.transient() ? std::vector<int>{7, 1, 5} : std::vector<int>{2, 3, 6};
    const GridBatch g = make_collocation_grid(cfg, active, rng);
    const Eigen::VectorXd ue = grid_exact(p, g), fe = grid_forcing(p, g);
    REQUIRE(ue.size() == 64);
    for (Eigen::Index n = 0; n < 64; ++n) {
      const Eigen::VectorXd x = g.point(n);
      std::vector<double> row(x.data(), x.data() + x.size());
      CHECK(std::abs(ue(n) - exact_solution(p, row)) <= 1e-14);
      CHECK(std::abs(fe(n) - forcing(p, row)) <= 1e-14);
    }
  }
}
