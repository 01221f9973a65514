#include <set>

#include "anant/error.hpp"
#include "anant/sampling.hpp"
#include "doctest.h"

using namespace anant;

namespace {

SamplerConfig cube_config(int coords, int B, std::optional<int> time_dim = std::nullopt) {
  SamplerConfig cfg;
  cfg.coords = coords;
  cfg.B = B;
  cfg.time_dim = time_dim;
  cfg.box.lo.assign(static_cast<std::size_t>(coords), -1.0);
  cfg.box.hi.assign(static_cast<std::size_t>(coords), 1.0);
  if (time_dim) {
    cfg.box.lo[*time_dim] = 0.0;
    cfg.box.hi[*time_dim] = 1.0;
  }
  return cfg;
}

}  // namespace

TEST_CASE("partition into contiguous blocks") {
  const Partition p = partition_dimensions(21, 3);
  REQUIRE(p.size() == 3);
  for (int b = 0; b < 3; ++b) {
    REQUIRE(p[b].size() == 7);
    for (int k = 0; k < 7; ++k) CHECK(p[b][k] == 7 * b + k);
  }
  const Partition q = partition_dimensions(7, 3);
  CHECK(q == Partition{{0, 1, 2}, {3, 4}, {5, 6}});
  CHECK(partition_dimensions(3, 3) == Partition{{0}, {1}, {2}});
  CHECK_THROWS_AS(partition_dimensions(2, 3), InvalidArgument);
  CHECK_THROWS_AS(partition_dimensions(5, 1), InvalidArgument);
  validate_partition(partition_dimensions(300, 10), 300);
}

TEST_CASE("time coordinate gets its own first block") {
  const Partition p = partition_dimensions(6, 3, 6);
  CHECK(p == Partition{{6}, {0, 1, 2}, {3, 4, 5}});
  validate_partition(p, 7);
  CHECK_THROWS_AS(partition_dimensions(6, 3, 2), InvalidArgument);
}

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(validate_partition({{0, 1}, {1, 2}}, 3), InvalidArgument);
  CHECK_THROWS_AS(validate_partition({{0}, {2}}, 3), InvalidArgument);
  CHECK_THROWS_AS(validate_partition({{1, 0}, {2}}, 3), InvalidArgument);
  CHECK_THROWS_AS(validate_partition({{0}, {}, {1, 2}}, 3), InvalidArgument);
}

TEST_CASE("epoch sweep visits every index exactly once") {
  for (int d : {6, 7, 21, 23}) {
    const Partition p = partition_dimensions(d, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto sweep = sweep_active(p, seed);
      CHECK(sweep.size() == p[0].size());
      std::vector<int> hits(static_cast<std::size_t>(d), 0);
      for (const auto& t : sweep) {
        REQUIRE(t.dims.size() == 3);
        for (int b = 0; b < 3; ++b) {
          const auto& set = p[b];
          CHECK(std::find(set.begin(), set.end(), t.dims[b]) != set.end());
          if (!t.padded[b]) ++hits[t.dims[b]];
        }
      }
      for (int h : hits) CHECK(h == 1);
    }
  }
}

TEST_CASE("sweep is deterministic and seed dependent") {
  const Partition p = partition_dimensions(30, 3);
  const auto a = sweep_active(p, 11), b = sweep_active(p, 11), c = sweep_active(p, 12);
  bool same = true, differ = false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    same = same && a[t].dims == b[t].dims;
    differ = differ || a[t].dims != c[t].dims;
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("point counts") {
  SamplerConfig cfg = cube_config(21, 4);
  cfg.n_collocation = 14;
  cfg.num_collocation_grids = 1;
  CHECK(total_collocation_points(cfg) == 38416);
  cfg = cube_config(21, 3);
  cfg.n_boundary = 6;
  cfg.num_boundary_grids = 32;
  CHECK(total_boundary_points(cfg) == 6912);
  cfg.num_initial_grids = 2;
  CHECK(total_initial_points(cfg) == 432);
  cfg.n_collocation = 10;
  cfg.num_collocation_grids = 4;
  CHECK(total_collocation_points(cfg) == 4000);
}

TEST_CASE("collocation grid structure") {
  SamplerConfig cfg = cube_config(6, 3);
  cfg.n_collocation = 5;
  Rng rng(3);
  const GridBatch g = make_collocation_grid(cfg, {1, 2, 5}, rng);
  CHECK(g.shape() == std::vector<Eigen::Index>{5, 5, 5});
  CHECK(g.point_count() == 125);
  CHECK(g.inactive_dims() == std::vector<int>{0, 3, 4});
  for (int c : g.active_dims) CHECK(std::isnan(g.fixed_point(c)));
  for (const auto& a : g.axis_coords) CHECK((a.array().abs() < 1.0).all());
  CHECK((g.inactive_values().array().abs() < 1.0).all());
  // Row-major: the last axis varies fastest.
  const Eigen::VectorXd p7 = g.point(7);
  CHECK(p7(1) == g.axis_coords[0](0));
  CHECK(p7(2) == g.axis_coords[1](1));
  CHECK(p7(5) == g.axis_coords[2](2));
  CHECK(p7(0) == g.fixed_point(0));
  CHECK_THROWS_AS(make_collocation_grid(cfg, {1, 2}, rng), InvalidArgument);
}

TEST_CASE("equispaced axes use cell centres") {
  SamplerConfig cfg = cube_config(4, 2);
  cfg.axis_mode = AxisMode::Equispaced;
  cfg.n_collocation = 4;
  Rng rng(0);
  const GridBatch g = make_collocation_grid(cfg, {0, 3}, rng);
  CHECK(g.axis_coords[0].isApprox(Eigen::Vector4d(-0.75, -0.25, 0.25, 0.75)));
}

TEST_CASE("boundary grids pin one inactive coordinate to a face") {
  SamplerConfig cfg = cube_config(6, 3);
  Rng rng(9);
  std::set<std::pair<int, int>> faces;
  for (int k = 0; k < 200; ++k) {
    const GridBatch g = make_boundary_grid(cfg, {0, 2, 4}, rng);
    REQUIRE(g.face);
    CHECK(g.kind == GridKind::Boundary);
    const auto inactive = g.inactive_dims();
    CHECK(std::find(inactive.begin(), inactive.end(), g.face->dim) != inactive.end());
    CHECK(g.fixed_point(g.face->dim) == static_cast<double>(g.face->sign));
    int on_face = 0;
    for (int c : inactive) on_face += std::abs(g.fixed_point(c)) == 1.0;
    CHECK(on_face == 1);
    faces.insert({g.face->dim, g.face->sign});
  }
  CHECK(faces.size() == 6);
  SamplerConfig tight = cube_config(3, 3);
  CHECK_THROWS_AS(make_boundary_grid(tight, {0, 1, 2}, rng), InvalidArgument);
}

TEST_CASE("transient boundary faces are spatial and initial grids sit at t = 0") {
  SamplerConfig cfg = cube_config(7, 3, 6);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const GridBatch b = make_boundary_grid(cfg, {6, 0, 3}, rng);
    CHECK(b.face->dim != 6);
    CHECK(b.axis_coords[0].minCoeff() > 0.0);
    CHECK(b.axis_coords[0].maxCoeff() < 1.0);
  }
  const GridBatch g = make_initial_grid(cfg, {6, 1, 4}, rng);
  CHECK(g.kind == GridKind::Initial);
  CHECK(g.axis_coords[0].isZero(0.0));
  for (Eigen::Index k = 0; k < g.point_count(); ++k) CHECK(g.point(k)(6) == 0.0);
  CHECK_THROWS_AS(make_initial_grid(cfg, {0, 1, 4}, rng), InvalidArgument);
  CHECK_THROWS_AS(make_initial_grid(cube_config(6, 3), {0, 1, 4}, rng), InvalidArgument);
}

TEST_CASE("test points are uniform in the open box") {
  const SamplerConfig cfg = cube_config(3, 2);
  const Eigen::MatrixXd pts = sample_test_points(3, 50000, cfg.box, 4);
  CHECK(pts.rows() == 50000);
  CHECK((pts.array().abs() < 1.0).all());
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(pts.col(c).mean()) <= 0.01);
    const double var = (pts.col(c).array() - pts.col(c).mean()).square().mean();
    CHECK(std::abs(var - 1.0 / 3.0) <= 0.01);
  }
  CHECK(sample_test_points(3, 10, cfg.box, 4).isApprox(pts.topRows(10)));
  CHECK_THROWS_AS(sample_test_points(3, 0, cfg.box, 4), InvalidArgument);
  CHECK_THROWS_AS(sample_test_points(4, 10, cfg.box, 4), InvalidArgument);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(5, 1) == derive_seed(5, 1));
  CHECK(derive_seed(0, 1) != derive_seed(1, 1));
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg = cube_config(6, 3);
  cfg.validate();
  cfg.n_collocation = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = cube_config(6, 7);
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = cube_config(6, 3);
  cfg.box.hi[2] = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
