#include "anant/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anant/error.hpp"

namespace anant {

std::string to_string(GridKind k) {
  switch (k) {
    case GridKind::Collocation: return "collocation";
    case GridKind::Boundary: return "boundary";
    case GridKind::Initial: return "initial";
  }
  return "?";
}

std::string to_string(AxisMode m) { return m == AxisMode::Random ? "random" : "equispaced"; }

AxisMode parse_axis_mode(const std::string& s) {
  if (s == "random") return AxisMode::Random;
  if (s == "equispaced") return AxisMode::Equispaced;
  throw InvalidArgument("unknown axis mode '" + s + "'");
}

std::vector<Eigen::Index> GridBatch::shape() const {
  std::vector<Eigen::Index> s;
  for (const auto& a : axis_coords) s.push_back(a.size());
  return s;
}

Eigen::Index GridBatch::point_count() const {
  Eigen::Index n = 1;
  for (const auto& a : axis_coords) n *= a.size();
  return n;
}

std::vector<int> GridBatch::inactive_dims() const {
  std::vector<int> out;
  for (int c = 0; c < fixed_point.size(); ++c)
    if (std::find(active_dims.begin(), active_dims.end(), c) == active_dims.end()) out.push_back(c);
  return out;
}

Eigen::VectorXd GridBatch::inactive_values() const {
  const auto dims = inactive_dims();
  Eigen::VectorXd v(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i) v(static_cast<Eigen::Index>(i)) = fixed_point(dims[i]);
  return v;
}

Eigen::VectorXd GridBatch::point(Eigen::Index flat) const {
  Eigen::VectorXd p = fixed_point;
  for (std::size_t i = axis_coords.size(); i-- > 0;) {
    const Eigen::Index n = axis_coords[i].size();
    p(active_dims[i]) = axis_coords[i](flat % n);
    flat /= n;
  }
  return p;
}

void SamplerConfig::validate() const {
  require(coords >= 1, "sampler: coords must be >= 1");
  require(box.size() == coords && static_cast<int>(box.hi.size()) == coords,
          "sampler: box does not match coordinate count");
  for (int c = 0; c < coords; ++c) require(box.lo[c] < box.hi[c], "sampler: empty box range");
  require(B >= 2 && B <= coords, "sampler: need 2 <= B <= coords");
  require(n_collocation >= 2 && n_boundary >= 2, "sampler: N_C and N_B must be >= 2");
  require(num_collocation_grids >= 1 && num_boundary_grids >= 1,
          "sampler: #CG and #BG must be >= 1");
  require(num_initial_grids >= 0, "sampler: negative initial grid count");
  if (time_dim) require(*time_dim >= 0 && *time_dim < coords, "sampler: time_dim out of range");
}

Partition partition_dimensions(int d, int B, std::optional<int> time_dim) {
  require(B >= 2, "partition_dimensions: B must be >= 2");
  Partition p;
  int blocks = B;
  if (time_dim) {
    require(*time_dim == d, "partition_dimensions: time coordinate must follow the d spatial ones");
    p.push_back({*time_dim});
    blocks = B - 1;
  }
  if (blocks > d)
    throw InvalidArgument("partition_dimensions: B = " + std::to_string(B) +
                          " exceeds the number of dimensions " + std::to_string(d));
  const int base = d / blocks, extra = d % blocks;
  int next = 0;
  for (int b = 0; b < blocks; ++b) {
    const int size = base + (b < extra ? 1 : 0);
    std::vector<int> set(size);
    std::iota(set.begin(), set.end(), next);
    next += size;
    p.push_back(std::move(set));
  }
  return p;
}

void validate_partition(const Partition& p, int coords) {
  std::vector<int> seen(static_cast<std::size_t>(coords), 0);
  for (const auto& set : p) {
    require(!set.empty(), "partition: empty set");
    for (std::size_t i = 0; i < set.size(); ++i) {
      require(set[i] >= 0 && set[i] < coords, "partition: index out of range");
      if (i > 0) require(set[i] > set[i - 1], "partition: set not ascending");
      require(seen[set[i]]++ == 0, "partition: sets overlap");
    }
  }
  for (int c = 0; c < coords; ++c) require(seen[c] == 1, "partition: sets do not cover all dimensions");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<ActiveTuple> sweep_active(const Partition& partition, std::uint64_t epoch_seed) {
  Rng rng(epoch_seed);
  std::vector<std::vector<int>> perms;
  std::size_t longest = 0;
  for (const auto& set : partition) {
    std::vector<int> perm = set;
    std::shuffle(perm.begin(), perm.end(), rng);
    longest = std::max(longest, perm.size());
    perms.push_back(std::move(perm));
  }
  std::vector<ActiveTuple> out(longest);
  for (std::size_t t = 0; t < longest; ++t) {
    for (const auto& perm : perms) {
      if (t < perm.size()) {
        out[t].dims.push_back(perm[t]);
        out[t].padded.push_back(false);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, perm.size() - 1);
        out[t].dims.push_back(perm[pick(rng)]);
        out[t].padded.push_back(true);
      }
    }
  }
  return out;
}

namespace {

double uniform_interior(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (;;) {
    const double u = dist(rng);
    if (u > lo && u < hi) return u;
  }
}

Eigen::VectorXd axis_values(const SamplerConfig& cfg, int coord, int n, Rng& rng) {
  Eigen::VectorXd a(n);
  const double lo = cfg.box.lo[coord], hi = cfg.box.hi[coord];
  for (int k = 0; k < n; ++k)
    a(k) = cfg.axis_mode == AxisMode::Random ? uniform_interior(lo, hi, rng)
                                            : lo + (k + 0.5) * (hi - lo) / n;
  return a;
}

GridBatch base_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, GridKind kind,
                    int n, Rng& rng) {
  require(static_cast<int>(active_dims.size()) == cfg.B, "grid: need one active dimension per body network");
  GridBatch g;
  g.kind = kind;
  g.active_dims = active_dims;
  g.fixed_point = Eigen::VectorXd::Constant(cfg.coords, std::numeric_limits<double>::quiet_NaN());
  for (int c : active_dims) {
    require(c >= 0 && c < cfg.coords, "grid: active dimension out of range");
    g.axis_coords.push_back(axis_values(cfg, c, n, rng));
  }
  for (int c = 0; c < cfg.coords; ++c) {
    if (std::find(active_dims.begin(), active_dims.end(), c) != active_dims.end()) continue;
    g.fixed_point(c) = uniform_interior(cfg.box.lo[c], cfg.box.hi[c], rng);
  }
  return g;
}

}  // namespace

GridBatch make_collocation_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng) {
  return base_grid(cfg, active_dims, GridKind::Collocation, cfg.n_collocation, rng);
}

GridBatch make_boundary_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng) {
  GridBatch g = base_grid(cfg, active_dims, GridKind::Boundary, cfg.n_boundary, rng);
  std::vector<int> candidates;
  for (int c : g.inactive_dims())
    if (!cfg.time_dim || c != *cfg.time_dim) candidates.push_back(c);
  if (candidates.empty())
    throw InvalidArgument("make_boundary_grid: no inactive spatial dimension to host a face (d == B)");
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::bernoulli_distribution coin(0.5);
  Face face{candidates[pick(rng)], coin(rng) ? 1 : -1};
  g.fixed_point(face.dim) = face.sign > 0 ? cfg.box.hi[face.dim] : cfg.box.lo[face.dim];
  g.face = face;
  return g;
}

GridBatch make_initial_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng) {
  if (!cfg.time_dim) throw InvalidArgument("make_initial_grid: problem is not transient");
  auto it = std::find(active_dims.begin(), active_dims.end(), *cfg.time_dim);
  if (it == active_dims.end())
    throw InvalidArgument("make_initial_grid: time coordinate must be active");
  GridBatch g = base_grid(cfg, active_dims, GridKind::Initial, cfg.n_boundary, rng);
  g.axis_coords[static_cast<std::size_t>(it - active_dims.begin())].setZero();
  return g;
}

Eigen::MatrixXd sample_test_points(int coords, int n, const Box& box, std::uint64_t seed) {
  require(n >= 1, "sample_test_points: n must be >= 1");
  require(box.size() == coords, "sample_test_points: box does not match coordinate count");
  Rng rng(seed);
  Eigen::MatrixXd pts(n, coords);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < coords; ++c) pts(i, c) = uniform_interior(box.lo[c], box.hi[c], rng);
  return pts;
}

namespace {

Eigen::Index ipow(Eigen::Index base, int e) {
  Eigen::Index r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

Eigen::Index total_collocation_points(const SamplerConfig& cfg) {
  return cfg.num_collocation_grids * ipow(cfg.n_collocation, cfg.B);
}

Eigen::Index total_boundary_points(const SamplerConfig& cfg) {
  return cfg.num_boundary_grids * ipow(cfg.n_boundary, cfg.B);
}

Eigen::Index total_initial_points(const SamplerConfig& cfg) {
  return cfg.num_initial_grids * ipow(cfg.n_boundary, cfg.B);
}

}  // namespace anant
