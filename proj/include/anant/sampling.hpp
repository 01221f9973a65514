#pragma once

// Dimension partitioning, epoch sweeps over active dimensions, and the
// tensor-structured collocation / boundary / initial grids used for
// training, plus scattered test points used for evaluation.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace anant {

using Partition = std::vector<std::vector<int>>;

enum class GridKind { Collocation, Boundary, Initial };
enum class AxisMode { Random, Equispaced };

std::string to_string(GridKind k);
std::string to_string(AxisMode m);
AxisMode parse_axis_mode(const std::string& s);

struct Face {
  int dim = 0;
  int sign = 1;  // -1 -> lower face, +1 -> upper face
};

/// One tensor-structured sample. Axis i of the grid varies coordinate
/// active_dims[i] (owned by body network i); every other coordinate is
/// fixed at fixed_point[c]. Entries of fixed_point at active coordinates
/// are NaN.
struct GridBatch {
  std::vector<int> active_dims;
  std::vector<Eigen::VectorXd> axis_coords;
  Eigen::VectorXd fixed_point;
  GridKind kind = GridKind::Collocation;
  std::optional<Face> face;

  std::vector<Eigen::Index> shape() const;
  Eigen::Index point_count() const;
  std::vector<int> inactive_dims() const;
  Eigen::VectorXd inactive_values() const;
  /// Full coordinate vector of the point at the row-major flat index.
  Eigen::VectorXd point(Eigen::Index flat) const;
};

struct Box {
  std::vector<double> lo, hi;  // one entry per coordinate (spatial, then time)
  int size() const { return static_cast<int>(lo.size()); }
};

struct SamplerConfig {
  int coords = 0;  // total coordinates, including time when present
  int B = 3;
  std::optional<int> time_dim;
  Box box;
  int n_collocation = 14;      // N_C
  int num_collocation_grids = 1;
  int n_boundary = 6;          // N_B
  int num_boundary_grids = 1;
  int num_initial_grids = 0;
  std::uint64_t seed = 0;
  AxisMode axis_mode = AxisMode::Random;

  void validate() const;
};

/// Contiguous ascending blocks, as even as possible (larger blocks first).
/// With a time coordinate it forms a singleton first block and the d
/// spatial coordinates split over the remaining B - 1 blocks.
Partition partition_dimensions(int d, int B, std::optional<int> time_dim = std::nullopt);
void validate_partition(const Partition& p, int coords);

struct ActiveTuple {
  std::vector<int> dims;     // one per body network
  std::vector<bool> padded;  // true where a shorter block re-used an index
};

/// One epoch: max block size tuples; every index of every block appears
/// exactly once among the non-padded entries.
std::vector<ActiveTuple> sweep_active(const Partition& partition, std::uint64_t epoch_seed);

using Rng = std::mt19937_64;

GridBatch make_collocation_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng);
GridBatch make_boundary_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng);
GridBatch make_initial_grid(const SamplerConfig& cfg, const std::vector<int>& active_dims, Rng& rng);

/// n i.i.d. uniform points strictly inside the box (n x box.size()).
Eigen::MatrixXd sample_test_points(int coords, int n, const Box& box, std::uint64_t seed);

Eigen::Index total_collocation_points(const SamplerConfig& cfg);
Eigen::Index total_boundary_points(const SamplerConfig& cfg);
Eigen::Index total_initial_points(const SamplerConfig& cfg);

/// Deterministic stream splitting (SplitMix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace anant
