#pragma once

// The separable prediction u(x) = sum_j prod_i f_{i,j}(X_i), evaluated
// either on tensor grids (training) or on scattered points (testing), and
// its first/second partial derivatives along one coordinate.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "anant/bodynet.hpp"
#include "anant/jets.hpp"
#include "anant/sampling.hpp"

namespace anant {

struct AnantModel {
  std::vector<BodySpec> specs;
  ParamVector params;
  Partition partition;
  std::optional<int> time_network;

  int B() const { return static_cast<int>(specs.size()); }
  int coords() const;
  int embedding_dim() const;
  /// Body network owning coordinate c.
  int owner(int coord) const;
  /// Position of coordinate c inside its network's input slice.
  int local_index(int coord) const;
  void validate() const;
};

/// Builds the combined parameter vector, initializing network i from
/// derive_seed(seed, i).
AnantModel make_model(std::vector<BodySpec> specs, Partition partition,
                      std::optional<int> time_network, std::uint64_t seed);

/// Dense tensor, row-major flattened (first axis slowest).
struct Tensor {
  std::vector<Eigen::Index> shape;
  Eigen::VectorXd values;
};

/// Inputs of body network i on the grid: n_i rows, the active coordinate
/// varying, the rest fixed.
Eigen::MatrixXd body_inputs(const AnantModel& model, const GridBatch& grid, int network);
void check_grid(const AnantModel& model, const GridBatch& grid);

Tensor predict_grid(const AnantModel& model, const GridBatch& grid);
Tensor partial1_grid(const AnantModel& model, const GridBatch& grid, int active_coord);
Tensor partial2_grid(const AnantModel& model, const GridBatch& grid, int active_coord);

Eigen::VectorXd predict_points(const AnantModel& model, const Eigen::MatrixXd& points);
/// d^order u / dx_coord^order at scattered points (order 1 or 2).
Eigen::VectorXd partial_points(const AnantModel& model, const Eigen::MatrixXd& points, int coord,
                               int order);

/// Tape recording of one grid: the prediction tensor plus, when requested,
/// first and second derivative tensors along each network's active axis.
struct GridTerms {
  Tape::Var value;
  std::vector<Tape::Var> d1, d2;  // indexed by body network; empty if not requested
};
GridTerms record_grid(Tape& tape, const AnantModel& model, std::span<const Tape::Var> params,
                      const GridBatch& grid, bool derivatives);

}  // namespace anant
