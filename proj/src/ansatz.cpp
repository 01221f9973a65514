#include "anant/ansatz.hpp"

#include <algorithm>

#include "anant/error.hpp"
#include "kernels.hpp"
#include "network_exec.hpp"

namespace anant {

int AnantModel::coords() const {
  int n = 0;
  for (const auto& set : partition) n += static_cast<int>(set.size());
  return n;
}

int AnantModel::embedding_dim() const { return specs.empty() ? 0 : anant::embedding_dim(specs[0]); }

int AnantModel::owner(int coord) const {
  for (std::size_t i = 0; i < partition.size(); ++i)
    if (std::find(partition[i].begin(), partition[i].end(), coord) != partition[i].end())
      return static_cast<int>(i);
  throw InvalidArgument("coordinate " + std::to_string(coord) + " not in partition");
}

int AnantModel::local_index(int coord) const {
  const auto& set = partition[static_cast<std::size_t>(owner(coord))];
  return static_cast<int>(std::find(set.begin(), set.end(), coord) - set.begin());
}

void AnantModel::validate() const {
  require(B() >= 1, "model: no body networks");
  require(partition.size() == specs.size(), "model: partition size differs from network count");
  validate_partition(partition, coords());
  const int r = embedding_dim();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    anant::validate(specs[i]);
    require(anant::embedding_dim(specs[i]) == r, "model: body networks must share embedding_dim");
    require(input_dim(specs[i]) == static_cast<int>(partition[i].size()),
            "model: network input_dim differs from its partition set size");
  }
  if (time_network) {
    require(*time_network >= 0 && *time_network < B(), "model: time_network out of range");
    require(input_dim(specs[*time_network]) == 1, "model: time network must have input_dim 1");
  }
  require(params.values.size() == params.layout.total(), "model: parameter size mismatch");
}

AnantModel make_model(std::vector<BodySpec> specs, Partition partition,
                      std::optional<int> time_network, std::uint64_t seed) {
  AnantModel m;
  m.specs = std::move(specs);
  m.partition = std::move(partition);
  m.time_network = time_network;
  std::vector<Eigen::VectorXd> parts;
  for (std::size_t i = 0; i < m.specs.size(); ++i) {
    ParamVector p = init_body(m.specs[i], derive_seed(seed, i));
    m.params.layout.append(p.layout, static_cast<int>(i));
    parts.push_back(std::move(p.values));
  }
  m.params.values.resize(m.params.layout.total());
  Eigen::Index off = 0;
  for (const auto& v : parts) {
    m.params.values.segment(off, v.size()) = v;
    off += v.size();
  }
  m.validate();
  return m;
}

void check_grid(const AnantModel& model, const GridBatch& grid) {
  if (static_cast<int>(grid.active_dims.size()) != model.B() ||
      grid.axis_coords.size() != grid.active_dims.size())
    throw InvalidArgument("grid has " + std::to_string(grid.active_dims.size()) +
                          " axes, model has " + std::to_string(model.B()) + " body networks");
  if (grid.fixed_point.size() != model.coords())
    throw InvalidArgument("grid coordinate count does not match model");
  for (int i = 0; i < model.B(); ++i) {
    const auto& set = model.partition[i];
    if (std::find(set.begin(), set.end(), grid.active_dims[i]) == set.end())
      throw InvalidArgument("grid active dimension " + std::to_string(grid.active_dims[i]) +
                            " is not owned by body network " + std::to_string(i));
  }
}

Eigen::MatrixXd body_inputs(const AnantModel& model, const GridBatch& grid, int network) {
  const auto& set = model.partition[network];
  const auto& axis = grid.axis_coords[network];
  Eigen::MatrixXd X(axis.size(), static_cast<Eigen::Index>(set.size()));
  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (set[c] == grid.active_dims[network])
      X.col(col) = axis;
    else
      X.col(col).setConstant(grid.fixed_point(set[c]));
  }
  return X;
}

namespace {

Tensor contract_tensor(const std::vector<Eigen::MatrixXd>& factors) {
  std::vector<const Eigen::MatrixXd*> ptrs;
  Tensor t;
  for (const auto& f : factors) {
    ptrs.push_back(&f);
    t.shape.push_back(f.rows());
  }
  t.values = detail::contract(ptrs);
  return t;
}

int network_for_active(const AnantModel& model, const GridBatch& grid, int coord) {
  for (int i = 0; i < model.B(); ++i)
    if (grid.active_dims[i] == coord) return i;
  throw InvalidArgument("coordinate " + std::to_string(coord) + " is not active in this grid");
}

Tensor partial_grid(const AnantModel& model, const GridBatch& grid, int coord, int order) {
  check_grid(model, grid);
  const int target = network_for_active(model, grid, coord);
  std::vector<Eigen::MatrixXd> factors;
  for (int i = 0; i < model.B(); ++i) {
    const Eigen::MatrixXd X = body_inputs(model, grid, i);
    if (i == target) {
      MatrixJet j = body_jet_batch(model.params, model.specs[i], X, model.local_index(coord), i);
      factors.push_back(order == 1 ? j.d1 : j.d2);
    } else {
      factors.push_back(body_forward(model.params, model.specs[i], X, i));
    }
  }
  return contract_tensor(factors);
}

std::vector<Eigen::MatrixXd> slice_outputs(const AnantModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.coords())
    throw InvalidArgument("points have " + std::to_string(points.cols()) + " columns, model expects " +
                          std::to_string(model.coords()));
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < model.B(); ++i) {
    const auto& set = model.partition[i];
    Eigen::MatrixXd X(points.rows(), static_cast<Eigen::Index>(set.size()));
    for (std::size_t c = 0; c < set.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = points.col(set[c]);
    out.push_back(std::move(X));
  }
  return out;
}

Eigen::VectorXd rowwise_product_sum(const std::vector<Eigen::MatrixXd>& f) {
  Eigen::MatrixXd prod = f[0];
  for (std::size_t i = 1; i < f.size(); ++i) prod = prod.cwiseProduct(f[i]);
  return prod.rowwise().sum();
}

}  // namespace

Tensor predict_grid(const AnantModel& model, const GridBatch& grid) {
  check_grid(model, grid);
  std::vector<Eigen::MatrixXd> factors;
  for (int i = 0; i < model.B(); ++i)
    factors.push_back(body_forward(model.params, model.specs[i], body_inputs(model, grid, i), i));
  return contract_tensor(factors);
}

Tensor partial1_grid(const AnantModel& model, const GridBatch& grid, int active_coord) {
  return partial_grid(model, grid, active_coord, 1);
}

Tensor partial2_grid(const AnantModel& model, const GridBatch& grid, int active_coord) {
  return partial_grid(model, grid, active_coord, 2);
}

Eigen::VectorXd predict_points(const AnantModel& model, const Eigen::MatrixXd& points) {
  const auto slices = slice_outputs(model, points);
  std::vector<Eigen::MatrixXd> f;
  for (int i = 0; i < model.B(); ++i) f.push_back(body_forward(model.params, model.specs[i], slices[i], i));
  return rowwise_product_sum(f);
}

Eigen::VectorXd partial_points(const AnantModel& model, const Eigen::MatrixXd& points, int coord,
                               int order) {
  require(order == 1 || order == 2, "partial_points: order must be 1 or 2");
  const auto slices = slice_outputs(model, points);
  const int target = model.owner(coord);
  std::vector<Eigen::MatrixXd> f;
  for (int i = 0; i < model.B(); ++i) {
    if (i == target) {
      MatrixJet j = body_jet_batch(model.params, model.specs[i], slices[i], model.local_index(coord), i);
      f.push_back(order == 1 ? j.d1 : j.d2);
    } else {
      f.push_back(body_forward(model.params, model.specs[i], slices[i], i));
    }
  }
  return rowwise_product_sum(f);
}

GridTerms record_grid(Tape& tape, const AnantModel& model, std::span<const Tape::Var> params,
                      const GridBatch& grid, bool derivatives) {
  check_grid(model, grid);
  const int B = model.B();
  std::vector<Tape::JetVars> jets;
  for (int i = 0; i < B; ++i) {
    const Eigen::MatrixXd X = body_inputs(model, grid, i);
    Tape::JetVars in;
    in.push_back(tape.constant(X));
    if (derivatives) {
      Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(X.rows(), X.cols());
      d1.col(model.local_index(grid.active_dims[i])).setOnes();
      in.push_back(tape.constant(std::move(d1)));
      in.push_back(tape.constant(Eigen::MatrixXd::Zero(X.rows(), X.cols())));
    }
    jets.push_back(record_body(tape, model.specs[i], model.params.layout, params, i, in));
  }
  GridTerms terms;
  std::vector<Tape::Var> factors;
  for (int i = 0; i < B; ++i) factors.push_back(jets[i][0]);
  terms.value = tape.contract(factors);
  if (derivatives) {
    for (int i = 0; i < B; ++i) {
      std::vector<Tape::Var> f1 = factors, f2 = factors;
      f1[i] = jets[i][1];
      f2[i] = jets[i][2];
      // The time axis only needs its first derivative, spatial axes only the second.
      const bool is_time = model.time_network && *model.time_network == i;
      terms.d1.push_back(is_time ? tape.contract(f1) : Tape::Var{});
      terms.d2.push_back(is_time ? Tape::Var{} : tape.contract(f2));
    }
  }
  return terms;
}

}  // namespace anant
