#include "anant/jets.hpp"

#include <algorithm>
#include <cmath>

#include "anant/error.hpp"
#include "network_exec.hpp"

namespace anant {
namespace {

class TapeBackend {
 public:
  TapeBackend(Tape& tape, const ParamLayout& layout, std::span<const Tape::Var> params)
      : tape_(tape), layout_(layout), params_(params) {}

  using Param = Tape::Var;

  Param param(int network, int layer, ParamRole role) const {
    const int i = layout_.index_of(network, layer, role);
    if (i < 0) layout_.at(network, layer, role);  // throws with a description
    return params_[static_cast<std::size_t>(i)];
  }
  Tape::JetVars affine(const Tape::JetVars& x, Param w, Param b) { return tape_.jet_affine(x, w, b); }
  Tape::JetVars scale(const Tape::JetVars& x, Param slope, double f) {
    return tape_.jet_scale(x, slope, f);
  }
  Tape::JetVars scale(const Tape::JetVars& x, double f) { return tape_.jet_scale(x, f); }
  Tape::JetVars activate(const Tape::JetVars& x, Activation act) {
    return tape_.jet_activation(x, act);
  }
  Tape::JetVars kan(const Tape::JetVars& x, const KanSpec& spec, int network, int layer) {
    std::vector<Tape::Var> p;
    if (spec.basis == KanBasis::Spline) {
      p.push_back(param(network, layer, ParamRole::BaseWeight));
      p.push_back(param(network, layer, ParamRole::SplineScale));
    }
    p.push_back(param(network, layer, ParamRole::Coefficients));
    return tape_.kan_layer(x, p, spec);
  }

 private:
  Tape& tape_;
  const ParamLayout& layout_;
  std::span<const Tape::Var> params_;
};

}  // namespace

MatrixJet body_jet_batch(const ParamVector& params, const BodySpec& spec, const Eigen::MatrixXd& X,
                         int coord, int network) {
  const int in = input_dim(spec);
  if (X.cols() != in) throw InvalidArgument("body_jet: input width does not match network");
  if (coord < 0 || coord >= in) throw InvalidArgument("body_jet: coordinate out of range");
  detail::EagerBackend be(params);
  return detail::run_body(be, spec, network, detail::seed_jet(X, coord));
}

BodyJet body_jet(const ParamVector& params, const BodySpec& spec, std::span<const double> point,
                 int coord, int network) {
  Eigen::MatrixXd X(1, static_cast<Eigen::Index>(point.size()));
  for (std::size_t i = 0; i < point.size(); ++i) X(0, static_cast<Eigen::Index>(i)) = point[i];
  MatrixJet j = body_jet_batch(params, spec, X, coord, network);
  return {j.v.row(0).transpose(), j.d1.row(0).transpose(), j.d2.row(0).transpose()};
}

Tape::JetVars record_body(Tape& tape, const BodySpec& spec, const ParamLayout& layout,
                          std::span<const Tape::Var> params, int network,
                          const Tape::JetVars& input) {
  require(params.size() == layout.blocks().size(), "record_body: parameter binding mismatch");
  TapeBackend be(tape, layout, params);
  return detail::run_body(be, spec, network, input);
}

std::vector<Tape::Var> bind_parameters(Tape& tape, const ParamVector& params) {
  std::vector<Tape::Var> vars;
  vars.reserve(params.layout.blocks().size());
  for (const auto& b : params.layout.blocks()) vars.push_back(tape.parameter(params, b));
  return vars;
}

std::vector<FdEntry> fd_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                              const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                              std::span<const Eigen::Index> indices, double h, double floor) {
  require(h > 0.0, "fd_check: step must be positive");
  std::vector<FdEntry> out;
  Eigen::VectorXd p = params;
  for (Eigen::Index i : indices) {
    require(i >= 0 && i < params.size(), "fd_check: index out of range");
    p(i) = params(i) + h;
    const double fp = fn(p);
    p(i) = params(i) - h;
    const double fm = fn(p);
    p(i) = params(i);
    FdEntry e;
    e.index = i;
    e.analytic = analytic.size() > i ? analytic(i) : 0.0;
    e.numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), floor});
    e.rel_err = std::abs(e.analytic - e.numeric) / denom;
    out.push_back(e);
  }
  return out;
}

}  // namespace anant
