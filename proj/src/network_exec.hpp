#pragma once

// Layer sequencing for body networks, shared by the eager evaluator and the
// tape recorder. A Backend provides:
//   Jet     affine(const Jet&, Param W, Param b)
//   Jet     scale(const Jet&, Param slope, double factor)
//   Jet     scale(const Jet&, double factor)
//   Jet     activate(const Jet&, Activation)
//   Jet     kan(const Jet&, const KanSpec&, int network, int layer)
//   Param   param(int network, int layer, ParamRole)

#include <variant>

#include "anant/bodynet.hpp"
#include "kernels.hpp"

namespace anant::detail {

template <class Backend, class Jet>
Jet run_mlp(Backend& be, const MlpSpec& spec, int network, Jet x) {
  const int hidden = static_cast<int>(spec.hidden_widths.size());
  for (int l = 0; l <= hidden; ++l) {
    x = be.affine(x, be.param(network, l, ParamRole::Weight), be.param(network, l, ParamRole::Bias));
    if (l == hidden) break;
    if (spec.adaptive)
      x = be.scale(x, be.param(network, l, ParamRole::Slope), spec.scale_n);
    else if (spec.scale_n != 1.0)
      x = be.scale(x, spec.scale_n);
    x = be.activate(x, spec.activation);
  }
  return x;
}

template <class Backend, class Jet>
Jet run_kan(Backend& be, const KanSpec& spec, int network, Jet x) {
  for (int l = 0; l < layer_count(spec); ++l) {
    if (tanh_before_layer(spec, l)) x = be.activate(x, Activation::Tanh);
    x = be.kan(x, spec, network, l);
  }
  return x;
}

template <class Backend, class Jet>
Jet run_body(Backend& be, const BodySpec& spec, int network, Jet x) {
  if (const auto* mlp = std::get_if<MlpSpec>(&spec)) return run_mlp(be, *mlp, network, std::move(x));
  return run_kan(be, std::get<KanSpec>(spec), network, std::move(x));
}

/// Eager evaluation on matrices.
class EagerBackend {
 public:
  explicit EagerBackend(const ParamVector& params) : params_(params) {}

  using Param = Eigen::Map<const Eigen::MatrixXd>;

  Param param(int network, int layer, ParamRole role) const {
    return params_.block(params_.layout.at(network, layer, role));
  }

  MatrixJet affine(const MatrixJet& x, const Param& w, const Param& b) const;
  MatrixJet scale(const MatrixJet& x, const Param& slope, double factor) const;
  MatrixJet scale(const MatrixJet& x, double factor) const;
  MatrixJet activate(const MatrixJet& x, Activation act) const;
  MatrixJet kan(const MatrixJet& x, const KanSpec& spec, int network, int layer) const;

 private:
  const ParamVector& params_;
};

/// Seeds a jet on column `coord` of X (or value-only when coord < 0).
MatrixJet seed_jet(const Eigen::MatrixXd& X, int coord);

}  // namespace anant::detail
