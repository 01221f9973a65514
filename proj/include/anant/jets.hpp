#pragma once

// Second-order forward-mode jets and a reverse-mode tape.
//
// Derivatives of body networks with respect to one input coordinate are
// obtained by pushing a truncated Taylor jet (value, d1, d2) through every
// layer. The tape records those jet-level primitives (affine maps, jet
// activations, KAN layers, tensor contractions, reductions) so that losses
// built from second derivatives can be differentiated with respect to all
// parameters in one backward sweep.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anant/bodynet.hpp"

namespace anant {

/// Scalar truncated Taylor jet in one seeded variable.
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static Jet2 constant(double x) { return {x, 0.0, 0.0}; }
  static Jet2 variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(Jet2 a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet2 operator*(Jet2 a, Jet2 b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet2 operator+(Jet2 a, double c) { return {a.v + c, a.d1, a.d2}; }
inline Jet2 operator+(double c, Jet2 a) { return a + c; }
inline Jet2 operator-(Jet2 a, double c) { return {a.v - c, a.d1, a.d2}; }
inline Jet2 operator-(double c, Jet2 a) { return {c - a.v, -a.d1, -a.d2}; }
inline Jet2 operator*(Jet2 a, double c) { return {a.v * c, a.d1 * c, a.d2 * c}; }
inline Jet2 operator*(double c, Jet2 a) { return a * c; }
inline Jet2 operator/(Jet2 a, double c) { return {a.v / c, a.d1 / c, a.d2 / c}; }

/// Composition with a scalar function given f, f', f'' at a.v.
inline Jet2 compose(Jet2 a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}
inline Jet2 sin(Jet2 a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}
inline Jet2 cos(Jet2 a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}
inline Jet2 exp(Jet2 a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}
inline Jet2 tanh(Jet2 a) {
  const double t = std::tanh(a.v), s = 1.0 - t * t;
  return compose(a, t, s, -2.0 * t * s);
}

/// sigma and its first three derivatives at z.
void activation_series(Activation act, double z, double out[4]);

/// A jet of matrices: row i holds the value/derivatives for point i.
/// Value-only jets leave d1 and d2 empty.
struct MatrixJet {
  Eigen::MatrixXd v, d1, d2;
  bool derivatives = false;
};

class Tape {
 public:
  struct Var {
    int node = -1;
    int slot = 0;
    bool valid() const { return node >= 0; }
  };
  /// One entry (value only) or three entries (value, d1, d2).
  using JetVars = std::vector<Var>;

  Var constant(Eigen::MatrixXd value);
  /// Leaf bound to a block of the flat parameter vector.
  Var parameter(const ParamVector& params, const ParamBlock& block);

  const Eigen::MatrixXd& value(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Jet-level network primitives.
  JetVars jet_affine(const JetVars& x, Var weight, Var bias);
  JetVars jet_scale(const JetVars& x, Var slope, double factor);
  JetVars jet_scale(const JetVars& x, double factor);
  JetVars jet_activation(const JetVars& x, Activation act);
  /// KAN layer; `params` are {BaseWeight, SplineScale, Coefficients} for the
  /// spline basis and {Coefficients} otherwise.
  JetVars kan_layer(const JetVars& x, std::span<const Var> params, const KanSpec& spec);

  /// T[a1..aB] = sum_j prod_i F_i[a_i, j], flattened row-major (a1 slowest)
  /// into a column vector.
  Var contract(std::span<const Var> factors);

  // Elementwise and reduction primitives on same-shape values.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_constant(Var a, const Eigen::MatrixXd& c);
  Var sin(Var a);
  Var sum_squares(Var a);
  Var sum_squared_difference(Var a, const Eigen::MatrixXd& target);
  Var linear_combination(std::span<const std::pair<double, Var>> terms);

  /// Reverse sweep from a 1x1 root; adds d(root)/d(param) into grad.
  void backward(Var root, Eigen::Ref<Eigen::VectorXd> grad, double seed = 1.0);

 private:
  struct Node {
    std::vector<Eigen::MatrixXd> value;
    std::vector<Eigen::MatrixXd> adjoint;
    std::function<void(Tape&, int)> backward;
    Eigen::Index param_offset = -1;
  };

  int push(std::vector<Eigen::MatrixXd> values, std::function<void(Tape&, int)> backward = {});
  const Eigen::MatrixXd& adjoint(int node, int slot) const { return nodes_[node].adjoint[slot]; }
  template <class Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g);

  std::vector<Node> nodes_;
};

/// Gradient of a recorded scalar with respect to all n_params parameters.
Eigen::VectorXd loss_gradient(Tape& tape, Tape::Var root, Eigen::Index n_params,
                              double seed = 1.0);

struct BodyJet {
  Eigen::VectorXd value, d1, d2;
};

/// f(point), df/dx_coord and d2f/dx_coord^2 for every embedding component.
BodyJet body_jet(const ParamVector& params, const BodySpec& spec,
                 std::span<const double> point, int coord, int network = 0);
/// Batched version over the rows of X.
MatrixJet body_jet_batch(const ParamVector& params, const BodySpec& spec,
                         const Eigen::MatrixXd& X, int coord, int network = 0);

/// Records a body network on the tape. `params` is indexed like
/// ParamLayout::blocks().
Tape::JetVars record_body(Tape& tape, const BodySpec& spec, const ParamLayout& layout,
                          std::span<const Tape::Var> params, int network,
                          const Tape::JetVars& input);

/// Binds every parameter block as a tape leaf.
std::vector<Tape::Var> bind_parameters(Tape& tape, const ParamVector& params);

struct FdEntry {
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

/// Central differences of fn at params along the given indices, compared
/// with `analytic`. rel_err = |a - n| / max(|a|, |n|, floor).
std::vector<FdEntry> fd_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                              const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                              std::span<const Eigen::Index> indices, double h = 1e-5,
                              double floor = 1e-8);

}  // namespace anant
