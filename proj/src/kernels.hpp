#pragma once

// Numeric kernels shared by the eager network evaluator and the tape.

#include <array>

#include <Eigen/Dense>

#include "anant/bodynet.hpp"
#include "anant/jets.hpp"

namespace anant::detail {

/// sigma^(q)(z) elementwise for q = 0..max_order.
std::array<Eigen::MatrixXd, 4> activation_series(Activation act, const Eigen::MatrixXd& z,
                                                 int max_order);

/// Per-element basis values psi_m(x) and derivatives up to third order.
/// Column i * per_input + m holds basis m of input column i.
struct BasisTable {
  int per_input = 0;
  std::array<Eigen::MatrixXd, 4> psi;
};

/// For the spline basis, entry 0 of every input is the silu base term.
BasisTable evaluate_basis(const KanSpec& spec, const Eigen::MatrixXd& x, int max_order);

/// Combined coefficient matrix (out x in * per_input) for one KAN layer.
/// For the spline basis `base` and `scale` weight the silu and spline parts.
Eigen::MatrixXd effective_coefficients(const KanSpec& spec, const Eigen::MatrixXd* base,
                                       const Eigen::MatrixXd* scale,
                                       const Eigen::MatrixXd& coeffs);

/// Expand an (n x in) matrix to (n x in * k) by repeating each column k times.
Eigen::MatrixXd repeat_columns(const Eigen::MatrixXd& m, int k);
/// Inverse reduction: sum each group of k consecutive columns.
Eigen::MatrixXd sum_column_groups(const Eigen::MatrixXd& m, int k);

/// Jet of the basis features given the input jet.
struct FeatureJet {
  BasisTable table;
  Eigen::MatrixXd z1, z2;  // repeated input derivatives (empty for value-only)
  Eigen::MatrixXd phi0, phi1, phi2;
};
FeatureJet feature_jet(const KanSpec& spec, const Eigen::MatrixXd& v, const Eigen::MatrixXd* d1,
                       const Eigen::MatrixXd* d2, bool for_backward);

/// sum_j prod_i F_i[a_i, j], row-major flattened.
Eigen::VectorXd contract(std::span<const Eigen::MatrixXd* const> factors);

int layer_count(const KanSpec& spec);
bool tanh_before_layer(const KanSpec& spec, int layer);

}  // namespace anant::detail
