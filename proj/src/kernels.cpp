#include "kernels.hpp"

#include <algorithm>
#include <cmath>

#include "anant/error.hpp"

namespace anant {

void activation_series(Activation act, double z, double out[4]) {
  switch (act) {
    case Activation::Tanh: {
      const double t = std::tanh(z);
      const double s = 1.0 - t * t;
      out[0] = t;
      out[1] = s;
      out[2] = -2.0 * t * s;
      out[3] = s * (6.0 * t * t - 2.0);
      return;
    }
    case Activation::Sin: {
      const double s = std::sin(z), c = std::cos(z);
      out[0] = s;
      out[1] = c;
      out[2] = -s;
      out[3] = -c;
      return;
    }
    case Activation::Identity:
      out[0] = z;
      out[1] = 1.0;
      out[2] = 0.0;
      out[3] = 0.0;
      return;
  }
}

namespace detail {
namespace {

void silu_series(double x, double out[4]) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  const double s1 = s * (1.0 - s);
  const double s2 = s1 * (1.0 - 2.0 * s);
  const double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
  out[0] = x * s;
  out[1] = s + x * s1;
  out[2] = 2.0 * s1 + x * s2;
  out[3] = 3.0 * s2 + x * s3;
}

// Derivatives 0..max_order of the G + k order-k B-splines at x.
// x must already lie in [kSplineLo, kSplineHi].
void spline_series(double x, int grid, int order, int max_order, double* out[4]) {
  const double h = (kSplineHi - kSplineLo) / grid;
  const int n0 = grid + 2 * order;
  auto knot = [&](int i) { return kSplineLo + (i - order) * h; };

  int interval = static_cast<int>(std::floor((x - knot(0)) / h));
  interval = std::clamp(interval, order, order + grid - 1);

  // table[q][i] = B_{i,q}(x)
  std::vector<std::vector<double>> table(order + 1);
  table[0].assign(n0, 0.0);
  table[0][interval] = 1.0;
  for (int q = 1; q <= order; ++q) {
    const int nq = n0 - q;
    table[q].assign(nq, 0.0);
    for (int i = 0; i < nq; ++i) {
      const double left = (x - knot(i)) * table[q - 1][i];
      const double right = (knot(i + q + 1) - x) * table[q - 1][i + 1];
      table[q][i] = (left + right) / (q * h);
    }
  }

  static constexpr double kBinom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  const int m_count = grid + order;
  for (int p = 0; p <= max_order; ++p) {
    for (int m = 0; m < m_count; ++m) {
      double acc = 0.0;
      if (p <= order) {
        const auto& lower = table[order - p];
        for (int l = 0; l <= p; ++l) {
          const double sign = (l % 2 == 0) ? 1.0 : -1.0;
          acc += sign * kBinom[p][l] * lower[m + l];
        }
        acc /= std::pow(h, p);
      }
      out[p][m] = acc;
    }
  }
}

void chebyshev_series(double x, int order, int max_order, double* out[4]) {
  // T_m and derivatives from T_{m+1} = 2x T_m - T_{m-1} differentiated term by term.
  std::array<std::vector<double>, 4> t;
  for (auto& v : t) v.assign(order + 1, 0.0);
  t[0][0] = 1.0;
  if (order >= 1) {
    t[0][1] = x;
    t[1][1] = 1.0;
  }
  for (int m = 1; m < order; ++m) {
    t[0][m + 1] = 2.0 * x * t[0][m] - t[0][m - 1];
    for (int p = 1; p <= 3; ++p)
      t[p][m + 1] = 2.0 * p * t[p - 1][m] + 2.0 * x * t[p][m] - t[p][m - 1];
  }
  for (int p = 0; p <= max_order; ++p)
    for (int m = 0; m <= order; ++m) out[p][m] = t[p][m];
}

void fourier_series(double x, int order, int max_order, double* out[4]) {
  for (int q = 1; q <= order; ++q) {
    const double c = std::cos(q * x), s = std::sin(q * x);
    const double f = q;
    const double cos_d[4] = {c, -f * s, -f * f * c, f * f * f * s};
    const double sin_d[4] = {s, f * c, -f * f * s, -f * f * f * c};
    for (int p = 0; p <= max_order; ++p) {
      out[p][q - 1] = cos_d[p];
      out[p][order + q - 1] = sin_d[p];
    }
  }
}

}  // namespace

std::array<Eigen::MatrixXd, 4> activation_series(Activation act, const Eigen::MatrixXd& z,
                                                 int max_order) {
  std::array<Eigen::MatrixXd, 4> out;
  for (int q = 0; q <= max_order; ++q) out[q].resize(z.rows(), z.cols());
  double s[4];
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    anant::activation_series(act, z.data()[k], s);
    for (int q = 0; q <= max_order; ++q) out[q].data()[k] = s[q];
  }
  return out;
}

BasisTable evaluate_basis(const KanSpec& spec, const Eigen::MatrixXd& x, int max_order) {
  BasisTable table;
  const bool spline = spec.basis == KanBasis::Spline;
  const int m_count = spec.basis_count();
  table.per_input = spline ? m_count + 1 : m_count;
  const Eigen::Index n = x.rows(), in = x.cols();
  for (int q = 0; q <= max_order; ++q) table.psi[q].setZero(n, in * table.per_input);

  std::vector<double> buffer(4 * static_cast<std::size_t>(table.per_input), 0.0);
  double* rows[4];
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index i = 0; i < in; ++i) {
      std::fill(buffer.begin(), buffer.end(), 0.0);
      for (int q = 0; q < 4; ++q) rows[q] = buffer.data() + q * table.per_input;
      const double xv = x(r, i);
      switch (spec.basis) {
        case KanBasis::Spline: {
          double base[4];
          silu_series(xv, base);
          for (int q = 0; q < 4; ++q) rows[q][0] = base[q];
          const bool inside = xv >= kSplineLo && xv <= kSplineHi;
          if (!inside && spec.strict)
            throw InvalidArgument("KAN spline input " + std::to_string(xv) +
                                  " outside grid support");
          const double xc = std::clamp(xv, kSplineLo, kSplineHi);
          double* spl[4] = {rows[0] + 1, rows[1] + 1, rows[2] + 1, rows[3] + 1};
          // Clamped inputs are constant in x, so only the value survives.
          spline_series(xc, spec.grid_size, spec.order, inside ? max_order : 0, spl);
          break;
        }
        case KanBasis::Chebyshev:
        case KanBasis::ChebyshevModified:
          chebyshev_series(xv, spec.order, max_order, rows);
          break;
        case KanBasis::Fourier:
          fourier_series(xv, spec.order, max_order, rows);
          break;
      }
      for (int q = 0; q <= max_order; ++q)
        for (int m = 0; m < table.per_input; ++m)
          table.psi[q](r, i * table.per_input + m) = rows[q][m];
    }
  }
  return table;
}

Eigen::MatrixXd effective_coefficients(const KanSpec& spec, const Eigen::MatrixXd* base,
                                       const Eigen::MatrixXd* scale,
                                       const Eigen::MatrixXd& coeffs) {
  if (spec.basis != KanBasis::Spline) return coeffs;
  const int m_count = spec.basis_count();
  const Eigen::Index out = coeffs.rows();
  const Eigen::Index in = base->cols();
  Eigen::MatrixXd c(out, in * (m_count + 1));
  for (Eigen::Index j = 0; j < out; ++j) {
    for (Eigen::Index i = 0; i < in; ++i) {
      c(j, i * (m_count + 1)) = (*base)(j, i);
      for (int m = 0; m < m_count; ++m)
        c(j, i * (m_count + 1) + 1 + m) = (*scale)(j, i) * coeffs(j, i * m_count + m);
    }
  }
  return c;
}

Eigen::MatrixXd repeat_columns(const Eigen::MatrixXd& m, int k) {
  Eigen::MatrixXd out(m.rows(), m.cols() * k);
  for (Eigen::Index i = 0; i < m.cols(); ++i)
    for (int r = 0; r < k; ++r) out.col(i * k + r) = m.col(i);
  return out;
}

Eigen::MatrixXd sum_column_groups(const Eigen::MatrixXd& m, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols() / k);
  for (Eigen::Index i = 0; i < out.cols(); ++i)
    for (int r = 0; r < k; ++r) out.col(i) += m.col(i * k + r);
  return out;
}

FeatureJet feature_jet(const KanSpec& spec, const Eigen::MatrixXd& v, const Eigen::MatrixXd* d1,
                       const Eigen::MatrixXd* d2, bool for_backward) {
  FeatureJet fj;
  const bool derivs = d1 != nullptr;
  const int max_order = derivs ? (for_backward ? 3 : 2) : (for_backward ? 1 : 0);
  fj.table = evaluate_basis(spec, v, max_order);
  const int k = fj.table.per_input;
  fj.phi0 = fj.table.psi[0];
  if (derivs) {
    fj.z1 = repeat_columns(*d1, k);
    fj.z2 = repeat_columns(*d2, k);
    fj.phi1 = fj.table.psi[1].cwiseProduct(fj.z1);
    fj.phi2 = fj.table.psi[2].cwiseProduct(fj.z1.cwiseProduct(fj.z1)) +
              fj.table.psi[1].cwiseProduct(fj.z2);
  }
  return fj;
}

Eigen::VectorXd contract(std::span<const Eigen::MatrixXd* const> factors) {
  require(!factors.empty(), "contract: no factors");
  const Eigen::Index r = factors[0]->cols();
  Eigen::MatrixXd acc = *factors[0];
  for (std::size_t f = 1; f < factors.size(); ++f) {
    const Eigen::MatrixXd& m = *factors[f];
    require(m.cols() == r, "contract: embedding widths differ");
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd next(acc.rows() * n, r);
    for (Eigen::Index a = 0; a < acc.rows(); ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        next.row(a * n + b) = acc.row(a).cwiseProduct(m.row(b));
    acc.swap(next);
  }
  return acc.rowwise().sum();
}

int layer_count(const KanSpec& spec) { return static_cast<int>(spec.hidden_widths.size()) + 1; }

bool tanh_before_layer(const KanSpec& spec, int layer) {
  if (spec.basis == KanBasis::Chebyshev) return layer == 0;
  return spec.basis == KanBasis::ChebyshevModified;
}

}  // namespace detail
}  // namespace anant
