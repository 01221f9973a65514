#include <utility>

#include "anant/error.hpp"
#include "anant/jets.hpp"
#include "kernels.hpp"

namespace anant {

int Tape::push(std::vector<Eigen::MatrixXd> values, std::function<void(Tape&, int)> backward) {
  Node n;
  n.adjoint.resize(values.size());
  n.value = std::move(values);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <class Derived>
void Tape::accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
  Eigen::MatrixXd& a = nodes_[v.node].adjoint[v.slot];
  if (a.size() == 0)
    a = g;
  else
    a += g;
}

const Eigen::MatrixXd& Tape::value(Var v) const {
  require(v.node >= 0 && v.node < static_cast<int>(nodes_.size()), "tape: invalid variable");
  return nodes_[v.node].value[v.slot];
}

double Tape::scalar(Var v) const {
  const auto& m = value(v);
  require(m.size() == 1, "tape: value is not scalar");
  return m(0, 0);
}

Tape::Var Tape::constant(Eigen::MatrixXd value) {
  std::vector<Eigen::MatrixXd> v;
  v.push_back(std::move(value));
  return {push(std::move(v)), 0};
}

Tape::Var Tape::parameter(const ParamVector& params, const ParamBlock& block) {
  std::vector<Eigen::MatrixXd> v;
  v.emplace_back(params.block(block));
  const int id = push(std::move(v));
  nodes_[id].param_offset = block.offset;
  return {id, 0};
}

namespace {

Tape::JetVars outputs(int node, std::size_t n) {
  Tape::JetVars out;
  for (std::size_t k = 0; k < n; ++k) out.push_back({node, static_cast<int>(k)});
  return out;
}

}  // namespace

Tape::JetVars Tape::jet_affine(const JetVars& x, Var weight, Var bias) {
  const Eigen::MatrixXd& w = value(weight);
  const Eigen::MatrixXd& b = value(bias);
  require(value(x[0]).cols() == w.cols(), "jet_affine: input width does not match weight matrix");
  std::vector<Eigen::MatrixXd> y;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Eigen::MatrixXd yk = value(x[k]) * w.transpose();
    if (k == 0) yk.rowwise() += b.col(0).transpose();
    y.push_back(std::move(yk));
  }
  const int id = push(std::move(y), [x, weight, bias](Tape& t, int self) {
    const Eigen::MatrixXd& w = t.value(weight);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Eigen::MatrixXd& g = t.adjoint(self, static_cast<int>(k));
      if (g.size() == 0) continue;
      t.accumulate(x[k], g * w);
      t.accumulate(weight, g.transpose() * t.value(x[k]));
      if (k == 0) t.accumulate(bias, g.colwise().sum().transpose());
    }
  });
  return outputs(id, x.size());
}

Tape::JetVars Tape::jet_scale(const JetVars& x, Var slope, double factor) {
  const double s = factor * scalar(slope);
  std::vector<Eigen::MatrixXd> y;
  for (const Var& v : x) y.push_back(value(v) * s);
  const int id = push(std::move(y), [x, slope, factor](Tape& t, int self) {
    const double s = factor * t.scalar(slope);
    double ds = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Eigen::MatrixXd& g = t.adjoint(self, static_cast<int>(k));
      if (g.size() == 0) continue;
      t.accumulate(x[k], g * s);
      ds += g.cwiseProduct(t.value(x[k])).sum();
    }
    Eigen::MatrixXd d(1, 1);
    d(0, 0) = factor * ds;
    t.accumulate(slope, d);
  });
  return outputs(id, x.size());
}

Tape::JetVars Tape::jet_scale(const JetVars& x, double factor) {
  std::vector<Eigen::MatrixXd> y;
  for (const Var& v : x) y.push_back(value(v) * factor);
  const int id = push(std::move(y), [x, factor](Tape& t, int self) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Eigen::MatrixXd& g = t.adjoint(self, static_cast<int>(k));
      if (g.size() != 0) t.accumulate(x[k], g * factor);
    }
  });
  return outputs(id, x.size());
}

Tape::JetVars Tape::jet_activation(const JetVars& x, Activation act) {
  const bool derivs = x.size() == 3;
  auto s = detail::activation_series(act, value(x[0]), derivs ? 3 : 1);
  std::vector<Eigen::MatrixXd> y;
  y.push_back(s[0]);
  if (derivs) {
    const Eigen::MatrixXd& z1 = value(x[1]);
    const Eigen::MatrixXd& z2 = value(x[2]);
    y.push_back(s[1].cwiseProduct(z1));
    y.push_back(s[2].cwiseProduct(z1.cwiseProduct(z1)) + s[1].cwiseProduct(z2));
  }
  s[0].resize(0, 0);
  const int id = push(std::move(y), [x, s = std::move(s), derivs](Tape& t, int self) {
    const Eigen::MatrixXd& g0 = t.adjoint(self, 0);
    if (!derivs) {
      if (g0.size() != 0) t.accumulate(x[0], g0.cwiseProduct(s[1]));
      return;
    }
    const Eigen::MatrixXd& g1 = t.adjoint(self, 1);
    const Eigen::MatrixXd& g2 = t.adjoint(self, 2);
    const Eigen::MatrixXd& z1 = t.value(x[1]);
    const Eigen::MatrixXd& z2 = t.value(x[2]);
    const Eigen::Index rows = z1.rows(), cols = z1.cols();
    Eigen::MatrixXd dz0 = Eigen::MatrixXd::Zero(rows, cols);
    if (g0.size() != 0) dz0 += g0.cwiseProduct(s[1]);
    if (g1.size() != 0) {
      dz0 += g1.cwiseProduct(s[2]).cwiseProduct(z1);
      t.accumulate(x[1], g1.cwiseProduct(s[1]));
    }
    if (g2.size() != 0) {
      dz0 += g2.cwiseProduct(s[3].cwiseProduct(z1.cwiseProduct(z1)) + s[2].cwiseProduct(z2));
      t.accumulate(x[1], 2.0 * g2.cwiseProduct(s[2]).cwiseProduct(z1));
      t.accumulate(x[2], g2.cwiseProduct(s[1]));
    }
    t.accumulate(x[0], dz0);
  });
  return outputs(id, x.size());
}

Tape::JetVars Tape::kan_layer(const JetVars& x, std::span<const Var> params, const KanSpec& spec) {
  const bool spline = spec.basis == KanBasis::Spline;
  require(params.size() == (spline ? 3u : 1u), "kan_layer: wrong parameter count");
  const bool derivs = x.size() == 3;
  const Var coeff_var = params.back();
  Eigen::MatrixXd c;
  if (spline) {
    const Eigen::MatrixXd& base = value(params[0]);
    require(value(x[0]).cols() == base.cols(), "kan_layer: input width does not match layer");
    c = detail::effective_coefficients(spec, &base, &value(params[1]), value(coeff_var));
  } else {
    c = value(coeff_var);
  }
  detail::FeatureJet f = detail::feature_jet(spec, value(x[0]), derivs ? &value(x[1]) : nullptr,
                                             derivs ? &value(x[2]) : nullptr, true);
  require(f.phi0.cols() == c.cols(), "kan_layer: input width does not match layer");
  std::vector<Eigen::MatrixXd> y;
  y.push_back(f.phi0 * c.transpose());
  if (derivs) {
    y.push_back(f.phi1 * c.transpose());
    y.push_back(f.phi2 * c.transpose());
  }
  std::vector<Var> pv(params.begin(), params.end());
  const int id = push(std::move(y), [x, pv, spec, derivs, c = std::move(c),
                                     f = std::move(f)](Tape& t, int self) {
    const int k = f.table.per_input;
    const auto& psi = f.table.psi;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(c.rows(), c.cols());
    Eigen::MatrixXd dz0 = Eigen::MatrixXd::Zero(f.phi0.rows(), f.phi0.cols());
    Eigen::MatrixXd dz1, dz2;
    if (derivs) {
      dz1 = Eigen::MatrixXd::Zero(f.phi0.rows(), f.phi0.cols());
      dz2 = Eigen::MatrixXd::Zero(f.phi0.rows(), f.phi0.cols());
    }
    const Eigen::MatrixXd& g0 = t.adjoint(self, 0);
    if (g0.size() != 0) {
      dc += g0.transpose() * f.phi0;
      dz0 += (g0 * c).cwiseProduct(psi[1]);
    }
    if (derivs) {
      const Eigen::MatrixXd& g1 = t.adjoint(self, 1);
      const Eigen::MatrixXd& g2 = t.adjoint(self, 2);
      if (g1.size() != 0) {
        dc += g1.transpose() * f.phi1;
        const Eigen::MatrixXd dphi = g1 * c;
        dz0 += dphi.cwiseProduct(psi[2]).cwiseProduct(f.z1);
        dz1 += dphi.cwiseProduct(psi[1]);
      }
      if (g2.size() != 0) {
        dc += g2.transpose() * f.phi2;
        const Eigen::MatrixXd dphi = g2 * c;
        dz0 += dphi.cwiseProduct(psi[3].cwiseProduct(f.z1.cwiseProduct(f.z1)) +
                                 psi[2].cwiseProduct(f.z2));
        dz1 += 2.0 * dphi.cwiseProduct(psi[2]).cwiseProduct(f.z1);
        dz2 += dphi.cwiseProduct(psi[1]);
      }
    }
    t.accumulate(x[0], detail::sum_column_groups(dz0, k));
    if (derivs) {
      t.accumulate(x[1], detail::sum_column_groups(dz1, k));
      t.accumulate(x[2], detail::sum_column_groups(dz2, k));
    }
    if (spec.basis != KanBasis::Spline) {
      t.accumulate(pv[0], dc);
      return;
    }
    const int m_count = k - 1;
    const Eigen::MatrixXd& scale = t.value(pv[1]);
    const Eigen::MatrixXd& coeffs = t.value(pv[2]);
    const Eigen::Index out = scale.rows(), in = scale.cols();
    Eigen::MatrixXd dbase(out, in), dscale(out, in), dcoeff(out, in * m_count);
    for (Eigen::Index j = 0; j < out; ++j) {
      for (Eigen::Index i = 0; i < in; ++i) {
        dbase(j, i) = dc(j, i * k);
        double acc = 0.0;
        for (int m = 0; m < m_count; ++m) {
          const double g = dc(j, i * k + 1 + m);
          acc += g * coeffs(j, i * m_count + m);
          dcoeff(j, i * m_count + m) = g * scale(j, i);
        }
        dscale(j, i) = acc;
      }
    }
    t.accumulate(pv[0], dbase);
    t.accumulate(pv[1], dscale);
    t.accumulate(pv[2], dcoeff);
  });
  return outputs(id, x.size());
}

Tape::Var Tape::contract(std::span<const Var> factors) {
  std::vector<const Eigen::MatrixXd*> mats;
  for (const Var& v : factors) mats.push_back(&value(v));
  Eigen::MatrixXd out = detail::contract(mats);
  std::vector<Var> fv(factors.begin(), factors.end());
  std::vector<Eigen::MatrixXd> y;
  y.push_back(std::move(out));
  const int id = push(std::move(y), [fv](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() == 0) return;
    const std::size_t B = fv.size();
    std::vector<const Eigen::MatrixXd*> m(B);
    std::vector<Eigen::MatrixXd> dm(B);
    for (std::size_t i = 0; i < B; ++i) {
      m[i] = &t.value(fv[i]);
      dm[i] = Eigen::MatrixXd::Zero(m[i]->rows(), m[i]->cols());
    }
    const Eigen::Index r = m[0]->cols();
    std::vector<Eigen::Index> idx(B, 0);
    std::vector<double> prefix(B);
    for (Eigen::Index flat = 0; flat < g.rows(); ++flat) {
      const double gv = g(flat, 0);
      if (gv != 0.0) {
        for (Eigen::Index j = 0; j < r; ++j) {
          double pre = gv;
          for (std::size_t i = 0; i < B; ++i) {
            prefix[i] = pre;
            pre *= (*m[i])(idx[i], j);
          }
          double suf = 1.0;
          for (std::size_t i = B; i-- > 0;) {
            dm[i](idx[i], j) += prefix[i] * suf;
            suf *= (*m[i])(idx[i], j);
          }
        }
      }
      for (std::size_t i = B; i-- > 0;) {
        if (++idx[i] < m[i]->rows()) break;
        idx[i] = 0;
      }
    }
    for (std::size_t i = 0; i < B; ++i) t.accumulate(fv[i], dm[i]);
  });
  return {id, 0};
}

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch");
}

}  // namespace

Tape::Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  const int id = push({value(a) + value(b)}, [a, b](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() == 0) return;
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
  return {id, 0};
}

Tape::Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  const int id = push({value(a) - value(b)}, [a, b](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() == 0) return;
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
  return {id, 0};
}

Tape::Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  const int id = push({value(a).cwiseProduct(value(b))}, [a, b](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() == 0) return;
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
  return {id, 0};
}

Tape::Var Tape::scale(Var a, double c) {
  const int id = push({value(a) * c}, [a, c](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() != 0) t.accumulate(a, g * c);
  });
  return {id, 0};
}

Tape::Var Tape::add_constant(Var a, const Eigen::MatrixXd& c) {
  require_same_shape(value(a), c, "add_constant");
  const int id = push({value(a) + c}, [a](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() != 0) t.accumulate(a, g);
  });
  return {id, 0};
}

Tape::Var Tape::sin(Var a) {
  const int id = push({value(a).array().sin().matrix()}, [a](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() != 0) t.accumulate(a, g.cwiseProduct(t.value(a).array().cos().matrix()));
  });
  return {id, 0};
}

Tape::Var Tape::sum_squares(Var a) {
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = value(a).squaredNorm();
  const int id = push({s}, [a](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() != 0) t.accumulate(a, (2.0 * g(0, 0)) * t.value(a));
  });
  return {id, 0};
}

Tape::Var Tape::sum_squared_difference(Var a, const Eigen::MatrixXd& target) {
  require_same_shape(value(a), target, "sum_squared_difference");
  Eigen::MatrixXd diff = value(a) - target;
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = diff.squaredNorm();
  const int id = push({s}, [a, diff = std::move(diff)](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() != 0) t.accumulate(a, (2.0 * g(0, 0)) * diff);
  });
  return {id, 0};
}

Tape::Var Tape::linear_combination(std::span<const std::pair<double, Var>> terms) {
  require(!terms.empty(), "linear_combination: no terms");
  Eigen::MatrixXd acc = terms[0].first * value(terms[0].second);
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(acc, value(terms[i].second), "linear_combination");
    acc += terms[i].first * value(terms[i].second);
  }
  std::vector<std::pair<double, Var>> tv(terms.begin(), terms.end());
  const int id = push({std::move(acc)}, [tv](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.adjoint(self, 0);
    if (g.size() == 0) return;
    for (const auto& [w, v] : tv) t.accumulate(v, w * g);
  });
  return {id, 0};
}

void Tape::backward(Var root, Eigen::Ref<Eigen::VectorXd> grad, double seed) {
  if (value(root).size() != 1) throw InvalidArgument("backward: root is not scalar");
  for (auto& n : nodes_)
    for (auto& a : n.adjoint) a.resize(0, 0);
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = seed;
  nodes_[root.node].adjoint[root.slot] = s;
  for (int i = root.node; i >= 0; --i) {
    Node& n = nodes_[i];
    bool touched = false;
    for (const auto& a : n.adjoint) touched = touched || a.size() != 0;
    if (!touched) continue;
    if (n.param_offset >= 0) {
      const Eigen::MatrixXd& a = n.adjoint[0];
      require(n.param_offset + a.size() <= grad.size(), "backward: gradient vector too short");
      grad.segment(n.param_offset, a.size()) += Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

Eigen::VectorXd loss_gradient(Tape& tape, Tape::Var root, Eigen::Index n_params, double seed) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params);
  tape.backward(root, g, seed);
  return g;
}

}  // namespace anant
