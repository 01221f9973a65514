#include "anant/bodynet.hpp"

#include <cmath>
#include <random>

#include "anant/error.hpp"
#include "network_exec.hpp"

namespace anant {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sin: return "sin";
    case Activation::Identity: return "identity";
  }
  return "?";
}

std::string to_string(KanBasis b) {
  switch (b) {
    case KanBasis::Spline: return "spline";
    case KanBasis::Chebyshev: return "chebyshev";
    case KanBasis::ChebyshevModified: return "chebyshev_modified";
    case KanBasis::Fourier: return "fourier";
  }
  return "?";
}

std::string to_string(ParamRole r) {
  switch (r) {
    case ParamRole::Weight: return "weight";
    case ParamRole::Bias: return "bias";
    case ParamRole::Slope: return "slope";
    case ParamRole::BaseWeight: return "base_weight";
    case ParamRole::SplineScale: return "spline_scale";
    case ParamRole::Coefficients: return "coefficients";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sin") return Activation::Sin;
  if (s == "identity") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

KanBasis parse_kan_basis(const std::string& s) {
  if (s == "spline") return KanBasis::Spline;
  if (s == "chebyshev") return KanBasis::Chebyshev;
  if (s == "chebyshev_modified") return KanBasis::ChebyshevModified;
  if (s == "fourier") return KanBasis::Fourier;
  throw InvalidArgument("unknown KAN basis '" + s + "'");
}

void MlpSpec::validate() const {
  require(input_dim >= 1, "MlpSpec: input_dim must be >= 1");
  require(embedding_dim >= 1, "MlpSpec: embedding_dim must be >= 1");
  require(!hidden_widths.empty() || activation == Activation::Identity,
          "MlpSpec: hidden_widths empty outside identity-linear mode");
  for (int w : hidden_widths) require(w >= 1, "MlpSpec: zero hidden width");
  require(scale_n > 0.0, "MlpSpec: scale_n must be positive");
}

void KanSpec::validate() const {
  require(input_dim >= 1, "KanSpec: input_dim must be >= 1");
  require(embedding_dim >= 1, "KanSpec: embedding_dim must be >= 1");
  for (int w : hidden_widths) require(w >= 1, "KanSpec: zero layer width");
  if (basis == KanBasis::Spline) {
    require(grid_size >= 1, "KanSpec: spline grid_size must be >= 1");
    require(order >= 0 && order <= 3, "KanSpec: spline order must be in [0, 3]");
  } else {
    require(order >= 1, "KanSpec: basis order must be >= 1");
  }
}

int KanSpec::basis_count() const {
  switch (basis) {
    case KanBasis::Spline: return grid_size + order;
    case KanBasis::Chebyshev:
    case KanBasis::ChebyshevModified: return order + 1;
    case KanBasis::Fourier: return 2 * order;
  }
  return 0;
}

int input_dim(const BodySpec& spec) {
  return std::visit([](const auto& s) { return s.input_dim; }, spec);
}

int embedding_dim(const BodySpec& spec) {
  return std::visit([](const auto& s) { return s.embedding_dim; }, spec);
}

void validate(const BodySpec& spec) {
  std::visit([](const auto& s) { s.validate(); }, spec);
}

std::vector<int> layer_widths(const BodySpec& spec) {
  return std::visit(
      [](const auto& s) {
        std::vector<int> w{s.input_dim};
        w.insert(w.end(), s.hidden_widths.begin(), s.hidden_widths.end());
        w.push_back(s.embedding_dim);
        return w;
      },
      spec);
}

// ---------------------------------------------------------------------------

const ParamBlock& ParamLayout::add(int network, int layer, ParamRole role, Eigen::Index rows,
                                   Eigen::Index cols) {
  require(find(network, layer, role) == nullptr, "ParamLayout: duplicate block");
  blocks_.push_back({network, layer, role, total_, rows, cols});
  total_ += rows * cols;
  return blocks_.back();
}

void ParamLayout::append(const ParamLayout& other, int network) {
  for (const auto& b : other.blocks()) add(network, b.layer, b.role, b.rows, b.cols);
}

int ParamLayout::index_of(int network, int layer, ParamRole role) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (b.network == network && b.layer == layer && b.role == role) return static_cast<int>(i);
  }
  return -1;
}

const ParamBlock* ParamLayout::find(int network, int layer, ParamRole role) const {
  const int i = index_of(network, layer, role);
  return i < 0 ? nullptr : &blocks_[i];
}

const ParamBlock& ParamLayout::at(int network, int layer, ParamRole role) const {
  const ParamBlock* b = find(network, layer, role);
  if (b == nullptr)
    throw InvalidArgument("parameter block (" + std::to_string(network) + ", " +
                          std::to_string(layer) + ", " + to_string(role) + ") not in layout");
  return *b;
}

std::vector<Eigen::MatrixXd> unpack(const ParamVector& params) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params.layout.blocks().size());
  for (const auto& b : params.layout.blocks()) out.emplace_back(params.block(b));
  return out;
}

ParamVector pack(const ParamLayout& layout, std::span<const Eigen::MatrixXd> blocks) {
  require(blocks.size() == layout.blocks().size(), "pack: block count mismatch");
  ParamVector p{layout, Eigen::VectorXd(layout.total())};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = layout.blocks()[i];
    require(blocks[i].rows() == b.rows && blocks[i].cols() == b.cols, "pack: block shape mismatch");
    p.block(b) = blocks[i];
  }
  return p;
}

ParamLayout layout_for(const MlpSpec& spec, int network) {
  spec.validate();
  ParamLayout layout;
  std::vector<int> widths = layer_widths(spec);
  const int hidden = static_cast<int>(spec.hidden_widths.size());
  for (int l = 0; l <= hidden; ++l) {
    layout.add(network, l, ParamRole::Weight, widths[l + 1], widths[l]);
    layout.add(network, l, ParamRole::Bias, widths[l + 1], 1);
    if (spec.adaptive && l < hidden) layout.add(network, l, ParamRole::Slope, 1, 1);
  }
  return layout;
}

ParamLayout layout_for(const KanSpec& spec, int network) {
  spec.validate();
  ParamLayout layout;
  std::vector<int> widths = layer_widths(spec);
  const int m = spec.basis_count();
  for (int l = 0; l + 1 < static_cast<int>(widths.size()); ++l) {
    const int in = widths[l], out = widths[l + 1];
    if (spec.basis == KanBasis::Spline) {
      layout.add(network, l, ParamRole::BaseWeight, out, in);
      layout.add(network, l, ParamRole::SplineScale, out, in);
    }
    layout.add(network, l, ParamRole::Coefficients, out, static_cast<Eigen::Index>(in) * m);
  }
  return layout;
}

ParamLayout layout_for(const BodySpec& spec, int network) {
  return std::visit([network](const auto& s) { return layout_for(s, network); }, spec);
}

namespace {

void xavier_fill(Eigen::Map<Eigen::MatrixXd> m, double fan_in, double fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
}

}  // namespace

ParamVector init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  ParamVector p{layout_for(spec), {}};
  p.values.setZero(p.layout.total());
  std::mt19937_64 rng(seed);
  for (const auto& b : p.layout.blocks()) {
    switch (b.role) {
      case ParamRole::Weight:
        xavier_fill(p.block(b), static_cast<double>(b.cols), static_cast<double>(b.rows), rng);
        break;
      case ParamRole::Slope: p.block(b).setOnes(); break;
      default: break;
    }
  }
  return p;
}

ParamVector init_kan(const KanSpec& spec, std::uint64_t seed) {
  ParamVector p{layout_for(spec), {}};
  p.values.setZero(p.layout.total());
  std::mt19937_64 rng(seed);
  for (const auto& b : p.layout.blocks()) {
    switch (b.role) {
      case ParamRole::BaseWeight:
      case ParamRole::Coefficients:
        xavier_fill(p.block(b), static_cast<double>(b.cols), static_cast<double>(b.rows), rng);
        break;
      case ParamRole::SplineScale: p.block(b).setOnes(); break;
      default: break;
    }
  }
  return p;
}

ParamVector init_body(const BodySpec& spec, std::uint64_t seed) {
  if (const auto* m = std::get_if<MlpSpec>(&spec)) return init_mlp(*m, seed);
  return init_kan(std::get<KanSpec>(spec), seed);
}

// ---------------------------------------------------------------------------

namespace detail {

MatrixJet seed_jet(const Eigen::MatrixXd& X, int coord) {
  MatrixJet j;
  j.v = X;
  if (coord >= 0) {
    require(coord < X.cols(), "jet coordinate out of range");
    j.derivatives = true;
    j.d1.setZero(X.rows(), X.cols());
    j.d1.col(coord).setOnes();
    j.d2.setZero(X.rows(), X.cols());
  }
  return j;
}

MatrixJet EagerBackend::affine(const MatrixJet& x, const Param& w, const Param& b) const {
  require(x.v.cols() == w.cols(), "affine: input width does not match weight matrix");
  MatrixJet y;
  y.derivatives = x.derivatives;
  y.v = x.v * w.transpose();
  y.v.rowwise() += b.col(0).transpose();
  if (x.derivatives) {
    y.d1 = x.d1 * w.transpose();
    y.d2 = x.d2 * w.transpose();
  }
  return y;
}

MatrixJet EagerBackend::scale(const MatrixJet& x, const Param& slope, double factor) const {
  return scale(x, factor * slope(0, 0));
}

MatrixJet EagerBackend::scale(const MatrixJet& x, double factor) const {
  MatrixJet y;
  y.derivatives = x.derivatives;
  y.v = x.v * factor;
  if (x.derivatives) {
    y.d1 = x.d1 * factor;
    y.d2 = x.d2 * factor;
  }
  return y;
}

MatrixJet EagerBackend::activate(const MatrixJet& x, Activation act) const {
  auto s = activation_series(act, x.v, x.derivatives ? 2 : 0);
  MatrixJet y;
  y.derivatives = x.derivatives;
  y.v = std::move(s[0]);
  if (x.derivatives) {
    y.d1 = s[1].cwiseProduct(x.d1);
    y.d2 = s[2].cwiseProduct(x.d1.cwiseProduct(x.d1)) + s[1].cwiseProduct(x.d2);
  }
  return y;
}

MatrixJet EagerBackend::kan(const MatrixJet& x, const KanSpec& spec, int network, int layer) const {
  const Eigen::MatrixXd coeffs = param(network, layer, ParamRole::Coefficients);
  Eigen::MatrixXd c;
  if (spec.basis == KanBasis::Spline) {
    const Eigen::MatrixXd base = param(network, layer, ParamRole::BaseWeight);
    const Eigen::MatrixXd scale = param(network, layer, ParamRole::SplineScale);
    require(x.v.cols() == base.cols(), "kan: input width does not match layer");
    c = effective_coefficients(spec, &base, &scale, coeffs);
  } else {
    c = coeffs;
  }
  FeatureJet f = feature_jet(spec, x.v, x.derivatives ? &x.d1 : nullptr,
                             x.derivatives ? &x.d2 : nullptr, false);
  require(f.phi0.cols() == c.cols(), "kan: input width does not match layer");
  MatrixJet y;
  y.derivatives = x.derivatives;
  y.v = f.phi0 * c.transpose();
  if (x.derivatives) {
    y.d1 = f.phi1 * c.transpose();
    y.d2 = f.phi2 * c.transpose();
  }
  return y;
}

}  // namespace detail

namespace {

void check_input(const Eigen::MatrixXd& X, int expected) {
  if (X.cols() != expected)
    throw InvalidArgument("input has " + std::to_string(X.cols()) + " columns, network expects " +
                          std::to_string(expected));
}

}  // namespace

Eigen::MatrixXd mlp_forward(const ParamVector& params, const MlpSpec& spec, const Eigen::MatrixXd& X,
                            int network) {
  check_input(X, spec.input_dim);
  detail::EagerBackend be(params);
  return detail::run_mlp(be, spec, network, detail::seed_jet(X, -1)).v;
}

Eigen::MatrixXd kan_forward(const ParamVector& params, const KanSpec& spec, const Eigen::MatrixXd& X,
                            int network) {
  check_input(X, spec.input_dim);
  detail::EagerBackend be(params);
  return detail::run_kan(be, spec, network, detail::seed_jet(X, -1)).v;
}

Eigen::MatrixXd body_forward(const ParamVector& params, const BodySpec& spec,
                             const Eigen::MatrixXd& X, int network) {
  if (const auto* m = std::get_if<MlpSpec>(&spec)) return mlp_forward(params, *m, X, network);
  return kan_forward(params, std::get<KanSpec>(spec), X, network);
}

Eigen::VectorXd spline_knots(int grid_size, int order) {
  const double h = (kSplineHi - kSplineLo) / grid_size;
  Eigen::VectorXd t(grid_size + 2 * order + 1);
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = kSplineLo + static_cast<double>(i - order) * h;
  return t;
}

Eigen::VectorXd spline_basis(double x, int grid_size, int order) {
  KanSpec spec;
  spec.basis = KanBasis::Spline;
  spec.grid_size = grid_size;
  spec.order = order;
  spec.validate();
  Eigen::MatrixXd xm(1, 1);
  xm(0, 0) = x;
  detail::BasisTable t = detail::evaluate_basis(spec, xm, 0);
  return t.psi[0].row(0).segment(1, spec.basis_count()).transpose();
}

}  // namespace anant
