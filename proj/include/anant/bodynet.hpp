#pragma once

// Body networks: the B sub-networks whose r-dimensional embeddings are
// multiplied together by the separable ansatz. Two families are supported,
// plain MLPs (optionally with layer-wise adaptive activation slopes) and
// Kolmogorov-Arnold networks with spline, Chebyshev or Fourier edges.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace anant {

enum class Activation { Tanh, Sin, Identity };
enum class KanBasis { Spline, Chebyshev, ChebyshevModified, Fourier };

std::string to_string(Activation a);
std::string to_string(KanBasis b);
Activation parse_activation(const std::string& s);
KanBasis parse_kan_basis(const std::string& s);

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_widths;
  int embedding_dim = 1;
  Activation activation = Activation::Tanh;
  /// Trainable per-hidden-layer slope a, applied as sigma(scale_n * a * z).
  bool adaptive = false;
  double scale_n = 1.0;

  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct KanSpec {
  int input_dim = 1;
  std::vector<int> hidden_widths;
  int embedding_dim = 1;
  KanBasis basis = KanBasis::Spline;
  /// Spline order k, or the polynomial / frequency order for the other bases.
  int order = 3;
  /// Number of spline grid intervals G (spline basis only).
  int grid_size = 5;
  /// Reject spline inputs outside the grid support instead of clamping.
  bool strict = false;

  void validate() const;
  /// Basis functions per edge, excluding the spline's silu base term.
  int basis_count() const;
  bool operator==(const KanSpec&) const = default;
};

using BodySpec = std::variant<MlpSpec, KanSpec>;

int input_dim(const BodySpec& spec);
int embedding_dim(const BodySpec& spec);
void validate(const BodySpec& spec);
/// Layer widths including input and embedding: [in, h1, ..., r].
std::vector<int> layer_widths(const BodySpec& spec);

/// The spline grid spans [-1.5, 1.5]; inputs live in [-1, 1].
inline constexpr double kSplineLo = -1.5;
inline constexpr double kSplineHi = 1.5;

enum class ParamRole { Weight, Bias, Slope, BaseWeight, SplineScale, Coefficients };
std::string to_string(ParamRole r);

struct ParamBlock {
  int network = 0;
  int layer = 0;
  ParamRole role = ParamRole::Weight;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// Maps (network, layer, role) to contiguous ranges of the flat parameter
/// array. Blocks are laid out back to back in insertion order.
class ParamLayout {
 public:
  const ParamBlock& add(int network, int layer, ParamRole role, Eigen::Index rows,
                        Eigen::Index cols);
  /// Appends every block of `other`, relabelled as `network`.
  void append(const ParamLayout& other, int network);

  std::span<const ParamBlock> blocks() const { return blocks_; }
  Eigen::Index total() const { return total_; }
  const ParamBlock* find(int network, int layer, ParamRole role) const;
  const ParamBlock& at(int network, int layer, ParamRole role) const;
  /// Index of the block in blocks(), or -1.
  int index_of(int network, int layer, ParamRole role) const;

 private:
  std::vector<ParamBlock> blocks_;
  Eigen::Index total_ = 0;
};

/// Flat parameter array plus its layout. Blocks are column-major views.
struct ParamVector {
  ParamLayout layout;
  Eigen::VectorXd values;

  Eigen::Map<Eigen::MatrixXd> block(const ParamBlock& b) {
    return {values.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> block(const ParamBlock& b) const {
    return {values.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Index size() const { return values.size(); }
};

std::vector<Eigen::MatrixXd> unpack(const ParamVector& params);
ParamVector pack(const ParamLayout& layout, std::span<const Eigen::MatrixXd> blocks);

ParamLayout layout_for(const MlpSpec& spec, int network = 0);
ParamLayout layout_for(const KanSpec& spec, int network = 0);
ParamLayout layout_for(const BodySpec& spec, int network = 0);

/// Xavier-uniform weights, zero biases, unit adaptive slopes.
ParamVector init_mlp(const MlpSpec& spec, std::uint64_t seed);
ParamVector init_kan(const KanSpec& spec, std::uint64_t seed);
ParamVector init_body(const BodySpec& spec, std::uint64_t seed);

/// Evaluate network `network` of `params` on the rows of X (n x input_dim).
Eigen::MatrixXd mlp_forward(const ParamVector& params, const MlpSpec& spec,
                            const Eigen::MatrixXd& X, int network = 0);
Eigen::MatrixXd kan_forward(const ParamVector& params, const KanSpec& spec,
                            const Eigen::MatrixXd& X, int network = 0);
Eigen::MatrixXd body_forward(const ParamVector& params, const BodySpec& spec,
                             const Eigen::MatrixXd& X, int network = 0);

/// Uniform B-spline knots for the spline basis (G + 2k + 1 of them).
Eigen::VectorXd spline_knots(int grid_size, int order);
/// B-spline basis values of the given order at x (length G + k).
Eigen::VectorXd spline_basis(double x, int grid_size, int order);

}  // namespace anant
