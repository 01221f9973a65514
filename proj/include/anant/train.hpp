#pragma once

// Loss assembly and the staged training loop: grids are redrawn every
// sampling_frequency iterations from the next active-dimension tuple of
// the current epoch sweep, and each stage runs AdamW, L-BFGS, or plain
// gradient descent on the weighted data + residual loss.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anant/ansatz.hpp"
#include "anant/bodynet.hpp"
#include "anant/error.hpp"
#include "anant/optim.hpp"
#include "anant/pde.hpp"
#include "anant/sampling.hpp"

namespace anant {

enum class OptimizerKind { AdamW, Lbfgs, Gd };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

enum class LossReduction { Mean, Sum };
std::string to_string(LossReduction r);
LossReduction parse_reduction(const std::string& s);

struct Stage {
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double learning_rate = 1e-3;
  int iterations = 1;
  int sampling_frequency = 1000;  // S_FREQ
  bool operator==(const Stage&) const = default;
};

/// Body-network family shared by all B networks.
struct ModelConfig {
  bool kan = false;
  std::vector<int> hidden_widths{32, 32};
  int embedding_dim = 8;
  // MLP options.
  Activation activation = Activation::Tanh;
  bool adaptive = false;
  double scale_n = 1.0;
  // KAN options.
  KanBasis basis = KanBasis::Spline;
  int order = 3;
  int grid_size = 5;
  bool strict = false;
  bool operator==(const ModelConfig&) const = default;
};

/// Grid sizes and counts drawn at every resample event.
struct SamplingOptions {
  int n_collocation = 14;
  int num_collocation_grids = 1;
  int n_boundary = 6;
  int num_boundary_grids = 1;
  int num_initial_grids = 0;
  AxisMode axis_mode = AxisMode::Random;
  bool operator==(const SamplingOptions&) const = default;
};

struct TrainConfig {
  Problem problem;
  ResidualConfig residual;
  int B = 3;
  ModelConfig model;
  SamplingOptions sampling;
  double lambda_r = 1.0;
  double lambda_b = 15.0;
  std::vector<Stage> stages;
  LossReduction reduction = LossReduction::Mean;
  double weight_decay = 0.0;
  int lbfgs_history = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seed streams derived from TrainConfig::seed.
enum SeedStream : std::uint64_t { kModelStream = 1, kSamplerStream = 2, kSweepStream = 3, kTestStream = 4 };

SamplerConfig sampler_config(const TrainConfig& cfg);
Partition model_partition(const TrainConfig& cfg);
std::vector<BodySpec> build_specs(const TrainConfig& cfg, const Partition& partition);
/// Fresh model initialized from the config seed.
AnantModel build_model(const TrainConfig& cfg);

struct PhaseTimers {
  double boundary_sampling = 0.0;     // boundary/initial grids and their targets
  double collocation_sampling = 0.0;  // collocation grids and their forcing
  double loss_and_gradient = 0.0;
  double optimizer_update = 0.0;
  double sum() const { return boundary_sampling + collocation_sampling + loss_and_gradient + optimizer_update; }
};

/// Grids of one resample event with their precomputed targets.
struct TrainingBatch {
  ActiveTuple tuple;
  std::vector<GridBatch> collocation;
  std::vector<Eigen::VectorXd> forcing;  // per collocation grid
  std::vector<GridBatch> data;           // boundary grids, then initial grids
  std::vector<Eigen::VectorXd> targets;  // per data grid
};

TrainingBatch draw_batch(const TrainConfig& cfg, const SamplerConfig& sampler, const ActiveTuple& tuple,
                         Rng& rng, PhaseTimers* timers = nullptr);

struct LossParts {
  double data = 0.0;
  double residual = 0.0;
  double total = 0.0;
};

/// Squared error against the manufactured data over every represented point.
double data_loss(const AnantModel& model, std::span<const GridBatch> grids, const Problem& problem,
                 LossReduction reduction = LossReduction::Mean);
/// Squared residual with second derivatives along each grid's active axes.
double residual_loss(const AnantModel& model, std::span<const GridBatch> grids, const Problem& problem,
                     const ResidualConfig& rcfg, LossReduction reduction = LossReduction::Mean);
/// lambda_b * data + lambda_r * residual, evaluated without the tape.
LossParts total_loss(const AnantModel& model, const TrainingBatch& batch, const TrainConfig& cfg);
/// Same loss recorded on a tape; writes the parameter gradient when grad is non-null.
LossParts loss_and_gradient(const AnantModel& model, const TrainingBatch& batch, const TrainConfig& cfg,
                            Eigen::VectorXd* grad);

struct LogRow {
  long iteration = 0;
  int stage = 0;
  double data = 0.0;
  double residual = 0.0;
  double total = 0.0;
  PhaseTimers timers;  // cumulative
};

struct ResampleEvent {
  long iteration = 0;
  int stage = 0;
  long epoch = 0;
  std::vector<int> active_dims;
  std::vector<bool> padded;
};

struct TrainLog {
  double lambda_r = 1.0;
  double lambda_b = 15.0;
  std::vector<LogRow> rows;
  std::vector<ResampleEvent> resamples;
  PhaseTimers timers;
  double wall_seconds = 0.0;
  long lbfgs_failed_searches = 0;

  /// CSV: iteration, stage, data_loss, residual_loss, total_loss and the
  /// cumulative phase timers. The first line is a comment with the hash.
  void write_csv(const std::string& path, const std::string& config_hash) const;
};

struct TrainResult {
  AnantModel model;
  TrainLog log;
};

/// Thrown when the loss or gradient becomes non-finite; carries the log up
/// to the last finite iteration.
class TrainAborted : public NumericError {
 public:
  TrainAborted(const std::string& what, TrainLog log) : NumericError(what), log(std::move(log)) {}
  TrainLog log;
};

TrainResult train(const TrainConfig& cfg);
/// Trains starting from the given model (must match the config).
TrainResult train(const TrainConfig& cfg, AnantModel model);

struct PrecondOptions {
  int iterations = 1000;
  int sampling_frequency = 1000;
  double gd_learning_rate = 1e-3;
  double qn_learning_rate = 1.0;
};

struct PrecondResult {
  TrainLog gradient_descent;
  TrainLog quasi_newton;
};

/// Plain gradient descent and L-BFGS from the same initialization on the
/// same grid sequence. Requires identity activation (linear networks).
PrecondResult preconditioning_study(const TrainConfig& cfg_linear, const PrecondOptions& opt);

}  // namespace anant
