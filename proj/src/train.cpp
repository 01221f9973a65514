#include "anant/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "residual_formula.hpp"

namespace anant {

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::AdamW: return "adamw";
    case OptimizerKind::Lbfgs: return "lbfgs";
    case OptimizerKind::Gd: return "gd";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adamw" || s == "adam") return OptimizerKind::AdamW;
  if (s == "lbfgs") return OptimizerKind::Lbfgs;
  if (s == "gd") return OptimizerKind::Gd;
  throw InvalidArgument("unknown optimizer '" + s + "'");
}

std::string to_string(LossReduction r) { return r == LossReduction::Mean ? "mean" : "sum"; }

LossReduction parse_reduction(const std::string& s) {
  if (s == "mean") return LossReduction::Mean;
  if (s == "sum") return LossReduction::Sum;
  throw InvalidArgument("unknown loss reduction '" + s + "'");
}

void TrainConfig::validate() const {
  problem.validate();
  require(B >= 2, "train: B must be >= 2");
  require(lambda_r >= 0.0 && lambda_b >= 0.0, "train: loss weights must be non-negative");
  require(!stages.empty(), "train: no stages");
  for (const auto& s : stages) {
    require(s.iterations >= 1, "train: stage iterations must be >= 1");
    require(s.sampling_frequency >= 1, "train: sampling_frequency must be >= 1");
    require(s.learning_rate > 0.0, "train: learning_rate must be positive");
  }
  require(lbfgs_history >= 1, "train: lbfgs_history must be >= 1");
  require(weight_decay >= 0.0, "train: weight_decay must be non-negative");
  require(model.embedding_dim >= 1, "train: embedding_dim must be >= 1");
  if (problem.transient()) {
    require(sampling.num_initial_grids >= 1, "train: heat problems need initial grids");
    require(B - 1 <= problem.d, "train: B - 1 exceeds the spatial dimension");
  } else {
    require(sampling.num_initial_grids == 0, "train: initial grids only apply to heat problems");
  }
  sampler_config(*this).validate();
}

SamplerConfig sampler_config(const TrainConfig& cfg) {
  SamplerConfig s;
  s.coords = cfg.problem.coords();
  s.B = cfg.B;
  if (cfg.problem.transient()) s.time_dim = cfg.problem.time_index();
  s.box = cfg.problem.box();
  s.n_collocation = cfg.sampling.n_collocation;
  s.num_collocation_grids = cfg.sampling.num_collocation_grids;
  s.n_boundary = cfg.sampling.n_boundary;
  s.num_boundary_grids = cfg.sampling.num_boundary_grids;
  s.num_initial_grids = cfg.sampling.num_initial_grids;
  s.seed = derive_seed(cfg.seed, kSamplerStream);
  s.axis_mode = cfg.sampling.axis_mode;
  return s;
}

Partition model_partition(const TrainConfig& cfg) {
  if (cfg.problem.transient()) return partition_dimensions(cfg.problem.d, cfg.B, cfg.problem.time_index());
  return partition_dimensions(cfg.problem.d, cfg.B);
}

std::vector<BodySpec> build_specs(const TrainConfig& cfg, const Partition& partition) {
  std::vector<BodySpec> specs;
  const ModelConfig& m = cfg.model;
  for (const auto& set : partition) {
    const int in = static_cast<int>(set.size());
    if (m.kan) {
      KanSpec k;
      k.input_dim = in;
      k.hidden_widths = m.hidden_widths;
      k.embedding_dim = m.embedding_dim;
      k.basis = m.basis;
      k.order = m.order;
      k.grid_size = m.grid_size;
      k.strict = m.strict;
      specs.emplace_back(k);
    } else {
      MlpSpec s;
      s.input_dim = in;
      s.hidden_widths = m.hidden_widths;
      s.embedding_dim = m.embedding_dim;
      s.activation = m.activation;
      s.adaptive = m.adaptive;
      s.scale_n = m.scale_n;
      specs.emplace_back(s);
    }
  }
  return specs;
}

AnantModel build_model(const TrainConfig& cfg) {
  cfg.validate();
  Partition p = model_partition(cfg);
  auto specs = build_specs(cfg, p);
  std::optional<int> time_network;
  if (cfg.problem.transient()) time_network = 0;
  return make_model(std::move(specs), std::move(p), time_network, derive_seed(cfg.seed, kModelStream));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

TrainingBatch draw_batch(const TrainConfig& cfg, const SamplerConfig& sampler, const ActiveTuple& tuple,
                         Rng& rng, PhaseTimers* timers) {
  TrainingBatch b;
  b.tuple = tuple;
  auto t0 = Clock::now();
  for (int g = 0; g < sampler.num_collocation_grids; ++g) {
    b.collocation.push_back(make_collocation_grid(sampler, tuple.dims, rng));
    b.forcing.push_back(grid_forcing(cfg.problem, b.collocation.back()));
  }
  if (timers) timers->collocation_sampling += seconds_since(t0);
  t0 = Clock::now();
  for (int g = 0; g < sampler.num_boundary_grids; ++g) {
    b.data.push_back(make_boundary_grid(sampler, tuple.dims, rng));
    b.targets.push_back(grid_exact(cfg.problem, b.data.back()));
  }
  for (int g = 0; g < sampler.num_initial_grids; ++g) {
    b.data.push_back(make_initial_grid(sampler, tuple.dims, rng));
    b.targets.push_back(grid_exact(cfg.problem, b.data.back()));
  }
  if (timers) timers->boundary_sampling += seconds_since(t0);
  return b;
}

namespace {

double reduce(double sum, Eigen::Index count, LossReduction r) {
  return r == LossReduction::Mean ? sum / static_cast<double>(count) : sum;
}

Eigen::Index total_points(std::span<const GridBatch> grids) {
  Eigen::Index n = 0;
  for (const auto& g : grids) n += g.point_count();
  return n;
}

bool is_time(const Problem& p, int coord) { return p.transient() && coord == p.time_index(); }

Eigen::ArrayXd grid_residual(const AnantModel& model, const GridBatch& grid, const Problem& p,
                             const ResidualConfig& rcfg, const Eigen::VectorXd& f) {
  const Eigen::ArrayXd u = predict_grid(model, grid).values.array();
  std::vector<Eigen::ArrayXd> d2;
  Eigen::ArrayXd dt;
  for (int c : grid.active_dims) {
    if (is_time(p, c))
      dt = partial1_grid(model, grid, c).values.array();
    else
      d2.push_back(partial2_grid(model, grid, c).values.array());
  }
  return residual(p, rcfg, model.B(), u, d2, p.transient() ? &dt : nullptr, f.array());
}

/// Tape values with the operators needed by the residual formula.
struct TapeExpr {
  Tape* tape;
  Tape::Var v;
};
TapeExpr operator+(const TapeExpr& a, const TapeExpr& b) { return {a.tape, a.tape->add(a.v, b.v)}; }
TapeExpr operator-(const TapeExpr& a, const TapeExpr& b) { return {a.tape, a.tape->sub(a.v, b.v)}; }
TapeExpr operator*(const TapeExpr& a, const TapeExpr& b) { return {a.tape, a.tape->mul(a.v, b.v)}; }
TapeExpr operator*(double c, const TapeExpr& a) { return {a.tape, a.tape->scale(a.v, c)}; }
TapeExpr operator-(const TapeExpr& a, const Eigen::MatrixXd& f) {
  return {a.tape, a.tape->add_constant(a.v, -f)};
}
TapeExpr sin(const TapeExpr& a) { return {a.tape, a.tape->sin(a.v)}; }

}  // namespace

double data_loss(const AnantModel& model, std::span<const GridBatch> grids, const Problem& problem,
                 LossReduction reduction) {
  require(!grids.empty(), "data_loss: no grids");
  double sum = 0.0;
  for (const auto& g : grids) {
    require(g.kind != GridKind::Collocation, "data_loss: collocation grid supplied");
    sum += (predict_grid(model, g).values - grid_exact(problem, g)).squaredNorm();
  }
  return reduce(sum, total_points(grids), reduction);
}

double residual_loss(const AnantModel& model, std::span<const GridBatch> grids, const Problem& problem,
                     const ResidualConfig& rcfg, LossReduction reduction) {
  require(!grids.empty(), "residual_loss: no grids");
  double sum = 0.0;
  for (const auto& g : grids) {
    require(g.kind == GridKind::Collocation, "residual_loss: non-collocation grid supplied");
    sum += grid_residual(model, g, problem, rcfg, grid_forcing(problem, g)).square().sum();
  }
  return reduce(sum, total_points(grids), reduction);
}

LossParts total_loss(const AnantModel& model, const TrainingBatch& batch, const TrainConfig& cfg) {
  LossParts parts;
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.data.size(); ++i)
    sum += (predict_grid(model, batch.data[i]).values - batch.targets[i]).squaredNorm();
  parts.data = reduce(sum, total_points(batch.data), cfg.reduction);
  sum = 0.0;
  for (std::size_t i = 0; i < batch.collocation.size(); ++i)
    sum += grid_residual(model, batch.collocation[i], cfg.problem, cfg.residual, batch.forcing[i])
               .square()
               .sum();
  parts.residual = reduce(sum, total_points(batch.collocation), cfg.reduction);
  parts.total = cfg.lambda_b * parts.data + cfg.lambda_r * parts.residual;
  return parts;
}

LossParts loss_and_gradient(const AnantModel& model, const TrainingBatch& batch, const TrainConfig& cfg,
                            Eigen::VectorXd* grad) {
  require(!batch.data.empty() && !batch.collocation.empty(), "loss: batch needs data and collocation grids");
  Tape tape;
  const auto params = bind_parameters(tape, model.params);

  std::vector<std::pair<double, Tape::Var>> data_terms;
  const double data_w = cfg.reduction == LossReduction::Mean ? 1.0 / total_points(batch.data) : 1.0;
  for (std::size_t i = 0; i < batch.data.size(); ++i) {
    GridTerms t = record_grid(tape, model, params, batch.data[i], false);
    data_terms.emplace_back(data_w, tape.sum_squared_difference(t.value, batch.targets[i]));
  }
  const Tape::Var data = tape.linear_combination(data_terms);

  const Problem& p = cfg.problem;
  const double lap_scale = laplacian_scale(p, cfg.residual, model.B());
  std::vector<std::pair<double, Tape::Var>> res_terms;
  const double res_w = cfg.reduction == LossReduction::Mean ? 1.0 / total_points(batch.collocation) : 1.0;
  for (std::size_t g = 0; g < batch.collocation.size(); ++g) {
    const GridBatch& grid = batch.collocation[g];
    GridTerms t = record_grid(tape, model, params, grid, true);
    std::vector<std::pair<double, Tape::Var>> lap_terms;
    TapeExpr dt{&tape, {}};
    for (int i = 0; i < model.B(); ++i) {
      if (is_time(p, grid.active_dims[i]))
        dt.v = t.d1[i];
      else
        lap_terms.emplace_back(1.0, t.d2[i]);
    }
    const TapeExpr u{&tape, t.value};
    const TapeExpr lap{&tape, tape.linear_combination(lap_terms)};
    const Eigen::MatrixXd f = batch.forcing[g];
    const TapeExpr r = detail::residual_formula<TapeExpr>(p.kind, lap_scale, u, lap,
                                                          p.transient() ? &dt : nullptr, f);
    res_terms.emplace_back(res_w, tape.sum_squares(r.v));
  }
  const Tape::Var res = tape.linear_combination(res_terms);

  LossParts parts;
  parts.data = tape.scalar(data);
  parts.residual = tape.scalar(res);
  parts.total = cfg.lambda_b * parts.data + cfg.lambda_r * parts.residual;
  if (grad) {
    const std::pair<double, Tape::Var> total_terms[] = {{cfg.lambda_b, data}, {cfg.lambda_r, res}};
    *grad = loss_gradient(tape, tape.linear_combination(total_terms), model.params.values.size());
  }
  return parts;
}

void TrainLog::write_csv(const std::string& path, const std::string& config_hash) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "iteration,stage,data_loss,residual_loss,total_loss,boundary_sampling_s,"
         "collocation_sampling_s,loss_and_gradient_s,optimizer_update_s\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.iteration << ',' << r.stage << ',' << r.data << ',' << r.residual << ',' << r.total << ','
        << r.timers.boundary_sampling << ',' << r.timers.collocation_sampling << ','
        << r.timers.loss_and_gradient << ',' << r.timers.optimizer_update << '\n';
  if (!out) throw IoError("failed writing " + path);
}

TrainResult train(const TrainConfig& cfg) { return train(cfg, build_model(cfg)); }

TrainResult train(const TrainConfig& cfg, AnantModel model) {
  cfg.validate();
  model.validate();
  if (model.partition != model_partition(cfg) || model.specs != build_specs(cfg, model.partition))
    throw MismatchError("train: model does not match the configuration");

  const auto wall0 = Clock::now();
  const SamplerConfig sampler = sampler_config(cfg);
  Rng rng(sampler.seed);
  const std::uint64_t sweep_seed = derive_seed(cfg.seed, kSweepStream);

  TrainLog log;
  log.lambda_r = cfg.lambda_r;
  log.lambda_b = cfg.lambda_b;

  std::vector<ActiveTuple> tuples;
  std::size_t next_tuple = 0;
  long epoch = -1;
  TrainingBatch batch;
  long iteration = 0;
  Eigen::VectorXd grad;

  auto record = [&](int stage, const LossParts& parts) {
    if (!std::isfinite(parts.total))
      throw TrainAborted("non-finite loss at iteration " + std::to_string(iteration), log);
    log.rows.push_back({iteration, stage, parts.data, parts.residual, parts.total, log.timers});
  };

  try {
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
      const Stage& stage = cfg.stages[s];
      const int stage_index = static_cast<int>(s);
      AdamWState adam;
      adam.weight_decay = cfg.weight_decay;
      LbfgsState lbfgs;
      lbfgs.history = cfg.lbfgs_history;
      LossParts current, last_eval;
      AnantModel work = model;

      const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* g) {
        const auto t0 = Clock::now();
        work.params.values = theta;
        last_eval = loss_and_gradient(work, batch, cfg, g);
        log.timers.loss_and_gradient += seconds_since(t0);
        return last_eval.total;
      };

      for (int k = 0; k < stage.iterations; ++k, ++iteration) {
        if (k % stage.sampling_frequency == 0) {
          if (next_tuple >= tuples.size()) {
            tuples = sweep_active(model.partition, derive_seed(sweep_seed, static_cast<std::uint64_t>(++epoch)));
            next_tuple = 0;
          }
          const ActiveTuple& tuple = tuples[next_tuple++];
          batch = draw_batch(cfg, sampler, tuple, rng, &log.timers);
          lbfgs.reset();
          log.resamples.push_back({iteration, stage_index, epoch, tuple.dims, tuple.padded});
        }

        if (stage.optimizer == OptimizerKind::Lbfgs) {
          if (!lbfgs.has_current) {
            lbfgs_prime(lbfgs, model.params.values, objective);
            current = last_eval;
          }
          record(stage_index, current);
          const auto t0 = Clock::now();
          const double in_objective = log.timers.loss_and_gradient;
          const LbfgsStep step = lbfgs_step(lbfgs, model.params.values, objective, stage.learning_rate);
          log.timers.optimizer_update += seconds_since(t0) - (log.timers.loss_and_gradient - in_objective);
          if (step.accepted) current = last_eval;
        } else {
          auto t0 = Clock::now();
          current = loss_and_gradient(model, batch, cfg, &grad);
          log.timers.loss_and_gradient += seconds_since(t0);
          record(stage_index, current);
          t0 = Clock::now();
          if (stage.optimizer == OptimizerKind::AdamW)
            adamw_step(adam, model.params.values, grad, stage.learning_rate);
          else
            gd_step(model.params.values, grad, stage.learning_rate);
          log.timers.optimizer_update += seconds_since(t0);
        }
      }
      log.lbfgs_failed_searches += lbfgs.failed_searches;
    }
  } catch (const TrainAborted&) {
    throw;
  } catch (const NumericError& e) {
    throw TrainAborted(std::string(e.what()) + " at iteration " + std::to_string(iteration), log);
  }
  log.wall_seconds = seconds_since(wall0);
  return {std::move(model), std::move(log)};
}

PrecondResult preconditioning_study(const TrainConfig& cfg_linear, const PrecondOptions& opt) {
  if (cfg_linear.model.kan || cfg_linear.model.activation != Activation::Identity)
    throw InvalidArgument("preconditioning_study: requires identity activation (linear body networks)");
  require(opt.iterations >= 1 && opt.sampling_frequency >= 1, "preconditioning_study: bad iteration counts");
  TrainConfig gd = cfg_linear;
  gd.stages = {{OptimizerKind::Gd, opt.gd_learning_rate, opt.iterations, opt.sampling_frequency}};
  TrainConfig qn = cfg_linear;
  qn.stages = {{OptimizerKind::Lbfgs, opt.qn_learning_rate, opt.iterations, opt.sampling_frequency}};
  const AnantModel init = build_model(cfg_linear);
  PrecondResult out;
  out.gradient_descent = train(gd, init).log;
  out.quasi_newton = train(qn, init).log;
  return out;
}

}  // namespace anant
