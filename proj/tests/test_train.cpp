#include <cstdio>
#include <fstream>
#include <limits>

#include "anant/train.hpp"
#include "doctest.h"

using namespace anant;

namespace {

TrainConfig small_config(ProblemKind kind = ProblemKind::Poisson, int d = 6) {
  TrainConfig cfg;
  cfg.problem.kind = kind;
  cfg.problem.d = d;
  cfg.B = 3;
  cfg.model.hidden_widths = {8};
  cfg.model.embedding_dim = 3;
  cfg.sampling.n_collocation = 4;
  cfg.sampling.num_collocation_grids = 2;
  cfg.sampling.n_boundary = 3;
  cfg.sampling.num_boundary_grids = 2;
  cfg.sampling.num_initial_grids = cfg.problem.transient() ? 2 : 0;
  cfg.stages = {{OptimizerKind::AdamW, 1e-3, 1, 1000}};
  return cfg;
}

TrainingBatch sample_batch(const TrainConfig& cfg, std::uint64_t seed) {
  const SamplerConfig s = sampler_config(cfg);
  Rng rng(seed);
  const Partition p = model_partition(cfg);
  return draw_batch(cfg, s, sweep_active(p, seed)[0], rng);
}

const ProblemKind kAllKinds[] = {ProblemKind::Poisson, ProblemKind::SineGordon, ProblemKind::AllenCahn,
                                 ProblemKind::Heat};

}  // namespace

TEST_CASE("data loss equals an explicit point loop") {
  for (ProblemKind k : kAllKinds) {
    const TrainConfig cfg = small_config(k);
    const AnantModel m = build_model(cfg);
    const TrainingBatch b = sample_batch(cfg, 3);
    double sum = 0.0;
    long n = 0;
    for (const auto& g : b.data)
      for (Eigen::Index i = 0; i < g.point_count(); ++i, ++n) {
        const Eigen::VectorXd x = g.point(i);
        const std::vector<double> row(x.data(), x.data() + x.size());
        const double e = predict_points(m, x.transpose())(0) - exact_solution(cfg.problem, row);
        sum += e * e;
      }
    const double loss = data_loss(m, b.data, cfg.problem);
    CHECK(std::abs(loss - sum / n) <= 1e-14 * std::max(1.0, sum / n));
    CHECK(data_loss(m, b.data, cfg.problem, LossReduction::Sum) == doctest::Approx(sum).epsilon(1e-13));
    CHECK_THROWS_AS(data_loss(m, b.collocation, cfg.problem), InvalidArgument);
  }
}

TEST_CASE("zero model residual loss is the mean squared forcing") {
  for (ProblemKind k : kAllKinds) {
    TrainConfig cfg = small_config(k);
    AnantModel m = build_model(cfg);
    m.params.values.setZero();
    const TrainingBatch b = sample_batch(cfg, 4);
    double sum = 0.0;
    long n = 0;
    for (const auto& f : b.forcing) {
      sum += f.squaredNorm();
      n += f.size();
    }
    for (ResidualScaling s : {ResidualScaling::AsWritten, ResidualScaling::DOverB}) {
      cfg.residual.scaling = s;
      CHECK(residual_loss(m, b.collocation, cfg.problem, cfg.residual) == doctest::Approx(sum / n).epsilon(1e-14));
    }
    CHECK(data_loss(m, b.data, cfg.problem) > 0.0);
  }
}

TEST_CASE("total loss decomposes by the loss weights") {
  TrainConfig cfg = small_config(ProblemKind::AllenCahn);
  const AnantModel m = build_model(cfg);
  const TrainingBatch b = sample_batch(cfg, 5);
  const LossParts base = total_loss(m, b, cfg);
  CHECK(base.data == doctest::Approx(data_loss(m, b.data, cfg.problem)).epsilon(1e-14));
  CHECK(base.residual == doctest::Approx(residual_loss(m, b.collocation, cfg.problem, cfg.residual)).epsilon(1e-14));
  cfg.lambda_b = 0.0;
  CHECK(total_loss(m, b, cfg).total == doctest::Approx(base.residual).epsilon(1e-15));
  cfg.lambda_b = 15.0;
  cfg.lambda_r = 0.0;
  CHECK(total_loss(m, b, cfg).total == doctest::Approx(15.0 * base.data).epsilon(1e-15));
  cfg.lambda_r = 2.0;
  CHECK(total_loss(m, b, cfg).total == doctest::Approx(15.0 * base.data + 2.0 * base.residual).epsilon(1e-15));
}

TEST_CASE("taped loss agrees with the eager loss") {
  for (ProblemKind k : kAllKinds)
    for (ResidualScaling s : {ResidualScaling::AsWritten, ResidualScaling::DOverB})
      for (LossReduction r : {LossReduction::Mean, LossReduction::Sum}) {
        TrainConfig cfg = small_config(k);
        cfg.residual.scaling = s;
        cfg.reduction = r;
        const AnantModel m = build_model(cfg);
        const TrainingBatch b = sample_batch(cfg, 6);
        const LossParts eager = total_loss(m, b, cfg), taped = loss_and_gradient(m, b, cfg, nullptr);
        CHECK(taped.data == doctest::Approx(eager.data).epsilon(1e-12));
        CHECK(taped.residual == doctest::Approx(eager.residual).epsilon(1e-12));
        CHECK(taped.total == doctest::Approx(eager.total).epsilon(1e-12));
      }
}

TEST_CASE("full-loss gradient matches central differences") {
  for (ProblemKind k : kAllKinds)
    for (bool kan : {false, true}) {
      TrainConfig cfg = small_config(k);
      cfg.residual.scaling = ResidualScaling::DOverB;
      if (kan) {
        cfg.model.kan = true;
        cfg.model.hidden_widths = {3};
        cfg.model.order = 2;
      }
      AnantModel m = build_model(cfg);
      const TrainingBatch b = sample_batch(cfg, 7);
      Eigen::VectorXd grad;
      loss_and_gradient(m, b, cfg, &grad);
      REQUIRE(grad.size() == m.params.values.size());
      const double scale = grad.cwiseAbs().maxCoeff();
      const Eigen::Index n = grad.size();
      for (int j = 0; j < 20; ++j) {
        const Eigen::Index idx = (j * 7919) % n;
        const double h = 1e-5, orig = m.params.values(idx);
        auto at = [&](double v) {
          m.params.values(idx) = v;
          return total_loss(m, b, cfg).total;
        };
        const double fp2 = at(orig + 2 * h), fp = at(orig + h), fm = at(orig - h), fm2 = at(orig - 2 * h);
        m.params.values(idx) = orig;
        const double fd = (-fp2 + 8 * fp - 8 * fm + fm2) / (12 * h);
        CHECK(std::abs(fd - grad(idx)) <= 1e-6 * std::max(std::abs(grad(idx)), 1e-2 * scale));
      }
    }
}

TEST_CASE("heat batches carry boundary and initial grids") {
  const TrainConfig cfg = small_config(ProblemKind::Heat);
  const TrainingBatch b = sample_batch(cfg, 8);
  CHECK(b.collocation.size() == 2);
  REQUIRE(b.data.size() == 4);
  CHECK(b.data[0].kind == GridKind::Boundary);
  CHECK(b.data[3].kind == GridKind::Initial);
  CHECK(b.tuple.dims[0] == 6);
  for (const auto& g : b.collocation) CHECK(g.active_dims == b.tuple.dims);
  const AnantModel m = build_model(cfg);
  CHECK(m.time_network == 0);
  CHECK(m.partition[0] == std::vector<int>{6});
}

TEST_CASE("configuration validation") {
  TrainConfig cfg = small_config();
  cfg.stages[0].iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.stages.clear();
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.B = 7;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config(ProblemKind::Heat);
  cfg.sampling.num_initial_grids = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.sampling.num_initial_grids = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK(parse_optimizer("adam") == OptimizerKind::AdamW);
  CHECK_THROWS_AS(parse_optimizer("sgd"), InvalidArgument);
}

TEST_CASE("training is deterministic for a seed") {
  TrainConfig cfg = small_config(ProblemKind::SineGordon);
  cfg.stages = {{OptimizerKind::AdamW, 1e-3, 6, 2}, {OptimizerKind::Lbfgs, 1e-2, 4, 2}};
  const TrainResult a = train(cfg), b = train(cfg);
  CHECK(a.model.params.values == b.model.params.values);
  REQUIRE(a.log.rows.size() == b.log.rows.size());
  for (std::size_t i = 0; i < a.log.rows.size(); ++i) CHECK(a.log.rows[i].total == b.log.rows[i].total);
  cfg.seed = 1;
  CHECK(train(cfg).model.params.values != a.model.params.values);
}

TEST_CASE("resample cadence follows the stage sampling frequency") {
  TrainConfig cfg = small_config();
  cfg.stages = {{OptimizerKind::AdamW, 1e-3, 10, 3}, {OptimizerKind::Gd, 1e-3, 4, 5}};
  const TrainResult r = train(cfg);
  CHECK(r.log.rows.size() == 14);
  std::vector<long> at;
  for (const auto& e : r.log.resamples) at.push_back(e.iteration);
  CHECK(at == std::vector<long>{0, 3, 6, 9, 10});
  // d = 6, B = 3: two tuples per epoch.
  CHECK(r.log.resamples[0].epoch == 0);
  CHECK(r.log.resamples[1].epoch == 0);
  CHECK(r.log.resamples[2].epoch == 1);
  CHECK(r.log.resamples[4].epoch == 2);
  CHECK(r.log.resamples[4].stage == 1);
  std::vector<int> seen;
  for (int e = 0; e < 2; ++e)
    for (int d : r.log.resamples[e].active_dims) seen.push_back(d);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{0, 1, 2, 3, 4, 5});
  for (const auto& row : r.log.rows)
    CHECK(row.total == doctest::Approx(15.0 * row.data + row.residual).epsilon(1e-15));
}

TEST_CASE("short AdamW run reduces the loss") {
  TrainConfig cfg = small_config();
  cfg.residual.scaling = ResidualScaling::DOverB;
  cfg.stages = {{OptimizerKind::AdamW, 1e-2, 200, 1000}};
  const TrainResult r = train(cfg);
  CHECK(r.log.rows.back().total < 0.5 * r.log.rows.front().total);
  CHECK(r.log.timers.loss_and_gradient > 0.0);
  CHECK(r.log.wall_seconds >= r.log.timers.sum() * 0.99);
}

TEST_CASE("L-BFGS never increases the loss on a fixed batch") {
  TrainConfig cfg = small_config(ProblemKind::AllenCahn);
  cfg.stages = {{OptimizerKind::Lbfgs, 1e-2, 40, 1000}};
  const TrainResult r = train(cfg);
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) CHECK(r.log.rows[i].total <= r.log.rows[i - 1].total);
  CHECK(r.log.rows.back().total < r.log.rows.front().total);
}

TEST_CASE("non-finite loss aborts with the log so far") {
  TrainConfig cfg = small_config();
  cfg.lambda_b = std::numeric_limits<double>::infinity();
  cfg.stages = {{OptimizerKind::AdamW, 1e-3, 5, 1000}};
  try {
    train(cfg);
    FAIL("expected TrainAborted");
  } catch (const TrainAborted& e) {
    CHECK(e.log.rows.empty());
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("model and configuration must match") {
  TrainConfig cfg = small_config();
  const AnantModel m = build_model(cfg);
  cfg.model.embedding_dim = 4;
  CHECK_THROWS_AS(train(cfg, m), MismatchError);
}

TEST_CASE("training log CSV") {
  TrainConfig cfg = small_config();
  cfg.stages = {{OptimizerKind::AdamW, 1e-3, 3, 1000}};
  const TrainResult r = train(cfg);
  const std::string path = "test_train_log.csv";
  r.log.write_csv(path, "abc");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_hash=abc");
  std::getline(in, line);
  CHECK(line.rfind("iteration,stage,data_loss,residual_loss,total_loss", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  std::remove(path.c_str());
  CHECK_THROWS_AS(r.log.write_csv("/nonexistent/dir/x.csv", "abc"), IoError);
}

TEST_CASE("preconditioning study runs both optimizers from one initialization") {
  TrainConfig cfg = small_config();
  CHECK_THROWS_AS(preconditioning_study(cfg, {}), InvalidArgument);
  cfg.model.activation = Activation::Identity;
  PrecondOptions opt;
  opt.iterations = 5;
  const PrecondResult r = preconditioning_study(cfg, opt);
  REQUIRE(r.gradient_descent.rows.size() == 5);
  REQUIRE(r.quasi_newton.rows.size() == 5);
  CHECK(r.gradient_descent.rows[0].total == r.quasi_newton.rows[0].total);
}
