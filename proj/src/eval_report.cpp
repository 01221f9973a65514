#include "anant/eval_report.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "anant/error.hpp"

namespace anant {

double relative_l2(const Eigen::VectorXd& pred, const Eigen::VectorXd& exact) {
  require(pred.size() == exact.size(), "relative_l2: size mismatch");
  const double denom = exact.norm();
  require(denom > 0.0, "relative_l2: exact solution has zero norm");
  return 100.0 * (pred - exact).norm() / denom;
}

double evaluate_model(const AnantModel& model, const Problem& problem, int n_test, std::uint64_t test_seed) {
  require(model.coords() == problem.coords(), "evaluate_model: model and problem dimensions differ");
  const Eigen::MatrixXd pts = sample_test_points(problem.coords(), n_test, problem.box(), test_seed);
  Eigen::VectorXd exact(pts.rows());
  std::vector<double> row(static_cast<std::size_t>(pts.cols()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) row[c] = pts(i, c);
    exact(i) = exact_solution(problem, row);
  }
  return relative_l2(predict_points(model, pts), exact);
}

void aggregate(EvalResult& r) {
  double sum = 0.0;
  r.n_ok = 0;
  for (const auto& s : r.seeds)
    if (!s.failed) {
      sum += s.rel_l2_percent;
      ++r.n_ok;
    }
  if (r.n_ok == 0) {
    r.mean = r.std = std::nan("");
    return;
  }
  r.mean = sum / r.n_ok;
  double var = 0.0;
  for (const auto& s : r.seeds)
    if (!s.failed) var += (s.rel_l2_percent - r.mean) * (s.rel_l2_percent - r.mean);
  r.std = std::sqrt(var / r.n_ok);
}

EvalResult multi_seed_eval(const TrainConfig& cfg, int n_seeds, int n_test, int threads) {
  require(n_seeds >= 2, "multi_seed_eval: need at least 2 seeds");
  require(n_test >= 1, "multi_seed_eval: n_test must be >= 1");
  cfg.validate();
  EvalResult result;
  result.n_test = n_test;
  result.seeds.resize(static_cast<std::size_t>(n_seeds));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next++) < n_seeds;) {
      SeedResult& out = result.seeds[static_cast<std::size_t>(i)];
      TrainConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(i);
      out.seed = c.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainResult tr = train(c);
        out.rel_l2_percent = evaluate_model(tr.model, c.problem, n_test, derive_seed(c.seed, kTestStream));
      } catch (const NumericError& e) {
        out.failed = true;
        out.error = e.what();
      }
      out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int n_threads = std::max(1, std::min(threads, n_seeds));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  aggregate(result);
  return result;
}

SliceResult slice_error_export(const AnantModel& model, const Problem& problem, const std::vector<int>& dims,
                               int resolution, const Eigen::VectorXd& fixed_point, const std::string& path,
                               const std::string& config_hash) {
  require(dims.size() == 3, "slice_error_export: need exactly three coordinates");
  require(resolution >= 1, "slice_error_export: resolution must be >= 1");
  require(model.coords() == problem.coords(), "slice_error_export: model and problem dimensions differ");
  require(fixed_point.size() == problem.coords(), "slice_error_export: fixed point has wrong size");
  std::vector<int> owners;
  for (int c : dims) {
    require(c >= 0 && c < problem.coords(), "slice_error_export: coordinate out of range");
    const int o = model.owner(c);
    require(std::find(owners.begin(), owners.end(), o) == owners.end(),
            "slice_error_export: coordinates must belong to different body networks");
    owners.push_back(o);
  }
  const Box box = problem.box();
  SliceResult res;
  res.dims = dims;
  res.fixed_point = fixed_point;
  for (int c : dims) res.fixed_point(c) = std::nan("");

  const Eigen::Index n = static_cast<Eigen::Index>(resolution) * resolution * resolution;
  Eigen::MatrixXd pts(n, problem.coords());
  for (Eigen::Index i = 0; i < n; ++i) {
    pts.row(i) = fixed_point.transpose();
    Eigen::Index rest = i;
    for (int a = 2; a >= 0; --a) {
      const int c = dims[static_cast<std::size_t>(a)];
      const Eigen::Index k = rest % resolution;
      rest /= resolution;
      pts(i, c) = box.lo[c] + (static_cast<double>(k) + 0.5) * (box.hi[c] - box.lo[c]) / resolution;
    }
  }
  const Eigen::VectorXd pred = predict_points(model, pts);
  std::vector<double> row(static_cast<std::size_t>(problem.coords()));

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  out << "# config_hash=" << config_hash << "\n";
  out << "# slice_dims=" << dims[0] << ',' << dims[1] << ',' << dims[2] << "\n";
  out << "# fixed=";
  bool first = true;
  for (int c = 0; c < problem.coords(); ++c) {
    if (std::find(dims.begin(), dims.end(), c) != dims.end()) continue;
    out << (first ? "" : ";") << 'x' << c << ':' << fixed_point(c);
    first = false;
  }
  out << "\n";
  out << "x_" << dims[0] << ",x_" << dims[1] << ",x_" << dims[2] << ",abs_error\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < problem.coords(); ++c) row[c] = pts(i, c);
    const double err = std::abs(pred(i) - exact_solution(problem, row));
    res.max_abs_error = std::max(res.max_abs_error, err);
    out << pts(i, dims[0]) << ',' << pts(i, dims[1]) << ',' << pts(i, dims[2]) << ',' << err << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
  res.rows = n;
  return res;
}

double read_slice_max_error(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  bool header_seen = false;
  double mx = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto pos = line.rfind(',');
    mx = std::max(mx, std::stod(line.substr(pos + 1)));
  }
  return mx;
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::BoundaryVolume: return "boundary_volume";
    case SweepAxis::CollocationVolume: return "collocation_volume";
    case SweepAxis::BatchSize: return "batch_size";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "boundary_volume") return SweepAxis::BoundaryVolume;
  if (s == "collocation_volume") return SweepAxis::CollocationVolume;
  if (s == "batch_size") return SweepAxis::BatchSize;
  throw InvalidArgument("unknown sweep axis '" + s + "'");
}

namespace {

double ipow(double base, int e) { return std::pow(base, static_cast<double>(e)); }

int rescaled_count(int count, int n, int b_old, int b_new) {
  const double total = count * ipow(n, b_old);
  return std::max(1, static_cast<int>(std::lround(total / ipow(n, b_new))));
}

}  // namespace

TrainConfig sweep_config(const TrainConfig& base, SweepAxis axis, int value) {
  TrainConfig c = base;
  switch (axis) {
    case SweepAxis::BoundaryVolume:
      require(value >= 1, "sweep: boundary grid count must be >= 1");
      c.sampling.num_boundary_grids = value;
      break;
    case SweepAxis::CollocationVolume:
      require(value >= 2, "sweep: N_C must be >= 2");
      c.sampling.n_collocation = value;
      break;
    case SweepAxis::BatchSize: {
      require(value >= 2, "sweep: batch size must be >= 2");
      if (value > base.problem.d) throw InvalidArgument("sweep: batch size exceeds d");
      auto& s = c.sampling;
      s.num_collocation_grids = rescaled_count(s.num_collocation_grids, s.n_collocation, base.B, value);
      s.num_boundary_grids = rescaled_count(s.num_boundary_grids, s.n_boundary, base.B, value);
      if (s.num_initial_grids > 0)
        s.num_initial_grids = rescaled_count(s.num_initial_grids, s.n_boundary, base.B, value);
      c.B = value;
      break;
    }
  }
  c.validate();
  return c;
}

std::vector<SweepRow> sensitivity_sweep(const TrainConfig& base, SweepAxis axis, const std::vector<int>& values,
                                        int n_test) {
  require(!values.empty(), "sensitivity_sweep: no values");
  std::vector<TrainConfig> cfgs;
  for (int v : values) cfgs.push_back(sweep_config(base, axis, v));
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult tr = train(cfgs[i]);
    SweepRow r;
    r.value = values[i];
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.rel_l2_percent = evaluate_model(tr.model, cfgs[i].problem, n_test, derive_seed(cfgs[i].seed, kTestStream));
    rows.push_back(r);
  }
  return rows;
}

std::vector<ScalingRow> runtime_scaling_report(const TrainConfig& base, const std::vector<int>& dims,
                                               int iterations, int warmup) {
  require(!dims.empty(), "runtime_scaling_report: no dimensions");
  require(iterations >= 2 && warmup >= 0, "runtime_scaling_report: need >= 2 timed iterations");
  std::vector<ScalingRow> rows;
  for (int d : dims) {
    TrainConfig c = base;
    c.problem.d = d;
    const int total = iterations + warmup + 1;
    c.stages = {{OptimizerKind::AdamW, base.stages.empty() ? 1e-3 : base.stages[0].learning_rate, total, total}};
    TrainResult tr = train(c);
    // Row k holds the cumulative timers before iteration k runs its update.
    std::vector<double> per_iter;
    const auto& r = tr.log.rows;
    for (int k = warmup; k < warmup + iterations; ++k) {
      const auto& a = r[static_cast<std::size_t>(k)].timers;
      const auto& b = r[static_cast<std::size_t>(k + 1)].timers;
      per_iter.push_back((b.loss_and_gradient - a.loss_and_gradient) + (b.optimizer_update - a.optimizer_update));
    }
    ScalingRow row;
    row.d = d;
    row.iterations = iterations;
    double sum = 0.0;
    for (double t : per_iter) sum += t;
    row.mean_seconds = sum / per_iter.size();
    double var = 0.0;
    for (double t : per_iter) var += (t - row.mean_seconds) * (t - row.mean_seconds);
    row.std_seconds = std::sqrt(var / per_iter.size());
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows, const std::string& hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17) << "# config_hash=" << hash << "\naxis_value,rel_l2_percent,wall_seconds\n";
  for (const auto& r : rows) out << r.value << ',' << r.rel_l2_percent << ',' << r.wall_seconds << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_scaling_csv(const std::string& path, const std::vector<ScalingRow>& rows, const std::string& hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17) << "# config_hash=" << hash << "\nd,iters_timed,mean_iter_seconds,std\n";
  for (const auto& r : rows) out << r.d << ',' << r.iterations << ',' << r.mean_seconds << ',' << r.std_seconds << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace anant
