#pragma once

// Scattered-point evaluation, multi-seed statistics, slice error exports,
// sensitivity sweeps and runtime scaling measurements.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anant/ansatz.hpp"
#include "anant/pde.hpp"
#include "anant/train.hpp"

namespace anant {

/// 100 * ||pred - exact||_2 / ||exact||_2.
double relative_l2(const Eigen::VectorXd& pred, const Eigen::VectorXd& exact);

/// Relative L2 error (percent) of a model on n_test scattered interior points.
double evaluate_model(const AnantModel& model, const Problem& problem, int n_test, std::uint64_t test_seed);

struct SeedResult {
  std::uint64_t seed = 0;
  double rel_l2_percent = 0.0;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct EvalResult {
  std::vector<SeedResult> seeds;
  int n_test = 0;
  int n_ok = 0;
  double mean = 0.0;
  double std = 0.0;  // population convention (divide by n)
};

/// Mean and population standard deviation of the non-failed entries.
void aggregate(EvalResult& r);

/// Trains seeds cfg.seed, cfg.seed + 1, ... and evaluates each on fresh test
/// points. Seeds run on up to `threads` worker threads; results are stored
/// by seed index so the aggregate does not depend on scheduling.
EvalResult multi_seed_eval(const TrainConfig& cfg, int n_seeds, int n_test, int threads = 1);

struct SliceResult {
  std::vector<int> dims;
  Eigen::VectorXd fixed_point;  // all coordinates; the slice dims are NaN
  Eigen::Index rows = 0;
  double max_abs_error = 0.0;
};

/// Absolute error on a resolution^3 cell-centred grid spanning three
/// coordinates owned by different body networks; every other coordinate is
/// fixed at fixed_point. Writes comment lines (#) with the hash and fixed
/// values, a column header, then one row per point.
SliceResult slice_error_export(const AnantModel& model, const Problem& problem, const std::vector<int>& dims,
                               int resolution, const Eigen::VectorXd& fixed_point, const std::string& path,
                               const std::string& config_hash);

/// Max absolute error column of a slice CSV written by slice_error_export.
double read_slice_max_error(const std::string& path);

enum class SweepAxis { BoundaryVolume, CollocationVolume, BatchSize };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& s);

struct SweepRow {
  int value = 0;
  double rel_l2_percent = 0.0;
  double wall_seconds = 0.0;
};

/// One train + eval per value. boundary_volume sets #BG, collocation_volume
/// sets N_C (#CG fixed), batch_size sets B and rescales #CG and #BG so the
/// total collocation and data point counts stay as close as possible.
std::vector<SweepRow> sensitivity_sweep(const TrainConfig& base, SweepAxis axis, const std::vector<int>& values,
                                        int n_test);
/// The config used for one sweep value.
TrainConfig sweep_config(const TrainConfig& base, SweepAxis axis, int value);

struct ScalingRow {
  int d = 0;
  int iterations = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

/// Per-iteration wall time of the training loop for each d, excluding
/// `warmup` leading iterations. Grids are drawn once per run.
std::vector<ScalingRow> runtime_scaling_report(const TrainConfig& base, const std::vector<int>& dims,
                                               int iterations, int warmup);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows, const std::string& hash);
void write_scaling_csv(const std::string& path, const std::vector<ScalingRow>& rows, const std::string& hash);

}  // namespace anant
