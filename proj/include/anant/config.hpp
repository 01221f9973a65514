#pragma once

// On-disk run configuration (JSON with sections problem, model, sampling,
// train, eval, study), overrides of the form section.key=value, and the
// configuration hash stamped on every output.

#include <string>
#include <vector>

#include "json.hpp"

#include "anant/train.hpp"

namespace anant {

struct EvalOptions {
  int n_test = 10000;
  int n_seeds = 10;
  int slice_resolution = 50;
  std::vector<std::vector<int>> slices;  // coordinate triples
  bool operator==(const EvalOptions&) const = default;
};

struct StudyOptions {
  // Preconditioning study.
  int precond_iterations = 1000;
  double precond_gd_lr = 1e-3;
  double precond_qn_lr = 1.0;
  // Sensitivity sweep.
  std::string sweep_axis = "boundary_volume";
  std::vector<int> sweep_values;
  // Runtime scaling.
  std::vector<int> scaling_dims{6, 30, 60};
  int scaling_iterations = 50;
  int scaling_warmup = 5;
  bool operator==(const StudyOptions&) const = default;
};

struct RunConfig {
  TrainConfig train;
  EvalOptions eval;
  StudyOptions study;
};

/// Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Sets doc[section][key] from "section.key=value"; the value is read as
/// JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

bool same_config(const RunConfig& a, const RunConfig& b);

}  // namespace anant
