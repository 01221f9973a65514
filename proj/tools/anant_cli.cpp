// Command-line front end. Uses only the C interface of libanant.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anant/anant.h"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string checkpoint;
  std::vector<std::string> overrides;
  long long seed = -1;
  bool multi_seed = false;
  std::string study;
};

int fail(anant_status s) {
  std::fprintf(stderr, "anant: %s: %s\n", anant_status_string(s), anant_last_error());
  return 1;
}

int thread_count() {
  const char* env = std::getenv("ANANT_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

/// Loads --config (or nothing when absent) and applies --seed/--override.
anant_status load_config(const Options& o, anant_config** cfg) {
  *cfg = nullptr;
  if (o.config.empty()) return ANANT_OK;
  anant_status s = anant_config_load(o.config.c_str(), cfg);
  if (s != ANANT_OK) return s;
  for (const auto& ov : o.overrides)
    if ((s = anant_config_override(*cfg, ov.c_str())) != ANANT_OK) return s;
  if (o.seed >= 0) s = anant_config_set_seed(*cfg, static_cast<uint64_t>(o.seed));
  return s;
}

int cmd_train(const Options& o) {
  anant_config* cfg = nullptr;
  anant_status s = load_config(o, &cfg);
  if (s != ANANT_OK) return fail(s);
  anant_train_summary sum{};
  s = anant_train(cfg, o.out.c_str(), nullptr, &sum);
  anant_config_free(cfg);
  if (s != ANANT_OK) return fail(s);
  std::printf("iterations %ld\nfinal_total_loss %.10g\nrel_l2_percent %.10g\nwall_seconds %.6f\n", sum.iterations,
              sum.final_total_loss, sum.rel_l2_percent, sum.wall_seconds);
  return 0;
}

int cmd_eval(const Options& o) {
  anant_config* cfg = nullptr;
  anant_status s = load_config(o, &cfg);
  if (s != ANANT_OK) return fail(s);
  if (o.multi_seed) {
    double mean = 0.0, sd = 0.0;
    s = anant_multi_seed(cfg, thread_count(), o.out.c_str(), &mean, &sd);
    anant_config_free(cfg);
    if (s != ANANT_OK) return fail(s);
    std::printf("rel_l2_percent_mean %.10g\nrel_l2_percent_std %.10g\n", mean, sd);
    return 0;
  }
  anant_model* model = nullptr;
  s = anant_model_load(o.checkpoint.c_str(), &model);
  if (s == ANANT_OK && !o.overrides.empty() && !cfg) {
    std::fprintf(stderr, "anant: --override needs --config\n");
    s = ANANT_ERR_INVALID_ARGUMENT;
  }
  double err = 0.0;
  if (s == ANANT_OK) s = anant_eval(model, cfg, o.out.c_str(), &err);
  anant_model_free(model);
  anant_config_free(cfg);
  if (s != ANANT_OK) return fail(s);
  std::printf("rel_l2_percent %.10g\n", err);
  return 0;
}

int cmd_study(const Options& o) {
  anant_config* cfg = nullptr;
  anant_status s = load_config(o, &cfg);
  if (s == ANANT_OK) s = anant_study(cfg, o.study.c_str(), o.out.c_str());
  anant_config_free(cfg);
  if (s != ANANT_OK) return fail(s);
  std::printf("study %s written to %s\n", o.study.c_str(), o.out.c_str());
  return 0;
}

int cmd_slice(const Options& o) {
  anant_config* cfg = nullptr;
  anant_status s = load_config(o, &cfg);
  anant_model* model = nullptr;
  if (s == ANANT_OK) s = anant_model_load(o.checkpoint.c_str(), &model);
  int files = 0;
  if (s == ANANT_OK) s = anant_slice(model, cfg, o.out.c_str(), &files);
  anant_model_free(model);
  anant_config_free(cfg);
  if (s != ANANT_OK) return fail(s);
  std::printf("slices_written %d\n", files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separable tensor-product neural solver for high-dimensional PDEs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Override sampling.seed");
    sub->add_option("--override", o.overrides, "section.key=value (repeatable)");
  };

  auto* train = app.add_subcommand("train", "Train a model and write checkpoint, log and summary");
  train->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  add_common(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint, or run the multi-seed protocol");
  eval->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  auto* ck = eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate")->check(CLI::ExistingFile);
  auto* ms = eval->add_flag("--multi-seed", o.multi_seed, "Train and evaluate eval.n_seeds seeds from --config");
  ms->excludes(ck);
  add_common(eval);

  auto* study = app.add_subcommand("study", "Run an experiment: precond, sensitivity or scaling");
  study->add_option("kind", o.study, "Study kind")->required()->check(CLI::IsMember({"precond", "sensitivity", "scaling"}));
  study->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  add_common(study);

  auto* slice = app.add_subcommand("slice", "Export absolute-error slices of a checkpoint");
  slice->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  slice->add_option("--config", o.config, "Run configuration overriding the checkpoint's")->check(CLI::ExistingFile);
  add_common(slice);

  CLI11_PARSE(app, argc, argv);

  if (*train) return cmd_train(o);
  if (*eval) {
    if (o.multi_seed ? o.config.empty() : o.checkpoint.empty()) {
      std::fprintf(stderr, "anant: eval needs --checkpoint, or --multi-seed with --config\n");
      return 2;
    }
    return cmd_eval(o);
  }
  if (*study) return cmd_study(o);
  return cmd_slice(o);
}
