#include "anant/anant.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "anant/checkpoint.hpp"
#include "anant/config.hpp"
#include "anant/error.hpp"
#include "anant/eval_report.hpp"
#include "anant/train.hpp"

struct anant_config {
  nlohmann::json doc;
  anant::RunConfig cfg;
};

struct anant_model {
  anant::Checkpoint ck;
};

namespace {

using nlohmann::json;
thread_local std::string g_last_error;

template <class Fn>
anant_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ANANT_OK;
  } catch (const anant::InvalidArgument& e) {
    g_last_error = e.what();
    return ANANT_ERR_INVALID_ARGUMENT;
  } catch (const anant::ConfigError& e) {
    g_last_error = e.what();
    return ANANT_ERR_CONFIG;
  } catch (const anant::MismatchError& e) {
    g_last_error = e.what();
    return ANANT_ERR_MISMATCH;
  } catch (const anant::NumericError& e) {
    g_last_error = e.what();
    return ANANT_ERR_NUMERIC;
  } catch (const anant::IoError& e) {
    g_last_error = e.what();
    return ANANT_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ANANT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ANANT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw anant::InvalidArgument(std::string(what) + " is null");
}

std::string prepare_dir(const char* out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw anant::IoError(std::string("cannot create ") + out_dir + ": " + ec.message());
  return out_dir;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw anant::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw anant::IoError("failed writing " + path);
}

json timers_json(const anant::PhaseTimers& t) {
  return {{"boundary_sampling", t.boundary_sampling},
          {"collocation_sampling", t.collocation_sampling},
          {"loss_and_gradient", t.loss_and_gradient},
          {"optimizer_update", t.optimizer_update}};
}

json log_summary(const anant::TrainLog& log) {
  json j = {{"iterations", log.rows.size()},
            {"resample_events", log.resamples.size()},
            {"wall_seconds", log.wall_seconds},
            {"timers", timers_json(log.timers)},
            {"lbfgs_failed_searches", log.lbfgs_failed_searches}};
  if (!log.rows.empty()) {
    const auto& a = log.rows.front();
    const auto& b = log.rows.back();
    j["initial_loss"] = {{"total", a.total}, {"data", a.data}, {"residual", a.residual}};
    j["final_loss"] = {{"total", b.total}, {"data", b.data}, {"residual", b.residual}};
  }
  return j;
}

anant::RunConfig reparse(anant_config* c) {
  anant::RunConfig rc = anant::parse_config(c->doc);
  c->cfg = rc;
  return rc;
}

}  // namespace

extern "C" {

const char* anant_version(void) { return "0.1.0"; }

const char* anant_last_error(void) { return g_last_error.c_str(); }

const char* anant_status_string(anant_status s) {
  switch (s) {
    case ANANT_OK: return "ok";
    case ANANT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ANANT_ERR_CONFIG: return "configuration error";
    case ANANT_ERR_MISMATCH: return "mismatch";
    case ANANT_ERR_NUMERIC: return "numerical failure";
    case ANANT_ERR_IO: return "i/o error";
    case ANANT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

anant_status anant_config_parse(const char* json_text, anant_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    auto c = std::make_unique<anant_config>();
    c->doc = json::parse(json_text, nullptr, false);
    if (c->doc.is_discarded()) throw anant::ConfigError("config is not valid JSON");
    reparse(c.get());
    *out = c.release();
  });
}

anant_status anant_config_load(const char* path, anant_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) throw anant::IoError(std::string("cannot read config ") + path);
    auto c = std::make_unique<anant_config>();
    c->doc = json::parse(in, nullptr, false);
    if (c->doc.is_discarded()) throw anant::ConfigError(std::string("config ") + path + " is not valid JSON");
    reparse(c.get());
    *out = c.release();
  });
}

anant_status anant_config_override(anant_config* cfg, const char* assignment) {
  return guarded([&] {
    need(cfg, "cfg");
    need(assignment, "assignment");
    json doc = cfg->doc;
    anant::apply_override(doc, assignment);
    cfg->cfg = anant::parse_config(doc);
    cfg->doc = std::move(doc);
  });
}

anant_status anant_config_set_seed(anant_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->doc["sampling"]["seed"] = seed;
    reparse(cfg);
  });
}

anant_status anant_config_hash(const anant_config* cfg, char* buf, size_t len) {
  return guarded([&] {
    need(cfg, "cfg");
    need(buf, "buf");
    if (len < 17) throw anant::InvalidArgument("hash buffer needs 17 bytes");
    const std::string h = anant::config_hash(cfg->cfg);
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

anant_status anant_config_to_json(const anant_config* cfg, char* buf, size_t len, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    const std::string text = anant::to_json(cfg->cfg).dump(2);
    if (needed) *needed = text.size() + 1;
    if (buf) {
      if (len < text.size() + 1) throw anant::InvalidArgument("buffer too small for config JSON");
      std::memcpy(buf, text.c_str(), text.size() + 1);
    }
  });
}

void anant_config_free(anant_config* cfg) { delete cfg; }

anant_status anant_train(const anant_config* cfg, const char* out_dir, anant_model** out_model,
                         anant_train_summary* summary) {
  return guarded([&] {
    need(cfg, "cfg");
    const anant::RunConfig& rc = cfg->cfg;
    const std::string hash = anant::config_hash(rc);
    anant::TrainResult tr = anant::train(rc.train);
    const double err = anant::evaluate_model(tr.model, rc.train.problem, rc.eval.n_test,
                                             anant::derive_seed(rc.train.seed, anant::kTestStream));
    if (out_dir) {
      const std::string dir = prepare_dir(out_dir);
      anant::save_checkpoint(dir + "/checkpoint.json", tr.model, rc);
      tr.log.write_csv(dir + "/train_log.csv", hash);
      write_json(dir + "/summary.json", {{"config_hash", hash},
                                         {"seed", rc.train.seed},
                                         {"n_test", rc.eval.n_test},
                                         {"metrics", {{"rel_l2_percent", err}}},
                                         {"train", log_summary(tr.log)}});
    }
    if (summary) {
      const auto& last = tr.log.rows.back();
      *summary = {err, last.total, last.data, last.residual, tr.log.wall_seconds,
                  static_cast<long>(tr.log.rows.size())};
    }
    if (out_model) *out_model = new anant_model{{std::move(tr.model), rc, hash}};
  });
}

anant_status anant_model_load(const char* path, anant_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new anant_model{anant::load_checkpoint(path)};
  });
}

anant_status anant_model_save(const anant_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    anant::save_checkpoint(path, model->ck.model, model->ck.config);
  });
}

anant_status anant_model_coords(const anant_model* model, int* coords) {
  return guarded([&] {
    need(model, "model");
    need(coords, "coords");
    *coords = model->ck.model.coords();
  });
}

anant_status anant_model_predict(const anant_model* model, const double* points, size_t n, size_t coords,
                                 double* out) {
  return guarded([&] {
    need(model, "model");
    need(points, "points");
    need(out, "out");
    if (n == 0) throw anant::InvalidArgument("no points");
    if (static_cast<int>(coords) != model->ck.model.coords())
      throw anant::MismatchError("points have " + std::to_string(coords) + " coordinates, model expects " +
                                 std::to_string(model->ck.model.coords()));
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::MatrixXd pts = Eigen::Map<const RowMajor>(points, static_cast<Eigen::Index>(n),
                                                           static_cast<Eigen::Index>(coords));
    Eigen::Map<Eigen::VectorXd>(out, static_cast<Eigen::Index>(n)) = anant::predict_points(model->ck.model, pts);
  });
}

void anant_model_free(anant_model* model) { delete model; }

anant_status anant_eval(const anant_model* model, const anant_config* cfg, const char* out_dir,
                        double* rel_l2_percent) {
  return guarded([&] {
    need(model, "model");
    const anant::RunConfig& rc = cfg ? cfg->cfg : model->ck.config;
    anant::check_compatible(model->ck, rc);
    const double err = anant::evaluate_model(model->ck.model, rc.train.problem, rc.eval.n_test,
                                             anant::derive_seed(rc.train.seed, anant::kTestStream));
    if (rel_l2_percent) *rel_l2_percent = err;
    if (out_dir)
      write_json(prepare_dir(out_dir) + "/eval.json", {{"config_hash", anant::config_hash(rc)},
                                                       {"checkpoint_config_hash", model->ck.config_hash},
                                                       {"seed", rc.train.seed},
                                                       {"n_test", rc.eval.n_test},
                                                       {"metrics", {{"rel_l2_percent", err}}}});
  });
}

anant_status anant_multi_seed(const anant_config* cfg, int threads, const char* out_dir, double* mean,
                              double* std_dev) {
  return guarded([&] {
    need(cfg, "cfg");
    const anant::RunConfig& rc = cfg->cfg;
    const anant::EvalResult r = anant::multi_seed_eval(rc.train, rc.eval.n_seeds, rc.eval.n_test, threads);
    if (mean) *mean = r.mean;
    if (std_dev) *std_dev = r.std;
    if (out_dir) {
      json seeds = json::array();
      for (const auto& s : r.seeds)
        seeds.push_back({{"seed", s.seed},
                         {"rel_l2_percent", s.failed ? json(nullptr) : json(s.rel_l2_percent)},
                         {"wall_seconds", s.wall_seconds},
                         {"failed", s.failed},
                         {"error", s.error}});
      write_json(prepare_dir(out_dir) + "/multi_seed.json", {{"config_hash", anant::config_hash(rc)},
                                                             {"n_test", r.n_test},
                                                             {"n_seeds", rc.eval.n_seeds},
                                                             {"n_ok", r.n_ok},
                                                             {"std_convention", "population"},
                                                             {"metrics", {{"mean", r.mean}, {"std", r.std}}},
                                                             {"seeds", seeds}});
    }
    if (r.n_ok == 0) throw anant::NumericError("every seed failed");
  });
}

anant_status anant_study(const anant_config* cfg, const char* kind, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(kind, "kind");
    need(out_dir, "out_dir");
    const anant::RunConfig& rc = cfg->cfg;
    const std::string hash = anant::config_hash(rc);
    const std::string k = kind;
    if (k == "precond") {
      anant::PrecondOptions opt;
      opt.iterations = rc.study.precond_iterations;
      opt.sampling_frequency = rc.train.stages.front().sampling_frequency;
      opt.gd_learning_rate = rc.study.precond_gd_lr;
      opt.qn_learning_rate = rc.study.precond_qn_lr;
      const anant::PrecondResult r = anant::preconditioning_study(rc.train, opt);
      const std::string dir = prepare_dir(out_dir);
      r.gradient_descent.write_csv(dir + "/precond_gd.csv", hash);
      r.quasi_newton.write_csv(dir + "/precond_qn.csv", hash);
      const double gd = r.gradient_descent.rows.back().total, qn = r.quasi_newton.rows.back().total;
      write_json(dir + "/precond.json", {{"config_hash", hash},
                                         {"iterations", opt.iterations},
                                         {"gd_final_loss", gd},
                                         {"qn_final_loss", qn},
                                         {"qn_over_gd", qn / gd}});
    } else if (k == "sensitivity") {
      const auto axis = anant::parse_sweep_axis(rc.study.sweep_axis);
      const auto rows = anant::sensitivity_sweep(rc.train, axis, rc.study.sweep_values, rc.eval.n_test);
      anant::write_sweep_csv(prepare_dir(out_dir) + "/sweep_" + rc.study.sweep_axis + ".csv", rows, hash);
    } else if (k == "scaling") {
      const auto rows = anant::runtime_scaling_report(rc.train, rc.study.scaling_dims, rc.study.scaling_iterations,
                                                      rc.study.scaling_warmup);
      anant::write_scaling_csv(prepare_dir(out_dir) + "/scaling.csv", rows, hash);
    } else {
      throw anant::InvalidArgument("unknown study '" + k + "' (expected precond, sensitivity or scaling)");
    }
  });
}

anant_status anant_slice(const anant_model* model, const anant_config* cfg, const char* out_dir,
                         int* files_written) {
  return guarded([&] {
    need(model, "model");
    need(out_dir, "out_dir");
    const anant::RunConfig& rc = cfg ? cfg->cfg : model->ck.config;
    anant::check_compatible(model->ck, rc);
    const anant::AnantModel& m = model->ck.model;
    std::vector<std::vector<int>> slices = rc.eval.slices;
    if (slices.empty()) {
      if (m.B() != 3) throw anant::InvalidArgument("default slice needs B = 3; list eval.slices explicitly");
      slices.push_back({m.partition[0][0], m.partition[1][0], m.partition[2][0]});
    }
    const std::string dir = prepare_dir(out_dir);
    const std::string hash = anant::config_hash(rc);
    int count = 0;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      // Inactive values are drawn once per slice from a seed-derived stream.
      const Eigen::MatrixXd fixed = anant::sample_test_points(
          rc.train.problem.coords(), 1, rc.train.problem.box(),
          anant::derive_seed(anant::derive_seed(rc.train.seed, anant::kTestStream), 1000 + i));
      const Eigen::VectorXd point = fixed.row(0).transpose();
      std::string name = dir + "/slice";
      for (int c : slices[i]) name += "_" + std::to_string(c);
      anant::slice_error_export(m, rc.train.problem, slices[i], rc.eval.slice_resolution, point, name + ".csv",
                                hash);
      ++count;
    }
    if (files_written) *files_written = count;
  });
}

}  // extern "C"
