#include "anant/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "anant/error.hpp"

namespace anant {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("invalid value for '" + where + "." + key + "': " + e.what());
  }
}

template <class T, class Parse>
void read_enum(const json& obj, const std::string& where, const char* key, T& out, Parse parse) {
  std::string s;
  if (!obj.contains(key)) return;
  read(obj, where, key, s);
  try {
    out = parse(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError("invalid value for '" + where + "." + key + "': " + e.what());
  }
}

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  return doc.contains(name) ? doc.at(name) : empty;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  reject_unknown(doc, "config", {"problem", "model", "sampling", "train", "eval", "study"});
  RunConfig rc;
  TrainConfig& t = rc.train;

  const json& p = section(doc, "problem");
  reject_unknown(p, "problem", {"name", "d", "box", "transient", "T", "residual_scaling"});
  if (!p.contains("name")) throw ConfigError("missing required field 'problem.name'");
  if (!p.contains("d")) throw ConfigError("missing required field 'problem.d'");
  read_enum(p, "problem", "name", t.problem.kind, parse_problem_kind);
  read(p, "problem", "d", t.problem.d);
  if (p.contains("box")) {
    std::vector<double> box;
    read(p, "problem", "box", box);
    if (box.size() != 2) throw ConfigError("'problem.box' must be [lo, hi]");
    t.problem.lo = box[0];
    t.problem.hi = box[1];
  }
  read(p, "problem", "T", t.problem.T);
  if (p.contains("transient")) {
    bool transient = false;
    read(p, "problem", "transient", transient);
    if (transient != t.problem.transient())
      throw ConfigError("'problem.transient' contradicts problem '" + to_string(t.problem.kind) + "'");
  }
  read_enum(p, "problem", "residual_scaling", t.residual.scaling, parse_residual_scaling);

  const json& m = section(doc, "model");
  reject_unknown(m, "model", {"B", "kind", "widths", "r", "activation", "adaptive", "scale_n", "basis", "k", "G",
                              "strict"});
  read(m, "model", "B", t.B);
  if (m.contains("kind")) {
    std::string kind;
    read(m, "model", "kind", kind);
    if (kind != "mlp" && kind != "kan") throw ConfigError("invalid value for 'model.kind': " + kind);
    t.model.kan = kind == "kan";
  }
  read(m, "model", "widths", t.model.hidden_widths);
  read(m, "model", "r", t.model.embedding_dim);
  read_enum(m, "model", "activation", t.model.activation, parse_activation);
  read(m, "model", "adaptive", t.model.adaptive);
  read(m, "model", "scale_n", t.model.scale_n);
  read_enum(m, "model", "basis", t.model.basis, parse_kan_basis);
  read(m, "model", "k", t.model.order);
  read(m, "model", "G", t.model.grid_size);
  read(m, "model", "strict", t.model.strict);

  const json& s = section(doc, "sampling");
  reject_unknown(s, "sampling", {"N_C", "num_collocation_grids", "N_B", "num_boundary_grids", "num_initial_grids",
                                 "seed", "axis_mode"});
  read(s, "sampling", "N_C", t.sampling.n_collocation);
  read(s, "sampling", "num_collocation_grids", t.sampling.num_collocation_grids);
  read(s, "sampling", "N_B", t.sampling.n_boundary);
  read(s, "sampling", "num_boundary_grids", t.sampling.num_boundary_grids);
  if (t.problem.transient()) t.sampling.num_initial_grids = 1;
  read(s, "sampling", "num_initial_grids", t.sampling.num_initial_grids);
  read(s, "sampling", "seed", t.seed);
  read_enum(s, "sampling", "axis_mode", t.sampling.axis_mode, parse_axis_mode);

  const json& tr = section(doc, "train");
  reject_unknown(tr, "train", {"stages", "lambda_r", "lambda_b", "reduction", "weight_decay", "lbfgs_history"});
  read(tr, "train", "lambda_r", t.lambda_r);
  read(tr, "train", "lambda_b", t.lambda_b);
  read_enum(tr, "train", "reduction", t.reduction, parse_reduction);
  read(tr, "train", "weight_decay", t.weight_decay);
  read(tr, "train", "lbfgs_history", t.lbfgs_history);
  if (tr.contains("stages")) {
    const json& stages = tr.at("stages");
    if (!stages.is_array()) throw ConfigError("'train.stages' must be a list");
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const std::string where = "train.stages[" + std::to_string(i) + "]";
      reject_unknown(stages[i], where, {"optimizer", "lr", "iterations", "sampling_frequency"});
      Stage st;
      read_enum(stages[i], where, "optimizer", st.optimizer, parse_optimizer);
      st.learning_rate = st.optimizer == OptimizerKind::Lbfgs ? 1e-2 : 1e-3;
      read(stages[i], where, "lr", st.learning_rate);
      read(stages[i], where, "iterations", st.iterations);
      read(stages[i], where, "sampling_frequency", st.sampling_frequency);
      t.stages.push_back(st);
    }
  } else {
    t.stages = {{OptimizerKind::AdamW, 1e-3, 1000, 1000}};
  }

  const json& e = section(doc, "eval");
  reject_unknown(e, "eval", {"n_test", "n_seeds", "slice_resolution", "slices"});
  read(e, "eval", "n_test", rc.eval.n_test);
  read(e, "eval", "n_seeds", rc.eval.n_seeds);
  read(e, "eval", "slice_resolution", rc.eval.slice_resolution);
  read(e, "eval", "slices", rc.eval.slices);

  const json& st = section(doc, "study");
  reject_unknown(st, "study", {"precond_iterations", "precond_gd_lr", "precond_qn_lr", "sweep_axis", "sweep_values",
                               "scaling_dims", "scaling_iterations", "scaling_warmup"});
  read(st, "study", "precond_iterations", rc.study.precond_iterations);
  read(st, "study", "precond_gd_lr", rc.study.precond_gd_lr);
  read(st, "study", "precond_qn_lr", rc.study.precond_qn_lr);
  read(st, "study", "sweep_axis", rc.study.sweep_axis);
  read(st, "study", "sweep_values", rc.study.sweep_values);
  read(st, "study", "scaling_dims", rc.study.scaling_dims);
  read(st, "study", "scaling_iterations", rc.study.scaling_iterations);
  read(st, "study", "scaling_warmup", rc.study.scaling_warmup);

  try {
    t.validate();
    if (t.model.kan) {
      KanSpec k{1, t.model.hidden_widths, t.model.embedding_dim, t.model.basis, t.model.order,
                t.model.grid_size, t.model.strict};
      k.validate();
    } else {
      MlpSpec ms{1, t.model.hidden_widths, t.model.embedding_dim, t.model.activation, t.model.adaptive,
                 t.model.scale_n};
      ms.validate();
    }
  } catch (const InvalidArgument& ex) {
    throw ConfigError(std::string("invalid configuration: ") + ex.what());
  }
  for (const auto& tri : rc.eval.slices)
    if (tri.size() != 3) throw ConfigError("'eval.slices' entries must have three coordinates");
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& rc) {
  const TrainConfig& t = rc.train;
  json stages = json::array();
  for (const auto& s : t.stages)
    stages.push_back({{"optimizer", to_string(s.optimizer)},
                      {"lr", s.learning_rate},
                      {"iterations", s.iterations},
                      {"sampling_frequency", s.sampling_frequency}});
  return {
      {"problem",
       {{"name", to_string(t.problem.kind)},
        {"d", t.problem.d},
        {"box", {t.problem.lo, t.problem.hi}},
        {"transient", t.problem.transient()},
        {"T", t.problem.T},
        {"residual_scaling", to_string(t.residual.scaling)}}},
      {"model",
       {{"B", t.B},
        {"kind", t.model.kan ? "kan" : "mlp"},
        {"widths", t.model.hidden_widths},
        {"r", t.model.embedding_dim},
        {"activation", to_string(t.model.activation)},
        {"adaptive", t.model.adaptive},
        {"scale_n", t.model.scale_n},
        {"basis", to_string(t.model.basis)},
        {"k", t.model.order},
        {"G", t.model.grid_size},
        {"strict", t.model.strict}}},
      {"sampling",
       {{"N_C", t.sampling.n_collocation},
        {"num_collocation_grids", t.sampling.num_collocation_grids},
        {"N_B", t.sampling.n_boundary},
        {"num_boundary_grids", t.sampling.num_boundary_grids},
        {"num_initial_grids", t.sampling.num_initial_grids},
        {"seed", t.seed},
        {"axis_mode", to_string(t.sampling.axis_mode)}}},
      {"train",
       {{"stages", stages},
        {"lambda_r", t.lambda_r},
        {"lambda_b", t.lambda_b},
        {"reduction", to_string(t.reduction)},
        {"weight_decay", t.weight_decay},
        {"lbfgs_history", t.lbfgs_history}}},
      {"eval",
       {{"n_test", rc.eval.n_test},
        {"n_seeds", rc.eval.n_seeds},
        {"slice_resolution", rc.eval.slice_resolution},
        {"slices", rc.eval.slices}}},
      {"study",
       {{"precond_iterations", rc.study.precond_iterations},
        {"precond_gd_lr", rc.study.precond_gd_lr},
        {"precond_qn_lr", rc.study.precond_qn_lr},
        {"sweep_axis", rc.study.sweep_axis},
        {"sweep_values", rc.study.sweep_values},
        {"scaling_dims", rc.study.scaling_dims},
        {"scaling_iterations", rc.study.scaling_iterations},
        {"scaling_warmup", rc.study.scaling_warmup}}},
  };
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  const std::string sec = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  doc[sec][key] = value;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool same_config(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

}  // namespace anant
