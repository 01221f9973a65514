#include "anant/checkpoint.hpp"

#include <fstream>

#include "anant/error.hpp"

namespace anant {

using nlohmann::json;

json spec_to_json(const BodySpec& spec) {
  if (const auto* m = std::get_if<MlpSpec>(&spec))
    return {{"kind", "mlp"},
            {"input_dim", m->input_dim},
            {"widths", m->hidden_widths},
            {"r", m->embedding_dim},
            {"activation", to_string(m->activation)},
            {"adaptive", m->adaptive},
            {"scale_n", m->scale_n}};
  const auto& k = std::get<KanSpec>(spec);
  return {{"kind", "kan"},
          {"input_dim", k.input_dim},
          {"widths", k.hidden_widths},
          {"r", k.embedding_dim},
          {"basis", to_string(k.basis)},
          {"k", k.order},
          {"G", k.grid_size},
          {"strict", k.strict}};
}

BodySpec spec_from_json(const json& j) {
  if (j.at("kind") == "mlp") {
    MlpSpec m;
    m.input_dim = j.at("input_dim");
    m.hidden_widths = j.at("widths").get<std::vector<int>>();
    m.embedding_dim = j.at("r");
    m.activation = parse_activation(j.at("activation"));
    m.adaptive = j.at("adaptive");
    m.scale_n = j.at("scale_n");
    return m;
  }
  KanSpec k;
  k.input_dim = j.at("input_dim");
  k.hidden_widths = j.at("widths").get<std::vector<int>>();
  k.embedding_dim = j.at("r");
  k.basis = parse_kan_basis(j.at("basis"));
  k.order = j.at("k");
  k.grid_size = j.at("G");
  k.strict = j.at("strict");
  return k;
}

void save_checkpoint(const std::string& path, const AnantModel& model, const RunConfig& config) {
  json specs = json::array();
  for (const auto& s : model.specs) specs.push_back(spec_to_json(s));
  std::vector<double> values(model.params.values.data(), model.params.values.data() + model.params.values.size());
  json doc = {{"format", "anant-checkpoint"},
              {"version", 1},
              {"config_hash", config_hash(config)},
              {"config", to_json(config)},
              {"specs", specs},
              {"partition", model.partition},
              {"time_network", model.time_network ? json(*model.time_network) : json(nullptr)},
              {"params", values}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path);
  Checkpoint ck;
  try {
    const json doc = json::parse(in);
    if (doc.value("format", "") != "anant-checkpoint") throw IoError(path + " is not a checkpoint");
    ck.config = parse_config(doc.at("config"));
    ck.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& s : doc.at("specs")) ck.model.specs.push_back(spec_from_json(s));
    ck.model.partition = doc.at("partition").get<Partition>();
    if (!doc.at("time_network").is_null()) ck.model.time_network = doc.at("time_network").get<int>();
    for (std::size_t i = 0; i < ck.model.specs.size(); ++i)
      ck.model.params.layout.append(layout_for(ck.model.specs[i]), static_cast<int>(i));
    const auto values = doc.at("params").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != ck.model.params.layout.total())
      throw MismatchError("checkpoint parameter count does not match its specs");
    ck.model.params.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint " + path + ": " + e.what());
  }
  ck.model.validate();
  if (ck.config_hash != config_hash(ck.config)) throw MismatchError("checkpoint config hash does not match its config");
  return ck;
}

void check_compatible(const Checkpoint& ck, const RunConfig& config) {
  const TrainConfig& t = config.train;
  const Problem& a = ck.config.train.problem;
  if (a.kind != t.problem.kind)
    throw MismatchError("checkpoint was trained for problem '" + to_string(a.kind) + "', config asks for '" +
                        to_string(t.problem.kind) + "'");
  if (a.d != t.problem.d)
    throw MismatchError("checkpoint was trained with d = " + std::to_string(a.d) + ", config has d = " +
                        std::to_string(t.problem.d));
  if (ck.model.coords() != t.problem.coords())
    throw MismatchError("checkpoint model coordinates do not match the config");
}

}  // namespace anant
