#include <cstdio>
#include <fstream>

#include "anant/checkpoint.hpp"
#include "anant/config.hpp"
#include "anant/error.hpp"
#include "doctest.h"

using namespace anant;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "problem": {"name": "poisson", "d": 6},
    "model": {"widths": [6], "r": 2},
    "sampling": {"N_C": 4, "N_B": 3, "num_boundary_grids": 2, "seed": 3},
    "train": {"stages": [{"optimizer": "adamw", "lr": 0.001, "iterations": 3, "sampling_frequency": 2}]}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults fill unspecified fields") {
  const RunConfig c = parse_config(minimal_doc());
  CHECK(c.train.problem.kind == ProblemKind::Poisson);
  CHECK(c.train.problem.d == 6);
  CHECK(c.train.B == 3);
  CHECK(c.train.lambda_b == 15.0);
  CHECK(c.train.lambda_r == 1.0);
  CHECK(c.train.seed == 3);
  CHECK(c.train.sampling.num_initial_grids == 0);
  CHECK(c.eval.n_test == 10000);
  CHECK(c.eval.n_seeds == 10);
  CHECK(c.train.stages.size() == 1);
  json heat = minimal_doc();
  heat["problem"]["name"] = "heat";
  CHECK(parse_config(heat).train.sampling.num_initial_grids == 1);
  json lb = minimal_doc();
  lb["train"]["stages"] = json::array({{{"optimizer", "lbfgs"}, {"iterations", 2}}});
  CHECK(parse_config(lb).train.stages[0].learning_rate == 1e-2);
}

TEST_CASE("serialization round trip") {
  json doc = minimal_doc();
  doc["model"]["kind"] = "kan";
  doc["model"]["basis"] = "fourier";
  doc["model"]["k"] = 2;
  doc["eval"] = {{"slices", {{0, 2, 4}}}};
  const RunConfig a = parse_config(doc);
  const RunConfig b = parse_config(to_json(a));
  CHECK(same_config(a, b));
  CHECK(to_json(a) == to_json(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(b.eval.slices == std::vector<std::vector<int>>{{0, 2, 4}});
}

TEST_CASE("unknown keys and missing fields are named") {
  json doc = minimal_doc();
  doc["model"]["depth"] = 3;
  CHECK(error_of(doc).find("model.depth") != std::string::npos);
  doc = minimal_doc();
  doc["extra"] = 1;
  CHECK(error_of(doc).find("config.extra") != std::string::npos);
  doc = minimal_doc();
  doc["problem"].erase("d");
  CHECK(error_of(doc).find("problem.d") != std::string::npos);
  doc = minimal_doc();
  doc["problem"].erase("name");
  CHECK(error_of(doc).find("problem.name") != std::string::npos);
  doc = minimal_doc();
  doc["sampling"]["N_C"] = "many";
  CHECK(error_of(doc).find("sampling.N_C") != std::string::npos);
  doc = minimal_doc();
  doc["train"]["stages"][0]["iterations"] = 0;
  CHECK_FALSE(error_of(doc).empty());
  doc = minimal_doc();
  doc["problem"]["transient"] = true;
  CHECK(error_of(doc).find("transient") != std::string::npos);
}

TEST_CASE("overrides") {
  json doc = minimal_doc();
  apply_override(doc, "sampling.N_C=7");
  apply_override(doc, "problem.residual_scaling=d_over_b");
  apply_override(doc, "model.widths=[4,4]");
  const RunConfig c = parse_config(doc);
  CHECK(c.train.sampling.n_collocation == 7);
  CHECK(c.train.residual.scaling == ResidualScaling::DOverB);
  CHECK(c.train.model.hidden_widths == std::vector<int>{4, 4});
  CHECK_THROWS_AS(apply_override(doc, "N_C=7"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "sampling.N_C"), ConfigError);
}

TEST_CASE("hash format and sensitivity") {
  const RunConfig a = parse_config(minimal_doc());
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  json doc = minimal_doc();
  apply_override(doc, "train.lambda_b=10");
  CHECK(config_hash(parse_config(doc)) != h);
  CHECK_FALSE(same_config(a, parse_config(doc)));
}

TEST_CASE("load_config reports IO and JSON errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), IoError);
  {
    std::ofstream out("bad_cfg.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config("bad_cfg.json"), ConfigError);
  std::remove("bad_cfg.json");
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (const char* kind : {"mlp", "kan"}) {
    json doc = minimal_doc();
    doc["model"]["kind"] = kind;
    doc["model"]["adaptive"] = std::string(kind) == "mlp";
    const RunConfig cfg = parse_config(doc);
    AnantModel m = build_model(cfg.train);
    m.params.values *= 1.0 / 3.0;
    save_checkpoint("test_ckpt.json", m, cfg);
    const Checkpoint ck = load_checkpoint("test_ckpt.json");
    CHECK(ck.model.params.values == m.params.values);
    CHECK(ck.model.specs == m.specs);
    CHECK(ck.model.partition == m.partition);
    CHECK(ck.model.time_network == m.time_network);
    CHECK(ck.config_hash == config_hash(cfg));
    CHECK(same_config(ck.config, cfg));
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(20, 6);
    CHECK(predict_points(ck.model, pts) == predict_points(m, pts));
    check_compatible(ck, cfg);
    std::remove("test_ckpt.json");
  }
}

TEST_CASE("checkpoint mismatches") {
  const RunConfig cfg = parse_config(minimal_doc());
  save_checkpoint("test_ckpt2.json", build_model(cfg.train), cfg);
  const Checkpoint ck = load_checkpoint("test_ckpt2.json");
  json other = minimal_doc();
  other["problem"]["d"] = 7;
  CHECK_THROWS_AS(check_compatible(ck, parse_config(other)), MismatchError);
  other = minimal_doc();
  other["problem"]["name"] = "allen_cahn";
  CHECK_THROWS_AS(check_compatible(ck, parse_config(other)), MismatchError);
  // A tampered hash is detected on load.
  std::ifstream in("test_ckpt2.json");
  json doc = json::parse(in);
  in.close();
  doc["config_hash"] = "0000000000000000";
  std::ofstream("test_ckpt2.json") << doc.dump();
  CHECK_THROWS_AS(load_checkpoint("test_ckpt2.json"), MismatchError);
  std::remove("test_ckpt2.json");
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.json"), IoError);
}
