#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "flora/error.hpp"
#include "flora/experiment.hpp"

using namespace flora;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "flora_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

json tiny_config() {
  return json::parse(R"({
    "dataset": {"synthetic": {"name": "tiny", "n": 400, "informative": 2, "noise_features": 1,
                               "separation": 1.0, "label_noise": 0.1, "seed": 3}},
    "partition": {"scheme": "iid_random", "p": 2},
    "learner": "logreg",
    "T": 6,
    "centralized_hpo_budget": 6,
    "pool_budget": 128,
    "diagnostics": {"projections": 10},
    "seeds": {"experiment": 11}
  })");
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("csv ingestion") {
    const auto d = ingest_csv(temp_file("three.csv", "1,2,0\n3,4,1\n5,6,0\n"));
    CHECK(d.rows() == 3);
    CHECK(d.n_features == 2);
    CHECK(d.name == "three");
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    const auto h = ingest_csv(temp_file("header.csv", "a,b,label\n1,2,1\n3,4,0\n"));
    CHECK(h.rows() == 2);
    try {
      ingest_csv(temp_file("label2.csv", "1,2,0\n3,4,2\n"));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    try {
      ingest_csv(temp_file("cells.csv", "1,2,0\n3,x,1\n5,6,0\n7,8\n"));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("2 4") != std::string::npos);
    }
    CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv"), ValidationError);
  }

  TEST_CASE("csv round trip") {
    SyntheticSpec s;
    s.n = 50;
    s.informative = 3;
    s.seed = 4;
    const auto d = make_blobs(s);
    const auto path = std::filesystem::temp_directory_path() / "flora_tests" / "rt.csv";
    write_csv(d, path);
    const auto back = ingest_csv(path);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
  }

  TEST_CASE("config validation names the field") {
    auto bad = [](json j) {
      try {
        ExperimentConfig::from_json(j);
      } catch (const ValidationError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    auto base = tiny_config();
    auto j = base;
    j["colour"] = 1;
    CHECK(bad(j).find("colour") != std::string::npos);
    j = base;
    j.erase("dataset");
    CHECK(bad(j).find("dataset") != std::string::npos);
    j = base;
    j["T_prime"] = 7;
    CHECK(bad(j).find("T_prime") != std::string::npos);
    j = base;
    j["learner"] = "gbdt";
    j["final_mode"] = "fedavg_logreg";
    CHECK(bad(j).find("fedavg") != std::string::npos);
    j = base;
    j["sweep"] = {{"param", "beta"}, {"values", {1}}};
    CHECK(bad(j).find("sweep") != std::string::npos);
    j = base;
    j["T"] = "many";
    CHECK(bad(j).find("'T'") != std::string::npos);
  }

  TEST_CASE("default baseline clamps l2 into the log range") {
    const auto space = gbdt_space();
    const auto p = default_baseline(LearnerKind::kGbdt, space);
    const auto j = space.point_to_json(p);
    CHECK(j["max_iter"] == 100);
    CHECK(j["min_samples_leaf"] == 20);
    CHECK(j["learning_rate"].get<double>() == doctest::Approx(0.1));
    CHECK(j["l2_regularization"].get<double>() == doctest::Approx(1e-4));
  }

  TEST_CASE("canonical dump sorts keys and rounds floats") {
    const json j{{"zeta", 0.1 + 0.2}, {"alpha", {1.0 / 3.0, 12345678.9, -0.0, 7}}, {"mid", "x"}};
    CHECK(canonical_dump(j) ==
          "{\n  \"alpha\": [\n    0.333333,\n    12345700.0,\n    0.0,\n    7\n  ],\n  \"mid\": \"x\",\n  \"zeta\": 0.3\n}\n");
  }

  TEST_CASE("single-row report and byte-identical reruns") {
    const auto cfg = ExperimentConfig::from_json(tiny_config());
    const auto report = run_experiment(cfg);
    CHECK(report["rows"].size() == 1);
    const auto& row = report["rows"][0];
    CHECK(row["per_surface"].size() == 4);
    CHECK(row["w1_matrix"].size() == 2);
    CHECK(row["comm_bytes"].get<std::size_t>() ==
          row["payload_bytes"][0].get<std::size_t>() + row["payload_bytes"][1].get<std::size_t>());
    CHECK(!report.contains("wall_clock_seconds"));
    const auto again = run_experiment(cfg);
    CHECK(canonical_dump(report) == canonical_dump(again));
    const auto path = std::filesystem::temp_directory_path() / "flora_tests" / "report.json";
    emit_report(report, path);
    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == canonical_dump(report));
  }

  TEST_CASE("party-count sweep yields one row per value") {
    auto j = tiny_config();
    j["dataset"]["synthetic"]["n"] = 800;
    j["sweep"] = {{"param", "p"}, {"values", {3, 6, 10}}};
    j["surface"] = {{"modes", {"SGM", "APLM"}}};
    const auto report = run_experiment(ExperimentConfig::from_json(j));
    REQUIRE(report["rows"].size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(report["rows"][i]["p"] == j["sweep"]["values"][i]);
      CHECK(report["rows"][i]["per_surface"].size() == 2);
      CHECK(report["rows"][i]["party_best_losses"].size() == j["sweep"]["values"][i].get<std::size_t>());
    }
  }

  TEST_CASE("no headroom leaves the regret empty") {
    auto j = tiny_config();
    // The logreg learner ignores a dimension it does not know, so every
    // configuration trains the same model and a_star equals the baseline.
    j["space"] = json::array({{{"name", "unused"}, {"type", "real"}, {"space", "linear"}, {"range", {0, 1}}}});
    j["baseline_theta"] = {{"unused", 0.5}};
    const auto report = run_experiment(ExperimentConfig::from_json(j));
    const auto& row = report["rows"][0];
    CHECK(row["headroom"] == false);
    CHECK(row["status"] == "no headroom");
    CHECK(row["per_surface"]["APLM"]["relative_regret"].is_null());
    CHECK(row["per_surface"]["APLM"]["metric"] == row["baseline_metric"]);
  }

  TEST_CASE("a configuration scoring the baseline metric has regret one") {
    CHECK(relative_regret({0.91, 0.83, 0.83}) == 1.0);
  }
}
