// flora: experiment driver.
//
//   flora run <config.json> [--out report.json] [--seed N] [--parallel K] [--timing]
//   flora synth <spec.json> [--out data.csv]
//   flora check [--all] [--only N]...
//
// Exit codes: 0 ok, 1 validation error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "acceptance/criteria.hpp"
#include "flora/error.hpp"
#include "flora/experiment.hpp"

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw flora::ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw flora::ValidationError(path.string() + ": " + e.what());
  }
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
            std::optional<int> parallel, bool timing) {
  const std::filesystem::path path(config_path);
  auto config = flora::ExperimentConfig::from_json(read_json(path), path.parent_path());
  if (seed) config.seed = *seed;
  if (parallel) {
    if (*parallel < 1) throw flora::ValidationError("--parallel must be >= 1");
    config.parallel = *parallel;
  }
  config.timing = timing;
  flora::emit_report(flora::run_experiment(config), out);
  if (out != "-") std::fprintf(stderr, "report written to %s\n", out.c_str());
  return 0;
}

int cmd_synth(const std::string& spec_path, std::string out) {
  const auto spec = flora::SyntheticSpec::from_json(read_json(spec_path));
  if (out.empty()) out = spec.name + ".csv";
  flora::write_csv(flora::make_blobs(spec), out);
  std::fprintf(stderr, "%zu rows written to %s\n", spec.n, out.c_str());
  return 0;
}

int cmd_check(bool all, const std::vector<int>& only) {
  std::vector<int> ids = only;
  if (ids.empty())
    for (int id : flora::acceptance::criterion_ids())
      if (all || !flora::acceptance::is_slow(id)) ids.push_back(id);
  bool ok = true;
  for (int id : ids) {
    const auto r = flora::acceptance::run_criterion(id);
    std::cout << flora::acceptance::format(r) << std::endl;
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-shot federated hyper-parameter optimization simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config and emit a JSON report");
  std::string config_path;
  std::string out = "report.json";
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
  bool timing = false;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out, "Report path, '-' for stdout");
  run->add_option("--seed", seed, "Override seeds.experiment");
  run->add_option("--parallel", parallel, "Worker threads for the party phase");
  run->add_flag("--timing", timing, "Add wall_clock_seconds to the report");

  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-blob dataset as CSV");
  std::string spec_path;
  std::string synth_out;
  synth->add_option("spec", spec_path, "Synthetic dataset spec (JSON)")->required();
  synth->add_option("--out", synth_out, "CSV path (default <name>.csv)");

  auto* check = app.add_subcommand("check", "Run the oracle and acceptance suites");
  bool all = false;
  std::vector<int> only;
  check->add_flag("--all", all, "Include the long end-to-end criteria");
  check->add_option("--only", only, "Run only the given criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, out, seed, parallel, timing);
    if (*synth) return cmd_synth(spec_path, synth_out);
    if (*check) return cmd_check(all, only);
  } catch (const flora::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
