#pragma once

// Config-driven experiment driver: dataset loading, holdout split, the
// centralized reference run, the federated run per sweep row and surface mode, and the
// canonical JSON report.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/diagnostics.hpp"
#include "flora/federation.hpp"
#include "json.hpp"

namespace flora {

struct Sweep {
  std::string param;  // "p", "T" or "T_prime"
  std::vector<int> values;
};

struct ExperimentConfig {
  nlohmann::json dataset;  // csv path string, {"csv": path} or {"synthetic": {...}}
  std::filesystem::path base_dir;  // relative csv paths resolve against this
  double holdout_frac = 0.2;
  PartitionScheme scheme = PartitionScheme::kIid;
  int p = 3;
  double beta = 1.0;
  std::optional<Seed> partition_seed;
  LearnerKind learner = LearnerKind::kGbdt;
  HpSpace space = gbdt_space();
  int T = 100;
  std::optional<int> t_prime;
  Strategy strategy = Strategy::kSurrogate;
  std::vector<SurfaceMode> modes = all_surface_modes();
  double alpha = 1.0;
  FinalMode final_mode = FinalMode::kPooledEmulation;
  int fedavg_rounds = 20;
  int cv_folds = 5;
  int pool_budget = 4096;
  int centralized_hpo_budget = 200;
  HpPoint baseline_theta;
  std::optional<Sweep> sweep;
  Seed seed = 0;
  double beta_tilde = 1.0;
  int projections = 50;
  double rho = 2.0;
  int parallel = 1;
  bool timing = false;

  // Throws ValidationError naming the offending field.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

// Default baseline configuration of a learner inside its default space.
HpPoint default_baseline(LearnerKind learner, const HpSpace& space);

PartyDataset load_dataset(const ExperimentConfig& config);

nlohmann::json run_experiment(const ExperimentConfig& config);

// Sorted keys, every float rounded to 6 significant digits, two-space
// indent, trailing newline.
std::string canonical_dump(const nlohmann::json& report);
void emit_report(const nlohmann::json& report, const std::filesystem::path& path);

}  // namespace flora
