#pragma once

// Evaluation quantities (relative regret, party heterogeneity) and estimators
// for the terms of the single-shot optimality-gap bound.

#include <string>
#include <utility>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/hp_space.hpp"
#include "flora/local_hpo.hpp"
#include "flora/surface.hpp"
#include "json.hpp"

namespace flora {

struct RegretInputs {
  double a_star = 0.0;  // best centralized-HPO metric
  double b = 0.0;       // baseline metric
  double a = 0.0;       // evaluated metric
};

// (a_star - a) / (a_star - b). Throws ValidationError("zero gap") when
// a_star == b.
double relative_regret(const RegretInputs& in);

// (1 - min_i L_i) / (1 - max_i L_i) over per-party best losses.
double gamma_p(const std::vector<double>& best_losses);
double gamma_p(const std::vector<TrialSet>& trial_sets);

// Exact W1 between two empirical distributions (inputs need not be sorted).
double wasserstein_1d(std::vector<double> xs, std::vector<double> ys);
// Weighted variant; weights are normalized per side.
double wasserstein_1d(const std::vector<double>& xs, const std::vector<double>& wx,
                      const std::vector<double>& ys, const std::vector<double>& wy);

// Mean 1-D W1 of the feature rows projected on S random unit directions.
double sliced_w1(const PartyDataset& a, const PartyDataset& b, int projections, Seed seed);
// Symmetric matrix of sliced_w1 over all party pairs, one direction set.
std::vector<std::vector<double>> w1_matrix(const std::vector<PartyDataset>& parties,
                                           int projections, Seed seed);

struct MixtureComponent {
  double weight = 0.0;
  std::vector<double> samples;
};

// {W1(sum_j w_j D_j, D_i), sum_{j != i} w_j W1(D_j, D_i)} in 1-D.
std::pair<double, double> mixture_w1_bound_check(const std::vector<MixtureComponent>& components,
                                                 std::size_t i);

struct BoundOptions {
  double beta_tilde = 1.0;
  int projections = 50;
  Seed seed = 0;
  DistanceParams distance;
};

struct PartyBound {
  double weight = 0.0;         // n_i / n
  double delta = 0.0;          // max |L_t - l_i(theta_t)| over own trials
  double min_dist = 0.0;       // min_t d(probe, theta_t)
  double lipschitz_hat = 0.0;  // max finite-difference slope of l_i between trials
  double w1_term = 0.0;        // sum_{j != i} w_j W1(D_j, D_i)
  double mix = 0.0;            // surface weight a_i(probe)
  double value = 0.0;          // beta * w1_term + 2 * lipschitz_hat * min_dist + delta
};

struct BoundComponents {
  HpPoint probe;
  std::vector<PartyBound> parties;
  double total = 0.0;  // sum_i mix_i * value_i
};

// Per-party components at `probe`. Single-surface modes yield one merged
// entry (weight 1, no W1 term).
BoundComponents bound_components(const SurfaceModel& surface,
                                 const std::vector<TrialSet>& trial_sets,
                                 const std::vector<std::vector<double>>& w1,
                                 const std::vector<std::size_t>& party_rows, const HpPoint& probe,
                                 const BoundOptions& options);

struct BoundReport {
  std::vector<BoundComponents> probes;
  double rhs_value = 0.0;  // 2 * max over probes of total
  std::vector<std::string> caveats;
};

// Probes: the selected point, then every party's best trial.
BoundReport bound_report(const SurfaceModel& surface, const std::vector<TrialSet>& trial_sets,
                         const std::vector<std::vector<double>>& w1,
                         const std::vector<std::size_t>& party_rows, const HpPoint& selected,
                         const BoundOptions& options);

nlohmann::json to_json(const BoundReport& report, const HpSpace& space);

}  // namespace flora
