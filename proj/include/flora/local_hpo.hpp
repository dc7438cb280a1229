#pragma once

// Per-party asynchronous HPO producing the (HP, loss) log a party ships to
// the aggregator, and the JSON-lines wire format of that log.

#include <functional>
#include <string>
#include <vector>

#include "flora/hp_space.hpp"
#include "flora/regressors.hpp"
#include "flora/rng.hpp"

namespace flora {

struct TrialRecord {
  HpPoint point;
  double loss = 0.0;
  int t = 0;  // 1-based trial index
  // Objective returned a non-finite value; loss was clamped to 1.
  bool clamped = false;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct TrialSet {
  int party_id = 0;
  std::vector<TrialRecord> records;

  double best_loss() const;
  const TrialRecord& best() const;

  friend bool operator==(const TrialSet&, const TrialSet&) = default;
};

enum class Strategy { kRandom, kSurrogate };

Strategy parse_strategy(const std::string& s);
std::string to_string(Strategy s);

struct HpoOptions {
  Strategy strategy = Strategy::kSurrogate;
  // <= 0 selects max(5, ceil(T / 5)).
  int n_init = 0;
  int pool_size = 512;
  double xi = 0.01;
  GpParams gp;
};

using Objective = std::function<double(const HpPoint&)>;

// Evaluates `objective` exactly T times. The surrogate strategy standardizes
// the observed losses, fits a GP on encoded points and picks, from a fresh
// pool of random candidates, the untried one with maximal expected
// improvement over the best loss so far.
TrialSet run_local_hpo(const HpSpace& space, const Objective& objective, int T,
                       const HpoOptions& options, Seed seed, int party_id = 0);

// Expected improvement for minimization at predictive (mean, stddev).
double expected_improvement(double mean, double stddev, double best, double xi);

// The T' lowest-loss records (ties by lower trial index), re-indexed 1..T'.
TrialSet truncate_best(const TrialSet& trials, int t_prime);

// One JSON object per line: {"party_id", "t", "theta": {name: value}, "loss"},
// plus "clamped": true on flagged records.
std::string to_jsonl(const TrialSet& trials, const HpSpace& space);
TrialSet from_jsonl(const std::string& payload, const HpSpace& space);

}  // namespace flora
