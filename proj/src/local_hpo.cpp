#include "flora/local_hpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "flora/error.hpp"

namespace flora {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

TrialRecord evaluate(const Objective& objective, HpPoint point, int t) {
  TrialRecord r{std::move(point), 0.0, t, false};
  const double loss = objective(r.point);
  if (std::isfinite(loss)) {
    r.loss = loss;
  } else {
    r.loss = 1.0;
    r.clamped = true;
  }
  return r;
}

}  // namespace

double TrialSet::best_loss() const { return best().loss; }

const TrialRecord& TrialSet::best() const {
  if (records.empty()) throw ValidationError("trial set of party " + std::to_string(party_id) + " is empty");
  return *std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.loss < b.loss || (a.loss == b.loss && a.t < b.t);
  });
}

Strategy parse_strategy(const std::string& s) {
  if (s == "random") return Strategy::kRandom;
  if (s == "surrogate" || s == "bo") return Strategy::kSurrogate;
  throw ValidationError("unknown strategy '" + s + "' (expected random or surrogate)");
}

std::string to_string(Strategy s) { return s == Strategy::kRandom ? "random" : "surrogate"; }

double expected_improvement(double mean, double stddev, double best, double xi) {
  const double improvement = best - mean - xi;
  if (stddev <= 0.0) return std::max(improvement, 0.0);
  const double z = improvement / stddev;
  const double cdf = 0.5 * std::erfc(-z * kInvSqrt2);
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  return improvement * cdf + stddev * pdf;
}

TrialSet run_local_hpo(const HpSpace& space, const Objective& objective, int T,
                       const HpoOptions& options, Seed seed, int party_id) {
  if (T < 1) throw ValidationError("local_hpo: T must be at least 1");
  if (options.pool_size < 1) throw ValidationError("local_hpo: pool_size must be at least 1");
  Rng rng(seed);
  TrialSet out{party_id, {}};
  out.records.reserve(static_cast<std::size_t>(T));

  const int n_init = options.strategy == Strategy::kRandom
                         ? T
                         : (options.n_init > 0 ? options.n_init : std::max(5, (T + 4) / 5));

  std::set<std::vector<double>> tried;
  for (int t = 1; t <= T; ++t) {
    if (t <= n_init) {
      auto p = sample(space, rng);
      tried.insert(p.values);
      out.records.push_back(evaluate(objective, std::move(p), t));
      continue;
    }

    Design design;
    double mean = 0.0;
    for (const auto& r : out.records) mean += r.loss;
    mean /= static_cast<double>(out.records.size());
    double var = 0.0;
    for (const auto& r : out.records) var += (r.loss - mean) * (r.loss - mean);
    double scale = std::sqrt(var / static_cast<double>(out.records.size()));
    if (!(scale > 1e-12)) scale = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : out.records) {
      const double z = (r.loss - mean) / scale;
      design.add(space.encode(r.point), z);
      best = std::min(best, z);
    }
    const auto gp = fit_gp(design, options.gp);

    HpPoint chosen;
    double chosen_ei = -1.0;
    HpPoint fallback;
    for (int c = 0; c < options.pool_size; ++c) {
      auto cand = sample(space, rng);
      if (c == 0) fallback = cand;
      if (tried.contains(cand.values)) continue;
      const auto pred = gp.predict(space.encode(cand));
      const double ei = expected_improvement(pred.mean, pred.stddev, best, options.xi);
      if (ei > chosen_ei) {
        chosen_ei = ei;
        chosen = std::move(cand);
      }
    }
    // Every candidate already tried: only possible on tiny discrete spaces.
    if (chosen_ei < 0.0) chosen = std::move(fallback);
    tried.insert(chosen.values);
    out.records.push_back(evaluate(objective, std::move(chosen), t));
  }
  return out;
}

TrialSet truncate_best(const TrialSet& trials, int t_prime) {
  if (t_prime < 1 || static_cast<std::size_t>(t_prime) > trials.records.size())
    throw ValidationError("truncate_best: T' = " + std::to_string(t_prime) + " outside [1, " +
                          std::to_string(trials.records.size()) + "]");
  std::vector<TrialRecord> sorted = trials.records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.loss < b.loss || (a.loss == b.loss && a.t < b.t);
  });
  sorted.resize(static_cast<std::size_t>(t_prime));
  for (std::size_t i = 0; i < sorted.size(); ++i) sorted[i].t = static_cast<int>(i) + 1;
  return TrialSet{trials.party_id, std::move(sorted)};
}

std::string to_jsonl(const TrialSet& trials, const HpSpace& space) {
  std::string out;
  for (const auto& r : trials.records) {
    nlohmann::json j{{"party_id", trials.party_id},
                     {"t", r.t},
                     {"theta", space.point_to_json(r.point)},
                     {"loss", r.loss}};
    if (r.clamped) j["clamped"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TrialSet from_jsonl(const std::string& payload, const HpSpace& space) {
  TrialSet out;
  std::istringstream in(payload);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("jsonl: line " + std::to_string(line_no) + ": " + e.what());
    }
    const int party = j.at("party_id").get<int>();
    if (out.records.empty()) out.party_id = party;
    if (party != out.party_id)
      throw ValidationError("jsonl: line " + std::to_string(line_no) + " mixes party ids");
    TrialRecord r{space.point_from_json(j.at("theta")), j.at("loss").get<double>(),
                  j.at("t").get<int>(), j.value("clamped", false)};
    if (r.t != static_cast<int>(out.records.size()) + 1)
      throw ValidationError("jsonl: line " + std::to_string(line_no) + " breaks the 1..T trial index sequence");
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace flora
