#include "flora/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flora/error.hpp"

namespace flora {
namespace {

struct Atom {
  double x;
  double wf;
  double wg;
};

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> project(const PartyDataset& d, const std::vector<double>& dir) {
  std::vector<double> out(d.rows());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto row = d.row(r);
    double s = 0.0;
    for (std::size_t f = 0; f < dir.size(); ++f) s += row[f] * dir[f];
    out[r] = s;
  }
  return out;
}

std::vector<std::vector<double>> directions(std::size_t dims, int count, Seed seed) {
  if (count < 1) throw ValidationError("sliced_w1: need at least one projection");
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  while (out.size() < static_cast<std::size_t>(count)) {
    std::vector<double> u(dims);
    double norm = 0.0;
    for (auto& v : u) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) continue;
    for (auto& v : u) v /= norm;
    out.push_back(std::move(u));
  }
  return out;
}

double sliced_with(const PartyDataset& a, const PartyDataset& b,
                   const std::vector<std::vector<double>>& dirs) {
  double s = 0.0;
  for (const auto& u : dirs) s += wasserstein_1d(project(a, u), project(b, u));
  return s / static_cast<double>(dirs.size());
}

// Slope estimate of `pred` over `points`: max |f(a) - f(b)| / d(a, b).
double lipschitz_estimate(const HpSpace& space, const std::vector<HpPoint>& points,
                          const std::vector<double>& pred, const DistanceParams& dp) {
  double best = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      const double d = distance(space, points[a], points[b], dp);
      if (d > 1e-9) best = std::max(best, std::abs(pred[a] - pred[b]) / d);
    }
  return best;
}

}  // namespace

double relative_regret(const RegretInputs& in) {
  if (in.a_star == in.b) throw ValidationError("relative_regret: zero gap (a_star == b)");
  return (in.a_star - in.a) / (in.a_star - in.b);
}

double gamma_p(const std::vector<double>& best_losses) {
  if (best_losses.empty()) throw ValidationError("gamma_p: no parties");
  const auto [lo, hi] = std::minmax_element(best_losses.begin(), best_losses.end());
  if (!(*hi < 1.0)) throw ValidationError("gamma_p: degenerate denominator (max best loss >= 1)");
  return (1.0 - *lo) / (1.0 - *hi);
}

double gamma_p(const std::vector<TrialSet>& trial_sets) {
  std::vector<double> best;
  best.reserve(trial_sets.size());
  for (const auto& ts : trial_sets) best.push_back(ts.best_loss());
  return gamma_p(best);
}

double wasserstein_1d(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw ValidationError("wasserstein_1d: empty sample");
  const auto wx = uniform_weights(xs.size());
  const auto wy = uniform_weights(ys.size());
  return wasserstein_1d(xs, wx, ys, wy);
}

double wasserstein_1d(const std::vector<double>& xs, const std::vector<double>& wx,
                      const std::vector<double>& ys, const std::vector<double>& wy) {
  if (xs.empty() || ys.empty()) throw ValidationError("wasserstein_1d: empty sample");
  if (xs.size() != wx.size() || ys.size() != wy.size())
    throw ValidationError("wasserstein_1d: weight count mismatch");
  const double sx = std::accumulate(wx.begin(), wx.end(), 0.0);
  const double sy = std::accumulate(wy.begin(), wy.end(), 0.0);
  if (!(sx > 0.0) || !(sy > 0.0)) throw ValidationError("wasserstein_1d: weights must sum to > 0");
  std::vector<Atom> atoms;
  atoms.reserve(xs.size() + ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (wx[i] < 0.0) throw ValidationError("wasserstein_1d: negative weight");
    atoms.push_back({xs[i], wx[i] / sx, 0.0});
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (wy[i] < 0.0) throw ValidationError("wasserstein_1d: negative weight");
    atoms.push_back({ys[i], 0.0, wy[i] / sy});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  // Integral of |F - G| over the real line.
  double f = 0.0;
  double g = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    f += atoms[k].wf;
    g += atoms[k].wg;
    total += std::abs(f - g) * (atoms[k + 1].x - atoms[k].x);
  }
  return total;
}

double sliced_w1(const PartyDataset& a, const PartyDataset& b, int projections, Seed seed) {
  if (a.n_features != b.n_features) throw ValidationError("sliced_w1: feature counts differ");
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError("sliced_w1: empty dataset");
  return sliced_with(a, b, directions(a.n_features, projections, seed));
}

std::vector<std::vector<double>> w1_matrix(const std::vector<PartyDataset>& parties,
                                           int projections, Seed seed) {
  const std::size_t p = parties.size();
  std::vector<std::vector<double>> m(p, std::vector<double>(p, 0.0));
  if (p == 0) return m;
  const auto dirs = directions(parties.front().n_features, projections, seed);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      if (parties[i].n_features != parties[j].n_features)
        throw ValidationError("w1_matrix: feature counts differ");
      m[i][j] = m[j][i] = sliced_with(parties[i], parties[j], dirs);
    }
  return m;
}

std::pair<double, double> mixture_w1_bound_check(const std::vector<MixtureComponent>& components,
                                                 std::size_t i) {
  if (i >= components.size()) throw ValidationError("mixture_w1_bound_check: index out of range");
  double wsum = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0 || c.weight > 1.0) throw ValidationError("mixture: weight outside [0, 1]");
    if (c.samples.empty()) throw ValidationError("mixture: empty component");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("mixture: weights must sum to 1");

  std::vector<double> xs;
  std::vector<double> wx;
  double rhs = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    const auto& c = components[j];
    for (double v : c.samples) {
      xs.push_back(v);
      wx.push_back(c.weight / static_cast<double>(c.samples.size()));
    }
    if (j != i) rhs += c.weight * wasserstein_1d(c.samples, components[i].samples);
  }
  const auto& ci = components[i].samples;
  const double lhs = wasserstein_1d(xs, wx, ci, uniform_weights(ci.size()));
  return {lhs, rhs};
}

BoundComponents bound_components(const SurfaceModel& surface,
                                 const std::vector<TrialSet>& trial_sets,
                                 const std::vector<std::vector<double>>& w1,
                                 const std::vector<std::size_t>& party_rows, const HpPoint& probe,
                                 const BoundOptions& options) {
  const auto& space = surface.space();
  BoundComponents out;
  out.probe = probe;

  // Groups of (points, losses) matched to the surface's regressors.
  std::vector<std::vector<const TrialRecord*>> groups;
  if (surface.per_party()) {
    if (trial_sets.size() != surface.regressor_count())
      throw ValidationError("bound_components: trial sets do not match the surface");
    for (const auto& ts : trial_sets) {
      groups.emplace_back();
      for (const auto& r : ts.records) groups.back().push_back(&r);
    }
  } else {
    groups.emplace_back();
    for (const auto& ts : trial_sets)
      for (const auto& r : ts.records) groups.back().push_back(&r);
  }

  const auto mix = surface.weights(probe);
  double n_total = 0.0;
  for (auto n : party_rows) n_total += static_cast<double>(n);

  for (std::size_t i = 0; i < groups.size(); ++i) {
    PartyBound b;
    std::vector<HpPoint> points;
    std::vector<double> pred;
    b.min_dist = std::numeric_limits<double>::infinity();
    for (const auto* r : groups[i]) {
      points.push_back(r->point);
      pred.push_back(surface.regressor_prediction(i, r->point));
      b.delta = std::max(b.delta, std::abs(r->loss - pred.back()));
      b.min_dist = std::min(b.min_dist, distance(space, probe, r->point, options.distance));
    }
    if (groups[i].empty()) b.min_dist = 0.0;
    b.lipschitz_hat = lipschitz_estimate(space, points, pred, options.distance);
    b.mix = mix[i];
    if (surface.per_party() && party_rows.size() == groups.size() && n_total > 0.0) {
      b.weight = static_cast<double>(party_rows[i]) / n_total;
    } else {
      b.weight = 1.0;
    }
    if (surface.per_party() && w1.size() == groups.size()) {
      for (std::size_t j = 0; j < groups.size(); ++j)
        if (j != i)
          b.w1_term += static_cast<double>(party_rows[j]) / n_total * w1[j][i];
    }
    b.value = options.beta_tilde * b.w1_term + 2.0 * b.lipschitz_hat * b.min_dist + b.delta;
    out.total += b.mix * b.value;
    out.parties.push_back(b);
  }
  return out;
}

BoundReport bound_report(const SurfaceModel& surface, const std::vector<TrialSet>& trial_sets,
                         const std::vector<std::vector<double>>& w1,
                         const std::vector<std::size_t>& party_rows, const HpPoint& selected,
                         const BoundOptions& options) {
  BoundReport rep;
  rep.probes.push_back(bound_components(surface, trial_sets, w1, party_rows, selected, options));
  for (const auto& ts : trial_sets)
    rep.probes.push_back(
        bound_components(surface, trial_sets, w1, party_rows, ts.best().point, options));
  double worst = 0.0;
  for (const auto& p : rep.probes) worst = std::max(worst, p.total);
  rep.rhs_value = 2.0 * worst;
  rep.caveats = {
      "beta_tilde is a user-supplied constant, not estimated from data",
      "the true-loss Lipschitz constant is replaced by the surface estimate lipschitz_hat",
      "lipschitz_hat is an empirical lower bound on the surface Lipschitz constant",
      "W1 terms are sliced estimates over features only",
      "maximum taken over the selected point and each party's best trial",
      "reported value only; never checked against the true optimality gap",
  };
  if (!surface.per_party())
    rep.caveats.push_back("single global surface: one merged entry, no W1 term");
  return rep;
}

nlohmann::json to_json(const BoundReport& report, const HpSpace& space) {
  auto party_json = [](const PartyBound& b) {
    return nlohmann::json{{"weight", b.weight},         {"delta", b.delta},
                          {"min_dist", b.min_dist},     {"lipschitz_hat", b.lipschitz_hat},
                          {"w1_term", b.w1_term},       {"mix", b.mix},
                          {"value", b.value}};
  };
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : report.probes) {
    nlohmann::json parties = nlohmann::json::array();
    for (const auto& b : p.parties) parties.push_back(party_json(b));
    probes.push_back({{"theta", space.point_to_json(p.probe)}, {"total", p.total}, {"per_party", parties}});
  }
  nlohmann::json per_party = report.probes.empty() ? nlohmann::json::array() : probes[0]["per_party"];
  return {{"per_party", per_party},
          {"probes", probes},
          {"rhs_value", report.rhs_value},
          {"caveats", report.caveats}};
}

}  // namespace flora
