#include "flora/surface.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "flora/error.hpp"

namespace flora {
namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,  47,  53,  59,
                                61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137};

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::vector<Observation> observations(const TrialSet& trials) {
  std::vector<Observation> out;
  out.reserve(trials.records.size());
  for (const auto& r : trials.records) out.push_back({r.point, r.loss});
  return out;
}

}  // namespace

SurfaceMode parse_surface_mode(const std::string& s) {
  if (s == "SGM" || s == "sgm") return SurfaceMode::kSgm;
  if (s == "SGM+U" || s == "sgm+u" || s == "SGM_U" || s == "sgm_u") return SurfaceMode::kSgmU;
  if (s == "MPLM" || s == "mplm") return SurfaceMode::kMplm;
  if (s == "APLM" || s == "aplm") return SurfaceMode::kAplm;
  throw ValidationError("unknown surface mode '" + s + "' (expected SGM, SGM+U, MPLM or APLM)");
}

std::string to_string(SurfaceMode m) {
  switch (m) {
    case SurfaceMode::kSgm: return "SGM";
    case SurfaceMode::kSgmU: return "SGM+U";
    case SurfaceMode::kMplm: return "MPLM";
    case SurfaceMode::kAplm: return "APLM";
  }
  return "?";
}

std::vector<SurfaceMode> all_surface_modes() {
  return {SurfaceMode::kSgm, SurfaceMode::kSgmU, SurfaceMode::kMplm, SurfaceMode::kAplm};
}

Design make_design(const HpSpace& space, const std::vector<Observation>& samples) {
  Design d;
  d.width = space.encoded_width();
  for (const auto& s : samples) d.add(space.encode(s.point), s.loss);
  return d;
}

RfRegressor fit_rf(const HpSpace& space, const std::vector<Observation>& samples,
                   const RfParams& params, Seed seed) {
  return fit_rf(make_design(space, samples), params, seed);
}

GpRegressor fit_gp(const HpSpace& space, const std::vector<Observation>& samples,
                   const GpParams& params) {
  return fit_gp(make_design(space, samples), params);
}

namespace {

GpParams loss_scaled(GpParams params, const std::vector<Observation>& samples) {
  double mean = 0.0;
  for (const auto& s : samples) mean += s.loss;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const auto& s : samples) var += (s.loss - mean) * (s.loss - mean);
  var /= static_cast<double>(samples.size());
  if (!(var > 1e-12)) var = 1.0;
  params.signal_variance *= var;
  params.noise *= var;
  return params;
}

}  // namespace

SurfaceModel::SurfaceModel(SurfaceMode mode, HpSpace space, SurfaceOptions options,
                           std::vector<Regressor> regressors, std::vector<HpPoint> trial_points)
    : mode_(mode),
      space_(std::move(space)),
      options_(options),
      regressors_(std::move(regressors)),
      trial_points_(std::move(trial_points)) {
  if (regressors_.empty()) throw ValidationError("surface: needs at least one regressor");
  if (!per_party() && regressors_.size() != 1)
    throw ValidationError("surface: SGM and SGM+U hold exactly one global regressor");
  if (mode_ == SurfaceMode::kSgmU && !std::holds_alternative<GpRegressor>(regressors_.front()))
    throw ValidationError("surface: SGM+U needs a GP regressor");
  if (!(options_.alpha > 0.0)) throw ValidationError("surface: alpha must be > 0");
}

double SurfaceModel::predict_encoded(std::size_t i, const std::vector<double>& x) const {
  return std::visit(
      [&](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, RfRegressor>)
          return r.predict(x);
        else
          return r.predict(x).mean;
      },
      regressors_[i]);
}

double SurfaceModel::regressor_prediction(std::size_t i, const HpPoint& p) const {
  return predict_encoded(i, space_.encode(p));
}

std::vector<double> SurfaceModel::regressor_predictions(const HpPoint& p) const {
  const auto x = space_.encode(p);
  std::vector<double> out(regressors_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_encoded(i, x);
  return out;
}

double SurfaceModel::evaluate(const HpPoint& p) const {
  const auto x = space_.encode(p);
  switch (mode_) {
    case SurfaceMode::kSgm: return predict_encoded(0, x);
    case SurfaceMode::kSgmU: {
      const auto pred = std::get<GpRegressor>(regressors_.front()).predict(x);
      return pred.mean + options_.alpha * pred.stddev;
    }
    case SurfaceMode::kMplm: {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < regressors_.size(); ++i) m = std::max(m, predict_encoded(i, x));
      return m;
    }
    case SurfaceMode::kAplm: {
      double s = 0.0;
      for (std::size_t i = 0; i < regressors_.size(); ++i) s += predict_encoded(i, x);
      return s / static_cast<double>(regressors_.size());
    }
  }
  return 0.0;
}

std::vector<double> SurfaceModel::weights(const HpPoint& p) const {
  const std::size_t n = regressors_.size();
  std::vector<double> w(n, 0.0);
  if (mode_ == SurfaceMode::kAplm) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
  } else if (mode_ == SurfaceMode::kMplm) {
    const auto preds = regressor_predictions(p);
    w[static_cast<std::size_t>(std::max_element(preds.begin(), preds.end()) - preds.begin())] = 1.0;
  } else {
    w[0] = 1.0;
  }
  return w;
}

nlohmann::json SurfaceModel::descriptor() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : regressors_) {
    const auto fp = std::visit([](const auto& m) { return m.fingerprint(); }, r);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
    models.push_back(buf);
  }
  return {{"mode", to_string(mode_)},
          {"alpha", options_.alpha},
          {"local_regressor", options_.local == LocalRegressor::kRf ? "rf" : "gp"},
          {"models", std::move(models)}};
}

SurfaceModel build_surface(SurfaceMode mode, const HpSpace& space,
                           const std::vector<TrialSet>& trial_sets, Seed seed,
                           const SurfaceOptions& options) {
  if (trial_sets.empty()) throw ValidationError("surface: no trial sets");
  std::vector<HpPoint> points;
  std::vector<Observation> merged;
  for (const auto& ts : trial_sets) {
    if (ts.records.empty())
      throw ValidationError("surface: party " + std::to_string(ts.party_id) + " sent no trials");
    for (const auto& r : ts.records) {
      if (!space.contains(r.point))
        throw ValidationError("surface: party " + std::to_string(ts.party_id) +
                              " sent a point outside the search space");
      points.push_back(r.point);
      merged.push_back({r.point, r.loss});
    }
  }

  std::vector<SurfaceModel::Regressor> regs;
  switch (mode) {
    case SurfaceMode::kSgm:
      regs.emplace_back(fit_rf(space, merged, options.rf, seed));
      break;
    case SurfaceMode::kSgmU:
      regs.emplace_back(fit_gp(space, merged, loss_scaled(options.gp, merged)));
      break;
    case SurfaceMode::kMplm:
    case SurfaceMode::kAplm:
      for (std::size_t i = 0; i < trial_sets.size(); ++i) {
        const auto obs = observations(trial_sets[i]);
        if (options.local == LocalRegressor::kRf)
          regs.emplace_back(fit_rf(space, obs, options.rf, derive_seed(seed, i)));
        else
          regs.emplace_back(fit_gp(space, obs, loss_scaled(options.gp, obs)));
      }
      break;
  }
  return SurfaceModel(mode, space, options, std::move(regs), std::move(points));
}

std::vector<std::vector<double>> halton_points(std::size_t count, std::size_t dims, Seed seed) {
  if (dims > std::size(kPrimes)) throw ValidationError("halton: too many dimensions");
  Rng rng(seed);
  std::vector<double> shift(dims);
  for (auto& s : shift) s = rng.uniform();
  std::vector<std::vector<double>> out(count, std::vector<double>(dims));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < dims; ++d) {
      double u = radical_inverse(i + 1, kPrimes[d]) + shift[d];
      out[i][d] = u - std::floor(u);
    }
  return out;
}

HpPoint minimize_surface(const SurfaceModel& model, int budget, Seed seed) {
  if (budget < 1) throw ValidationError("minimize_surface: budget must be at least 1");
  const auto& space = model.space();
  const auto unit = halton_points(static_cast<std::size_t>(budget), space.size(), seed);
  HpPoint best;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const HpPoint& p) {
    const double v = model.evaluate(p);
    if (v < best_value) {
      best_value = v;
      best = p;
    }
  };
  for (const auto& u : unit) consider(space.from_unit(u));
  for (const auto& p : model.trial_points()) consider(p);
  if (best.values.empty()) best = space.from_unit(unit.front());  // every value was NaN
  return best;
}

}  // namespace flora
