#pragma once

// Aggregated loss surfaces built from all parties' (HP, loss) logs, and the
// surface argmin that yields the single-shot HP recommendation.

#include <string>
#include <variant>
#include <vector>

#include "flora/hp_space.hpp"
#include "flora/local_hpo.hpp"
#include "flora/regressors.hpp"
#include "json.hpp"

namespace flora {

enum class SurfaceMode {
  kSgm,   // one forest on the merged logs
  kSgmU,  // one GP on the merged logs, mean + alpha * stddev
  kMplm,  // pointwise max of per-party regressors
  kAplm,  // pointwise mean of per-party regressors
};

SurfaceMode parse_surface_mode(const std::string& s);
std::string to_string(SurfaceMode m);
std::vector<SurfaceMode> all_surface_modes();

enum class LocalRegressor { kRf, kGp };

struct SurfaceOptions {
  double alpha = 1.0;
  RfParams rf;
  // Signal variance and noise are multiplied by the variance of the losses
  // being fitted, so the defaults do not depend on the loss scale.
  GpParams gp{.length_scale = 0.3, .signal_variance = 1.0, .noise = 1e-2, .max_jitter = 1e-3};
  // Family of the per-party regressors used by MPLM / APLM.
  LocalRegressor local = LocalRegressor::kRf;
};

struct Observation {
  HpPoint point;
  double loss = 0.0;
};

Design make_design(const HpSpace& space, const std::vector<Observation>& samples);
RfRegressor fit_rf(const HpSpace& space, const std::vector<Observation>& samples,
                   const RfParams& params, Seed seed);
GpRegressor fit_gp(const HpSpace& space, const std::vector<Observation>& samples,
                   const GpParams& params);

class SurfaceModel {
 public:
  using Regressor = std::variant<RfRegressor, GpRegressor>;

  SurfaceModel(SurfaceMode mode, HpSpace space, SurfaceOptions options,
               std::vector<Regressor> regressors, std::vector<HpPoint> trial_points);

  SurfaceMode mode() const { return mode_; }
  double alpha() const { return options_.alpha; }
  const HpSpace& space() const { return space_; }
  std::size_t regressor_count() const { return regressors_.size(); }
  bool per_party() const { return mode_ == SurfaceMode::kMplm || mode_ == SurfaceMode::kAplm; }
  // Every party's trial points, party-major, in trial order.
  const std::vector<HpPoint>& trial_points() const { return trial_points_; }

  double evaluate(const HpPoint& p) const;
  // Prediction of regressor i (its GP mean for GP regressors).
  double regressor_prediction(std::size_t i, const HpPoint& p) const;
  std::vector<double> regressor_predictions(const HpPoint& p) const;
  // Mixing weights a_i(theta) with evaluate(theta) = sum_i a_i * f_i(theta):
  // 1/p for APLM, the indicator of the first maximizing party for MPLM and
  // {1} for the single-regressor modes.
  std::vector<double> weights(const HpPoint& p) const;

  // {mode, alpha, local_regressor, models: [fingerprint hex per regressor]}.
  nlohmann::json descriptor() const;

 private:
  double predict_encoded(std::size_t i, const std::vector<double>& x) const;

  SurfaceMode mode_;
  HpSpace space_;
  SurfaceOptions options_;
  std::vector<Regressor> regressors_;
  std::vector<HpPoint> trial_points_;
};

// Throws ValidationError on an empty trial set.
SurfaceModel build_surface(SurfaceMode mode, const HpSpace& space,
                           const std::vector<TrialSet>& trial_sets, Seed seed,
                           const SurfaceOptions& options = {});

// Randomly shifted Halton points: element i is the i-th quasi-random point of the
// unit cube with a seeded Cranley-Patterson shift.
std::vector<std::vector<double>> halton_points(std::size_t count, std::size_t dims, Seed seed);

// Evaluates the surface on `budget` quasi-random points followed by every
// trial point of every party; returns the first minimizer.
HpPoint minimize_surface(const SurfaceModel& model, int budget, Seed seed);

}  // namespace flora
