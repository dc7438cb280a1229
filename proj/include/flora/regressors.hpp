#pragma once

// Regressors over encoded hyper-parameter coordinates (see
// HpSpace::encode): bagged CART forests and exact Gaussian processes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flora/rng.hpp"

namespace flora {

// Row-major design matrix with a fixed width.
struct Design {
  std::size_t width = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * width, width}; }
  void add(std::span<const double> features, double target);
};

struct RfParams {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 2;
};

class RfRegressor {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  double predict(std::span<const double> x) const;
  const RfParams& params() const { return params_; }
  // FNV-1a over the fitted trees; identifies a fit in reports.
  std::uint64_t fingerprint() const;

 private:
  friend RfRegressor fit_rf(const Design&, const RfParams&, Seed);
  RfParams params_;
  std::vector<std::vector<Node>> trees_;
};

// Bootstrap-bagged CART regression trees, variance-reduction splits over
// every feature. Throws ValidationError on an empty design.
RfRegressor fit_rf(const Design& data, const RfParams& params, Seed seed);

struct GpParams {
  double length_scale = 0.3;
  double signal_variance = 1.0;
  double noise = 1e-6;
  // Jitter is multiplied by 10 after each failed factorization up to this.
  double max_jitter = 1e-3;
};

struct GpPrediction {
  double mean = 0.0;
  double stddev = 0.0;
};

// Exact GP regression with a squared-exponential kernel and a constant prior
// mean equal to the training-target average.
class GpRegressor {
 public:
  GpPrediction predict(std::span<const double> x) const;
  const GpParams& params() const { return params_; }
  double prior_mean() const { return prior_mean_; }
  // Noise actually used after jitter escalation.
  double effective_noise() const { return effective_noise_; }
  std::uint64_t fingerprint() const;

 private:
  friend GpRegressor fit_gp(const Design&, const GpParams&);
  double kernel(std::span<const double> a, std::span<const double> b) const;

  GpParams params_;
  double prior_mean_ = 0.0;
  double effective_noise_ = 0.0;
  std::size_t width_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> train_x_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd chol_l_;
};

// Cholesky of K + noise * I. Throws RuntimeError when the matrix stays
// non-positive-definite after jitter escalation.
GpRegressor fit_gp(const Design& data, const GpParams& params);

double squared_exponential(std::span<const double> a, std::span<const double> b,
                           double length_scale, double signal_variance);

}  // namespace flora
