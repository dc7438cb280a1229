#include "flora/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "flora/error.hpp"

namespace flora {
namespace {

class Fnv1a {
 public:
  template <class T>
  void add(const T& v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (unsigned char b : bytes) {
      h_ ^= b;
      h_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

class CartBuilder {
 public:
  CartBuilder(const Design& data, const RfParams& params) : data_(data), params_(params) {}

  std::vector<RfRegressor::Node> build(std::vector<std::size_t> idx) {
    nodes_.clear();
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += data_.y[i];
    const double n = static_cast<double>(idx.size());
    nodes_[static_cast<std::size_t>(id)].value = sum / n;

    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
    if (depth >= params_.max_depth || idx.size() < 2 * min_leaf) return id;

    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    const double parent = sum * sum / n;
    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < data_.width; ++f) {
      auto at = [&](std::size_t i) { return data_.x[i * data_.width + f]; };
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return at(a) < at(b); });
      if (at(order.front()) == at(order.back())) continue;
      double left = 0.0;
      for (std::size_t k = 1; k < order.size(); ++k) {
        left += data_.y[order[k - 1]];
        if (k < min_leaf || order.size() - k < min_leaf) continue;
        const double lo = at(order[k - 1]);
        const double hi = at(order[k]);
        if (lo == hi) continue;
        const double nl = static_cast<double>(k);
        const double right = sum - left;
        const double gain = left * left / nl + right * right / (n - nl) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx)
      (data_.x[i * data_.width + static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx
                                                                                           : right_idx)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(left_idx, depth + 1);
    const int r = grow(right_idx, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Design& data_;
  const RfParams& params_;
  std::vector<RfRegressor::Node> nodes_;
};

}  // namespace

void Design::add(std::span<const double> features, double target) {
  if (width == 0 && x.empty()) width = features.size();
  if (features.size() != width) throw ValidationError("design: row width mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(target);
}

double RfRegressor::predict(std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& tree : trees_) {
    std::size_t i = 0;
    while (tree[i].feature >= 0)
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(tree[i].feature)] <= tree[i].threshold
                                       ? tree[i].left
                                       : tree[i].right);
    acc += tree[i].value;
  }
  return acc / static_cast<double>(trees_.size());
}

std::uint64_t RfRegressor::fingerprint() const {
  Fnv1a h;
  for (const auto& tree : trees_)
    for (const auto& n : tree) {
      h.add(n.feature);
      h.add(n.threshold);
      h.add(n.value);
    }
  return h.value();
}

RfRegressor fit_rf(const Design& data, const RfParams& params, Seed seed) {
  if (data.rows() == 0) throw ValidationError("rf: cannot fit on an empty sample set");
  if (params.n_trees < 1 || params.max_depth < 0 || params.min_leaf < 1)
    throw ValidationError("rf: n_trees >= 1, max_depth >= 0 and min_leaf >= 1 required");
  RfRegressor rf;
  rf.params_ = params;
  Rng rng(seed);
  CartBuilder builder(data, params);
  const std::size_t n = data.rows();
  rf.trees_.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    std::vector<std::size_t> boot(n);
    for (auto& i : boot) i = rng.index(n);
    std::sort(boot.begin(), boot.end());
    rf.trees_.push_back(builder.build(std::move(boot)));
  }
  return rf;
}

double squared_exponential(std::span<const double> a, std::span<const double> b,
                           double length_scale, double signal_variance) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return signal_variance * std::exp(-0.5 * d2 / (length_scale * length_scale));
}

double GpRegressor::kernel(std::span<const double> a, std::span<const double> b) const {
  return squared_exponential(a, b, params_.length_scale, params_.signal_variance);
}

GpPrediction GpRegressor::predict(std::span<const double> x) const {
  if (x.size() != width_) throw ValidationError("gp: query width mismatch");
  const auto n = train_x_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k[i] = kernel(x, std::span<const double>(train_x_.row(i).data(), width_));
  const double mean = prior_mean_ + k.dot(alpha_);
  const Eigen::VectorXd v = chol_l_.triangularView<Eigen::Lower>().solve(k);
  const double var = std::max(0.0, params_.signal_variance - v.squaredNorm());
  return {mean, std::sqrt(var)};
}

std::uint64_t GpRegressor::fingerprint() const {
  Fnv1a h;
  h.add(prior_mean_);
  h.add(effective_noise_);
  for (Eigen::Index i = 0; i < alpha_.size(); ++i) h.add(alpha_[i]);
  return h.value();
}

GpRegressor fit_gp(const Design& data, const GpParams& params) {
  if (data.rows() == 0) throw ValidationError("gp: cannot fit on an empty sample set");
  if (!(params.length_scale > 0.0) || !(params.signal_variance > 0.0) || !(params.noise >= 0.0))
    throw ValidationError("gp: length_scale > 0, signal_variance > 0 and noise >= 0 required");
  GpRegressor gp;
  gp.params_ = params;
  gp.width_ = data.width;
  const auto n = static_cast<Eigen::Index>(data.rows());
  gp.train_x_.resize(n, static_cast<Eigen::Index>(data.width));
  std::copy(data.x.begin(), data.x.end(), gp.train_x_.data());

  gp.prior_mean_ = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) resid[i] = data.y[static_cast<std::size_t>(i)] - gp.prior_mean_;

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      k(i, j) = k(j, i) = squared_exponential(data.row(static_cast<std::size_t>(i)),
                                              data.row(static_cast<std::size_t>(j)),
                                              params.length_scale, params.signal_variance);

  double noise = params.noise;
  for (;;) {
    Eigen::MatrixXd kn = k;
    kn.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(kn);
    if (llt.info() == Eigen::Success) {
      gp.chol_l_ = llt.matrixL();
      gp.alpha_ = llt.solve(resid);
      gp.effective_noise_ = noise;
      return gp;
    }
    if (noise >= params.max_jitter)
      throw RuntimeError("gp: kernel matrix is not positive definite even with jitter " +
                         std::to_string(noise));
    noise = noise > 0.0 ? std::min(noise * 10.0, params.max_jitter) : 1e-10;
  }
}

}  // namespace flora
