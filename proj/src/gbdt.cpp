#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>

#include "flora/error.hpp"
#include "flora/learners.hpp"

namespace flora {
namespace {

constexpr double kMinHessianToSplit = 1e-3;
constexpr double kMinGain = 1e-12;

struct HistBin {
  double grad = 0.0;
  double hess = 0.0;
  std::uint32_t count = 0;
};

struct SplitInfo {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;
};

// A leaf of the tree being grown, with everything needed to split it.
struct GrowingLeaf {
  int node = 0;
  std::vector<std::uint32_t> rows;
  std::vector<HistBin> hist;
  double grad = 0.0;
  double hess = 0.0;
  SplitInfo split;
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class TreeGrower {
 public:
  TreeGrower(const GbdtParams& params, const BinMapper& mapper,
             const std::vector<std::uint8_t>& binned, std::size_t n_rows)
      : params_(params), mapper_(mapper), binned_(binned), n_rows_(n_rows) {
    n_features_ = mapper.n_features();
    stride_ = static_cast<std::size_t>(params.max_bins);
  }

  // Grows one tree on (grad, hess) and adds its leaf values to `raw`.
  std::vector<TreeNode> grow(const std::vector<double>& grad, const std::vector<double>& hess,
                             std::vector<double>& raw) {
    std::vector<TreeNode> nodes(1);
    std::vector<std::unique_ptr<GrowingLeaf>> leaves;

    auto root = std::make_unique<GrowingLeaf>();
    root->rows.resize(n_rows_);
    std::iota(root->rows.begin(), root->rows.end(), 0U);
    build_hist(*root, grad, hess);
    for (std::size_t b = 0; b < stride_; ++b) {
      root->grad += root->hist[b].grad;
      root->hess += root->hist[b].hess;
    }
    find_split(*root);
    leaves.push_back(std::move(root));

    while (static_cast<int>(leaves.size()) < params_.max_leaf_nodes) {
      auto best = leaves.end();
      for (auto it = leaves.begin(); it != leaves.end(); ++it)
        if ((*it)->split.feature >= 0 && (best == leaves.end() || (*it)->split.gain > (*best)->split.gain))
          best = it;
      if (best == leaves.end()) break;

      auto parent = std::move(*best);
      leaves.erase(best);
      auto [left, right] = split_leaf(*parent, grad, hess);

      auto& pn = nodes[static_cast<std::size_t>(parent->node)];
      pn.feature = parent->split.feature;
      pn.threshold = mapper_.thresholds(static_cast<std::size_t>(pn.feature))
                         [static_cast<std::size_t>(parent->split.bin)];
      left->node = static_cast<int>(nodes.size());
      right->node = left->node + 1;
      pn.left = left->node;
      pn.right = right->node;
      nodes.resize(nodes.size() + 2);

      find_split(*left);
      find_split(*right);
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
    }

    for (const auto& leaf : leaves) {
      const double value =
          -params_.learning_rate * leaf->grad / (leaf->hess + params_.l2_regularization);
      nodes[static_cast<std::size_t>(leaf->node)].value = value;
      for (auto r : leaf->rows) raw[r] += value;
    }
    return nodes;
  }

 private:
  void build_hist(GrowingLeaf& leaf, const std::vector<double>& grad,
                  const std::vector<double>& hess) const {
    leaf.hist.assign(n_features_ * stride_, HistBin{});
    for (std::size_t f = 0; f < n_features_; ++f) {
      const std::uint8_t* col = binned_.data() + f * n_rows_;
      HistBin* h = leaf.hist.data() + f * stride_;
      for (auto r : leaf.rows) {
        auto& b = h[col[r]];
        b.grad += grad[r];
        b.hess += hess[r];
        ++b.count;
      }
    }
  }

  void find_split(GrowingLeaf& leaf) const {
    leaf.split = SplitInfo{};
    const auto msl = static_cast<std::uint32_t>(std::max(1, params_.min_samples_leaf));
    const auto n = static_cast<std::uint32_t>(leaf.rows.size());
    if (n < 2 * msl) return;
    const double lambda = params_.l2_regularization;
    const double parent_score = leaf.grad * leaf.grad / (leaf.hess + lambda);
    for (std::size_t f = 0; f < n_features_; ++f) {
      const std::size_t n_bins = mapper_.thresholds(f).size() + 1;
      const HistBin* h = leaf.hist.data() + f * stride_;
      double gl = 0.0, hl = 0.0;
      std::uint32_t cl = 0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        gl += h[b].grad;
        hl += h[b].hess;
        cl += h[b].count;
        if (cl < msl) continue;
        const std::uint32_t cr = n - cl;
        if (cr < msl) break;
        const double hr = leaf.hess - hl;
        if (hl < kMinHessianToSplit || hr < kMinHessianToSplit) continue;
        const double gr = leaf.grad - gl;
        const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score;
        if (gain > kMinGain && gain > leaf.split.gain)
          leaf.split = SplitInfo{gain, static_cast<int>(f), static_cast<int>(b)};
      }
    }
  }

  std::pair<std::unique_ptr<GrowingLeaf>, std::unique_ptr<GrowingLeaf>> split_leaf(
      GrowingLeaf& parent, const std::vector<double>& grad, const std::vector<double>& hess) const {
    auto left = std::make_unique<GrowingLeaf>();
    auto right = std::make_unique<GrowingLeaf>();
    const std::uint8_t* col =
        binned_.data() + static_cast<std::size_t>(parent.split.feature) * n_rows_;
    const auto cut = static_cast<std::uint8_t>(parent.split.bin);
    for (auto r : parent.rows) (col[r] <= cut ? left : right)->rows.push_back(r);

    // Histogram subtraction: scan the smaller child, derive the other.
    GrowingLeaf& small = left->rows.size() <= right->rows.size() ? *left : *right;
    GrowingLeaf& large = &small == left.get() ? *right : *left;
    build_hist(small, grad, hess);
    large.hist = std::move(parent.hist);
    for (std::size_t i = 0; i < large.hist.size(); ++i) {
      large.hist[i].grad -= small.hist[i].grad;
      large.hist[i].hess -= small.hist[i].hess;
      large.hist[i].count -= small.hist[i].count;
    }
    for (auto* child : {&small, &large}) {
      child->grad = 0.0;
      child->hess = 0.0;
      // Sum over feature 0; every feature's bins partition the same rows.
      for (std::size_t b = 0; b < stride_; ++b) {
        child->grad += child->hist[b].grad;
        child->hess += child->hist[b].hess;
      }
    }
    parent.hist.clear();
    return {std::move(left), std::move(right)};
  }

  const GbdtParams& params_;
  const BinMapper& mapper_;
  const std::vector<std::uint8_t>& binned_;
  std::size_t n_rows_;
  std::size_t n_features_ = 0;
  std::size_t stride_ = 64;
};

}  // namespace

BinMapper::BinMapper(const PartyDataset& data, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw ValidationError("gbdt: max_bins must be in [2, 256]");
  const std::size_t n = data.rows();
  thresholds_.resize(data.n_features);
  std::vector<double> col(n);
  for (std::size_t f = 0; f < data.n_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) col[i] = data.features[i * data.n_features + f];
    std::sort(col.begin(), col.end());
    std::vector<double> distinct;
    std::unique_copy(col.begin(), col.end(), std::back_inserter(distinct));
    auto& th = thresholds_[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 1; i < distinct.size(); ++i)
        th.push_back(0.5 * (distinct[i - 1] + distinct[i]));
      continue;
    }
    // Quantile cuts; each cut value c becomes the midpoint between c and the
    // next smaller distinct value so that ties never straddle a bin edge.
    for (int b = 1; b < max_bins; ++b) {
      const double c = col[static_cast<std::size_t>(b) * n / static_cast<std::size_t>(max_bins)];
      const auto it = std::lower_bound(distinct.begin(), distinct.end(), c);
      if (it == distinct.begin()) continue;
      const double t = 0.5 * (*(it - 1) + *it);
      if (th.empty() || t > th.back()) th.push_back(t);
    }
  }
}

std::uint8_t BinMapper::bin(std::size_t feature, double x) const {
  const auto& th = thresholds_[feature];
  return static_cast<std::uint8_t>(std::lower_bound(th.begin(), th.end(), x) - th.begin());
}

double GbdtModel::raw_score(std::span<const double> x) const {
  double z = base_score;
  for (const auto& tree : trees) {
    std::size_t i = 0;
    while (tree[i].feature >= 0)
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(tree[i].feature)] <= tree[i].threshold
                                       ? tree[i].left
                                       : tree[i].right);
    z += tree[i].value;
  }
  return z;
}

std::size_t GbdtModel::total_splits() const {
  std::size_t s = 0;
  for (const auto& tree : trees) s += (tree.size() - 1) / 2;
  return s;
}

TrainedModel train_gbdt(const GbdtParams& params, const PartyDataset& data, Seed /*seed*/) {
  data.validate();
  if (!data.has_both_classes()) throw ValidationError("gbdt: degenerate labels");
  if (params.max_iter < 1) throw ValidationError("gbdt: max_iter must be >= 1");
  if (!(params.learning_rate > 0.0)) throw ValidationError("gbdt: learning_rate must be > 0");
  if (params.min_samples_leaf < 1) throw ValidationError("gbdt: min_samples_leaf must be >= 1");
  if (!(params.l2_regularization >= 0.0))
    throw ValidationError("gbdt: l2_regularization must be >= 0");
  if (params.max_leaf_nodes < 2) throw ValidationError("gbdt: max_leaf_nodes must be >= 2");

  const std::size_t n = data.rows();
  const BinMapper mapper(data, params.max_bins);
  std::vector<std::uint8_t> binned(n * data.n_features);
  for (std::size_t f = 0; f < data.n_features; ++f)
    for (std::size_t i = 0; i < n; ++i)
      binned[f * n + i] = mapper.bin(f, data.features[i * data.n_features + f]);

  const auto counts = data.class_counts();
  const double prior = static_cast<double>(counts[1]) / static_cast<double>(n);
  GbdtModel model;
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> raw(n, model.base_score), grad(n), hess(n);
  TreeGrower grower(params, mapper, binned, n);
  model.trees.reserve(static_cast<std::size_t>(params.max_iter));
  for (int it = 0; it < params.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = p - static_cast<double>(data.labels[i]);
      hess[i] = p * (1.0 - p);
    }
    model.trees.push_back(grower.grow(grad, hess, raw));
  }
  return TrainedModel(std::move(model));
}

}  // namespace flora
