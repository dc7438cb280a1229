#include "flora/learners.hpp"

#include <algorithm>
#include <cmath>

#include "flora/error.hpp"

namespace flora {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

LearnerKind parse_learner(const std::string& s) {
  if (s == "gbdt" || s == "hgb") return LearnerKind::kGbdt;
  if (s == "logreg") return LearnerKind::kLogReg;
  throw ValidationError("unknown learner '" + s + "' (expected gbdt or logreg)");
}

std::string to_string(LearnerKind kind) {
  return kind == LearnerKind::kGbdt ? "gbdt" : "logreg";
}

LearnerParams learner_params(LearnerKind kind, const HpSpace& space, const HpPoint& p) {
  space.validate(p);
  auto get = [&](const std::string& name, auto fallback) {
    for (std::size_t i = 0; i < space.size(); ++i)
      if (space.dims()[i].name == name) return static_cast<decltype(fallback)>(p.values[i]);
    return fallback;
  };
  if (kind == LearnerKind::kGbdt) {
    GbdtParams g;
    g.max_iter = get("max_iter", g.max_iter);
    g.learning_rate = get("learning_rate", g.learning_rate);
    g.min_samples_leaf = get("min_samples_leaf", g.min_samples_leaf);
    g.l2_regularization = get("l2_regularization", g.l2_regularization);
    return g;
  }
  LogRegParams l;
  l.learning_rate = get("learning_rate", l.learning_rate);
  l.l2 = get("l2", l.l2);
  l.epochs = get("epochs", l.epochs);
  return l;
}

double LogRegModel::raw_score(std::span<const double> x) const {
  double z = weights.back();
  for (std::size_t f = 0; f < x.size(); ++f) z += weights[f] * x[f];
  return z;
}

double TrainedModel::predict_proba(std::span<const double> x) const {
  return std::visit([&](const auto& m) { return sigmoid(m.raw_score(x)); }, model_);
}

std::vector<int> TrainedModel::predict(const PartyDataset& data) const {
  std::vector<int> out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out[i] = predict(data.row(i));
  return out;
}

double logreg_objective(const LogRegModel& model, double l2, const PartyDataset& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double z = model.raw_score(data.row(i));
    const double s = data.labels[i] == 1 ? z : -z;
    // log(1 + exp(-s)) without overflow.
    loss += s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  }
  loss /= static_cast<double>(data.rows());
  double reg = 0.0;
  for (std::size_t f = 0; f + 1 < model.weights.size(); ++f) reg += model.weights[f] * model.weights[f];
  return loss + 0.5 * l2 * reg;
}

LogRegModel logreg_steps(const LogRegParams& params, const PartyDataset& data, LogRegModel init) {
  const std::size_t m = data.n_features;
  if (init.weights.size() != m + 1) throw ValidationError("logreg: initial weights have wrong size");
  const double inv_n = 1.0 / static_cast<double>(data.rows());
  std::vector<double> g(m + 1);
  for (int e = 0; e < params.epochs; ++e) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const auto x = data.row(i);
      const double r = sigmoid(init.raw_score(x)) - static_cast<double>(data.labels[i]);
      for (std::size_t f = 0; f < m; ++f) g[f] += r * x[f];
      g[m] += r;
    }
    for (std::size_t f = 0; f < m; ++f)
      init.weights[f] -= params.learning_rate * (g[f] * inv_n + params.l2 * init.weights[f]);
    init.weights[m] -= params.learning_rate * g[m] * inv_n;
  }
  return init;
}

TrainedModel train_logreg(const LogRegParams& params, const PartyDataset& data, Seed /*seed*/) {
  data.validate();
  if (!data.has_both_classes()) throw ValidationError("logreg: degenerate labels");
  if (!(params.learning_rate > 0.0) || !(params.l2 >= 0.0) || params.epochs < 0)
    throw ValidationError("logreg: learning_rate > 0, l2 >= 0 and epochs >= 0 required");
  LogRegModel init;
  init.weights.assign(data.n_features + 1, 0.0);
  return TrainedModel(logreg_steps(params, data, std::move(init)));
}

TrainedModel train(const LearnerParams& params, const PartyDataset& data, Seed seed) {
  return std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, GbdtParams>)
          return train_gbdt(p, data, seed);
        else
          return train_logreg(p, data, seed);
      },
      params);
}

double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() || truth.empty())
    throw ValidationError("balanced_accuracy: truth and predictions must be non-empty and aligned");
  std::size_t total[2] = {0, 0};
  std::size_t hit[2] = {0, 0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int c = truth[i] == 1 ? 1 : 0;
    ++total[c];
    if (predicted[i] == truth[i]) ++hit[c];
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < 2; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    ++present;
  }
  return sum / present;
}

double balanced_accuracy(const TrainedModel& model, const PartyDataset& data) {
  const auto pred = model.predict(data);
  return balanced_accuracy(data.labels, pred);
}

double log_loss(const TrainedModel& model, const PartyDataset& data) {
  constexpr double kEps = 1e-15;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double p = std::clamp(model.predict_proba(data.row(i)), kEps, 1.0 - kEps);
    loss -= data.labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(data.rows());
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, Seed seed) {
  if (k < 2) throw ValidationError("cv: k must be at least 2");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.size() < static_cast<std::size_t>(k))
      throw ValidationError("cv: class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                            " rows, too small for " + std::to_string(k) + "-fold stratification");
    shuffle(idx, rng);
    for (auto i : idx) {
      folds[next].push_back(i);
      next = (next + 1) % folds.size();
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double cv_loss(const LearnerParams& params, const PartyDataset& data, int k, Seed seed) {
  const auto folds = stratified_folds(data.labels, k, seed);
  std::vector<char> in_fold(data.rows());
  double acc = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (auto i : folds[f]) in_fold[i] = 1;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(data.rows() - folds[f].size());
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (!in_fold[i]) train_idx.push_back(i);
    const auto model = train(params, data.subset(train_idx), derive_seed(seed, f));
    acc += balanced_accuracy(model, data.subset(folds[f]));
  }
  return 1.0 - acc / static_cast<double>(folds.size());
}

}  // namespace flora
