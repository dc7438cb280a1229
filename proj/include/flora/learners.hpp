#pragma once

// Trainable binary classifiers whose hyper-parameters are optimized, and the
// balanced-accuracy loss the optimizer sees.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/hp_space.hpp"
#include "flora/rng.hpp"

namespace flora {

enum class LearnerKind { kGbdt, kLogReg };

LearnerKind parse_learner(const std::string& s);
std::string to_string(LearnerKind kind);

struct GbdtParams {
  int max_iter = 100;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double l2_regularization = 0.0;
  // Fixed, not searched.
  int max_leaf_nodes = 31;
  int max_bins = 64;
};

struct LogRegParams {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int epochs = 100;
};

using LearnerParams = std::variant<GbdtParams, LogRegParams>;

// Reads the named dimensions of `p`; dimensions the learner does not know
// are ignored and missing ones keep their defaults.
LearnerParams learner_params(LearnerKind kind, const HpSpace& space, const HpPoint& p);

// Per-feature quantile bins learned from training data. Thresholds sit at
// midpoints between consecutive distinct values.
class BinMapper {
 public:
  BinMapper() = default;
  BinMapper(const PartyDataset& data, int max_bins);

  std::size_t n_features() const { return thresholds_.size(); }
  const std::vector<double>& thresholds(std::size_t feature) const { return thresholds_[feature]; }
  // Bin index = number of thresholds strictly below x.
  std::uint8_t bin(std::size_t feature, double x) const;

 private:
  std::vector<std::vector<double>> thresholds_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class GbdtModel {
 public:
  double base_score = 0.0;
  std::vector<std::vector<TreeNode>> trees;

  double raw_score(std::span<const double> x) const;
  std::size_t total_splits() const;
};

class LogRegModel {
 public:
  std::vector<double> weights;  // last entry is the intercept
  double raw_score(std::span<const double> x) const;
};

class TrainedModel {
 public:
  explicit TrainedModel(GbdtModel m) : model_(std::move(m)) {}
  explicit TrainedModel(LogRegModel m) : model_(std::move(m)) {}

  double predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return predict_proba(x) > 0.5 ? 1 : 0; }
  std::vector<int> predict(const PartyDataset& data) const;

  const GbdtModel* gbdt() const { return std::get_if<GbdtModel>(&model_); }
  const LogRegModel* logreg() const { return std::get_if<LogRegModel>(&model_); }

 private:
  std::variant<GbdtModel, LogRegModel> model_;
};

// Histogram gradient boosting on the logistic loss with best-first trees.
// Throws ValidationError("degenerate labels") on single-class data.
TrainedModel train_gbdt(const GbdtParams& params, const PartyDataset& data, Seed seed);

// Full-batch gradient descent on the L2-regularized mean logistic loss
// (intercept unregularized), starting from zero weights.
TrainedModel train_logreg(const LogRegParams& params, const PartyDataset& data, Seed seed);

// `params.epochs` gradient steps starting from `init`. Building block for
// federated averaging.
LogRegModel logreg_steps(const LogRegParams& params, const PartyDataset& data, LogRegModel init);

double logreg_objective(const LogRegModel& model, double l2, const PartyDataset& data);

TrainedModel train(const LearnerParams& params, const PartyDataset& data, Seed seed);

// Mean of per-class recalls over the classes present in `data`.
double balanced_accuracy(const TrainedModel& model, const PartyDataset& data);
double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted);

// Mean logistic loss of the predicted probabilities.
double log_loss(const TrainedModel& model, const PartyDataset& data);

// Disjoint, covering folds; each class is dealt round-robin after a seeded
// shuffle. Throws ValidationError if a class has fewer than k rows.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, Seed seed);

// 1 - mean held-out balanced accuracy over k stratified folds.
double cv_loss(const LearnerParams& params, const PartyDataset& data, int k, Seed seed);

}  // namespace flora
