#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "flora/error.hpp"
#include "flora/learners.hpp"
#include "helpers.hpp"

using namespace flora;
using flora::testing::noisy;
using flora::testing::separable;

namespace {

double train_logloss(const GbdtParams& p, const PartyDataset& d) { return log_loss(train_gbdt(p, d, 0), d); }

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("gbdt fits separable blobs") {
    const auto d = separable(200, 1);
    const auto m = train_gbdt(GbdtParams{}, d, 0);
    CHECK(balanced_accuracy(m, d) >= 0.99);
  }

  TEST_CASE("gbdt training loss falls with more iterations") {
    const auto d = noisy(400, 2);
    GbdtParams few;
    few.max_iter = 10;
    GbdtParams many;
    many.max_iter = 200;
    CHECK(train_logloss(many, d) <= train_logloss(few, d));
  }

  TEST_CASE("gbdt on constant features predicts the prior") {
    PartyDataset d;
    d.n_features = 2;
    for (int i = 0; i < 60; ++i) d.append_row(std::vector<double>{1.0, -2.0}, i % 3 == 0 ? 1 : 0);
    const auto m = train_gbdt(GbdtParams{}, d, 0);
    CHECK(m.gbdt()->total_splits() == 0);
    CHECK(balanced_accuracy(m, d) == doctest::Approx(0.5));
  }

  TEST_CASE("gbdt never splits when min_samples_leaf = n") {
    const auto d = noisy(120, 3);
    GbdtParams p;
    p.min_samples_leaf = 120;
    CHECK(train_gbdt(p, d, 0).gbdt()->total_splits() == 0);
  }

  TEST_CASE("gbdt rejects single-class data") {
    PartyDataset d;
    d.n_features = 1;
    for (int i = 0; i < 10; ++i) d.append_row(std::vector<double>{double(i)}, 1);
    CHECK_THROWS_AS(train_gbdt(GbdtParams{}, d, 0), ValidationError);
  }

  TEST_CASE("gbdt trees respect the leaf cap") {
    const auto d = noisy(800, 4);
    GbdtParams p;
    p.max_iter = 5;
    p.min_samples_leaf = 1;
    const auto m = train_gbdt(p, d, 0);
    for (const auto& tree : m.gbdt()->trees) {
      const auto leaves = std::count_if(tree.begin(), tree.end(), [](const TreeNode& n) { return n.feature < 0; });
      CHECK(leaves <= 31);
    }
  }

  TEST_CASE("bin mapper uses at most 64 bins with midpoint thresholds") {
    PartyDataset d;
    d.n_features = 1;
    for (int i = 0; i < 1000; ++i) d.append_row(std::vector<double>{double(i)}, i % 2);
    const BinMapper bins(d, 64);
    CHECK(bins.thresholds(0).size() <= 63);
    for (double t : bins.thresholds(0)) CHECK(t - std::floor(t) == doctest::Approx(0.5));
    PartyDataset small;
    small.n_features = 1;
    for (int i = 0; i < 6; ++i) small.append_row(std::vector<double>{double(i % 3)}, i % 2);
    const BinMapper b2(small, 64);
    CHECK(b2.thresholds(0) == std::vector<double>{0.5, 1.5});
    CHECK(b2.bin(0, 0.0) == 0);
    CHECK(b2.bin(0, 2.0) == 2);
  }

  TEST_CASE("logreg fits separable blobs") {
    const auto d = separable(200, 5);
    const auto m = train_logreg(LogRegParams{}, d, 0);
    CHECK(balanced_accuracy(m, d) >= 0.95);
  }

  TEST_CASE("logreg heavy l2 shrinks weights") {
    const auto d = noisy(300, 6);
    LogRegParams p;
    p.l2 = 1e6;
    p.learning_rate = 1e-7;
    p.epochs = 200;
    const auto m = train_logreg(p, d, 0);
    for (std::size_t f = 0; f + 1 < m.logreg()->weights.size(); ++f)
      CHECK(std::abs(m.logreg()->weights[f]) < 1e-3);
  }

  TEST_CASE("logreg objective decreases monotonically") {
    const auto d = noisy(300, 7);
    LogRegParams p;
    p.learning_rate = 0.05;
    p.epochs = 1;
    LogRegModel m;
    m.weights.assign(d.n_features + 1, 0.0);
    double prev = logreg_objective(m, p.l2, d);
    for (int e = 0; e < 50; ++e) {
      m = logreg_steps(p, d, m);
      const double now = logreg_objective(m, p.l2, d);
      CHECK(now <= prev + 1e-15);
      prev = now;
    }
  }

  TEST_CASE("balanced accuracy examples") {
    const std::vector<int> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(balanced_accuracy(truth, truth) == 1.0);
    const std::vector<int> zeros(10, 0);
    const std::vector<int> imbalanced{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    CHECK(balanced_accuracy(imbalanced, zeros) == doctest::Approx(0.5));
    const std::vector<int> pred{0, 0, 0, 0, 1, 1, 1, 1, 0, 0};
    CHECK(balanced_accuracy(truth, pred) == doctest::Approx(0.7));
  }

  TEST_CASE("stratified folds partition and stratify") {
    std::vector<int> labels;
    for (int i = 0; i < 103; ++i) labels.push_back(i % 4 == 0 ? 1 : 0);
    const auto folds = stratified_folds(labels, 5, 9);
    std::multiset<std::size_t> all;
    for (const auto& f : folds) {
      all.insert(f.begin(), f.end());
      const auto pos = std::count_if(f.begin(), f.end(), [&](std::size_t i) { return labels[i] == 1; });
      CHECK(pos >= 5);
      CHECK(pos <= 6);
    }
    CHECK(all.size() == labels.size());
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == labels.size());
    CHECK_THROWS_AS(stratified_folds(std::vector<int>{0, 0, 0, 1, 1}, 3, 0), ValidationError);
  }

  TEST_CASE("cv loss is deterministic and bounded") {
    const auto d = separable(200, 10);
    const LearnerParams p = GbdtParams{};
    const double a = cv_loss(p, d, 5, 3);
    CHECK(a == cv_loss(p, d, 5, 3));
    CHECK(a <= 0.05);
    CHECK(a >= 0.0);
  }

  TEST_CASE("cv loss on shuffled labels is near chance") {
    auto d = noisy(600, 11);
    Rng rng(12);
    for (std::size_t i = d.labels.size(); i > 1; --i) std::swap(d.labels[i - 1], d.labels[rng.index(i)]);
    LogRegParams p;
    const double l = cv_loss(p, d, 5, 4);
    CHECK(std::abs(l - 0.5) <= 0.05);
  }

  TEST_CASE("learner params read named dimensions") {
    const auto space = gbdt_space();
    const auto p = space.point_from_json(
        {{"max_iter", 42}, {"learning_rate", 0.05}, {"min_samples_leaf", 7}, {"l2_regularization", 0.5}});
    const auto g = std::get<GbdtParams>(learner_params(LearnerKind::kGbdt, space, p));
    CHECK(g.max_iter == 42);
    CHECK(g.min_samples_leaf == 7);
    CHECK(g.learning_rate == doctest::Approx(0.05));
    CHECK(g.max_leaf_nodes == 31);
    CHECK(parse_learner("hgb") == LearnerKind::kGbdt);
    CHECK_THROWS_AS(parse_learner("svm"), ValidationError);
  }
}
