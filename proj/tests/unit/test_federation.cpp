#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "doctest.h"
#include "flora/error.hpp"
#include "flora/federation.hpp"
#include "helpers.hpp"

using namespace flora;
using flora::testing::noisy;
using flora::testing::separable;

namespace {

std::multiset<std::vector<double>> row_multiset(const std::vector<PartyDataset>& parts) {
  std::multiset<std::vector<double>> out;
  for (const auto& d : parts)
    for (std::size_t i = 0; i < d.rows(); ++i) {
      std::vector<double> r(d.row(i).begin(), d.row(i).end());
      r.push_back(d.labels[i]);
      out.insert(r);
    }
  return out;
}

double positive_ratio(const PartyDataset& d) { return static_cast<double>(d.class_counts()[1]) / d.rows(); }

FloraConfig small_config(int T) {
  FloraConfig c;
  c.space = logreg_space();
  c.learner = LearnerKind::kLogReg;
  c.T = T;
  c.pool_budget = 256;
  c.seed = 42;
  return c;
}

}  // namespace

TEST_SUITE("federation") {
  TEST_CASE("single party receives the whole dataset") {
    const auto d = noisy(200, 1);
    const auto parts = partition(d, PartitionPlan{});
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].features == d.features);
    CHECK(parts[0].labels == d.labels);
  }

  TEST_CASE("iid split sizes with remainder to low indices") {
    PartitionPlan plan;
    plan.p = 3;
    auto sizes = [&](std::size_t n) {
      std::vector<std::size_t> s;
      for (const auto& part : partition(noisy(n, 2), plan)) s.push_back(part.rows());
      return s;
    };
    CHECK(sizes(300) == std::vector<std::size_t>{100, 100, 100});
    CHECK(sizes(302) == std::vector<std::size_t>{101, 101, 100});
  }

  TEST_CASE("partitions are disjoint and covering") {
    const auto d = noisy(500, 3);
    for (auto scheme : {PartitionScheme::kIid, PartitionScheme::kDirichlet})
      for (double beta : {0.1, 1.0, 1000.0}) {
        PartitionPlan plan;
        plan.scheme = scheme;
        plan.p = 4;
        plan.beta = beta;
        plan.seed = 7;
        CHECK(row_multiset(partition(d, plan)) == row_multiset({d}));
      }
  }

  TEST_CASE("large beta keeps class ratios near the global ratio") {
    const auto d = noisy(1500, 4);
    PartitionPlan plan;
    plan.scheme = PartitionScheme::kDirichlet;
    plan.p = 5;
    plan.beta = 1000.0;
    plan.seed = 3;
    for (const auto& part : partition(d, plan)) CHECK(std::abs(positive_ratio(part) - positive_ratio(d)) <= 0.05);
  }

  TEST_CASE("small beta still leaves every class in every party") {
    const auto d = noisy(1000, 5);
    PartitionPlan plan;
    plan.scheme = PartitionScheme::kDirichlet;
    plan.p = 5;
    plan.beta = 0.05;
    for (Seed s = 0; s < 10; ++s) {
      plan.seed = s;
      for (const auto& part : partition(d, plan)) {
        CHECK(part.class_counts()[0] >= 5);
        CHECK(part.class_counts()[1] >= 5);
        CHECK(part.rows() >= 20);
      }
    }
  }

  TEST_CASE("partition rejects impossible plans") {
    PartitionPlan plan;
    plan.p = 10;
    CHECK_THROWS_AS(partition(noisy(150, 6), plan), ValidationError);
    plan.p = 0;
    CHECK_THROWS_AS(partition(noisy(150, 6), plan), ValidationError);
    CHECK(parse_partition_scheme("dirichlet") == PartitionScheme::kDirichlet);
  }

  TEST_CASE("single-party fedavg equals centralized training") {
    const auto d = noisy(300, 7);
    LogRegParams p;
    p.epochs = 5;
    FedAvgOptions fa{12};
    const auto fed = final_train(FinalMode::kFedAvgLogReg, p, {d}, 0, fa);
    LogRegParams central = p;
    central.epochs = p.epochs * fa.rounds;
    const auto ref = train_logreg(central, d, 0);
    const auto& a = fed.logreg()->weights;
    const auto& b = ref.logreg()->weights;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-8);
  }

  TEST_CASE("pooling identical copies equals duplicated rows") {
    const auto d = noisy(200, 8);
    PartyDataset dup = d;
    for (std::size_t i = 0; i < d.rows(); ++i) dup.append_row(d.row(i), d.labels[i]);
    const LearnerParams p = GbdtParams{};
    const auto pooled = final_train(FinalMode::kPooledEmulation, p, {d, d}, 0);
    const auto direct = train(p, dup, 0);
    CHECK(pooled.predict(d) == direct.predict(d));
    for (std::size_t i = 0; i < d.rows(); ++i) CHECK(pooled.predict_proba(d.row(i)) == direct.predict_proba(d.row(i)));
  }

  TEST_CASE("fedavg stays close to pooled training on separable data") {
    const auto d = separable(600, 9);
    PartitionPlan plan;
    plan.p = 3;
    plan.seed = 1;
    const auto parts = partition(d, plan);
    const LearnerParams p = LogRegParams{};
    const double fed = balanced_accuracy(final_train(FinalMode::kFedAvgLogReg, p, parts, 0), d);
    const double pooled = balanced_accuracy(final_train(FinalMode::kPooledEmulation, p, parts, 0), d);
    CHECK(std::abs(fed - pooled) <= 0.05);
  }

  TEST_CASE("fedavg requires the logreg learner") {
    CHECK_THROWS_AS(final_train(FinalMode::kFedAvgLogReg, GbdtParams{}, {noisy(100, 1)}, 0), ValidationError);
  }

  TEST_CASE("channel delivers in order across threads") {
    Channel ch;
    std::thread t([&] {
      for (int i = 0; i < 50; ++i) ch.send({i, std::to_string(i)});
    });
    for (int i = 0; i < 50; ++i) {
      const auto m = ch.receive();
      CHECK(m.party_id == i);
      CHECK(m.payload == std::to_string(i));
    }
    t.join();
  }

  TEST_CASE("parallel collection matches sequential collection") {
    const auto d = noisy(600, 10);
    PartitionPlan plan;
    plan.p = 3;
    const auto parts = partition(d, plan);
    auto cfg = small_config(8);
    const auto seq = collect_trials(parts, cfg);
    cfg.parallel = 3;
    const auto par = collect_trials(parts, cfg);
    CHECK(seq.trial_sets == par.trial_sets);
    CHECK(seq.payload_bytes == par.payload_bytes);
    std::size_t sum = 0;
    for (const auto& ts : seq.trial_sets) sum += to_jsonl(ts, cfg.space).size();
    CHECK(seq.total_bytes() == sum);
  }

  TEST_CASE("each party's log depends only on its own rows") {
    const auto d = noisy(600, 11);
    PartitionPlan plan;
    plan.p = 3;
    const auto parts = partition(d, plan);
    const auto cfg = small_config(6);
    const auto all = collect_trials(parts, cfg);
    const auto alone = collect_trials({parts[0]}, cfg);
    CHECK(alone.trial_sets[0] == all.trial_sets[0]);
  }

  TEST_CASE("degenerate single party single trial") {
    const auto d = noisy(200, 12);
    const auto cfg = small_config(1);
    const auto run = run_flora({d}, cfg);
    REQUIRE(run.trial_sets.size() == 1);
    REQUIRE(run.trial_sets[0].records.size() == 1);
    CHECK(cfg.space.contains(run.selected));
    CHECK(run.surface->trial_points().front() == run.trial_sets[0].records[0].point);
    CHECK(run.surface->evaluate(run.selected) <= run.surface->evaluate(run.trial_sets[0].records[0].point));
    CHECK(run.final_model.has_value());
  }

  TEST_CASE("end-to-end run is deterministic and not worse than the default") {
    const auto d = separable(900, 13, 3);
    const auto [train_rows, holdout] = split_holdout(d, 0.2, 1);
    PartitionPlan plan;
    plan.p = 3;
    plan.seed = 2;
    const auto parts = partition(train_rows, plan);
    FloraConfig cfg;
    cfg.T = 50;
    cfg.seed = 3;
    const auto a = run_flora(parts, cfg);
    const auto b = run_flora(parts, cfg);
    CHECK(a.selected == b.selected);
    const double flora_acc = balanced_accuracy(*a.final_model, holdout);
    const double base_acc = balanced_accuracy(final_train(FinalMode::kPooledEmulation, GbdtParams{}, parts, 0), holdout);
    CHECK(flora_acc >= base_acc);
  }
}
