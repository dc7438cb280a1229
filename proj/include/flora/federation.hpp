#pragma once

// Simulated federation: data partitioning across parties, the single-shot
// message flow (local HPO at every party, one shipment of (HP, loss) logs,
// surface aggregation and selection at the aggregator) and the final
// training with the selected configuration.

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/hp_space.hpp"
#include "flora/learners.hpp"
#include "flora/local_hpo.hpp"
#include "flora/surface.hpp"

namespace flora {

enum class PartitionScheme { kIid, kDirichlet };

PartitionScheme parse_partition_scheme(const std::string& s);
std::string to_string(PartitionScheme s);

struct PartitionPlan {
  PartitionScheme scheme = PartitionScheme::kIid;
  int p = 1;
  double beta = 1.0;  // Dirichlet concentration, label-skew scheme only
  Seed seed = 0;
  // Every party must end up with at least max(2k, 20) rows.
  int cv_folds = 5;
  // Label-skew scheme: rows of each class reserved for every party before
  // the Dirichlet allocation, so that stratified CV stays possible. Defaults
  // to cv_folds when negative.
  int min_class_rows = -1;
};

// Disjoint row partition covering `data`. IID: seeded shuffle, even split
// with the remainder going to the lowest party indices. Label skew: party i
// draws a class-1 share q_i ~ Dirichlet(beta, beta) and every class is
// allocated across parties in proportion to those shares (largest
// remainder rounding). Each party's rows keep their source order.
std::vector<PartyDataset> partition(const PartyDataset& data, const PartitionPlan& plan);

enum class FinalMode { kPooledEmulation, kFedAvgLogReg };

FinalMode parse_final_mode(const std::string& s);
std::string to_string(FinalMode m);

struct FedAvgOptions {
  int rounds = 20;
};

// Training with the selected configuration. Pooled emulation trains the learner centrally on the
// row-concatenation of the parties. FedAvg runs `rounds` rounds of
// params.epochs local gradient steps per party followed by the
// sample-size-weighted average of the weight vectors.
TrainedModel final_train(FinalMode mode, const LearnerParams& params,
                         const std::vector<PartyDataset>& parties, Seed seed,
                         const FedAvgOptions& fedavg = {});

// In-process message queue standing in for the party -> aggregator link.
class Channel {
 public:
  struct Message {
    int party_id = 0;
    std::string payload;
  };

  void send(Message m);
  Message receive();

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Message> queue_;
};

struct FloraConfig {
  HpSpace space = gbdt_space();
  LearnerKind learner = LearnerKind::kGbdt;
  int T = 100;
  // Ship only the T' best trials when set.
  std::optional<int> t_prime;
  HpoOptions hpo;
  int cv_folds = 5;
  SurfaceMode mode = SurfaceMode::kAplm;
  SurfaceOptions surface;
  int pool_budget = 4096;
  FinalMode final_mode = FinalMode::kPooledEmulation;
  FedAvgOptions fedavg;
  Seed seed = 0;
  // Worker threads for the party phase; 1 runs parties sequentially.
  int parallel = 1;
};

// What the aggregator holds once every party has sent its log.
struct Collection {
  std::vector<TrialSet> trial_sets;      // ordered by party id
  std::vector<std::size_t> payload_bytes;  // serialized size per party

  std::size_t total_bytes() const;
};

// Party seed: seed XOR party_id (then mixed by the RNG).
Seed party_seed(Seed seed, int party_id);

// Every party runs local HPO on its own rows only, serializes its
// log and sends it through a Channel; the aggregator decodes the payloads.
Collection collect_trials(const std::vector<PartyDataset>& parties, const FloraConfig& config);

struct FederationRun {
  std::vector<TrialSet> trial_sets;
  std::vector<std::size_t> payload_bytes;
  std::shared_ptr<const SurfaceModel> surface;
  HpPoint selected;
  std::optional<TrainedModel> final_model;
  FinalMode final_mode = FinalMode::kPooledEmulation;
};

// Surface fit, selection and final training on an existing collection.
FederationRun aggregate_and_train(const Collection& collection,
                                  const std::vector<PartyDataset>& parties,
                                  const FloraConfig& config);

// The whole single-shot procedure.
FederationRun run_flora(const std::vector<PartyDataset>& parties, const FloraConfig& config);

}  // namespace flora
