#include "flora/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "flora/error.hpp"

namespace flora {
namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

// Splits `total` into integer parts proportional to `weights`, largest
// remainder first (ties to the lower index).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> w = weights;
  if (!(sum > 0.0)) std::fill(w.begin(), w.end(), 1.0);
  const double norm = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = static_cast<double>(total) * w[i] / norm;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

std::size_t min_party_rows(const PartitionPlan& plan) {
  return static_cast<std::size_t>(std::max(2 * plan.cv_folds, 20));
}

}  // namespace

PartitionScheme parse_partition_scheme(const std::string& s) {
  if (s == "iid" || s == "iid_random") return PartitionScheme::kIid;
  if (s == "dirichlet" || s == "dirichlet_label_skew") return PartitionScheme::kDirichlet;
  throw ValidationError("unknown partition scheme '" + s + "'");
}

std::string to_string(PartitionScheme s) {
  return s == PartitionScheme::kIid ? "iid_random" : "dirichlet_label_skew";
}

std::vector<PartyDataset> partition(const PartyDataset& data, const PartitionPlan& plan) {
  if (plan.p < 1) throw ValidationError("partition: p must be at least 1");
  const auto p = static_cast<std::size_t>(plan.p);
  const std::size_t n = data.rows();
  if (n < p * min_party_rows(plan))
    throw ValidationError("partition: " + std::to_string(n) + " rows cannot give " +
                          std::to_string(p) + " parties at least " +
                          std::to_string(min_party_rows(plan)) + " rows each");
  Rng rng(plan.seed);
  std::vector<std::vector<std::size_t>> assigned(p);

  if (plan.scheme == PartitionScheme::kIid) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (p > 1) shuffle(idx, rng);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t size = n / p + (i < n % p ? 1 : 0);
      assigned[i].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                         idx.begin() + static_cast<std::ptrdiff_t>(pos + size));
      pos += size;
    }
  } else {
    if (!(plan.beta > 0.0)) throw ValidationError("partition: dirichlet beta must be > 0");
    const auto floor_rows =
        static_cast<std::size_t>(plan.min_class_rows >= 0 ? plan.min_class_rows : plan.cv_folds);
    std::vector<double> share1(p);
    for (auto& q : share1) q = rng.beta(plan.beta);
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (data.labels[i] == cls) idx.push_back(i);
      if (idx.size() < p * floor_rows)
        throw ValidationError("partition: class " + std::to_string(cls) + " has too few rows for " +
                              std::to_string(floor_rows) + " per party");
      shuffle(idx, rng);
      std::vector<double> w(p);
      for (std::size_t i = 0; i < p; ++i) w[i] = cls == 1 ? share1[i] : 1.0 - share1[i];
      const auto extra = apportion(idx.size() - p * floor_rows, w);
      std::size_t pos = 0;
      for (std::size_t i = 0; i < p; ++i) {
        const std::size_t take = floor_rows + extra[i];
        assigned[i].insert(assigned[i].end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                           idx.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
      }
    }
  }

  std::vector<PartyDataset> parties;
  parties.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (assigned[i].size() < min_party_rows(plan))
      throw ValidationError("partition: party " + std::to_string(i) + " received only " +
                            std::to_string(assigned[i].size()) + " rows");
    std::sort(assigned[i].begin(), assigned[i].end());
    auto part = data.subset(assigned[i]);
    part.name = data.name + "/party" + std::to_string(i);
    parties.push_back(std::move(part));
  }
  return parties;
}

FinalMode parse_final_mode(const std::string& s) {
  if (s == "pooled_emulation" || s == "pooled") return FinalMode::kPooledEmulation;
  if (s == "fedavg_logreg" || s == "fedavg") return FinalMode::kFedAvgLogReg;
  throw ValidationError("unknown final_mode '" + s + "'");
}

std::string to_string(FinalMode m) {
  return m == FinalMode::kPooledEmulation ? "pooled_emulation" : "fedavg_logreg";
}

TrainedModel final_train(FinalMode mode, const LearnerParams& params,
                         const std::vector<PartyDataset>& parties, Seed seed,
                         const FedAvgOptions& fedavg) {
  if (parties.empty()) throw ValidationError("final_train: no parties");
  if (mode == FinalMode::kPooledEmulation) return train(params, concat(parties), seed);

  const auto* lr = std::get_if<LogRegParams>(&params);
  if (lr == nullptr) throw ValidationError("final_train: fedavg_logreg requires the logreg learner");
  if (fedavg.rounds < 1) throw ValidationError("final_train: fedavg rounds must be >= 1");
  if (!concat(parties).has_both_classes()) throw ValidationError("final_train: degenerate labels");
  const std::size_t m = parties.front().n_features;
  double n_total = 0.0;
  for (const auto& party : parties) {
    party.validate();
    if (party.n_features != m) throw ValidationError("final_train: parties disagree on features");
    n_total += static_cast<double>(party.rows());
  }
  LogRegModel global;
  global.weights.assign(m + 1, 0.0);
  for (int round = 0; round < fedavg.rounds; ++round) {
    std::vector<double> next(m + 1, 0.0);
    for (const auto& party : parties) {
      const auto local = logreg_steps(*lr, party, global);
      const double w = static_cast<double>(party.rows()) / n_total;
      for (std::size_t f = 0; f <= m; ++f) next[f] += w * local.weights[f];
    }
    global.weights = std::move(next);
  }
  return TrainedModel(std::move(global));
}

void Channel::send(Message m) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(m));
  }
  ready_.notify_one();
}

Channel::Message Channel::receive() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [&] { return !queue_.empty(); });
  auto m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

std::size_t Collection::total_bytes() const {
  return std::accumulate(payload_bytes.begin(), payload_bytes.end(), std::size_t{0});
}

Seed party_seed(Seed seed, int party_id) { return seed ^ static_cast<Seed>(party_id); }

Collection collect_trials(const std::vector<PartyDataset>& parties, const FloraConfig& config) {
  if (parties.empty()) throw ValidationError("flora: needs at least one party");
  if (config.T < 1) throw ValidationError("flora: T must be at least 1");
  if (config.t_prime && (*config.t_prime < 1 || *config.t_prime > config.T))
    throw ValidationError("flora: T' must lie in [1, T]");

  Channel channel;
  // Local HPO at one party, then its single send. The objective closure
  // captures only this party's rows.
  auto run_party = [&](std::size_t i) {
    const PartyDataset& local = parties[i];
    const int id = static_cast<int>(i);
    const Seed seed = party_seed(config.seed, id);
    const Seed cv_seed = derive_seed(seed, 1);
    Objective objective = [&local, &config, cv_seed](const HpPoint& theta) {
      return cv_loss(learner_params(config.learner, config.space, theta), local, config.cv_folds,
                     cv_seed);
    };
    auto trials = run_local_hpo(config.space, objective, config.T, config.hpo, seed, id);
    if (config.t_prime) trials = truncate_best(trials, *config.t_prime);
    channel.send({id, to_jsonl(trials, config.space)});
  };

  const std::size_t p = parties.size();
  const auto workers = static_cast<std::size_t>(std::clamp(config.parallel, 1, static_cast<int>(p)));
  std::vector<std::exception_ptr> errors(p);
  auto guarded = [&](std::size_t i) {
    try {
      run_party(i);
    } catch (...) {
      errors[i] = std::current_exception();
      channel.send({static_cast<int>(i), {}});
    }
  };
  std::vector<std::thread> pool;
  if (workers == 1) {
    for (std::size_t i = 0; i < p; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < p; i = next++) guarded(i);
      });
  }

  Collection out;
  out.trial_sets.resize(p);
  out.payload_bytes.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    auto msg = channel.receive();
    const auto i = static_cast<std::size_t>(msg.party_id);
    out.payload_bytes[i] = msg.payload.size();
    if (!errors[i]) out.trial_sets[i] = from_jsonl(msg.payload, config.space);
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

FederationRun aggregate_and_train(const Collection& collection,
                                  const std::vector<PartyDataset>& parties,
                                  const FloraConfig& config) {
  FederationRun run;
  run.trial_sets = collection.trial_sets;
  run.payload_bytes = collection.payload_bytes;
  run.final_mode = config.final_mode;
  const Seed agg_seed = derive_seed(config.seed, 0xa66);
  run.surface = std::make_shared<const SurfaceModel>(
      build_surface(config.mode, config.space, run.trial_sets, agg_seed, config.surface));
  run.selected = minimize_surface(*run.surface, config.pool_budget, derive_seed(agg_seed, 1));
  run.final_model = final_train(config.final_mode,
                                learner_params(config.learner, config.space, run.selected), parties,
                                derive_seed(agg_seed, 2), config.fedavg);
  return run;
}

FederationRun run_flora(const std::vector<PartyDataset>& parties, const FloraConfig& config) {
  return aggregate_and_train(collect_trials(parties, config), parties, config);
}

}  // namespace flora
