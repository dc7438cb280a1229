#include "flora/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "flora/error.hpp"

namespace flora {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownFields = {
    "dataset",     "holdout_frac",  "partition",      "learner",
    "space",       "T",             "T_prime",        "strategy",
    "surface",     "final_mode",    "fedavg_rounds",  "cv_folds",
    "pool_budget", "centralized_hpo_budget",          "baseline_theta",
    "sweep",       "seeds",         "seed",           "diagnostics",
    "parallel"};

template <class T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config: field '" + key + "': " + e.what());
  }
}

void require_positive(int v, const std::string& key) {
  if (v < 1) throw ValidationError("config: '" + key + "' must be >= 1, got " + std::to_string(v));
}

json round6(const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      json out = json::object();
      for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round6(it.value());
      return out;
    }
    case json::value_t::array: {
      json out = json::array();
      for (const auto& v : j) out.push_back(round6(v));
      return out;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) return nullptr;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      const double r = std::strtod(buf, nullptr);
      return r == 0.0 ? 0.0 : r;  // no negative zero
    }
    default:
      return j;
  }
}

json matrix_json(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

// Truncation applied party-side to a cached full-budget collection; the
// payload sizes are recomputed from the re-serialized logs.
Collection truncated(const Collection& full, int t_prime, const HpSpace& space) {
  Collection out;
  for (const auto& ts : full.trial_sets) {
    auto cut = truncate_best(ts, t_prime);
    const auto wire = to_jsonl(cut, space);
    out.payload_bytes.push_back(wire.size());
    out.trial_sets.push_back(from_jsonl(wire, space));
  }
  return out;
}

}  // namespace

HpPoint default_baseline(LearnerKind learner, const HpSpace& space) {
  json theta;
  if (learner == LearnerKind::kGbdt) {
    theta = {{"max_iter", 100}, {"learning_rate", 0.1}, {"min_samples_leaf", 20}, {"l2_regularization", 0.0}};
  } else {
    theta = {{"learning_rate", 0.1}, {"l2", 1e-4}, {"epochs", 100}};
  }
  // Values outside a dimension's range (l2_regularization = 0 on a log
  // range) are clamped to the nearest bound.
  for (const auto& dim : space.dims()) {
    if (!theta.contains(dim.name))
      throw ValidationError("config: no default baseline value for '" + dim.name +
                            "'; set baseline_theta");
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, RealRange>) {
            theta[dim.name] = std::clamp(theta[dim.name].template get<double>(), k.min, k.max);
          } else if constexpr (std::is_same_v<K, IntRange>) {
            theta[dim.name] = std::clamp(theta[dim.name].template get<long long>(), k.min, k.max);
          }
        },
        dim.kind);
  }
  return space.point_from_json(theta);
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnownFields.contains(it.key())) throw ValidationError("config: unknown field '" + it.key() + "'");

  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!j.contains("dataset")) throw ValidationError("config: missing 'dataset'");
  c.dataset = j.at("dataset");
  c.holdout_frac = field(j, "holdout_frac", 0.2);
  if (!(c.holdout_frac > 0.0 && c.holdout_frac < 1.0))
    throw ValidationError("config: 'holdout_frac' must lie in (0, 1)");

  if (j.contains("partition")) {
    const auto& pj = j.at("partition");
    c.scheme = parse_partition_scheme(field<std::string>(pj, "scheme", "iid_random"));
    c.p = field(pj, "p", 3);
    c.beta = field(pj, "beta", 1.0);
    if (pj.contains("seed")) c.partition_seed = field<Seed>(pj, "seed", 0);
  }
  require_positive(c.p, "partition.p");
  if (!(c.beta > 0.0)) throw ValidationError("config: 'partition.beta' must be > 0");

  c.learner = parse_learner(field<std::string>(j, "learner", "gbdt"));
  c.space = j.contains("space") ? HpSpace::from_json(j.at("space"))
                                : (c.learner == LearnerKind::kGbdt ? gbdt_space() : logreg_space());
  c.T = field(j, "T", 100);
  require_positive(c.T, "T");
  if (j.contains("T_prime") && !j.at("T_prime").is_null()) {
    c.t_prime = field(j, "T_prime", 0);
    if (*c.t_prime < 1 || *c.t_prime > c.T) throw ValidationError("config: 'T_prime' must lie in [1, T]");
  }
  c.strategy = parse_strategy(field<std::string>(j, "strategy", "surrogate"));

  if (j.contains("surface")) {
    const auto& sj = j.at("surface");
    if (sj.contains("modes")) {
      c.modes.clear();
      for (const auto& m : sj.at("modes")) c.modes.push_back(parse_surface_mode(m.get<std::string>()));
    } else if (sj.contains("mode")) {
      c.modes = {parse_surface_mode(field<std::string>(sj, "mode", "APLM"))};
    }
    c.alpha = field(sj, "alpha", 1.0);
  }
  if (c.modes.empty()) throw ValidationError("config: 'surface.modes' is empty");
  if (!(c.alpha > 0.0)) throw ValidationError("config: 'surface.alpha' must be > 0");

  c.final_mode = parse_final_mode(field<std::string>(j, "final_mode", "pooled_emulation"));
  if (c.final_mode == FinalMode::kFedAvgLogReg && c.learner != LearnerKind::kLogReg)
    throw ValidationError("config: final_mode fedavg_logreg requires learner logreg");
  c.fedavg_rounds = field(j, "fedavg_rounds", 20);
  require_positive(c.fedavg_rounds, "fedavg_rounds");
  c.cv_folds = field(j, "cv_folds", 5);
  if (c.cv_folds < 2) throw ValidationError("config: 'cv_folds' must be >= 2");
  c.pool_budget = field(j, "pool_budget", 4096);
  require_positive(c.pool_budget, "pool_budget");
  c.centralized_hpo_budget = field(j, "centralized_hpo_budget", 200);
  require_positive(c.centralized_hpo_budget, "centralized_hpo_budget");

  if (j.contains("baseline_theta")) {
    c.baseline_theta = c.space.point_from_json(j.at("baseline_theta"));
  } else {
    c.baseline_theta = default_baseline(c.learner, c.space);
  }
  if (!c.space.contains(c.baseline_theta))
    throw ValidationError("config: 'baseline_theta' lies outside the search space");

  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const auto& sj = j.at("sweep");
    Sweep s;
    s.param = field<std::string>(sj, "param", "");
    s.values = field<std::vector<int>>(sj, "values", {});
    if (s.param != "p" && s.param != "T" && s.param != "T_prime")
      throw ValidationError("config: 'sweep.param' must be p, T or T_prime");
    for (int v : s.values) {
      require_positive(v, "sweep.values");
      if (s.param == "T_prime" && v > c.T) throw ValidationError("config: sweep T_prime value exceeds T");
      if (s.param == "T" && c.t_prime && *c.t_prime > v)
        throw ValidationError("config: sweep T value below T_prime");
    }
    if (!s.values.empty()) c.sweep = std::move(s);
  }

  if (j.contains("seeds")) c.seed = field<Seed>(j.at("seeds"), "experiment", 0);
  if (j.contains("seed")) c.seed = field<Seed>(j, "seed", 0);

  if (j.contains("diagnostics")) {
    const auto& dj = j.at("diagnostics");
    c.beta_tilde = field(dj, "beta_tilde", 1.0);
    c.projections = field(dj, "projections", 50);
    c.rho = field(dj, "rho", 2.0);
  }
  require_positive(c.projections, "diagnostics.projections");
  if (!(c.rho >= 1.0)) throw ValidationError("config: 'diagnostics.rho' must be >= 1");
  c.parallel = field(j, "parallel", 1);
  require_positive(c.parallel, "parallel");
  return c;
}

json ExperimentConfig::to_json() const {
  json j{{"dataset", dataset},
         {"holdout_frac", holdout_frac},
         {"partition", {{"scheme", flora::to_string(scheme)}, {"p", p}, {"beta", beta}}},
         {"learner", flora::to_string(learner)},
         {"space", space.to_json()},
         {"T", T},
         {"T_prime", t_prime ? json(*t_prime) : json(nullptr)},
         {"strategy", flora::to_string(strategy)},
         {"final_mode", flora::to_string(final_mode)},
         {"fedavg_rounds", fedavg_rounds},
         {"cv_folds", cv_folds},
         {"pool_budget", pool_budget},
         {"centralized_hpo_budget", centralized_hpo_budget},
         {"baseline_theta", space.point_to_json(baseline_theta)},
         {"seeds", {{"experiment", seed}}},
         {"diagnostics", {{"beta_tilde", beta_tilde}, {"projections", projections}, {"rho", rho}}}};
  json modes_json = json::array();
  for (auto m : modes) modes_json.push_back(flora::to_string(m));
  j["surface"] = {{"modes", modes_json}, {"alpha", alpha}};
  if (partition_seed) j["partition"]["seed"] = *partition_seed;
  j["sweep"] = sweep ? json{{"param", sweep->param}, {"values", sweep->values}} : json(nullptr);
  return j;
}

PartyDataset load_dataset(const ExperimentConfig& config) {
  const auto& d = config.dataset;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? config.base_dir / path : path;
  };
  if (d.is_string()) return ingest_csv(resolve(d.get<std::string>()));
  if (d.is_object() && d.contains("csv")) return ingest_csv(resolve(d.at("csv").get<std::string>()));
  if (d.is_object() && d.contains("synthetic")) return make_blobs(SyntheticSpec::from_json(d.at("synthetic")));
  throw ValidationError("config: 'dataset' must be a csv path, {\"csv\": path} or {\"synthetic\": {...}}");
}

json run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const Seed holdout_seed = derive_seed(c.seed, 1);
  const Seed partition_seed = c.partition_seed.value_or(derive_seed(c.seed, 2));
  const Seed central_seed = derive_seed(c.seed, 3);
  const Seed flora_seed = derive_seed(c.seed, 4);
  const Seed diag_seed = derive_seed(c.seed, 5);
  const Seed train_seed = derive_seed(c.seed, 6);

  const auto data = load_dataset(c);
  auto [train_rows, holdout] = split_holdout(data, c.holdout_frac, holdout_seed);
  if (!holdout.has_both_classes()) throw ValidationError("experiment: holdout lacks one of the classes");

  HpoOptions hpo;
  hpo.strategy = c.strategy;

  // Reference configuration from HPO on the pooled training rows.
  const PartyDataset& pooled = train_rows;
  const Seed central_cv = derive_seed(central_seed, 1);
  Objective central_objective = [&](const HpPoint& theta) {
    return cv_loss(learner_params(c.learner, c.space, theta), pooled, c.cv_folds, central_cv);
  };
  const auto central = run_local_hpo(c.space, central_objective, c.centralized_hpo_budget, hpo, central_seed);
  const HpPoint theta_star = central.best().point;

  std::vector<int> values;
  if (c.sweep) values = c.sweep->values;
  else values.push_back(0);

  FedAvgOptions fedavg{c.fedavg_rounds};
  BoundOptions bound_opts;
  bound_opts.beta_tilde = c.beta_tilde;
  bound_opts.projections = c.projections;
  bound_opts.seed = diag_seed;
  bound_opts.distance.rho = c.rho;

  std::map<std::pair<int, int>, Collection> cache;  // (p, T) -> full-budget logs
  json rows = json::array();
  for (int v : values) {
    int p = c.p;
    int T = c.T;
    std::optional<int> t_prime = c.t_prime;
    if (c.sweep) {
      if (c.sweep->param == "p") p = v;
      else if (c.sweep->param == "T") T = v;
      else t_prime = v;
    }

    PartitionPlan plan;
    plan.scheme = c.scheme;
    plan.p = p;
    plan.beta = c.beta;
    plan.seed = partition_seed;
    plan.cv_folds = c.cv_folds;
    const auto parties = partition(train_rows, plan);

    auto holdout_metric = [&](const TrainedModel& model) { return balanced_accuracy(model, holdout); };
    auto metric_of = [&](const HpPoint& theta) {
      return holdout_metric(
          final_train(c.final_mode, learner_params(c.learner, c.space, theta), parties, train_seed, fedavg));
    };
    const double a_star = metric_of(theta_star);
    const double b = metric_of(c.baseline_theta);
    const bool headroom = a_star > b;

    FloraConfig fc;
    fc.space = c.space;
    fc.learner = c.learner;
    fc.T = T;
    fc.hpo = hpo;
    fc.cv_folds = c.cv_folds;
    fc.surface.alpha = c.alpha;
    fc.pool_budget = c.pool_budget;
    fc.final_mode = c.final_mode;
    fc.fedavg = fedavg;
    fc.seed = flora_seed;
    fc.parallel = c.parallel;

    const auto key = std::make_pair(p, T);
    if (!cache.contains(key)) cache.emplace(key, collect_trials(parties, fc));
    const Collection shipped = t_prime ? truncated(cache.at(key), *t_prime, c.space) : cache.at(key);

    std::vector<double> best_losses;
    for (const auto& ts : shipped.trial_sets) best_losses.push_back(ts.best_loss());
    std::vector<double> untruncated_best;
    for (const auto& ts : cache.at(key).trial_sets) untruncated_best.push_back(ts.best_loss());
    std::vector<std::size_t> party_rows;
    for (const auto& party : parties) party_rows.push_back(party.rows());
    const auto w1 = w1_matrix(parties, c.projections, diag_seed);
    double w1_mean = 0.0;
    if (parties.size() > 1) {
      for (std::size_t i = 0; i < parties.size(); ++i)
        for (std::size_t k = i + 1; k < parties.size(); ++k) w1_mean += w1[i][k];
      w1_mean /= static_cast<double>(parties.size() * (parties.size() - 1) / 2);
    }

    json per_surface = json::object();
    for (auto mode : c.modes) {
      fc.mode = mode;
      const auto run = aggregate_and_train(shipped, parties, fc);
      const double a = holdout_metric(*run.final_model);
      const auto bound = bound_report(*run.surface, run.trial_sets, w1, party_rows, run.selected, bound_opts);
      per_surface[to_string(mode)] = {
          {"selected_theta", c.space.point_to_json(run.selected)},
          {"metric", a},
          {"relative_regret", headroom ? json(relative_regret({a_star, b, a})) : json(nullptr)},
          {"surface", run.surface->descriptor()},
          {"bound", to_json(bound, c.space)}};
    }

    double gamma = 0.0;
    json gamma_json = nullptr;
    try {
      gamma = gamma_p(best_losses);
      gamma_json = gamma;
    } catch (const ValidationError&) {
    }

    rows.push_back({{"sweep_value", c.sweep ? json(v) : json(nullptr)},
                    {"p", p},
                    {"T", T},
                    {"T_prime", t_prime ? json(*t_prime) : json(nullptr)},
                    {"a_star", a_star},
                    {"baseline_metric", b},
                    {"headroom", headroom},
                    {"status", headroom ? "ok" : "no headroom"},
                    {"gamma_p", gamma_json},
                    {"party_best_losses", best_losses},
                    {"party_best_losses_untruncated", untruncated_best},
                    {"party_rows", party_rows},
                    {"payload_bytes", shipped.payload_bytes},
                    {"comm_bytes", shipped.total_bytes()},
                    {"w1_matrix", matrix_json(w1)},
                    {"w1_mean", w1_mean},
                    {"per_surface", per_surface}});
  }

  json report{
      {"config", c.to_json()},
      {"seeds",
       {{"experiment", c.seed},
        {"holdout", holdout_seed},
        {"partition", partition_seed},
        {"centralized", central_seed},
        {"flora", flora_seed},
        {"diagnostics", diag_seed}}},
      {"dataset",
       {{"name", data.name},
        {"n_train", train_rows.rows()},
        {"n_holdout", holdout.rows()},
        {"n_features", data.n_features}}},
      {"centralized",
       {{"theta", c.space.point_to_json(theta_star)},
        {"best_cv_loss", central.best_loss()},
        {"budget", c.centralized_hpo_budget}}},
      {"baseline", {{"theta", c.space.point_to_json(c.baseline_theta)}}},
      {"distance", {{"rho", c.rho}, {"categorical", "hamming"}}},
      {"metric", "holdout balanced accuracy"},
      {"rows", rows},
      {"caveats",
       {"a_star and baseline_metric use the same final training as the federated run on each row's parties",
        "relative_regret is null when a_star <= baseline_metric (no headroom)"}}};
  if (c.timing) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report["wall_clock_seconds"] = dt.count();
  }
  return report;
}

std::string canonical_dump(const json& report) { return round6(report).dump(2) + "\n"; }

void emit_report(const json& report, const std::filesystem::path& path) {
  const auto text = canonical_dump(report);
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write report to " + path.string());
  out << text;
  if (!out) throw RuntimeError("failed writing report to " + path.string());
}

}  // namespace flora
