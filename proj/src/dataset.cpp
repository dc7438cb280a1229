#include "flora/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "flora/error.hpp"

namespace flora {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

std::array<std::size_t, 2> PartyDataset::class_counts() const {
  std::array<std::size_t, 2> c{0, 0};
  for (int y : labels) ++c[y == 1 ? 1 : 0];
  return c;
}

bool PartyDataset::has_both_classes() const {
  const auto c = class_counts();
  return c[0] > 0 && c[1] > 0;
}

void PartyDataset::validate() const {
  if (labels.empty()) throw ValidationError("dataset '" + name + "' has no rows");
  if (features.size() != labels.size() * n_features)
    throw ValidationError("dataset '" + name + "' feature matrix does not match its label count");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("dataset '" + name + "' row " + std::to_string(i + 1) +
                            " has a non-binary label");
  for (double v : features)
    if (!std::isfinite(v)) throw ValidationError("dataset '" + name + "' has non-finite features");
}

PartyDataset PartyDataset::subset(std::span<const std::size_t> indices) const {
  PartyDataset out{name, n_features, {}, {}};
  out.features.reserve(indices.size() * n_features);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.append_row(row(i), labels[i]);
  return out;
}

void PartyDataset::append_row(std::span<const double> x, int y) {
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(y);
}

PartyDataset concat(std::span<const PartyDataset> parts, std::string name) {
  PartyDataset out{std::move(name), parts.empty() ? 0 : parts.front().n_features, {}, {}};
  for (const auto& p : parts) {
    if (p.n_features != out.n_features)
      throw ValidationError("concat: datasets disagree on the feature count");
    out.features.insert(out.features.end(), p.features.begin(), p.features.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.name = j.value("name", s.name);
  s.n = j.value("n", s.n);
  s.informative = j.value("informative", s.informative);
  s.noise_features = j.value("noise_features", s.noise_features);
  s.separation = j.value("separation", s.separation);
  s.clusters_per_class = j.value("clusters_per_class", s.clusters_per_class);
  s.positive_fraction = j.value("positive_fraction", s.positive_fraction);
  s.label_noise = j.value("label_noise", s.label_noise);
  s.seed = j.value("seed", s.seed);
  return s;
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"name", name},
          {"n", n},
          {"informative", informative},
          {"noise_features", noise_features},
          {"separation", separation},
          {"clusters_per_class", clusters_per_class},
          {"positive_fraction", positive_fraction},
          {"label_noise", label_noise},
          {"seed", seed}};
}

PartyDataset make_blobs(const SyntheticSpec& spec) {
  if (spec.n < 2) throw ValidationError("synthetic: n must be at least 2");
  if (spec.informative < 1 || spec.informative > 30)
    throw ValidationError("synthetic: informative must be in [1, 30]");
  if (spec.clusters_per_class < 1) throw ValidationError("synthetic: clusters_per_class >= 1");
  if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0))
    throw ValidationError("synthetic: positive_fraction must be in (0, 1)");
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 0.5))
    throw ValidationError("synthetic: label_noise must be in [0, 0.5]");
  const std::size_t n_clusters = 2 * spec.clusters_per_class;
  if (spec.informative < 63 && (std::uint64_t{1} << spec.informative) < n_clusters)
    throw ValidationError("synthetic: not enough hypercube vertices for the requested clusters");

  Rng rng(spec.seed);
  // Distinct vertices of {-1, +1}^informative, the first half for class 0.
  std::vector<std::uint64_t> vertices;
  std::set<std::uint64_t> used;
  const std::uint64_t n_vertices = std::uint64_t{1} << spec.informative;
  while (vertices.size() < n_clusters) {
    const auto v = rng.index(n_vertices);
    if (used.insert(v).second) vertices.push_back(v);
  }

  const auto n1 = static_cast<std::size_t>(std::lround(spec.positive_fraction * spec.n));
  std::vector<int> labels(spec.n, 0);
  std::fill(labels.end() - static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(n1, 1, spec.n - 1)),
            labels.end(), 1);
  shuffle(labels, rng);

  PartyDataset out{spec.name, spec.informative + spec.noise_features, {}, {}};
  out.features.reserve(spec.n * out.n_features);
  out.labels.reserve(spec.n);
  std::vector<double> x(out.n_features);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int y = labels[i];
    const auto cluster = rng.index(spec.clusters_per_class);
    const auto vertex = vertices[static_cast<std::size_t>(y) * spec.clusters_per_class + cluster];
    for (std::size_t f = 0; f < spec.informative; ++f) {
      const double sign = ((vertex >> f) & 1U) ? 1.0 : -1.0;
      x[f] = sign * spec.separation + rng.normal();
    }
    for (std::size_t f = spec.informative; f < out.n_features; ++f) x[f] = rng.normal();
    const bool flip = spec.label_noise > 0.0 && rng.uniform() < spec.label_noise;
    out.append_row(x, flip ? 1 - y : y);
  }
  return out;
}

PartyDataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("csv: cannot open '" + path.string() + "'");
  PartyDataset out{path.stem().string(), 0, {}, {}};
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<std::size_t> bad_rows;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    row.assign(cells.size(), 0.0);
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c) numeric = parse_double(cells[c], row[c]) && numeric;
    if (width == 0) {
      if (cells.size() < 2) throw ValidationError("csv: need at least one feature and a label column");
      width = cells.size();
      if (!numeric) continue;  // header
    }
    if (cells.size() != width || !numeric) {
      bad_rows.push_back(line_no);
      continue;
    }
    const double y = row.back();
    if (y != 0.0 && y != 1.0)
      throw ValidationError("csv: row " + std::to_string(line_no) + " has label '" + cells.back() +
                            "', expected 0 or 1");
    out.append_row(std::span<const double>(row.data(), width - 1), static_cast<int>(y));
  }
  if (!bad_rows.empty()) {
    std::string msg = "csv: unparseable rows:";
    for (std::size_t i = 0; i < bad_rows.size() && i < 20; ++i) msg += " " + std::to_string(bad_rows[i]);
    if (bad_rows.size() > 20) msg += " ...";
    throw ValidationError(msg);
  }
  out.n_features = width - 1;
  out.validate();
  return out;
}

void write_csv(const PartyDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("csv: cannot write '" + path.string() + "'");
  for (std::size_t f = 0; f < data.n_features; ++f) out << 'x' << f << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << data.labels[i] << '\n';
  }
}

std::pair<PartyDataset, PartyDataset> split_holdout(const PartyDataset& data, double frac,
                                                    Seed seed) {
  if (!(frac >= 0.0 && frac < 1.0)) throw ValidationError("holdout_frac must be in [0, 1)");
  Rng rng(seed);
  std::vector<std::size_t> train_idx, hold_idx;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (data.labels[i] == cls) idx.push_back(i);
    shuffle(idx, rng);
    const auto n_hold = static_cast<std::size_t>(std::lround(frac * static_cast<double>(idx.size())));
    hold_idx.insert(hold_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  auto train = data.subset(train_idx);
  auto hold = data.subset(hold_idx);
  hold.name = data.name + "/holdout";
  return {std::move(train), std::move(hold)};
}

}  // namespace flora
