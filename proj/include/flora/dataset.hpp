#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flora/rng.hpp"
#include "json.hpp"

namespace flora {

// Binary-labelled feature matrix held by one party (row-major).
struct PartyDataset {
  std::string name;
  std::size_t n_features = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
  std::array<std::size_t, 2> class_counts() const;
  bool has_both_classes() const;

  // Throws ValidationError on shape mismatch, non-finite values or labels
  // outside {0, 1}.
  void validate() const;

  PartyDataset subset(std::span<const std::size_t> indices) const;
  void append_row(std::span<const double> x, int y);
};

// Row-concatenation in the given order.
PartyDataset concat(std::span<const PartyDataset> parts, std::string name = "pooled");

// Gaussian-blob binary task. Each class is a mixture of `clusters_per_class`
// unit-variance blobs centred on distinct vertices of a hypercube with side
// 2 * separation in the informative subspace; smaller separation means more
// class overlap. Noise features are pure N(0, 1).
struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t n = 1000;
  std::size_t informative = 2;
  std::size_t noise_features = 0;
  double separation = 2.0;
  std::size_t clusters_per_class = 1;
  double positive_fraction = 0.5;
  double label_noise = 0.0;
  Seed seed = 0;

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

PartyDataset make_blobs(const SyntheticSpec& spec);

// Last column is the label; a non-numeric first row is treated as a header.
// Throws ValidationError naming the offending (1-based) row numbers.
PartyDataset ingest_csv(const std::filesystem::path& path);
void write_csv(const PartyDataset& data, const std::filesystem::path& path);

// Splits off a stratified holdout of round(frac * n_c) rows per class.
// Returns {train, holdout}.
std::pair<PartyDataset, PartyDataset> split_holdout(const PartyDataset& data, double frac,
                                                    Seed seed);

}  // namespace flora
