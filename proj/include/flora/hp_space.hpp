#pragma once

// Mixed real / integer / categorical hyper-parameter spaces.
//
// A point stores one double per dimension: the raw value for real
// dimensions, an integral value for integer dimensions and the category
// index for categorical dimensions. All types are immutable once built.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flora/rng.hpp"
#include "json.hpp"

namespace flora {

enum class Scale { kLinear, kLog };

struct RealRange {
  double min = 0.0;
  double max = 1.0;
  Scale scale = Scale::kLinear;
};

struct IntRange {
  long long min = 0;
  long long max = 1;
  Scale scale = Scale::kLinear;
};

struct CategorySet {
  std::vector<std::string> labels;
};

struct HpDimension {
  std::string name;
  std::variant<RealRange, IntRange, CategorySet> kind;

  bool is_categorical() const { return std::holds_alternative<CategorySet>(kind); }
  bool is_numeric() const { return !is_categorical(); }
};

struct HpPoint {
  std::vector<double> values;

  friend bool operator==(const HpPoint&, const HpPoint&) = default;
};

struct DistanceParams {
  double rho = 2.0;
};

class HpSpace {
 public:
  // Throws ValidationError on empty/duplicate names or malformed ranges.
  explicit HpSpace(std::vector<HpDimension> dims);

  const std::vector<HpDimension>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  std::size_t numeric_count() const { return numeric_count_; }
  std::size_t categorical_count() const { return dims_.size() - numeric_count_; }
  // Numeric coordinates followed by one-hot blocks, in dimension order.
  std::size_t encoded_width() const { return encoded_width_; }
  // Index of the named dimension; throws ValidationError if absent.
  std::size_t index_of(const std::string& name) const;

  void validate(const HpPoint& p) const;
  bool contains(const HpPoint& p) const;

  // Maps one unit coordinate per dimension onto the space. Numeric
  // dimensions go through the inverse scale transform (integers rounded),
  // categorical dimensions take floor(u * n_categories).
  HpPoint from_unit(std::span<const double> unit) const;

  // Regressor input: normalized numeric coordinates, then one-hot
  // categorical blocks.
  std::vector<double> encode(const HpPoint& p) const;

  // {name: value}; categorical values are emitted as their label.
  nlohmann::json point_to_json(const HpPoint& p) const;
  HpPoint point_from_json(const nlohmann::json& j) const;

  // Accepts either an array of {name, type, space, range|values} objects or
  // an object keyed by name (the black-box-optimization api_config layout).
  static HpSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  friend bool operator==(const HpSpace& a, const HpSpace& b);

 private:
  std::vector<HpDimension> dims_;
  std::size_t numeric_count_ = 0;
  std::size_t encoded_width_ = 0;
};

bool operator==(const RealRange& a, const RealRange& b);
bool operator==(const IntRange& a, const IntRange& b);
bool operator==(const CategorySet& a, const CategorySet& b);
bool operator==(const HpDimension& a, const HpDimension& b);

// Histogram-gradient-boosting search space (max_iter, learning_rate,
// min_samples_leaf, l2_regularization).
HpSpace gbdt_space();
// Search space for the full-batch logistic regression learner.
HpSpace logreg_space();
// Declared for surface-only experiments on synthetic objectives.
HpSpace svm_space();
HpSpace mlp_space();

HpPoint sample(const HpSpace& space, Rng& rng);
HpPoint sample(const HpSpace& space, Seed seed);

// Numeric dimensions only, each mapped to [0,1] (log dims in log domain).
// Throws ValidationError for out-of-bounds values.
std::vector<double> normalize(const HpSpace& space, const HpPoint& p);

// Shortest-path length between the categorical parts of a and b in the
// graph Cartesian product of the complete per-dimension category graphs.
//
// In a product graph a path moves along one factor per edge, so any path
// between a and b must spend at least one edge on every factor where the
// two nodes differ. Each factor is complete with unit edges, so one edge
// suffices per differing factor. The shortest path therefore equals the
// number of differing categorical coordinates (Hamming distance); the
// graph is never materialized.
double categorical_distance(const HpSpace& space, const HpPoint& a, const HpPoint& b);

// d(a, b) = || normalize(a) - normalize(b) ||_rho + categorical_distance(a, b).
double distance(const HpSpace& space, const HpPoint& a, const HpPoint& b,
                const DistanceParams& params = {});

}  // namespace flora
