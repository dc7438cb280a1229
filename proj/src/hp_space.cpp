#include "flora/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "flora/error.hpp"

namespace flora {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dimension(const HpDimension& d) {
  if (d.name.empty()) throw ValidationError("hp_space: dimension with empty name");
  std::visit(
      Overloaded{
          [&](const RealRange& r) {
            if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max))
              throw ValidationError("hp_space: dimension '" + d.name + "' needs finite min < max");
            if (r.scale == Scale::kLog && !(r.min > 0.0))
              throw ValidationError("hp_space: log-scaled dimension '" + d.name + "' needs min > 0");
          },
          [&](const IntRange& r) {
            if (!(r.min < r.max))
              throw ValidationError("hp_space: dimension '" + d.name + "' needs min < max");
            if (r.scale == Scale::kLog && r.min <= 0)
              throw ValidationError("hp_space: log-scaled dimension '" + d.name + "' needs min > 0");
          },
          [&](const CategorySet& c) {
            if (c.labels.size() < 2)
              throw ValidationError("hp_space: categorical dimension '" + d.name +
                                    "' needs at least 2 labels");
            std::set<std::string> seen(c.labels.begin(), c.labels.end());
            if (seen.size() != c.labels.size())
              throw ValidationError("hp_space: categorical dimension '" + d.name +
                                    "' has duplicate labels");
          },
      },
      d.kind);
}

bool dimension_contains(const HpDimension& d, double v) {
  if (!std::isfinite(v)) return false;
  return std::visit(
      Overloaded{
          [&](const RealRange& r) { return v >= r.min && v <= r.max; },
          [&](const IntRange& r) {
            return v == std::round(v) && v >= static_cast<double>(r.min) &&
                   v <= static_cast<double>(r.max);
          },
          [&](const CategorySet& c) {
            return v == std::round(v) && v >= 0.0 && v < static_cast<double>(c.labels.size());
          },
      },
      d.kind);
}

// Position of v inside [min, max] after the scale transform.
double to_unit(double v, double min, double max, Scale scale) {
  if (scale == Scale::kLog) return (std::log(v) - std::log(min)) / (std::log(max) - std::log(min));
  return (v - min) / (max - min);
}

double from_scaled(double u, double lo, double hi, Scale scale) {
  if (scale == Scale::kLog) return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  return lo + u * (hi - lo);
}

Scale parse_scale(const json& j, const std::string& name) {
  if (!j.contains("space")) return Scale::kLinear;
  const auto s = j.at("space").get<std::string>();
  if (s == "linear") return Scale::kLinear;
  if (s == "log") return Scale::kLog;
  throw ValidationError("hp_space: dimension '" + name + "' has unknown space '" + s + "'");
}

HpDimension parse_dimension(const std::string& name, const json& j) {
  if (!j.is_object()) throw ValidationError("hp_space: dimension '" + name + "' must be an object");
  const auto type = j.value("type", std::string{});
  HpDimension d{name, RealRange{}};
  if (type == "real") {
    const auto& r = j.at("range");
    d.kind = RealRange{r.at(0).get<double>(), r.at(1).get<double>(), parse_scale(j, name)};
  } else if (type == "int") {
    const auto& r = j.at("range");
    d.kind = IntRange{r.at(0).get<long long>(), r.at(1).get<long long>(), parse_scale(j, name)};
  } else if (type == "cat") {
    const auto& v = j.contains("values") ? j.at("values") : j.at("range");
    d.kind = CategorySet{v.get<std::vector<std::string>>()};
  } else {
    throw ValidationError("hp_space: dimension '" + name + "' has unknown type '" + type + "'");
  }
  return d;
}

}  // namespace

bool operator==(const RealRange& a, const RealRange& b) {
  return a.min == b.min && a.max == b.max && a.scale == b.scale;
}
bool operator==(const IntRange& a, const IntRange& b) {
  return a.min == b.min && a.max == b.max && a.scale == b.scale;
}
bool operator==(const CategorySet& a, const CategorySet& b) { return a.labels == b.labels; }
bool operator==(const HpDimension& a, const HpDimension& b) {
  return a.name == b.name && a.kind == b.kind;
}
bool operator==(const HpSpace& a, const HpSpace& b) { return a.dims_ == b.dims_; }

HpSpace::HpSpace(std::vector<HpDimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ValidationError("hp_space: a space needs at least one dimension");
  std::set<std::string> names;
  for (const auto& d : dims_) {
    check_dimension(d);
    if (!names.insert(d.name).second)
      throw ValidationError("hp_space: duplicate dimension name '" + d.name + "'");
    if (d.is_numeric()) {
      ++numeric_count_;
      ++encoded_width_;
    } else {
      encoded_width_ += std::get<CategorySet>(d.kind).labels.size();
    }
  }
}

std::size_t HpSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name == name) return i;
  throw ValidationError("hp_space: no dimension named '" + name + "'");
}

bool HpSpace::contains(const HpPoint& p) const {
  if (p.values.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (!dimension_contains(dims_[i], p.values[i])) return false;
  return true;
}

void HpSpace::validate(const HpPoint& p) const {
  if (p.values.size() != dims_.size())
    throw ValidationError("hp_space: point has " + std::to_string(p.values.size()) +
                          " values, space has " + std::to_string(dims_.size()) + " dimensions");
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (!dimension_contains(dims_[i], p.values[i]))
      throw ValidationError("hp_space: value " + std::to_string(p.values[i]) +
                            " is outside dimension '" + dims_[i].name + "'");
}

HpPoint HpSpace::from_unit(std::span<const double> unit) const {
  if (unit.size() != dims_.size())
    throw ValidationError("hp_space: unit vector arity does not match the space");
  HpPoint p;
  p.values.reserve(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const double u = std::clamp(unit[i], 0.0, 1.0);
    p.values.push_back(std::visit(
        Overloaded{
            [&](const RealRange& r) {
              return std::clamp(from_scaled(u, r.min, r.max, r.scale), r.min, r.max);
            },
            [&](const IntRange& r) {
              // Widen by half a step on each side so rounding gives every
              // integer (including the endpoints) an equal share.
              const double lo = static_cast<double>(r.min);
              const double hi = static_cast<double>(r.max);
              const double wlo = r.scale == Scale::kLog && lo - 0.5 <= 0.0 ? lo : lo - 0.5;
              const double v = std::round(from_scaled(u, wlo, hi + 0.5, r.scale));
              return std::clamp(v, lo, hi);
            },
            [&](const CategorySet& c) {
              const auto n = static_cast<double>(c.labels.size());
              return std::min(std::floor(u * n), n - 1.0);
            },
        },
        dims_[i].kind));
  }
  return p;
}

std::vector<double> HpSpace::encode(const HpPoint& p) const {
  const auto unit = normalize(*this, p);
  std::vector<double> out(encoded_width_, 0.0);
  std::copy(unit.begin(), unit.end(), out.begin());
  std::size_t offset = numeric_count_;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (const auto* c = std::get_if<CategorySet>(&dims_[i].kind)) {
      out[offset + static_cast<std::size_t>(p.values[i])] = 1.0;
      offset += c->labels.size();
    }
  }
  return out;
}

json HpSpace::point_to_json(const HpPoint& p) const {
  validate(p);
  json j = json::object();
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const double v = p.values[i];
    std::visit(Overloaded{
                   [&](const RealRange&) { j[dims_[i].name] = v; },
                   [&](const IntRange&) { j[dims_[i].name] = static_cast<long long>(v); },
                   [&](const CategorySet& c) {
                     j[dims_[i].name] = c.labels[static_cast<std::size_t>(v)];
                   },
               },
               dims_[i].kind);
  }
  return j;
}

HpPoint HpSpace::point_from_json(const json& j) const {
  if (!j.is_object()) throw ValidationError("hp_space: a point must be a JSON object");
  for (const auto& [key, _] : j.items()) index_of(key);
  HpPoint p;
  p.values.reserve(dims_.size());
  for (const auto& d : dims_) {
    if (!j.contains(d.name)) throw ValidationError("hp_space: point is missing '" + d.name + "'");
    const auto& v = j.at(d.name);
    if (const auto* c = std::get_if<CategorySet>(&d.kind)) {
      if (!v.is_string())
        throw ValidationError("hp_space: categorical '" + d.name + "' expects a label");
      const auto it = std::find(c->labels.begin(), c->labels.end(), v.get<std::string>());
      if (it == c->labels.end())
        throw ValidationError("hp_space: unknown label '" + v.get<std::string>() + "' for '" +
                              d.name + "'");
      p.values.push_back(static_cast<double>(it - c->labels.begin()));
    } else {
      if (!v.is_number()) throw ValidationError("hp_space: '" + d.name + "' expects a number");
      p.values.push_back(v.get<double>());
    }
  }
  validate(p);
  return p;
}

HpSpace HpSpace::from_json(const json& j) {
  std::vector<HpDimension> dims;
  if (j.is_array()) {
    for (const auto& item : j) {
      if (!item.is_object() || !item.contains("name"))
        throw ValidationError("hp_space: array entries need a 'name' field");
      dims.push_back(parse_dimension(item.at("name").get<std::string>(), item));
    }
  } else if (j.is_object()) {
    for (const auto& [name, item] : j.items()) dims.push_back(parse_dimension(name, item));
  } else {
    throw ValidationError("hp_space: space must be an array or an object");
  }
  return HpSpace(std::move(dims));
}

json HpSpace::to_json() const {
  json out = json::array();
  for (const auto& d : dims_) {
    json item{{"name", d.name}};
    std::visit(Overloaded{
                   [&](const RealRange& r) {
                     item["type"] = "real";
                     item["space"] = r.scale == Scale::kLog ? "log" : "linear";
                     item["range"] = {r.min, r.max};
                   },
                   [&](const IntRange& r) {
                     item["type"] = "int";
                     item["space"] = r.scale == Scale::kLog ? "log" : "linear";
                     item["range"] = {r.min, r.max};
                   },
                   [&](const CategorySet& c) {
                     item["type"] = "cat";
                     item["values"] = c.labels;
                   },
               },
               d.kind);
    out.push_back(std::move(item));
  }
  return out;
}

HpSpace gbdt_space() {
  return HpSpace({
      {"max_iter", IntRange{10, 200, Scale::kLinear}},
      {"learning_rate", RealRange{1e-3, 1.0, Scale::kLog}},
      {"min_samples_leaf", IntRange{1, 40, Scale::kLinear}},
      {"l2_regularization", RealRange{1e-4, 1.0, Scale::kLog}},
  });
}

HpSpace logreg_space() {
  return HpSpace({
      {"learning_rate", RealRange{1e-3, 1.0, Scale::kLog}},
      {"l2", RealRange{1e-5, 1.0, Scale::kLog}},
      {"epochs", IntRange{10, 200, Scale::kLinear}},
  });
}

HpSpace svm_space() {
  return HpSpace({
      {"C", RealRange{0.01, 1000.0, Scale::kLog}},
      {"gamma", RealRange{1e-5, 10.0, Scale::kLog}},
      {"tol", RealRange{1e-5, 1e-1, Scale::kLog}},
  });
}

HpSpace mlp_space() {
  return HpSpace({
      {"hidden_layer_sizes", IntRange{50, 200, Scale::kLinear}},
      {"alpha", RealRange{1e-5, 1e1, Scale::kLog}},
      {"learning_rate_init", RealRange{1e-5, 1e-1, Scale::kLog}},
  });
}

HpPoint sample(const HpSpace& space, Rng& rng) {
  std::vector<double> unit(space.size());
  for (auto& u : unit) u = rng.uniform();
  return space.from_unit(unit);
}

HpPoint sample(const HpSpace& space, Seed seed) {
  Rng rng(seed);
  return sample(space, rng);
}

std::vector<double> normalize(const HpSpace& space, const HpPoint& p) {
  space.validate(p);
  std::vector<double> out;
  out.reserve(space.numeric_count());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& kind = space.dims()[i].kind;
    if (const auto* r = std::get_if<RealRange>(&kind)) {
      out.push_back(to_unit(p.values[i], r->min, r->max, r->scale));
    } else if (const auto* n = std::get_if<IntRange>(&kind)) {
      out.push_back(to_unit(p.values[i], static_cast<double>(n->min), static_cast<double>(n->max),
                            n->scale));
    }
  }
  return out;
}

double categorical_distance(const HpSpace& space, const HpPoint& a, const HpPoint& b) {
  space.validate(a);
  space.validate(b);
  double hamming = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.dims()[i].is_categorical() && a.values[i] != b.values[i]) hamming += 1.0;
  return hamming;
}

double distance(const HpSpace& space, const HpPoint& a, const HpPoint& b,
                const DistanceParams& params) {
  if (!(params.rho >= 1.0)) throw ValidationError("hp_space: distance needs rho >= 1");
  const auto ua = normalize(space, a);
  const auto ub = normalize(space, b);
  double numeric = 0.0;
  if (std::isinf(params.rho)) {
    for (std::size_t i = 0; i < ua.size(); ++i) numeric = std::max(numeric, std::abs(ua[i] - ub[i]));
  } else {
    double acc = 0.0;
    for (std::size_t i = 0; i < ua.size(); ++i) acc += std::pow(std::abs(ua[i] - ub[i]), params.rho);
    numeric = std::pow(acc, 1.0 / params.rho);
  }
  return numeric + categorical_distance(space, a, b);
}

}  // namespace flora
