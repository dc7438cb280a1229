#include "flora/rng.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace flora {

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::index(std::uint64_t n) {
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::gamma(double shape) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double Rng::beta(double a) {
  const double x = gamma(a);
  const double y = gamma(a);
  // Both draws can underflow to zero for very small shapes; the limit
  // distribution is then a fair coin between the two vertices.
  if (x + y <= 0.0) return uniform() < 0.5 ? 0.0 : 1.0;
  return x / (x + y);
}

}  // namespace flora
