#pragma once

#include "flora/dataset.hpp"

namespace flora::testing {

// Two well separated unit-variance blobs in `dims` dimensions.
inline PartyDataset separable(std::size_t n, Seed seed, std::size_t dims = 2) {
  SyntheticSpec s;
  s.n = n;
  s.informative = dims;
  s.separation = 4.0;
  s.seed = seed;
  return make_blobs(s);
}

inline PartyDataset noisy(std::size_t n, Seed seed) {
  SyntheticSpec s;
  s.n = n;
  s.informative = 3;
  s.noise_features = 3;
  s.separation = 0.7;
  s.clusters_per_class = 2;
  s.label_noise = 0.1;
  s.seed = seed;
  return make_blobs(s);
}

}  // namespace flora::testing
