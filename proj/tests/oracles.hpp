#pragma once

// Brute-force reference implementations used by the tests. None of them
// shares code with the library beyond its public types.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <vector>

#include "flora/hp_space.hpp"
#include "flora/regressors.hpp"

namespace flora::oracles {

// Every tuple of 1..max_dims category counts, each in 2..max_categories.
inline std::vector<std::vector<int>> small_category_shapes(int max_dims, int max_categories) {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> frontier{{}};
  for (int d = 1; d <= max_dims; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : frontier)
      for (int c = 2; c <= max_categories; ++c) {
        auto s = prefix;
        s.push_back(c);
        next.push_back(s);
        out.push_back(s);
      }
    frontier = std::move(next);
  }
  return out;
}

// Builds the Cartesian product of complete graphs explicitly (vertices are
// mixed-radix codes) and compares BFS hop counts against
// categorical_distance on every pair. Returns the number of mismatches.
inline int bfs_mismatches(const HpSpace& space) {
  std::vector<int> radix;
  for (const auto& d : space.dims()) radix.push_back(static_cast<int>(std::get<CategorySet>(d.kind).labels.size()));
  int total = 1;
  for (int r : radix) total *= r;
  auto decode = [&](int code) {
    HpPoint p;
    for (int r : radix) {
      p.values.push_back(code % r);
      code /= r;
    }
    return p;
  };
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(total));
  for (int a = 0; a < total; ++a)
    for (int b = 0; b < total; ++b) {
      const auto pa = decode(a), pb = decode(b);
      int diff = 0;
      for (std::size_t k = 0; k < radix.size(); ++k) diff += pa.values[k] != pb.values[k];
      if (diff == 1) adj[static_cast<std::size_t>(a)].push_back(b);
    }
  int mismatches = 0;
  for (int s = 0; s < total; ++s) {
    std::vector<int> dist(static_cast<std::size_t>(total), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
    }
    for (int t = 0; t < total; ++t)
      if (categorical_distance(space, decode(s), decode(t)) != dist[static_cast<std::size_t>(t)]) ++mismatches;
  }
  return mismatches;
}

// W1 between uniform empirical measures as a min-cost transport problem:
// source i supplies ys.size() units, sink j demands xs.size() units, cost
// |x_i - y_j| per unit. Solved by successive shortest paths.
inline double transport_w1(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int n = static_cast<int>(xs.size()), m = static_cast<int>(ys.size());
  const int src = n + m, dst = n + m + 1, nodes = n + m + 2;
  struct Edge {
    int to, rev;
    long cap;
    double cost;
  };
  std::vector<std::vector<Edge>> g(static_cast<std::size_t>(nodes));
  auto add = [&](int u, int v, long cap, double cost) {
    g[static_cast<std::size_t>(u)].push_back({v, static_cast<int>(g[static_cast<std::size_t>(v)].size()), cap, cost});
    g[static_cast<std::size_t>(v)].push_back({u, static_cast<int>(g[static_cast<std::size_t>(u)].size()) - 1, 0, -cost});
  };
  for (int i = 0; i < n; ++i) add(src, i, m, 0.0);
  for (int j = 0; j < m; ++j) add(n + j, dst, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) add(i, n + j, static_cast<long>(n) * m, std::abs(xs[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)]));

  double cost = 0.0;
  long flow = 0;
  const long need = static_cast<long>(n) * m;
  while (flow < need) {
    std::vector<double> dist(static_cast<std::size_t>(nodes), std::numeric_limits<double>::infinity());
    std::vector<int> pv(static_cast<std::size_t>(nodes), -1), pe(static_cast<std::size_t>(nodes), -1);
    dist[static_cast<std::size_t>(src)] = 0.0;
    for (bool changed = true; changed;) {
      changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[static_cast<std::size_t>(u)] == std::numeric_limits<double>::infinity()) continue;
        for (std::size_t e = 0; e < g[static_cast<std::size_t>(u)].size(); ++e) {
          const auto& ed = g[static_cast<std::size_t>(u)][e];
          const double nd = dist[static_cast<std::size_t>(u)] + ed.cost;
          if (ed.cap > 0 && nd < dist[static_cast<std::size_t>(ed.to)] - 1e-15) {
            dist[static_cast<std::size_t>(ed.to)] = nd;
            pv[static_cast<std::size_t>(ed.to)] = u;
            pe[static_cast<std::size_t>(ed.to)] = static_cast<int>(e);
            changed = true;
          }
        }
      }
    }
    long push = need - flow;
    for (int v = dst; v != src; v = pv[static_cast<std::size_t>(v)])
      push = std::min(push, g[static_cast<std::size_t>(pv[static_cast<std::size_t>(v)])][static_cast<std::size_t>(pe[static_cast<std::size_t>(v)])].cap);
    for (int v = dst; v != src; v = pv[static_cast<std::size_t>(v)]) {
      auto& ed = g[static_cast<std::size_t>(pv[static_cast<std::size_t>(v)])][static_cast<std::size_t>(pe[static_cast<std::size_t>(v)])];
      ed.cap -= push;
      g[static_cast<std::size_t>(v)][static_cast<std::size_t>(ed.rev)].cap += push;
      cost += static_cast<double>(push) * ed.cost;
    }
    flow += push;
  }
  return cost / static_cast<double>(need);
}

// GP posterior mean with prior mean = mean(y), solved by Gaussian
// elimination with partial pivoting on (K + noise I) a = y - mean.
inline double gp_mean_dense(const Design& d, double length_scale, double signal_variance, double noise,
                            const std::vector<double>& x) {
  const std::size_t n = d.rows();
  auto k = [&](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t f = 0; f < d.width; ++f) s += (a[f] - b[f]) * (a[f] - b[f]);
    return signal_variance * std::exp(-s / (2.0 * length_scale * length_scale));
  };
  double mean = 0.0;
  for (double y : d.y) mean += y;
  mean /= static_cast<double>(n);
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = k(&d.x[i * d.width], &d.x[j * d.width]) + (i == j ? noise : 0.0);
    a[i][n] = d.y[i] - mean;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> sol(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = a[i][n];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * sol[j];
    sol[i] = s / a[i][i];
  }
  double out = mean;
  for (std::size_t i = 0; i < n; ++i) out += k(x.data(), &d.x[i * d.width]) * sol[i];
  return out;
}

}  // namespace flora::oracles
