#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "gmmf/graph.hpp"
#include "gmmf/random.hpp"

namespace testing {

using gmmf::Assignment;
using gmmf::Graph;
using gmmf::Matrix;

inline double uniform(gmmf::Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline Graph random_graph(std::size_t n, double p, gmmf::Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (uniform(rng) < p) edges.emplace_back(i, j);
  return Graph::from_edges(n, edges);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, gmmf::Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = uniform(rng);
  return x;
}

/// Calls visit(sigma) for every injection [0, m) -> [0, n) in lexicographic order.
inline void for_each_injection(std::size_t m, std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> sigma(m);
  std::vector<bool> used(n, false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == m) {
      visit(sigma);
      return;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v]) continue;
      used[v] = true;
      sigma[i] = v;
      rec(i + 1);
      used[v] = false;
    }
  };
  rec(0);
}

inline Assignment random_assignment(std::size_t m, std::size_t n, gmmf::Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(m);
  return Assignment(all, n);
}

}  // namespace testing
