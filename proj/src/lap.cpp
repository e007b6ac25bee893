#include "gmmf/lap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "gmmf/errors.hpp"

namespace gmmf {
namespace {

/// Column blocks per row used to bound each row's m-th best entry.
constexpr std::size_t kBlocksPerRow = 4;

void check_shape(const CostMatrix& c) {
  if (c.rows() > c.cols()) throw DimensionError("cost matrix needs m <= n");
}

void check_finite(double probe) {
  if (std::isnan(probe)) throw InvalidArgument("cost matrix entries must be finite");
}

void check_cost(const CostMatrix& c) {
  check_shape(c);
  // x * 0 is NaN exactly for infinite or NaN x, and NaN survives the sum.
  check_finite((c.array() * 0.0).sum());
}

double assignment_value(const CostMatrix& c, const std::vector<std::size_t>& sigma) {
  double value = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    value += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sigma[i]));
  return value;
}

/// Row-major minimization costs rowmax_i - C(i, j) >= 0.
std::vector<double> shifted_costs(const CostMatrix& c) {
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  std::vector<double> out(m * n);
  if (m == 0) return out;
  const Eigen::VectorXd rowmax = c.rowwise().maxCoeff();
  for (std::size_t j = 0; j < n; ++j) {
    const double* col = c.data() + j * m;
    for (std::size_t i = 0; i < m; ++i) out[i * n + j] = rowmax[static_cast<Eigen::Index>(i)] - col[i];
  }
  return out;
}

}  // namespace

namespace detail {

std::vector<std::size_t> hungarian_min(const double* cost, std::size_t rows, std::size_t cols) {
  if (rows > cols) throw DimensionError("assignment problem needs rows <= cols");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual root of each search tree.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0), minv(cols + 1);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  std::vector<char> used(cols + 1);

  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      const double* row = cost + (i0 - 1) * cols;
      const double ui = u[i0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> result(rows);
  for (std::size_t j = 1; j <= cols; ++j)
    if (match[j] != 0) result[match[j] - 1] = j - 1;
  return result;
}

std::vector<std::size_t> sparse_hungarian_min(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows,
                                              std::size_t cols) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t m = rows.size();
  std::vector<double> u(m + 1, 0.0), v(cols + 1, 0.0), minv(cols + 1, inf);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  std::vector<char> used(cols + 1, 0);
  std::vector<std::size_t> touched, visited;

  for (std::size_t i = 1; i <= m; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    touched.clear();
    visited.clear();
    do {
      used[j0] = 1;
      visited.push_back(j0);
      const std::size_t i0 = match[j0];
      for (const auto& [col, cost] : rows[i0 - 1]) {
        const std::size_t j = col + 1;
        if (used[j]) continue;
        const double cur = cost - u[i0] - v[j];
        if (cur < minv[j]) {
          if (minv[j] == inf) touched.push_back(j);
          minv[j] = cur;
          way[j] = j0;
        }
      }
      double delta = inf;
      std::size_t j1 = 0;
      for (const auto j : touched)
        if (!used[j] && (minv[j] < delta || (minv[j] == delta && j < j1))) {
          delta = minv[j];
          j1 = j;
        }
      if (j1 == 0) throw std::logic_error("sparse assignment problem has no augmenting path");
      for (const auto j : visited) {
        u[match[j]] += delta;
        v[j] -= delta;
      }
      for (const auto j : touched)
        if (!used[j]) minv[j] -= delta;
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
    for (const auto j : touched) minv[j] = inf;
    for (const auto j : visited) used[j] = 0;
  }

  std::vector<std::size_t> result(m);
  for (std::size_t j = 1; j <= cols; ++j)
    if (match[j] != 0) result[match[j] - 1] = j - 1;
  return result;
}

std::vector<std::vector<RowCandidate>> threshold_candidates(const CostMatrix& c) {
  check_cost(c);
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  std::vector<std::vector<RowCandidate>> out(m);
  if (m == 0) return out;

  // Split the columns into at least m blocks and take each row's block maxima.
  // The m-th largest block maximum t_i is reached by at least m entries of row
  // i, so its top m all lie among entries >= t_i, and only blocks whose maximum
  // reaches t_i need a second look.
  const std::size_t target = std::min(n, kBlocksPerRow * m);
  const std::size_t width = (n + target - 1) / target;
  const std::size_t blocks = (n + width - 1) / width;
  Matrix bmax(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(blocks));
  for (std::size_t k = 0; k < blocks; ++k) {
    double* __restrict acc = bmax.data() + k * m;
    std::copy_n(c.data() + k * width * m, m, acc);
    for (std::size_t j = k * width + 1; j < std::min(n, (k + 1) * width); ++j) {
      const double* __restrict col = c.data() + j * m;
      for (std::size_t i = 0; i < m; ++i) acc[i] = std::max(acc[i], col[i]);
    }
  }

  Matrix per_row = bmax.transpose();
  std::vector<double> threshold(m);
  for (std::size_t i = 0; i < m; ++i) {
    double* first = per_row.data() + i * blocks;
    std::nth_element(first, first + (m - 1), first + blocks, std::greater<>());
    threshold[i] = first[m - 1];
  }

  // Second look in storage order, restricted to the rows each block can serve.
  std::vector<std::size_t> live;
  live.reserve(m);
  for (auto& cand : out) cand.reserve(2 * m);
  for (std::size_t k = 0; k < blocks; ++k) {
    const double* acc = bmax.data() + k * m;
    live.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (acc[i] >= threshold[i]) live.push_back(i);
    for (std::size_t j = k * width; j < std::min(n, (k + 1) * width); ++j) {
      const double* col = c.data() + j * m;
      for (const auto i : live)
        if (col[i] >= threshold[i]) out[i].push_back({col[i], j});
    }
  }
  return out;
}

std::vector<std::vector<RowCandidate>> topm_candidates(const CostMatrix& c) {
  const auto m = static_cast<std::size_t>(c.rows());
  auto out = threshold_candidates(c);
  const auto better = [](const RowCandidate& a, const RowCandidate& b) {
    return a.value > b.value || (a.value == b.value && a.col < b.col);
  };
  for (auto& cand : out) {
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m - 1), cand.end(), better);
    cand.resize(m);
    std::sort(cand.begin(), cand.end(), better);
  }
  return out;
}

}  // namespace detail

LapSolution lap_max(const CostMatrix& c) {
  check_cost(c);
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  const auto costs = shifted_costs(c);
  auto sigma = detail::hungarian_min(costs.data(), m, n);
  const double value = assignment_value(c, sigma);
  return {Assignment(std::move(sigma), n), value};
}

ReducedCost reduce_topm(const CostMatrix& c) {
  check_cost(c);
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  ReducedCost out;
  if (m == 0) {
    out.entries.resize(0, 0);
    return out;
  }
  std::vector<std::size_t> cols;
  if (m == n) {
    cols.resize(n);
    for (std::size_t j = 0; j < n; ++j) cols[j] = j;
  } else {
    for (const auto& row : detail::topm_candidates(c))
      for (const auto& cand : row) cols.push_back(cand.col);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  }
  out.entries.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < cols.size(); ++r)
    out.entries.col(static_cast<Eigen::Index>(r)) = c.col(static_cast<Eigen::Index>(cols[r]));
  out.colmap = std::move(cols);
  return out;
}

LapSolution lap_max_reduced(const CostMatrix& c) {
  check_shape(c);
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  if (m == 0) return {Assignment({}, n), 0.0};

  // Some optimal injection uses only columns from each row's own top m: if row
  // i sat elsewhere, one of its m best columns is free and at least as good.
  // Each row therefore only sees its threshold candidates (a superset of its
  // top m), in the compact column space of their union.
  const auto cand = detail::threshold_candidates(c);
  std::vector<std::size_t> local_of(n, 0);
  std::vector<char> seen(n, 0);
  for (const auto& row : cand)
    for (const auto& x : row) seen[x.col] = 1;
  std::vector<std::size_t> colmap;
  for (std::size_t j = 0; j < n; ++j)
    if (seen[j]) {
      local_of[j] = colmap.size();
      colmap.push_back(j);
    }

  std::vector<std::vector<std::pair<std::size_t, double>>> rows(m);
  for (std::size_t i = 0; i < m; ++i) {
    double top = cand[i].front().value;
    for (const auto& x : cand[i]) top = std::max(top, x.value);
    rows[i].reserve(cand[i].size());
    for (const auto& x : cand[i]) rows[i].emplace_back(local_of[x.col], top - x.value);
  }
  const auto local = detail::sparse_hungarian_min(rows, colmap.size());
  std::vector<std::size_t> sigma(m);
  for (std::size_t i = 0; i < m; ++i) sigma[i] = colmap[local[i]];
  const double value = assignment_value(c, sigma);
  return {Assignment(std::move(sigma), n), value};
}

}  // namespace gmmf
