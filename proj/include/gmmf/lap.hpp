#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gmmf/graph.hpp"

namespace gmmf {

/// m x n profit matrix (m <= n) for a rectangular assignment problem.
using CostMatrix = Matrix;

/// Columns that can appear in some optimal assignment, with the submatrix restricted to them.
struct ReducedCost {
  Matrix entries;                     ///< m x c
  std::vector<std::size_t> colmap;    ///< sorted original column of each reduced column
};

struct LapSolution {
  Assignment assignment;
  double value = 0.0;  ///< sum_i C(i, sigma(i)), accumulated in row order
};

/// Exact maximum-weight injection of the m rows into the n columns
/// (shortest augmenting path Hungarian method, O(m^2 n)).
LapSolution lap_max(const CostMatrix& c);

/// Keeps, for every row, the columns of its m largest entries. Equal values
/// prefer the lower column index.
ReducedCost reduce_topm(const CostMatrix& c);

/// lap_max on the reduced matrix, mapped back to original column indices.
/// Same optimal value as lap_max(c) at O(mn + m^4) cost.
LapSolution lap_max_reduced(const CostMatrix& c);

namespace detail {

struct RowCandidate {
  double value;
  std::size_t col;
};

/// For each row, every entry at least as large as a lower bound on the row's
/// m-th best value, in ascending column order (a superset of its top m).
std::vector<std::vector<RowCandidate>> threshold_candidates(const CostMatrix& c);

/// Each row's m best (value desc, column asc) entries, sorted best first.
std::vector<std::vector<RowCandidate>> topm_candidates(const CostMatrix& c);

/// Minimum-cost assignment where row i may only use the (column, cost) pairs
/// listed for it. Every row must be matchable.
std::vector<std::size_t> sparse_hungarian_min(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows,
                                              std::size_t cols);

/// Minimum-cost assignment of `rows` rows into `cols >= rows` columns of a
/// row-major cost buffer. Returns the column chosen for every row.
std::vector<std::size_t> hungarian_min(const double* cost, std::size_t rows, std::size_t cols);

}  // namespace detail
}  // namespace gmmf
