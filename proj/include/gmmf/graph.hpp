#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gmmf {

using Matrix = Eigen::MatrixXd;

/// m x n node-pair similarity scores. An empty (0 x 0) matrix stands for "no
/// similarity term".
using SimilarityMatrix = Matrix;

enum class Padding { centered, naive };

std::string_view to_string(Padding scheme);
Padding padding_from_string(std::string_view name);

/// Undirected, loop-free graph stored as a dense symmetric adjacency matrix.
class Graph {
 public:
  Graph() = default;

  /// Edgeless graph on n nodes.
  explicit Graph(std::size_t n);

  /// Validates symmetry, hollowness and finiteness. The graph is flagged as
  /// weighted when any entry lies outside {0, 1}.
  static Graph from_adjacency(Matrix adj);

  /// Builds a binary graph from unordered node pairs. Duplicates are allowed.
  static Graph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const { return static_cast<std::size_t>(adj_.rows()); }
  bool weighted() const { return weighted_; }
  const Matrix& adjacency() const { return adj_; }
  double operator()(std::size_t i, std::size_t j) const { return adj_(i, j); }

  /// Number of unordered pairs with a nonzero weight.
  std::size_t edge_count() const;

  /// Node relabeling: result(a, b) = (*this)(order[a], order[b]).
  Graph permuted(std::span<const std::size_t> order) const;

  friend bool operator==(const Graph& lhs, const Graph& rhs);

 private:
  Matrix adj_;
  bool weighted_ = false;
};

/// Injective map from template nodes [0, m) into background nodes [0, n).
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::vector<std::size_t> sigma, std::size_t background_size);

  std::size_t size() const { return sigma_.size(); }
  std::size_t background_size() const { return n_; }
  std::size_t operator[](std::size_t i) const { return sigma_[i]; }
  const std::vector<std::size_t>& values() const { return sigma_; }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<std::size_t> sigma_;
  std::size_t n_ = 0;
};

/// Bijection on [0, n); row i of the permutation matrix has its one in column perm[i].
class SquarePermutation {
 public:
  SquarePermutation() = default;
  explicit SquarePermutation(std::vector<std::size_t> perm);

  static SquarePermutation identity(std::size_t n);

  /// Extends an m-row assignment to a permutation of [0, n): rows m..n-1 take
  /// the unused columns in ascending order.
  static SquarePermutation complete(const Assignment& head);

  std::size_t size() const { return perm_.size(); }
  std::size_t operator[](std::size_t i) const { return perm_[i]; }
  const std::vector<std::size_t>& values() const { return perm_; }

  Assignment head(std::size_t m) const;
  Matrix to_matrix() const;

  friend bool operator==(const SquarePermutation&, const SquarePermutation&) = default;

 private:
  std::vector<std::size_t> perm_;
};

/// Template and background after padding to a common size n. Only the
/// leading m x m block of the padded template can be nonzero, so that block is
/// all that is stored.
struct PaddedPair {
  Padding scheme = Padding::centered;
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix template_block;  ///< m x m: 2A - J_m (centered) or A (naive)
  Matrix background;      ///< n x n: 2B - J_n (centered) or B (naive)

  /// The full n x n padded template (block plus zero padding).
  Matrix padded_template() const;
};

/// Pads A (m nodes) against B (n >= m nodes). Centered padding is defined for
/// binary graphs only.
PaddedPair pad(const Graph& a, const Graph& b, Padding scheme);

/// tr(At P Bt P^T) + lambda tr(S P_(1)^T) for a permutation P.
double objective(const PaddedPair& pp, const SquarePermutation& p, const SimilarityMatrix& s, double lambda);

/// Same value computed from the m template rows only.
double objective(const PaddedPair& pp, const Assignment& a, const SimilarityMatrix& s, double lambda);

/// Squared Frobenius mismatch ||A - B[sigma]||_F^2 (centered), or twice the
/// template edge weight missing under sigma (naive).
double frobenius_cost(const Graph& a, const Graph& b, const Assignment& sigma, Padding scheme);

/// The m-node graph with adjacency B(sigma(i), sigma(j)).
Graph induced_subgraph(const Graph& b, const Assignment& sigma);

/// Shape check shared by the objective-style functions.
void check_similarity_shape(const SimilarityMatrix& s, std::size_t m, std::size_t n);

}  // namespace gmmf
