#include "gmmf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmmf/errors.hpp"

namespace gmmf {

std::string_view to_string(Padding scheme) {
  return scheme == Padding::centered ? "centered" : "naive";
}

Padding padding_from_string(std::string_view name) {
  if (name == "centered") return Padding::centered;
  if (name == "naive") return Padding::naive;
  throw InvalidArgument("unknown padding scheme '" + std::string(name) + "'");
}

Graph::Graph(std::size_t n) : adj_(Matrix::Zero(n, n)) {}

Graph Graph::from_adjacency(Matrix adj) {
  if (adj.rows() != adj.cols()) throw DimensionError("adjacency matrix must be square");
  const auto n = adj.rows();
  bool weighted = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = adj(i, j);
      if (!std::isfinite(v)) throw InvalidArgument("adjacency entries must be finite");
      if (i == j && v != 0.0) throw InvalidArgument("self-loops are not supported");
      if (adj(j, i) != v) throw InvalidArgument("adjacency matrix must be symmetric");
      if (v != 0.0 && v != 1.0) weighted = true;
    }
  }
  Graph g;
  g.adj_ = std::move(adj);
  g.weighted_ = weighted;
  return g;
}

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  Graph g(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw DimensionError("edge endpoint out of range");
    if (u == v) throw InvalidArgument("self-loops are not supported");
    g.adj_(u, v) = 1.0;
    g.adj_(v, u) = 1.0;
  }
  return g;
}

std::size_t Graph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < adj_.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (adj_(i, j) != 0.0) ++count;
  return count;
}

Graph Graph::permuted(std::span<const std::size_t> order) const {
  const std::size_t n = size();
  if (order.size() != n) throw DimensionError("relabeling must cover every node");
  Matrix out(n, n);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < n; ++a) out(a, b) = adj_(order[a], order[b]);
  Graph g;
  g.adj_ = std::move(out);
  g.weighted_ = weighted_;
  return g;
}

bool operator==(const Graph& lhs, const Graph& rhs) {
  return lhs.weighted_ == rhs.weighted_ && lhs.adj_.rows() == rhs.adj_.rows() && lhs.adj_ == rhs.adj_;
}

Assignment::Assignment(std::vector<std::size_t> sigma, std::size_t background_size)
    : sigma_(std::move(sigma)), n_(background_size) {
  if (sigma_.size() > n_) throw DimensionError("assignment longer than its background");
  std::vector<bool> used(n_, false);
  for (const auto j : sigma_) {
    if (j >= n_) throw DimensionError("assignment value out of range");
    if (used[j]) throw InvalidArgument("assignment is not injective");
    used[j] = true;
  }
}

SquarePermutation::SquarePermutation(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
  std::vector<bool> used(perm_.size(), false);
  for (const auto j : perm_) {
    if (j >= perm_.size() || used[j]) throw InvalidArgument("not a permutation");
    used[j] = true;
  }
}

SquarePermutation SquarePermutation::identity(std::size_t n) {
  SquarePermutation p;
  p.perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.perm_[i] = i;
  return p;
}

SquarePermutation SquarePermutation::complete(const Assignment& head) {
  const std::size_t n = head.background_size();
  std::vector<bool> used(n, false);
  std::vector<std::size_t> perm(head.values());
  perm.reserve(n);
  for (const auto j : head.values()) used[j] = true;
  for (std::size_t j = 0; j < n; ++j)
    if (!used[j]) perm.push_back(j);
  SquarePermutation p;
  p.perm_ = std::move(perm);
  return p;
}

Assignment SquarePermutation::head(std::size_t m) const {
  if (m > perm_.size()) throw DimensionError("head longer than permutation");
  return Assignment(std::vector<std::size_t>(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(m)), perm_.size());
}

Matrix SquarePermutation::to_matrix() const {
  const auto n = static_cast<Eigen::Index>(perm_.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(i, static_cast<Eigen::Index>(perm_[i])) = 1.0;
  return p;
}

Matrix PaddedPair::padded_template() const {
  Matrix at = Matrix::Zero(n, n);
  at.topLeftCorner(m, m) = template_block;
  return at;
}

PaddedPair pad(const Graph& a, const Graph& b, Padding scheme) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m > n) throw DimensionError("template has more nodes than the background");
  if (scheme == Padding::centered && (a.weighted() || b.weighted()))
    throw InvalidArgument("centered padding is defined for unweighted graphs only");

  PaddedPair pp;
  pp.scheme = scheme;
  pp.m = m;
  pp.n = n;
  if (scheme == Padding::centered) {
    // 2X - J with J hollow: off-diagonal entries map {0,1} -> {-1,+1}.
    pp.template_block = 2.0 * a.adjacency() - Matrix::Ones(m, m);
    pp.template_block.diagonal().setZero();
    pp.background = 2.0 * b.adjacency() - Matrix::Ones(n, n);
    pp.background.diagonal().setZero();
  } else {
    pp.template_block = a.adjacency();
    pp.background = b.adjacency();
  }
  return pp;
}

void check_similarity_shape(const SimilarityMatrix& s, std::size_t m, std::size_t n) {
  if (s.size() == 0) return;
  if (static_cast<std::size_t>(s.rows()) != m || static_cast<std::size_t>(s.cols()) != n)
    throw DimensionError("similarity matrix must be m x n");
}

double objective(const PaddedPair& pp, const Assignment& a, const SimilarityMatrix& s, double lambda) {
  if (a.size() != pp.m || a.background_size() != pp.n) throw DimensionError("assignment does not fit the padded pair");
  check_similarity_shape(s, pp.m, pp.n);
  if (lambda < 0.0) throw InvalidArgument("lambda must be nonnegative");
  double trace = 0.0;
  for (std::size_t j = 0; j < pp.m; ++j)
    for (std::size_t i = 0; i < pp.m; ++i) trace += pp.template_block(i, j) * pp.background(a[i], a[j]);
  double sim = 0.0;
  if (s.size() != 0)
    for (std::size_t i = 0; i < pp.m; ++i) sim += s(i, a[i]);
  return trace + lambda * sim;
}

double objective(const PaddedPair& pp, const SquarePermutation& p, const SimilarityMatrix& s, double lambda) {
  if (p.size() != pp.n) throw DimensionError("permutation size differs from padded size");
  // Rows m..n-1 of the padded template are zero, so only the head matters.
  return objective(pp, p.head(pp.m), s, lambda);
}

double frobenius_cost(const Graph& a, const Graph& b, const Assignment& sigma, Padding scheme) {
  const std::size_t m = a.size();
  if (sigma.size() != m || sigma.background_size() != b.size()) throw DimensionError("assignment does not fit the graphs");
  double cost = 0.0;
  if (scheme == Padding::centered) {
    if (a.weighted() || b.weighted()) throw InvalidArgument("centered padding is defined for unweighted graphs only");
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i) {
        const double d = a(i, j) - b(sigma[i], sigma[j]);
        cost += d * d;
      }
    return cost;
  }
  // Naive: template weight not covered by the matched background pair, counted
  // for both orientations so the units agree with the centered cost.
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const double w = a(i, j);
      const double bw = b(sigma[i], sigma[j]);
      if (!a.weighted() && !b.weighted())
        cost += w * (1.0 - bw);
      else
        cost += std::max(0.0, w - bw);
    }
  return 2.0 * cost;
}

Graph induced_subgraph(const Graph& b, const Assignment& sigma) {
  if (sigma.background_size() != b.size()) throw DimensionError("assignment does not fit the background");
  const std::size_t m = sigma.size();
  Matrix out(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) out(i, j) = b(sigma[i], sigma[j]);
  return Graph::from_adjacency(std::move(out));
}

}  // namespace gmmf
