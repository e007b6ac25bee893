#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gmmf/graph.hpp"
#include "gmmf/random.hpp"

namespace gmmf {

struct FwConfig {
  double lambda = 0.0;
  double eta = 0.0;  ///< 0 selects the default 1e-6 * n
  int max_iters = 100;
  int n_restarts = 1;
  /// Template nodes 0..seeds-1 are fixed to background nodes 0..seeds-1
  /// (see SeededFrame for arbitrary seed pairs).
  std::size_t seeds = 0;
  Padding scheme = Padding::centered;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  bool record_trace = false;

  double tolerance(std::size_t n) const { return eta > 0.0 ? eta : 1e-6 * static_cast<double>(n); }
  void validate(std::size_t m) const;
};

/// n x n matrix with unit row and column sums.
struct DoublyStochastic {
  Matrix entries;

  std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
  /// Largest deviation of a row or column sum from 1.
  double max_sum_error() const;
  /// Checks nonnegativity, sums within tol, and the seed block I_s.
  bool valid(std::size_t seeds, double tol = 1e-9) const;
};

/// Several naive-padded layers over the same node sets; objectives add up.
struct LayeredPair {
  std::vector<PaddedPair> layers;

  std::size_t m() const { return layers.front().m; }
  std::size_t n() const { return layers.front().n; }
  void validate() const;
};

struct RestartResult {
  Assignment assignment;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t restart = 0;
  std::vector<double> trace;  ///< relaxed objective after every iteration, when recorded
};

/// Extension points used by the diversifier. Both act in the matcher's frame.
struct SolveHooks {
  std::function<void(Matrix& gradient)> on_gradient;  ///< m x n gradient, before the LAP
  std::function<void(Matrix& p)> on_init;             ///< n x n starting point
};

/// gamma * J / (n - s) + (1 - gamma) * Perm on the free block, I_s on the seeds,
/// with gamma ~ U[0, 1] and Perm uniform.
DoublyStochastic init_point(Rng& rng, std::size_t n, std::size_t s);

/// The same construction with gamma and the free-block permutation given
/// (perm has n - s entries).
DoublyStochastic init_point(std::size_t n, std::size_t s, double gamma, std::span<const std::size_t> perm);

/// Relaxed objective tr(At P Bt P^T) + lambda <S, P_(1)>, summed over layers.
double relaxed_objective(std::span<const PaddedPair> layers, const Matrix& p, const SimilarityMatrix& s, double lambda);
double relaxed_objective(const PaddedPair& pp, const Matrix& p, const SimilarityMatrix& s, double lambda);

/// First m rows of the gradient of the relaxed objective.
Matrix gradient(std::span<const PaddedPair> layers, const Matrix& p, const SimilarityMatrix& s, double lambda);
Matrix gradient(const PaddedPair& pp, const Matrix& p, const SimilarityMatrix& s, double lambda);
Matrix gradient(const LayeredPair& lp, const Matrix& p, const SimilarityMatrix& s, double lambda);

/// Permutation maximizing <grad, Q_(1)>: LAP on the free rows, seeds fixed,
/// unused columns handed to rows m..n-1 in ascending order.
SquarePermutation search_direction(const Matrix& grad, std::size_t n, std::size_t seeds = 0);

/// Coefficients of g(gamma) = f(gamma P + (1 - gamma) Q) = c + b gamma + a gamma^2.
struct LineCoefficients {
  double a = 0.0, b = 0.0, c = 0.0;
  double operator()(double gamma) const { return c + gamma * (b + gamma * a); }
};

LineCoefficients line_coefficients(std::span<const PaddedPair> layers, const SimilarityMatrix& s, double lambda,
                                   const Matrix& p, const SquarePermutation& q);

/// Maximizer of g on [0, 1]. A flat g returns 1 (keep P); 0 or the interior
/// critical point replace 1 only when strictly better.
double line_search_step(const LineCoefficients& g);

double line_search(const PaddedPair& pp, const SimilarityMatrix& s, double lambda, const DoublyStochastic& p,
                   const SquarePermutation& q);

/// One Frank-Wolfe restart from init_point(rng, n, seeds).
RestartResult fw_solve(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config, Rng& rng,
                       const SolveHooks& hooks = {});
RestartResult fw_solve(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config, Rng& rng,
                       const SolveHooks& hooks = {});

/// The Frank-Wolfe loop from a given starting point.
RestartResult fw_solve_from(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config,
                            DoublyStochastic start);

/// n_restarts runs, restart k seeded from (master_seed, k), sorted by
/// objective (descending) then restart index.
std::vector<RestartResult> match_restarts(std::span<const PaddedPair> layers, const SimilarityMatrix& s,
                                          const FwConfig& config, const SolveHooks& hooks = {});
std::vector<RestartResult> match_restarts(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config,
                                          const SolveHooks& hooks = {});
std::vector<RestartResult> match_restarts(const LayeredPair& lp, const SimilarityMatrix& s, const FwConfig& config,
                                          const SolveHooks& hooks = {});

/// Sum of per-layer objectives of an assignment plus lambda times its similarity.
double layered_objective(std::span<const PaddedPair> layers, const Assignment& a, const SimilarityMatrix& s,
                         double lambda);

/// Relabeling that moves arbitrary seed pairs to the leading positions, so the
/// solver can treat seeds as the identity block.
class SeededFrame {
 public:
  SeededFrame(std::size_t m, std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> seeds);

  std::size_t seeds() const { return seeds_; }
  const std::vector<std::size_t>& template_order() const { return order_a_; }
  const std::vector<std::size_t>& background_order() const { return order_b_; }

  Graph template_graph(const Graph& a) const { return a.permuted(order_a_); }
  Graph background_graph(const Graph& b) const { return b.permuted(order_b_); }
  /// m x n matrix (similarity, mask or gradient) into the frame; empty stays empty.
  Matrix to_frame(const Matrix& x) const;
  Matrix from_frame(const Matrix& x) const;
  Assignment to_frame(const Assignment& a) const;
  Assignment from_frame(const Assignment& a) const;

 private:
  std::size_t m_, n_, seeds_;
  std::vector<std::size_t> order_a_, order_b_;  // frame position -> original id
  std::vector<std::size_t> pos_a_, pos_b_;      // original id -> frame position
};

}  // namespace gmmf
