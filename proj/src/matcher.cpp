#include "gmmf/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "gmmf/errors.hpp"
#include "gmmf/lap.hpp"

namespace gmmf {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void check_layers(std::span<const PaddedPair> layers) {
  if (layers.empty()) throw InvalidArgument("at least one layer is required");
  for (const auto& l : layers) {
    if (l.m != layers.front().m || l.n != layers.front().n) throw DimensionError("layers disagree on m or n");
    if (static_cast<std::size_t>(l.template_block.rows()) != l.m || static_cast<std::size_t>(l.background.rows()) != l.n)
      throw DimensionError("padded pair blocks have the wrong size");
  }
}

void check_point(const Matrix& p, std::size_t n) {
  if (static_cast<std::size_t>(p.rows()) != n || static_cast<std::size_t>(p.cols()) != n)
    throw DimensionError("relaxed point must be n x n");
}

/// X_l = P_(1) Bt_l for every layer.
std::vector<Matrix> right_products(std::span<const PaddedPair> layers, const Matrix& p) {
  std::vector<Matrix> xs;
  xs.reserve(layers.size());
  const auto top = p.topRows(idx(layers.front().m));
  for (const auto& l : layers) xs.emplace_back(top * l.background);
  return xs;
}

double similarity_dot(const SimilarityMatrix& s, const Matrix& top) {
  return s.size() == 0 ? 0.0 : s.cwiseProduct(top).sum();
}

double objective_from(std::span<const PaddedPair> layers, const std::vector<Matrix>& xs, const Matrix& p,
                      const SimilarityMatrix& s, double lambda) {
  const auto top = p.topRows(idx(layers.front().m));
  double value = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l)
    value += layers[l].template_block.cwiseProduct(xs[l] * top.transpose()).sum();
  return value + lambda * similarity_dot(s, top);
}

Matrix gradient_from(std::span<const PaddedPair> layers, const std::vector<Matrix>& xs, const SimilarityMatrix& s,
                     double lambda) {
  // Both padded matrices are symmetric, so At P Bt + At^T P Bt^T = 2 At P Bt,
  // and only the first m rows of At are nonzero.
  Matrix g = 2.0 * layers.front().template_block * xs.front();
  for (std::size_t l = 1; l < layers.size(); ++l) g.noalias() += 2.0 * layers[l].template_block * xs[l];
  if (s.size() != 0) g += lambda * s;
  return g;
}

LineCoefficients coefficients_from(std::span<const PaddedPair> layers, const std::vector<Matrix>& xs,
                                   const SimilarityMatrix& s, double lambda, const Matrix& p, const SquarePermutation& q) {
  const std::size_t m = layers.front().m;
  const std::size_t n = layers.front().n;
  Matrix d = p.topRows(idx(m));
  for (std::size_t i = 0; i < m; ++i) d(idx(i), idx(q[i])) -= 1.0;

  LineCoefficients g;
  Matrix y(idx(m), idx(n));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& at = layers[l].template_block;
    const auto& bt = layers[l].background;
    for (std::size_t i = 0; i < m; ++i) y.row(idx(i)) = bt.row(idx(q[i]));  // Q_(1) Bt
    g.a += at.cwiseProduct((xs[l] - y) * d.transpose()).sum();
    g.b += 2.0 * at.cwiseProduct(y * d.transpose()).sum();
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i) g.c += at(idx(i), idx(j)) * bt(idx(q[i]), idx(q[j]));
  }
  if (s.size() != 0) {
    g.b += lambda * s.cwiseProduct(d).sum();
    double sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) sq += s(idx(i), idx(q[i]));
    g.c += lambda * sq;
  }
  return g;
}

/// ||P - Q||_F for a permutation Q.
double distance_to_permutation(const Matrix& p, const SquarePermutation& q) {
  double cross = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) cross += p(idx(i), idx(q[i]));
  return std::sqrt(std::max(0.0, p.squaredNorm() - 2.0 * cross + static_cast<double>(q.size())));
}

void check_similarity(const SimilarityMatrix& s, std::size_t m, std::size_t n, double lambda) {
  check_similarity_shape(s, m, n);
  if (lambda < 0.0) throw InvalidArgument("lambda must be nonnegative");
}

}  // namespace

void FwConfig::validate(std::size_t m) const {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (eta < 0.0) throw ConfigError("eta must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (n_restarts < 1) throw ConfigError("n_restarts must be at least 1");
  if (seeds > m) throw ConfigError("more seeds than template nodes");
}

double DoublyStochastic::max_sum_error() const {
  const double rows = (entries.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (entries.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

bool DoublyStochastic::valid(std::size_t seeds, double tol) const {
  if (entries.rows() != entries.cols() || seeds > size()) return false;
  if (size() == 0) return true;
  if ((entries.array() < 0.0).any() || max_sum_error() > tol) return false;
  const auto s = idx(seeds);
  if (seeds > 0) {
    if (!entries.topLeftCorner(s, s).isIdentity(0.0)) return false;
    if (!entries.topRightCorner(s, entries.cols() - s).isZero(0.0)) return false;
    if (!entries.bottomLeftCorner(entries.rows() - s, s).isZero(0.0)) return false;
  }
  return true;
}

void LayeredPair::validate() const {
  check_layers(layers);
  for (const auto& l : layers)
    if (l.scheme != Padding::naive) throw InvalidArgument("multiplex layers must use naive padding");
}

DoublyStochastic init_point(std::size_t n, std::size_t s, double gamma, std::span<const std::size_t> perm) {
  if (s > n) throw DimensionError("more seeds than nodes");
  if (perm.size() != n - s) throw DimensionError("free-block permutation has the wrong length");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  DoublyStochastic p;
  p.entries = Matrix::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < s; ++i) p.entries(idx(i), idx(i)) = 1.0;
  const std::size_t free = n - s;
  if (free == 0) return p;
  p.entries.bottomRightCorner(idx(free), idx(free)).setConstant(gamma / static_cast<double>(free));
  std::vector<bool> used(free, false);
  for (std::size_t i = 0; i < free; ++i) {
    if (perm[i] >= free || used[perm[i]]) throw InvalidArgument("free-block permutation is not a permutation");
    used[perm[i]] = true;
    p.entries(idx(s + i), idx(s + perm[i])) += 1.0 - gamma;
  }
  return p;
}

DoublyStochastic init_point(Rng& rng, std::size_t n, std::size_t s) {
  if (s > n) throw DimensionError("more seeds than nodes");
  const double gamma = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::vector<std::size_t> perm(n - s);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return init_point(n, s, gamma, perm);
}

double relaxed_objective(std::span<const PaddedPair> layers, const Matrix& p, const SimilarityMatrix& s,
                         double lambda) {
  check_layers(layers);
  check_point(p, layers.front().n);
  check_similarity(s, layers.front().m, layers.front().n, lambda);
  return objective_from(layers, right_products(layers, p), p, s, lambda);
}

double relaxed_objective(const PaddedPair& pp, const Matrix& p, const SimilarityMatrix& s, double lambda) {
  return relaxed_objective(std::span(&pp, 1), p, s, lambda);
}

Matrix gradient(std::span<const PaddedPair> layers, const Matrix& p, const SimilarityMatrix& s, double lambda) {
  check_layers(layers);
  check_point(p, layers.front().n);
  check_similarity(s, layers.front().m, layers.front().n, lambda);
  return gradient_from(layers, right_products(layers, p), s, lambda);
}

Matrix gradient(const PaddedPair& pp, const Matrix& p, const SimilarityMatrix& s, double lambda) {
  return gradient(std::span(&pp, 1), p, s, lambda);
}

Matrix gradient(const LayeredPair& lp, const Matrix& p, const SimilarityMatrix& s, double lambda) {
  lp.validate();
  return gradient(std::span<const PaddedPair>(lp.layers), p, s, lambda);
}

SquarePermutation search_direction(const Matrix& grad, std::size_t n, std::size_t seeds) {
  const auto m = static_cast<std::size_t>(grad.rows());
  if (static_cast<std::size_t>(grad.cols()) != n || m > n) throw DimensionError("gradient must be m x n with m <= n");
  if (seeds > m) throw DimensionError("more seeds than template rows");
  std::vector<std::size_t> head(m);
  for (std::size_t i = 0; i < seeds; ++i) head[i] = i;
  if (m > seeds) {
    const Matrix free = grad.block(idx(seeds), idx(seeds), idx(m - seeds), idx(n - seeds));
    const auto sol = lap_max_reduced(free);
    for (std::size_t i = seeds; i < m; ++i) head[i] = seeds + sol.assignment[i - seeds];
  }
  return SquarePermutation::complete(Assignment(std::move(head), n));
}

LineCoefficients line_coefficients(std::span<const PaddedPair> layers, const SimilarityMatrix& s, double lambda,
                                   const Matrix& p, const SquarePermutation& q) {
  check_layers(layers);
  check_point(p, layers.front().n);
  check_similarity(s, layers.front().m, layers.front().n, lambda);
  if (q.size() != layers.front().n) throw DimensionError("direction must be a permutation of [n]");
  return coefficients_from(layers, right_products(layers, p), s, lambda, p, q);
}

double line_search_step(const LineCoefficients& g) {
  double best = 1.0;
  double best_value = g(1.0);
  if (g(0.0) > best_value) {
    best = 0.0;
    best_value = g(0.0);
  }
  if (g.a < 0.0) {
    const double crit = -g.b / (2.0 * g.a);
    if (crit > 0.0 && crit < 1.0 && g(crit) > best_value) best = crit;
  }
  return best;
}

double line_search(const PaddedPair& pp, const SimilarityMatrix& s, double lambda, const DoublyStochastic& p,
                   const SquarePermutation& q) {
  return line_search_step(line_coefficients(std::span(&pp, 1), s, lambda, p.entries, q));
}

namespace {

RestartResult run_frank_wolfe(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config,
                              Matrix p, const std::function<void(Matrix&)>& on_gradient) {
  const std::size_t m = layers.front().m;
  const std::size_t n = layers.front().n;
  const double eta = config.tolerance(n);
  RestartResult result;
  std::vector<Matrix> xs = right_products(layers, p);
  if (config.record_trace) result.trace.push_back(objective_from(layers, xs, p, s, config.lambda));

  for (int t = 1; t <= config.max_iters; ++t) {
    result.iterations = t;
    Matrix g = gradient_from(layers, xs, s, config.lambda);
    if (on_gradient) on_gradient(g);
    const SquarePermutation q = search_direction(g, n, config.seeds);
    const double gamma = line_search_step(coefficients_from(layers, xs, s, config.lambda, p, q));
    const double step = (1.0 - gamma) * distance_to_permutation(p, q);

    p *= gamma;
    for (std::size_t i = 0; i < n; ++i) p(idx(i), idx(q[i])) += 1.0 - gamma;
    xs = right_products(layers, p);
    if (config.record_trace) result.trace.push_back(objective_from(layers, xs, p, s, config.lambda));
    if (step <= eta) {
      result.converged = true;
      break;
    }
  }

  // Projection: the permutation closest to P maximizes <P, Q>, a LAP on the
  // informative rows.
  const SquarePermutation projected = search_direction(p.topRows(idx(m)), n, config.seeds);
  result.assignment = projected.head(m);
  result.objective = layered_objective(layers, result.assignment, s, config.lambda);
  return result;
}

}  // namespace

RestartResult fw_solve_from(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config,
                            DoublyStochastic start) {
  check_layers(layers);
  config.validate(layers.front().m);
  check_similarity(s, layers.front().m, layers.front().n, config.lambda);
  check_point(start.entries, layers.front().n);
  return run_frank_wolfe(layers, s, config, std::move(start.entries), {});
}

RestartResult fw_solve(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config, Rng& rng,
                       const SolveHooks& hooks) {
  check_layers(layers);
  config.validate(layers.front().m);
  check_similarity(s, layers.front().m, layers.front().n, config.lambda);
  DoublyStochastic start = init_point(rng, layers.front().n, config.seeds);
  if (hooks.on_init) hooks.on_init(start.entries);
  return run_frank_wolfe(layers, s, config, std::move(start.entries), hooks.on_gradient);
}

RestartResult fw_solve(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config, Rng& rng,
                       const SolveHooks& hooks) {
  return fw_solve(std::span(&pp, 1), s, config, rng, hooks);
}

std::vector<RestartResult> match_restarts(std::span<const PaddedPair> layers, const SimilarityMatrix& s,
                                          const FwConfig& config, const SolveHooks& hooks) {
  check_layers(layers);
  config.validate(layers.front().m);
  const auto count = static_cast<std::size_t>(config.n_restarts);
  std::vector<RestartResult> results(count);
  auto run = [&](std::size_t k) {
    Rng rng = make_rng(config.master_seed, k);
    results[k] = fw_solve(layers, s, config, rng, hooks);
    results[k].restart = k;
  };

  const unsigned workers = std::min<unsigned>(std::max(1u, config.threads), static_cast<unsigned>(count));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k; !failed && (k = next++) < count;) {
          try {
            run(k);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::sort(results.begin(), results.end(), [](const RestartResult& x, const RestartResult& y) {
    return x.objective > y.objective || (x.objective == y.objective && x.restart < y.restart);
  });
  return results;
}

std::vector<RestartResult> match_restarts(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config,
                                          const SolveHooks& hooks) {
  return match_restarts(std::span(&pp, 1), s, config, hooks);
}

std::vector<RestartResult> match_restarts(const LayeredPair& lp, const SimilarityMatrix& s, const FwConfig& config,
                                          const SolveHooks& hooks) {
  lp.validate();
  return match_restarts(std::span<const PaddedPair>(lp.layers), s, config, hooks);
}

double layered_objective(std::span<const PaddedPair> layers, const Assignment& a, const SimilarityMatrix& s,
                         double lambda) {
  check_layers(layers);
  double value = objective(layers.front(), a, s, lambda);
  for (std::size_t l = 1; l < layers.size(); ++l) value += objective(layers[l], a, SimilarityMatrix(), 0.0);
  return value;
}

SeededFrame::SeededFrame(std::size_t m, std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> seeds)
    : m_(m), n_(n), seeds_(seeds.size()), pos_a_(m, m), pos_b_(n, n) {
  if (m > n) throw DimensionError("template has more nodes than the background");
  if (seeds.size() > m) throw InvalidArgument("more seeds than template nodes");
  for (const auto& [a, b] : seeds) {
    if (a >= m || b >= n) throw DimensionError("seed pair out of range");
    if (pos_a_[a] != m || pos_b_[b] != n) throw InvalidArgument("seed pairs must be distinct on both sides");
    pos_a_[a] = order_a_.size();
    pos_b_[b] = order_b_.size();
    order_a_.push_back(a);
    order_b_.push_back(b);
  }
  for (std::size_t a = 0; a < m; ++a)
    if (pos_a_[a] == m) {
      pos_a_[a] = order_a_.size();
      order_a_.push_back(a);
    }
  for (std::size_t b = 0; b < n; ++b)
    if (pos_b_[b] == n) {
      pos_b_[b] = order_b_.size();
      order_b_.push_back(b);
    }
}

Matrix SeededFrame::to_frame(const Matrix& x) const {
  if (x.size() == 0) return x;
  if (static_cast<std::size_t>(x.rows()) != m_ || static_cast<std::size_t>(x.cols()) != n_)
    throw DimensionError("matrix must be m x n");
  Matrix y(x.rows(), x.cols());
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t i = 0; i < m_; ++i) y(idx(i), idx(j)) = x(idx(order_a_[i]), idx(order_b_[j]));
  return y;
}

Matrix SeededFrame::from_frame(const Matrix& y) const {
  if (y.size() == 0) return y;
  if (static_cast<std::size_t>(y.rows()) != m_ || static_cast<std::size_t>(y.cols()) != n_)
    throw DimensionError("matrix must be m x n");
  Matrix x(y.rows(), y.cols());
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t i = 0; i < m_; ++i) x(idx(order_a_[i]), idx(order_b_[j])) = y(idx(i), idx(j));
  return x;
}

Assignment SeededFrame::to_frame(const Assignment& a) const {
  if (a.size() != m_ || a.background_size() != n_) throw DimensionError("assignment does not fit the frame");
  std::vector<std::size_t> sigma(m_);
  for (std::size_t i = 0; i < m_; ++i) sigma[i] = pos_b_[a[order_a_[i]]];
  return Assignment(std::move(sigma), n_);
}

Assignment SeededFrame::from_frame(const Assignment& a) const {
  if (a.size() != m_ || a.background_size() != n_) throw DimensionError("assignment does not fit the frame");
  std::vector<std::size_t> sigma(m_);
  for (std::size_t i = 0; i < m_; ++i) sigma[order_a_[i]] = order_b_[a[i]];
  return Assignment(std::move(sigma), n_);
}

}  // namespace gmmf
