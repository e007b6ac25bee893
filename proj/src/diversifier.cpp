#include "gmmf/diversifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmmf/errors.hpp"

namespace gmmf {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidArgument("penalty eps must lie in [0, 1)");
}

void check_mask_shape(std::span<const PenaltyMask> masks, Index rows, Index cols) {
  for (const auto& mk : masks)
    if (idx(mk.rows()) != rows || idx(mk.cols()) != cols) throw DimensionError("mask shape differs from its target");
}


// Newton iteration for diag(r) P diag(c) doubly stochastic (Knight and Ruiz),
// run on the symmetric embedding [0 P; P^T 0]. Used when alternating
// normalization stalls on nearly decomposable blocks.
template <typename Block>
bool newton_balance(Block& block, double tol, int max_outer = 200) {
  const Index n = block.rows(), big = 2 * n;
  const Matrix p = block;
  auto apply = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd out(big);
    out.head(n) = p * z.tail(n);
    out.tail(n) = p.transpose() * z.head(n);
    return out;
  };
  constexpr double g = 0.9, eta_max = 0.1, lo = 0.1, hi = 3.0;
  const double rt = tol * tol, stop_tol = 0.5 * tol;
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(big);
  Eigen::VectorXd x = e, v = x.cwiseProduct(apply(x)), rk = e - v, z, dir, w;
  double eta = eta_max, rho = rk.squaredNorm(), rho_prev = 0.0, rout = rho, rold = rout;
  for (int outer = 0; outer < max_outer && rout > rt; ++outer) {
    Eigen::VectorXd y = e;
    const double inner_tol = std::max(eta * eta * rout, rt);
    for (int k = 1; rho > inner_tol; ++k) {
      if (k == 1) {
        z = rk.cwiseQuotient(v);
        dir = z;
        rho = rk.dot(z);
      } else {
        dir = z + (rho / rho_prev) * dir;
      }
      w = x.cwiseProduct(apply(x.cwiseProduct(dir))) + v.cwiseProduct(dir);
      const double alpha = rho / dir.dot(w);
      const Eigen::VectorXd ap = alpha * dir, next = y + ap;
      if (next.minCoeff() <= lo) {
        double step = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < big; ++i)
          if (ap(i) < 0.0) step = std::min(step, (lo - y(i)) / ap(i));
        y += step * ap;
        break;
      }
      if (next.maxCoeff() >= hi) {
        double step = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < big; ++i)
          if (next(i) > hi) step = std::min(step, (hi - y(i)) / ap(i));
        y += step * ap;
        break;
      }
      y = next;
      rk -= alpha * w;
      rho_prev = rho;
      z = rk.cwiseQuotient(v);
      rho = rk.dot(z);
    }
    x = x.cwiseProduct(y);
    v = x.cwiseProduct(apply(x));
    rk = e - v;
    rho = rk.squaredNorm();
    rout = rho;
    const double eta_old = eta;
    eta = g * rout / rold;
    rold = rout;
    if (g * eta_old * eta_old > 0.1) eta = std::max(eta, g * eta_old * eta_old);
    eta = std::max(std::min(eta, eta_max), stop_tol / std::sqrt(rout));
  }
  if (!x.allFinite()) return false;
  block = x.head(n).asDiagonal() * p * x.tail(n).asDiagonal();
  return true;
}

}  // namespace

PenaltyMask::PenaltyMask(std::size_t m, std::size_t n, double eps) : eps_(eps), counts_(Counts::Zero(idx(m), idx(n))) {
  check_eps(eps);
}

void PenaltyMask::add(const Assignment& a) {
  if (a.size() != rows() || a.background_size() != cols()) throw DimensionError("assignment does not fit the mask");
  for (std::size_t i = 0; i < a.size(); ++i) ++counts_(idx(i), idx(a[i]));
}

void PenaltyMask::merge(const PenaltyMask& other) {
  if (other.eps_ != eps_) throw InvalidArgument("only masks with the same eps can be merged");
  if (other.counts_.rows() != counts_.rows() || other.counts_.cols() != counts_.cols())
    throw DimensionError("mask shapes differ");
  counts_ += other.counts_;
}

Matrix PenaltyMask::materialize() const {
  const double base = 1.0 - eps_;
  Matrix out(counts_.rows(), counts_.cols());
  for (Index j = 0; j < counts_.cols(); ++j)
    for (Index i = 0; i < counts_.rows(); ++i) {
      const auto c = counts_(i, j);
      out(i, j) = c == 0 ? 1.0 : std::pow(base, static_cast<double>(c));
    }
  return out;
}

PenaltyMask build_mask(const Assignment& a, double eps) {
  PenaltyMask mk(a.size(), a.background_size(), eps);
  mk.add(a);
  return mk;
}

Matrix effective_mask(std::span<const PenaltyMask> masks, std::size_t m, std::size_t n) {
  check_mask_shape(masks, idx(m), idx(n));
  Matrix out = Matrix::Ones(idx(m), idx(n));
  for (const auto& mk : masks) out.array() *= mk.materialize().array();
  return out;
}

SimilarityMatrix apply_mask(const SimilarityMatrix& s, const PenaltyMask& mask) {
  return apply_masks(s, std::span(&mask, 1));
}

SimilarityMatrix apply_masks(const SimilarityMatrix& s, std::span<const PenaltyMask> masks) {
  if (s.size() == 0) return s;
  check_mask_shape(masks, s.rows(), s.cols());
  SimilarityMatrix out = s;
  for (const auto& mk : masks) out.array() *= mk.materialize().array();
  return out;
}

Matrix penalize_gradient(const Matrix& grad, std::span<const PenaltyMask> masks) {
  check_mask_shape(masks, grad.rows(), grad.cols());
  Matrix out = grad;
  for (const auto& mk : masks) out.array() *= mk.materialize().array();
  return out;
}

DoublyStochastic penalize_init(const DoublyStochastic& p0, std::span<const PenaltyMask> masks, std::size_t seeds) {
  const std::size_t n = p0.size();
  if (static_cast<std::size_t>(p0.entries.cols()) != n) throw DimensionError("starting point must be square");
  if (seeds > n) throw DimensionError("more seeds than nodes");
  DoublyStochastic p = p0;
  if (masks.empty()) return p;
  const std::size_t m = masks.front().rows();
  if (m > n) throw DimensionError("mask has more rows than the starting point");
  check_mask_shape(masks, idx(m), idx(n));
  p.entries.topRows(idx(m)).array() *= effective_mask(masks, m, n).array();

  const std::size_t free = n - seeds;
  auto block = p.entries.bottomRightCorner(idx(free), idx(free));
  constexpr double tol = 1e-9;
  constexpr int max_sweeps = 1000;
  bool done = free == 0;
  for (int sweep = 0; sweep < max_sweeps && !done; ++sweep) {
    const Eigen::VectorXd rows = block.rowwise().sum();
    if ((rows.array() <= 0.0).any()) throw ConvergenceError("a row lost all its mass under the penalty");
    block.array().colwise() /= rows.array();
    const Eigen::RowVectorXd cols = block.colwise().sum();
    if ((cols.array() <= 0.0).any()) throw ConvergenceError("a column lost all its mass under the penalty");
    block.array().rowwise() /= cols.array();
    const double row_err = (block.rowwise().sum().array() - 1.0).abs().maxCoeff();
    done = row_err <= tol;  // columns are exact right after their normalization
  }
  if (!done && newton_balance(block, 1e-12)) {
    const double row_err = (block.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (block.colwise().sum().array() - 1.0).abs().maxCoeff();
    done = std::max(row_err, col_err) <= tol && (block.array() >= 0.0).all();
  }
  if (!done) throw ConvergenceError("row/column normalization did not converge");

  const auto s = idx(seeds);
  p.entries.topLeftCorner(s, s).setIdentity();
  p.entries.topRightCorner(s, idx(free)).setZero();
  p.entries.bottomLeftCorner(idx(free), s).setZero();
  return p;
}

double PenaltySchedule::eps_for_round(std::size_t r) const {
  if (r == 0) throw InvalidArgument("rounds are numbered from 1");
  if (mode == Mode::fixed) return eps_values.at(0);
  if (r > eps_values.size()) throw ConfigError("per-round schedule has no eps for round " + std::to_string(r));
  return eps_values[r - 1];
}

void PenaltySchedule::validate(std::size_t rounds) const {
  if (eps_values.empty()) throw ConfigError("penalty schedule needs at least one eps");
  for (const double e : eps_values)
    if (!(e >= 0.0 && e < 1.0)) throw ConfigError("penalty eps must lie in [0, 1)");
  if (mode == Mode::per_round && rounds > 1 && eps_values.size() < rounds - 1)
    throw ConfigError("per-round schedule is shorter than the number of penalized rounds");
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::similarity: return "similarity";
    case Strategy::gradient: return "gradient";
    case Strategy::initialization: return "initialization";
  }
  return "similarity";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "similarity") return Strategy::similarity;
  if (name == "gradient") return Strategy::gradient;
  if (name == "initialization") return Strategy::initialization;
  throw InvalidArgument("unknown strategy '" + std::string(name) + "'");
}

DiscoveryLog discover(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config,
                      const PenaltySchedule& schedule, Strategy strategy, std::size_t rounds,
                      const DiscoveryLog* resume) {
  if (rounds < 1) throw InvalidArgument("discovery needs at least one round");
  if (layers.empty()) throw InvalidArgument("at least one layer is required");
  schedule.validate(rounds);
  const std::size_t m = layers.front().m;
  const std::size_t n = layers.front().n;

  DiscoveryLog log;
  std::vector<PenaltyMask> masks;
  for (std::size_t r = 1; r <= rounds; ++r) {
    const bool reusable = resume != nullptr && r <= resume->rounds.size() &&
                          resume->rounds[r - 1].masks == masks &&
                          (r == 1 || resume->rounds[r - 1].strategy == strategy);
    DiscoveryRound round;
    if (reusable) {
      round = resume->rounds[r - 1];
    } else {
      const FwConfig& cfg = config;
      const SimilarityMatrix masked = apply_masks(s, masks);
      SolveHooks hooks;
      const SimilarityMatrix* solve_s = &s;
      if (!masks.empty()) {
        switch (strategy) {
          case Strategy::similarity:
            solve_s = &masked;
            break;
          case Strategy::gradient: {
            const Matrix mk = effective_mask(masks, m, n);
            hooks.on_gradient = [mk](Matrix& g) { g.array() *= mk.array(); };
            break;
          }
          case Strategy::initialization: {
            const std::vector<PenaltyMask> active = masks;
            const std::size_t seeds = cfg.seeds;
            hooks.on_init = [active, seeds](Matrix& p) {
              p = penalize_init(DoublyStochastic{p}, active, seeds).entries;
            };
            break;
          }
        }
      }
      const auto ranked = match_restarts(layers, *solve_s, cfg, hooks);
      const RestartResult& best = ranked.front();
      round.assignment = best.assignment;
      round.objective = best.objective;
      round.masked_objective = layered_objective(layers, best.assignment, masked, config.lambda);
      round.iterations = best.iterations;
      round.converged = best.converged;
      round.masks = masks;
    }
    round.strategy = strategy;
    // The last round penalizes nothing, so a per-round schedule needs no eps for it.
    const bool last = r == rounds;
    round.eps = last && schedule.mode == PenaltySchedule::Mode::per_round ? 0.0 : schedule.eps_for_round(r);
    log.rounds.push_back(round);
    if (last) break;

    // Masks for later rounds: one per distinct eps, counts merged.
    PenaltyMask next = build_mask(round.assignment, round.eps);
    bool merged = false;
    for (auto& mk : masks)
      if (mk.eps() == next.eps()) {
        mk.merge(next);
        merged = true;
        break;
      }
    if (!merged) masks.push_back(std::move(next));
  }
  return log;
}

DiscoveryLog discover(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config,
                      const PenaltySchedule& schedule, Strategy strategy, std::size_t rounds,
                      const DiscoveryLog* resume) {
  return discover(std::span(&pp, 1), s, config, schedule, strategy, rounds, resume);
}

}  // namespace gmmf
