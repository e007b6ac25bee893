#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gmmf/graph.hpp"
#include "gmmf/matcher.hpp"

namespace gmmf {

/// m x n multiplicative mask with entries (1 - eps)^count(i, j). Counts are
/// kept exactly; the floating-point mask is produced on demand.
class PenaltyMask {
 public:
  using Counts = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;

  PenaltyMask() = default;
  /// All-ones mask.
  PenaltyMask(std::size_t m, std::size_t n, double eps);

  double eps() const { return eps_; }
  std::size_t rows() const { return static_cast<std::size_t>(counts_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(counts_.cols()); }
  const Counts& counts() const { return counts_; }

  /// One more (1 - eps) factor on every matched pair (i, sigma(i)).
  void add(const Assignment& a);
  /// Adds the other mask's counts; both must share eps and shape.
  void merge(const PenaltyMask& other);

  Matrix materialize() const;

  friend bool operator==(const PenaltyMask&, const PenaltyMask&) = default;

 private:
  double eps_ = 0.0;
  Counts counts_;
};

/// (1 - eps) on the m matched pairs of `a`, 1 elsewhere. eps must lie in [0, 1).
PenaltyMask build_mask(const Assignment& a, double eps);

/// Entrywise product of all masks (all ones for an empty list).
Matrix effective_mask(std::span<const PenaltyMask> masks, std::size_t m, std::size_t n);

/// S o M. An empty similarity matrix stays empty.
SimilarityMatrix apply_mask(const SimilarityMatrix& s, const PenaltyMask& mask);
SimilarityMatrix apply_masks(const SimilarityMatrix& s, std::span<const PenaltyMask> masks);

/// grad o M_1 o M_2 ..., the whole gradient including the similarity term.
Matrix penalize_gradient(const Matrix& grad, std::span<const PenaltyMask> masks);

/// Masks the first m rows of P0, then alternately normalizes rows and columns
/// of the free block until every sum is within 1e-9 of 1. The seed block stays I_s.
DoublyStochastic penalize_init(const DoublyStochastic& p0, std::span<const PenaltyMask> masks, std::size_t seeds);

struct PenaltySchedule {
  enum class Mode { fixed, per_round };
  Mode mode = Mode::fixed;
  std::vector<double> eps_values{0.0};

  static PenaltySchedule fixed(double eps) { return {Mode::fixed, {eps}}; }
  static PenaltySchedule per_round(std::vector<double> eps) { return {Mode::per_round, std::move(eps)}; }

  /// Penalty attached to the assignment found in round r (1-based).
  double eps_for_round(std::size_t r) const;
  void validate(std::size_t rounds) const;
};

enum class Strategy { similarity, gradient, initialization };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct DiscoveryRound {
  Assignment assignment;
  double objective = 0.0;         ///< objective the round's solver maximized
  double masked_objective = 0.0;  ///< objective with the round's masked similarity
  int iterations = 0;
  bool converged = false;
  Strategy strategy = Strategy::similarity;
  double eps = 0.0;                  ///< penalty later rounds attach to this assignment
  std::vector<PenaltyMask> masks;    ///< masks active while this round ran
};

struct DiscoveryLog {
  std::vector<DiscoveryRound> rounds;
};

/// Round 1 is plain match_restarts; round r > 1 masks every earlier round's
/// assignment with that round's eps and runs again with the chosen strategy
/// (every round reuses the same restart seeds, so an identity mask reproduces
/// round 1 exactly). When `resume` is given, its
/// leading rounds are reused if they were produced by the same schedule prefix.
DiscoveryLog discover(std::span<const PaddedPair> layers, const SimilarityMatrix& s, const FwConfig& config,
                      const PenaltySchedule& schedule, Strategy strategy, std::size_t rounds,
                      const DiscoveryLog* resume = nullptr);
DiscoveryLog discover(const PaddedPair& pp, const SimilarityMatrix& s, const FwConfig& config,
                      const PenaltySchedule& schedule, Strategy strategy, std::size_t rounds,
                      const DiscoveryLog* resume = nullptr);

}  // namespace gmmf
