#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gmmf/graph.hpp"
#include "gmmf/random.hpp"

namespace gmmf {

/// One embedded copy of the template: node i sits at background node region[i]
/// and edge (i, j) is correlated with B(region[i], region[j]) by corr(i, j).
struct TemplateSpec {
  std::vector<std::size_t> region;
  Matrix corr;  ///< m x m symmetric, entries in [0, 1]; the diagonal is unused
};

struct McerSpec {
  std::size_t m = 0;
  std::size_t n = 0;
  double p = 0.5;
  std::size_t overlap = 0;  ///< nodes shared by every pair of templates
  std::vector<TemplateSpec> templates;

  /// Standard layout: background nodes [0, m) hold template 1 with its last
  /// `overlap` nodes shared by every template; template t > 1 places its
  /// non-shared nodes i at m + (t - 2)(m - overlap) + i. Pairs of two shared
  /// nodes get `overlap_corr`, every other pair of template t gets outer_corr[t].
  static McerSpec layered(std::size_t m, std::size_t n, std::size_t overlap, double p,
                          std::vector<double> outer_corr, double overlap_corr);

  void validate() const;
  /// Template node i is shared when another template puts it on the same background node.
  std::vector<bool> shared_nodes() const;
};

/// Beta means of S: the matched diagonal of template t's non-shared nodes,
/// the shared nodes, and everything else.
struct SimilaritySpec {
  std::vector<double> template_means;
  double overlap_mean = 0.5;
  double background_mean = 0.1;

  /// Two templates: mu1 strong diagonal, mu2 shared diagonal, mu3 weak diagonal, mu4 the rest.
  static SimilaritySpec four(double mu1, double mu2, double mu3, double mu4) { return {{mu1, mu3}, mu2, mu4}; }

  /// Means in (0, 1), ordered template 1 > shared > template 2 > ... > background.
  void validate() const;
};

struct McerInstance {
  Graph a;
  Graph b;
  std::vector<Assignment> truth;
  SimilarityMatrix s;  ///< empty unless a SimilaritySpec was given
};

/// A ~ Bern(p) i.i.d.; every template pair draws its B entry conditionally on
/// the A entry (P(1|1) = p + r(1 - p), P(1|0) = p(1 - r)); shared pairs are
/// drawn once; all other B entries are independent Bern(p).
McerInstance sample_mcer(const McerSpec& spec, Rng& rng);
McerInstance sample_mcer(const McerSpec& spec, const SimilaritySpec& sim, Rng& rng);

/// Entry (i, j) ~ Beta(alpha, alpha (1 - mu) / mu) with alpha ~ U(0, 1) drawn
/// per entry, mu taken from the layout.
SimilarityMatrix sample_similarity(const SimilaritySpec& sim, const McerSpec& layout, Rng& rng);

/// Mean of S(i, j) under the layout.
Matrix similarity_means(const SimilaritySpec& sim, const McerSpec& layout);

/// Beta(alpha, beta) drawn through log-gamma variates, safe for tiny shapes.
double sample_beta(double alpha, double beta, Rng& rng);

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Correlation of two XOR-flipped copies (flip probability v) of a common Bern(u) background.
double corr_from_flip(double u, double v);

struct FlipPair {
  std::vector<std::uint8_t> first, second;
};

FlipPair sample_flip_pair(std::size_t count, double u, double v, Rng& rng);

/// Node and edge counts of an assignment against a strong and a weak
/// embedding; shared nodes are those the two embeddings place identically.
struct AlignmentCounts {
  std::size_t m = 0, k = 0;
  std::size_t a1 = 0, a2 = 0, b1 = 0, b2 = 0, b3 = 0;
  std::size_t j1 = 0, j2 = 0, h1 = 0, h2 = 0, h3 = 0;

  /// Sum constraints plus the node/edge count identities.
  bool consistent() const;
};

AlignmentCounts count_alignment(const Assignment& a, const Assignment& strong, const Assignment& weak);

/// E[D_E] = 8 p (1 - p) (j2 r2 + h1 (r3 - r1) + h3 r3).
double expected_edge_diff(const AlignmentCounts& c, double p, double r1, double r2, double r3);

/// E[D_F] = a2((1-eps)mu2 - mu4) + b1(mu3 - (1-eps)mu1) + b3(mu3 - mu4).
double expected_feature_diff(const AlignmentCounts& c, const std::array<double, 4>& mu, double eps);

using Point3 = std::array<double, 3>;

struct Bridge {
  Point3 template_point;
  Point3 background_point;
};

/// d(u, v) = min over bridges of |u - s| + |v - w|, mapped affinely so the
/// closest pair scores 1 and the farthest 0 (all ones when every d is equal).
SimilarityMatrix bridge_similarity(std::span<const Point3> coords_a, std::span<const Point3> coords_b,
                                   std::span<const Bridge> bridges);

/// The raw distances behind bridge_similarity.
Matrix bridge_distances(std::span<const Point3> coords_a, std::span<const Point3> coords_b,
                        std::span<const Bridge> bridges);

}  // namespace gmmf
