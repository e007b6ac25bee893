#include "gmmf/mcer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gmmf/errors.hpp"

namespace gmmf {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

std::size_t choose2(std::size_t x) { return x * (x - (x > 0 ? 1 : 0)) / 2; }

bool bernoulli(double prob, Rng& rng) { return unit_uniform(rng) < prob; }

// log of a Gamma(shape, 1) variate; shape < 1 uses G(shape + 1) * U^(1/shape).
double log_gamma_variate(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  double u = 0.0;
  while (u == 0.0) u = unit_uniform(rng);
  return std::log(g(rng)) + std::log(u) / shape;
}

struct PairSource {
  std::int32_t i = -1, j = -1;
  double r = 0.0;
};

}  // namespace

McerSpec McerSpec::layered(std::size_t m, std::size_t n, std::size_t overlap, double p,
                           std::vector<double> outer_corr, double overlap_corr) {
  if (outer_corr.empty()) throw InvalidArgument("at least one template is required");
  if (overlap > m) throw InvalidArgument("overlap exceeds the template size");
  const std::size_t templates = outer_corr.size();
  if (m + (templates - 1) * (m - overlap) > n) throw DimensionError("templates do not fit in the background");
  McerSpec spec;
  spec.m = m;
  spec.n = n;
  spec.p = p;
  spec.overlap = templates > 1 ? overlap : 0;
  const std::size_t own = m - overlap;
  for (std::size_t t = 0; t < templates; ++t) {
    TemplateSpec ts;
    ts.region.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (t == 0 || i >= own)
        ts.region[i] = i;
      else
        ts.region[i] = m + (t - 1) * own + i;
    }
    ts.corr = Matrix::Constant(idx(m), idx(m), outer_corr[t]);
    if (templates > 1) ts.corr.bottomRightCorner(idx(overlap), idx(overlap)).setConstant(overlap_corr);
    ts.corr.diagonal().setZero();
    spec.templates.push_back(std::move(ts));
  }
  return spec;
}

std::vector<bool> McerSpec::shared_nodes() const {
  std::vector<bool> shared(m, false);
  for (std::size_t t = 0; t < templates.size(); ++t)
    for (std::size_t u = t + 1; u < templates.size(); ++u)
      for (std::size_t i = 0; i < m; ++i)
        if (templates[t].region[i] == templates[u].region[i]) shared[i] = true;
  return shared;
}

void McerSpec::validate() const {
  if (m == 0 || m > n) throw InvalidArgument("need 0 < m <= n");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("edge probability must lie in (0, 1)");
  if (templates.empty()) throw InvalidArgument("at least one template is required");
  for (const auto& t : templates) {
    if (t.region.size() != m) throw InvalidArgument("template region must have m nodes");
    std::vector<bool> used(n, false);
    for (const auto v : t.region) {
      if (v >= n) throw InvalidArgument("template region leaves the background");
      if (used[v]) throw InvalidArgument("template region repeats a node");
      used[v] = true;
    }
    if (t.corr.rows() != idx(m) || t.corr.cols() != idx(m)) throw DimensionError("correlation block must be m x m");
    for (Index i = 0; i < t.corr.rows(); ++i)
      for (Index j = 0; j < t.corr.cols(); ++j) {
        if (i == j) continue;
        const double r = t.corr(i, j);
        if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("correlations must lie in [0, 1]");
        if (r != t.corr(j, i)) throw InvalidArgument("correlation block must be symmetric");
      }
  }
  for (std::size_t t = 0; t < templates.size(); ++t)
    for (std::size_t u = t + 1; u < templates.size(); ++u) {
      std::vector<std::int64_t> node_of(n, -1);
      for (std::size_t i = 0; i < m; ++i) node_of[templates[t].region[i]] = static_cast<std::int64_t>(i);
      std::size_t common = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto hit = node_of[templates[u].region[i]];
        if (hit < 0) continue;
        if (hit != static_cast<std::int64_t>(i))
          throw InvalidArgument("inconsistent overlap: templates share a background node under different template nodes");
        ++common;
      }
      if (common != overlap)
        throw InvalidArgument("templates " + std::to_string(t + 1) + " and " + std::to_string(u + 1) + " share " +
                              std::to_string(common) + " nodes, expected " + std::to_string(overlap));
    }
}

void SimilaritySpec::validate() const {
  if (template_means.empty()) throw InvalidArgument("similarity spec needs at least one template mean");
  auto in_unit = [](double mu) { return mu > 0.0 && mu < 1.0; };
  std::vector<double> order{template_means.front(), overlap_mean};
  order.insert(order.end(), template_means.begin() + 1, template_means.end());
  order.push_back(background_mean);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!in_unit(order[i])) throw InvalidArgument("similarity means must lie in (0, 1)");
    if (i > 0 && !(order[i - 1] > order[i]))
      throw InvalidArgument("similarity means must decrease: template 1, shared, template 2, ..., background");
  }
}

McerInstance sample_mcer(const McerSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t m = spec.m, n = spec.n;
  const double p = spec.p;

  std::vector<PairSource> source(n * n);
  for (const auto& t : spec.templates)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        std::size_t u = t.region[i], v = t.region[j];
        if (u > v) std::swap(u, v);
        PairSource& s = source[u * n + v];
        const double r = t.corr(idx(i), idx(j));
        if (s.i < 0) {
          s = {static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), r};
        } else if (s.i != static_cast<std::int32_t>(i) || s.j != static_cast<std::int32_t>(j) || s.r != r) {
          throw InvalidArgument("inconsistent overlap: a background pair is tied to two template pairs");
        }
      }

  Matrix a = Matrix::Zero(idx(m), idx(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (bernoulli(p, rng)) a(idx(i), idx(j)) = a(idx(j), idx(i)) = 1.0;

  Matrix b = Matrix::Zero(idx(n), idx(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const PairSource& s = source[u * n + v];
      double prob = p;
      if (s.i >= 0) prob = a(s.i, s.j) != 0.0 ? p + s.r * (1.0 - p) : p * (1.0 - s.r);
      if (bernoulli(prob, rng)) b(idx(u), idx(v)) = b(idx(v), idx(u)) = 1.0;
    }

  McerInstance out;
  out.a = Graph::from_adjacency(std::move(a));
  out.b = Graph::from_adjacency(std::move(b));
  for (const auto& t : spec.templates) out.truth.emplace_back(t.region, n);
  return out;
}

McerInstance sample_mcer(const McerSpec& spec, const SimilaritySpec& sim, Rng& rng) {
  McerInstance out = sample_mcer(spec, rng);
  out.s = sample_similarity(sim, spec, rng);
  return out;
}

Matrix similarity_means(const SimilaritySpec& sim, const McerSpec& layout) {
  sim.validate();
  if (sim.template_means.size() != layout.templates.size())
    throw InvalidArgument("one similarity mean per template is required");
  const auto shared = layout.shared_nodes();
  Matrix mu = Matrix::Constant(idx(layout.m), idx(layout.n), sim.background_mean);
  for (std::size_t t = 0; t < layout.templates.size(); ++t)
    for (std::size_t i = 0; i < layout.m; ++i)
      mu(idx(i), idx(layout.templates[t].region[i])) = shared[i] ? sim.overlap_mean : sim.template_means[t];
  return mu;
}

double sample_beta(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0 && beta > 0.0)) throw InvalidArgument("Beta shapes must be positive");
  const double la = log_gamma_variate(alpha, rng);
  const double lb = log_gamma_variate(beta, rng);
  // X / (X + Y) = 1 / (1 + exp(log Y - log X))
  const double d = lb - la;
  if (d > 700.0) return 0.0;
  if (d < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(d));
}

SimilarityMatrix sample_similarity(const SimilaritySpec& sim, const McerSpec& layout, Rng& rng) {
  const Matrix mu = similarity_means(sim, layout);
  SimilarityMatrix s(mu.rows(), mu.cols());
  for (Index i = 0; i < mu.rows(); ++i)
    for (Index j = 0; j < mu.cols(); ++j) {
      double alpha = 0.0;
      while (alpha == 0.0) alpha = unit_uniform(rng);
      const double m = mu(i, j);
      s(i, j) = sample_beta(alpha, alpha * (1.0 - m) / m, rng);
    }
  return s;
}

double corr_from_flip(double u, double v) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("background probability must lie in (0, 1)");
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("flip probability must lie in [0, 1]");
  const double q = u + v * (1.0 - 2.0 * u);
  if (q <= 0.0 || q >= 1.0) throw InvalidArgument("flipped marginal is degenerate");
  const double both = u * (1.0 - v) * (1.0 - v) + (1.0 - u) * v * v;
  return (both - q * q) / (q * (1.0 - q));
}

FlipPair sample_flip_pair(std::size_t count, double u, double v, Rng& rng) {
  FlipPair out;
  out.first.resize(count);
  out.second.resize(count);
  for (std::size_t e = 0; e < count; ++e) {
    const bool x = bernoulli(u, rng);
    out.first[e] = static_cast<std::uint8_t>(x != bernoulli(v, rng));
    out.second[e] = static_cast<std::uint8_t>(x != bernoulli(v, rng));
  }
  return out;
}

bool AlignmentCounts::consistent() const {
  if (k > m) return false;
  if (a1 + a2 != k || b1 + b2 + b3 != m - k) return false;
  if (j1 + j2 != choose2(k)) return false;
  if (h1 + h2 + h3 != (m - k) * (m + k - 1) / 2) return false;
  if (choose2(a1) != j1) return false;
  if (choose2(a2) + a1 * a2 != j2) return false;
  if (choose2(b1) + b1 * a1 != h1) return false;
  if (choose2(b2) + b2 * a1 != h2) return false;
  return choose2(b3) + b1 * b2 + b1 * b3 + b2 * b3 + a2 * (m - k) + b3 * a1 == h3;
}

AlignmentCounts count_alignment(const Assignment& a, const Assignment& strong, const Assignment& weak) {
  const std::size_t m = a.size();
  if (strong.size() != m || weak.size() != m) throw DimensionError("assignments must share the template size");
  enum Kind : std::uint8_t { shared_hit, shared_miss, strong_hit, weak_hit, miss };
  std::vector<Kind> kind(m);
  AlignmentCounts c;
  c.m = m;
  for (std::size_t i = 0; i < m; ++i) {
    if (strong[i] == weak[i]) {
      ++c.k;
      kind[i] = a[i] == strong[i] ? shared_hit : shared_miss;
      ++(kind[i] == shared_hit ? c.a1 : c.a2);
    } else if (a[i] == strong[i]) {
      kind[i] = strong_hit;
      ++c.b1;
    } else if (a[i] == weak[i]) {
      kind[i] = weak_hit;
      ++c.b2;
    } else {
      kind[i] = miss;
      ++c.b3;
    }
  }
  auto in_t1 = [&](std::size_t i) { return kind[i] == shared_hit || kind[i] == strong_hit; };
  auto in_t2 = [&](std::size_t i) { return kind[i] == shared_hit || kind[i] == weak_hit; };
  auto is_shared = [&](std::size_t i) { return kind[i] == shared_hit || kind[i] == shared_miss; };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (is_shared(i) && is_shared(j)) {
        ++(in_t1(i) && in_t1(j) ? c.j1 : c.j2);
      } else if (in_t1(i) && in_t1(j)) {
        ++c.h1;
      } else if (in_t2(i) && in_t2(j)) {
        ++c.h2;
      } else {
        ++c.h3;
      }
    }
  return c;
}

double expected_edge_diff(const AlignmentCounts& c, double p, double r1, double r2, double r3) {
  const double cv = p * (1.0 - p);
  return 8.0 * cv *
         (static_cast<double>(c.j2) * r2 + static_cast<double>(c.h1) * (r3 - r1) + static_cast<double>(c.h3) * r3);
}

double expected_feature_diff(const AlignmentCounts& c, const std::array<double, 4>& mu, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidArgument("penalty eps must lie in [0, 1)");
  const double keep = 1.0 - eps;
  return static_cast<double>(c.a2) * (keep * mu[1] - mu[3]) + static_cast<double>(c.b1) * (mu[2] - keep * mu[0]) +
         static_cast<double>(c.b3) * (mu[2] - mu[3]);
}

Matrix bridge_distances(std::span<const Point3> coords_a, std::span<const Point3> coords_b,
                        std::span<const Bridge> bridges) {
  if (bridges.empty()) throw InvalidArgument("at least one bridge is required");
  auto dist = [](const Point3& x, const Point3& y) {
    return std::hypot(x[0] - y[0], x[1] - y[1], x[2] - y[2]);
  };
  const Index m = idx(coords_a.size()), n = idx(coords_b.size()), nb = idx(bridges.size());
  Matrix to_s(m, nb), to_w(n, nb);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < nb; ++j) to_s(i, j) = dist(coords_a[static_cast<std::size_t>(i)], bridges[static_cast<std::size_t>(j)].template_point);
  for (Index v = 0; v < n; ++v)
    for (Index j = 0; j < nb; ++j) to_w(v, j) = dist(coords_b[static_cast<std::size_t>(v)], bridges[static_cast<std::size_t>(j)].background_point);
  Matrix d = Matrix::Constant(m, n, std::numeric_limits<double>::infinity());
  for (Index j = 0; j < nb; ++j)
    for (Index v = 0; v < n; ++v)
      for (Index i = 0; i < m; ++i) d(i, v) = std::min(d(i, v), to_s(i, j) + to_w(v, j));
  return d;
}

SimilarityMatrix bridge_similarity(std::span<const Point3> coords_a, std::span<const Point3> coords_b,
                                   std::span<const Bridge> bridges) {
  const Matrix d = bridge_distances(coords_a, coords_b, bridges);
  if (d.size() == 0) return d;
  const double lo = d.minCoeff(), hi = d.maxCoeff();
  if (hi == lo) return Matrix::Ones(d.rows(), d.cols());
  return (hi - d.array()) / (hi - lo);
}

}  // namespace gmmf
