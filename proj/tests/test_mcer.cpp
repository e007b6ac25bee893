#include <doctest.h>

#include <cmath>
#include <vector>

#include "gmmf/diversifier.hpp"
#include "gmmf/errors.hpp"
#include "gmmf/mcer.hpp"
#include "support.hpp"

using namespace gmmf;

namespace {

struct Moments {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  void add(double x, double y) {
    n += 1;
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
  }
  double corr() const {
    const double cov = sxy / n - (sx / n) * (sy / n);
    return cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  }
};

struct Mean {
  double n = 0, s = 0, ss = 0;
  void add(double x) { n += 1, s += x, ss += x * x; }
  double mean() const { return s / n; }
  double se() const { return std::sqrt((ss / n - mean() * mean()) / (n - 1)); }
};

McerSpec single_template(std::size_t m, std::size_t n, double p, double r) {
  return McerSpec::layered(m, n, 0, p, {r}, 0.0);
}

std::size_t choose2(std::size_t x) { return x * (x - 1) / 2; }

// Classification of every template pair straight from the node kinds.
AlignmentCounts classify_pairs(const Assignment& a, const Assignment& strong, const Assignment& weak) {
  AlignmentCounts c;
  c.m = a.size();
  std::vector<bool> shared(c.m), in1(c.m), in2(c.m);
  for (std::size_t i = 0; i < c.m; ++i) {
    shared[i] = strong[i] == weak[i];
    in1[i] = a[i] == strong[i];
    in2[i] = a[i] == weak[i];
  }
  for (std::size_t i = 0; i < c.m; ++i)
    for (std::size_t j = i + 1; j < c.m; ++j) {
      if (shared[i] && shared[j])
        ++(in1[i] && in1[j] ? c.j1 : c.j2);
      else if (in1[i] && in1[j])
        ++c.h1;
      else if (in2[i] && in2[j])
        ++c.h2;
      else
        ++c.h3;
    }
  return c;
}

}  // namespace

TEST_CASE("sample_mcer: zero correlation leaves A and B independent") {
  Rng rng(1);
  const McerSpec spec = single_template(20, 40, 0.5, 0.0);
  Moments mo;
  for (int t = 0; t < 530; ++t) {
    const McerInstance inst = sample_mcer(spec, rng);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = i + 1; j < 20; ++j) mo.add(inst.a(i, j), inst.b(inst.truth[0][i], inst.truth[0][j]));
  }
  CHECK(mo.n >= 1e5);
  CHECK(std::abs(mo.corr()) <= 0.01);
}

TEST_CASE("sample_mcer: full correlation copies A into the template block") {
  Rng rng(2);
  const McerSpec spec = McerSpec::layered(8, 30, 3, 0.6, {1.0, 1.0}, 1.0);
  for (int t = 0; t < 20; ++t) {
    const McerInstance inst = sample_mcer(spec, rng);
    REQUIRE(inst.truth.size() == 2);
    CHECK(inst.s.size() == 0);
    for (const auto& truth : inst.truth) CHECK(induced_subgraph(inst.b, truth) == inst.a);
  }
}

TEST_CASE("sample_mcer: marginals and block correlations") {
  Rng rng(3);
  const double p = 0.8;
  const std::size_t m = 20, n = 60, k = 5;
  const McerSpec spec = McerSpec::layered(m, n, k, p, {0.954, 0.803}, 0.897);
  Moments strong, shared, weak;
  Mean template_b, outside_b, a_mean;
  for (int t = 0; t < 400; ++t) {
    const McerInstance inst = sample_mcer(spec, rng);
    const auto& t1 = inst.truth[0];
    const auto& t2 = inst.truth[1];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const bool both_shared = i >= m - k && j >= m - k;
        a_mean.add(inst.a(i, j));
        (both_shared ? shared : strong).add(inst.a(i, j), inst.b(t1[i], t1[j]));
        if (!both_shared) weak.add(inst.a(i, j), inst.b(t2[i], t2[j]));
        template_b.add(inst.b(t1[i], t1[j]));
      }
    for (std::size_t u = 2 * m - k; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) outside_b.add(inst.b(u, v));
  }
  CHECK(std::abs(strong.corr() - 0.954) <= 0.02);
  CHECK(std::abs(shared.corr() - 0.897) <= 0.02);
  CHECK(std::abs(weak.corr() - 0.803) <= 0.02);
  for (const Mean* mn : {&template_b, &outside_b, &a_mean}) CHECK(std::abs(mn->mean() - p) <= 3 * mn->se());
}

TEST_CASE("similarity layout and Beta draws") {
  const McerSpec spec = McerSpec::layered(5, 12, 2, 0.8, {0.954, 0.803}, 0.897);
  const SimilaritySpec sim = SimilaritySpec::four(0.6, 0.55, 0.5, 0.1);
  const Matrix mu = similarity_means(sim, spec);
  CHECK(mu(0, 0) == 0.6);
  CHECK(mu(2, 2) == 0.6);
  CHECK(mu(3, 3) == 0.55);
  CHECK(mu(4, 4) == 0.55);
  CHECK(mu(0, 5) == 0.5);
  CHECK(mu(2, 7) == 0.5);
  CHECK(mu(0, 1) == 0.1);
  CHECK(mu(4, 11) == 0.1);
  CHECK((mu.array() == 0.1).count() == 5 * 12 - 8);

  Rng rng(4);
  Mean half;
  for (int t = 0; t < 100000; ++t) {
    double alpha = 0.0;
    while (alpha == 0.0) alpha = unit_uniform(rng);
    const double x = sample_beta(alpha, alpha, rng);
    CHECK_UNARY(x >= 0.0 && x <= 1.0);
    half.add(x);
  }
  CHECK(std::abs(half.mean() - 0.5) <= 0.01);

  Matrix sum = Matrix::Zero(5, 12);
  for (int t = 0; t < 2000; ++t) {
    const Matrix s = sample_similarity(sim, spec, rng);
    CHECK_UNARY((s.array() >= 0.0).all() && (s.array() <= 1.0).all());
    sum += s;
  }
  CHECK(((sum / 2000.0) - mu).cwiseAbs().maxCoeff() <= 0.03);
}

TEST_CASE("corr_from_flip") {
  CHECK(corr_from_flip(0.8, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(corr_from_flip(0.3, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(corr_from_flip(0.8, 0.0074) == doctest::Approx(0.9548).epsilon(1e-4));
  double prev = 1.0;
  for (int t = 1; t < 50; ++t) {
    const double c = corr_from_flip(0.8, t / 100.0);
    CHECK(c < prev);
    prev = c;
  }
  // the two copies have the same marginal, so the closed form collapses
  for (const double v : {0.01, 0.1, 0.3}) {
    const double u = 0.8, q = u + v * (1 - 2 * u);
    CHECK(corr_from_flip(u, v) == doctest::Approx(u * (1 - u) * (1 - 2 * v) * (1 - 2 * v) / (q * (1 - q))));
  }
  CHECK_THROWS_AS(corr_from_flip(0.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(corr_from_flip(0.5, 1.5), InvalidArgument);

  Rng rng(5);
  const FlipPair fp = sample_flip_pair(200000, 0.8, 0.0326, rng);
  Moments mo;
  for (std::size_t e = 0; e < fp.first.size(); ++e) mo.add(fp.first[e], fp.second[e]);
  CHECK(std::abs(mo.corr() - corr_from_flip(0.8, 0.0326)) <= 0.01);
}

TEST_CASE("count_alignment: planted truths") {
  const std::size_t m = 10, k = 4;
  const McerSpec spec = McerSpec::layered(m, 30, k, 0.8, {0.954, 0.803}, 0.897);
  const Assignment strong(spec.templates[0].region, 30), weak(spec.templates[1].region, 30);

  const AlignmentCounts w = count_alignment(weak, strong, weak);
  CHECK(w.k == k);
  CHECK(w.a1 == k);
  CHECK(w.b2 == m - k);
  CHECK(w.a2 + w.b1 + w.b3 + w.j2 + w.h1 + w.h3 == 0);
  CHECK(w.consistent());

  const AlignmentCounts s = count_alignment(strong, strong, weak);
  CHECK(s.a1 == k);
  CHECK(s.b1 == m - k);
  CHECK(s.h1 == (m - k) * (m + k - 1) / 2);
  CHECK(s.consistent());
}

TEST_CASE("count_alignment: random assignments satisfy the identities") {
  Rng rng(6);
  const std::size_t m = 9, n = 24;
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = static_cast<std::size_t>(t % 10);
    const McerSpec spec = McerSpec::layered(m, n, k, 0.5, {0.9, 0.8}, 0.85);
    const Assignment strong(spec.templates[0].region, n), weak(spec.templates[1].region, n);
    // bias towards the planted regions so every class shows up
    std::vector<std::size_t> sigma(m, n);
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < m; ++i) {
      const double u = testing::uniform(rng);
      const std::size_t want = u < 0.35 ? strong[i] : u < 0.7 ? weak[i] : n;
      if (want < n && !used[want]) sigma[i] = want, used[want] = true;
    }
    for (std::size_t i = 0; i < m; ++i)
      if (sigma[i] == n) {
        std::size_t v;
        do v = static_cast<std::size_t>(rng() % n);
        while (used[v]);
        sigma[i] = v, used[v] = true;
      }
    const Assignment a(sigma, n);
    const AlignmentCounts c = count_alignment(a, strong, weak);
    const AlignmentCounts ref = classify_pairs(a, strong, weak);
    CHECK(c.k == k);
    CHECK(c.j1 == ref.j1);
    CHECK(c.j2 == ref.j2);
    CHECK(c.h1 == ref.h1);
    CHECK(c.h2 == ref.h2);
    CHECK(c.h3 == ref.h3);
    CHECK(c.j1 == choose2(c.a1));
    CHECK(c.j1 + c.j2 == k * (k - 1) / 2);
    CHECK(c.h1 + c.h2 + c.h3 == (m - k) * (m + k - 1) / 2);
    CHECK(c.consistent());
  }
}

TEST_CASE("expected differences: count substitution") {
  const std::size_t m = 10, k = 4;
  const double p = 0.8, r1 = 0.954, r2 = 0.897, r3 = 0.803;
  const std::array<double, 4> mu{0.6, 0.55, 0.5, 0.1};
  const McerSpec spec = McerSpec::layered(m, 30, k, p, {r1, r3}, r2);
  const Assignment strong(spec.templates[0].region, 30), weak(spec.templates[1].region, 30);

  const AlignmentCounts w = count_alignment(weak, strong, weak);
  CHECK(expected_edge_diff(w, p, r1, r2, r3) == 0.0);
  CHECK(expected_feature_diff(w, mu, 0.0) == 0.0);
  CHECK(expected_feature_diff(w, mu, 0.4) == 0.0);

  const AlignmentCounts s = count_alignment(strong, strong, weak);
  const double h1 = static_cast<double>((m - k) * (m + k - 1) / 2);
  CHECK(expected_edge_diff(s, p, r1, r2, r3) == doctest::Approx(8 * p * (1 - p) * h1 * (r3 - r1)));
  CHECK(expected_edge_diff(s, p, r1, r2, r3) < 0.0);
  CHECK(expected_feature_diff(s, mu, 0.0) == doctest::Approx((m - k) * (mu[2] - mu[0])));
}

TEST_CASE("expected differences agree with Monte Carlo") {
  const std::size_t m = 8, n = 20, k = 3;
  const double p = 0.8, r1 = 0.954, r2 = 0.897, r3 = 0.803, eps = 0.3;
  const std::array<double, 4> mu{0.6, 0.55, 0.5, 0.1};
  const McerSpec spec = McerSpec::layered(m, n, k, p, {r1, r3}, r2);
  const SimilaritySpec sim = SimilaritySpec::four(mu[0], mu[1], mu[2], mu[3]);
  const Assignment strong(spec.templates[0].region, n), weak(spec.templates[1].region, n);
  // strong hit, weak hit, miss, strong hit, weak hit, shared hit, shared miss, shared hit
  const Assignment a({0, 9, 15, 3, 12, 5, 16, 7}, n);
  const AlignmentCounts c = count_alignment(a, strong, weak);
  CHECK(c.b1 == 2);
  CHECK(c.b2 == 2);
  CHECK(c.b3 == 1);
  CHECK(c.a2 == 1);

  const std::vector<PenaltyMask> masks{build_mask(strong, eps)};
  Rng rng(7);
  Mean de, df;
  for (int t = 0; t < 2000; ++t) {
    const McerInstance inst = sample_mcer(spec, sim, rng);
    const PaddedPair pp = pad(inst.a, inst.b, Padding::centered);
    de.add(objective(pp, weak, Matrix(), 0.0) - objective(pp, a, Matrix(), 0.0));
    const Matrix s = apply_masks(inst.s, masks);
    double f = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      f += s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(weak[i])) -
           s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a[i]));
    df.add(f);
  }
  CHECK(std::abs(de.mean() - expected_edge_diff(c, p, r1, r2, r3)) <= 3 * de.se());
  CHECK(std::abs(df.mean() - expected_feature_diff(c, mu, eps)) <= 3 * df.se());
}

TEST_CASE("bridge similarity") {
  const std::vector<Point3> a{{0, 0, 0}, {1, 2, 2}, {3, 0, 4}};
  const std::vector<Point3> b{{0, 0, 0}, {0, 3, 4}, {2, 2, 1}, {1, 0, 0}};
  const std::vector<Bridge> origin{{{0, 0, 0}, {0, 0, 0}}};
  const Matrix d = bridge_distances(a, b, origin);
  const double na[] = {0, 3, 5}, nb[] = {0, 5, 3, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(d(i, j) == doctest::Approx(na[i] + nb[j]));

  const Matrix s = bridge_similarity(a, b, origin);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(2, 1) == 0.0);
  CHECK_UNARY((s.array() >= 0.0).all() && (s.array() <= 1.0).all());

  const std::vector<Bridge> two{origin[0], {{3, 0, 4}, {0, 3, 4}}};
  const Matrix d2 = bridge_distances(a, b, two);
  CHECK_UNARY((d2.array() <= d.array()).all());
  CHECK(d2(2, 1) == 0.0);

  const std::vector<Point3> one{{1, 1, 1}};
  CHECK(bridge_similarity(one, one, origin) == Matrix::Ones(1, 1));
  CHECK_THROWS_AS(bridge_distances(a, b, std::vector<Bridge>{}), InvalidArgument);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(McerSpec::layered(5, 7, 2, 0.5, {0.9, 0.8}, 0.85), DimensionError);
  CHECK_THROWS_AS(McerSpec::layered(5, 20, 6, 0.5, {0.9, 0.8}, 0.85), InvalidArgument);
  McerSpec bad_p = McerSpec::layered(5, 20, 2, 0.5, {0.9, 0.8}, 0.85);
  bad_p.p = 1.0;
  CHECK_THROWS_AS(bad_p.validate(), InvalidArgument);
  McerSpec bad_r = McerSpec::layered(5, 20, 2, 0.5, {0.9, 0.8}, 0.85);
  bad_r.templates[0].corr(0, 1) = 1.5;
  CHECK_THROWS_AS(bad_r.validate(), InvalidArgument);
  McerSpec bad_overlap = McerSpec::layered(5, 20, 2, 0.5, {0.9, 0.8}, 0.85);
  bad_overlap.templates[1].region[0] = 1;
  CHECK_THROWS_AS(bad_overlap.validate(), InvalidArgument);
  McerSpec repeated = McerSpec::layered(5, 20, 2, 0.5, {0.9, 0.8}, 0.85);
  repeated.templates[1].region[0] = repeated.templates[1].region[1];
  CHECK_THROWS_AS(repeated.validate(), InvalidArgument);

  CHECK_THROWS_AS(SimilaritySpec::four(0.5, 0.55, 0.4, 0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(SimilaritySpec::four(1.0, 0.55, 0.4, 0.1).validate(), InvalidArgument);
  CHECK_NOTHROW(SimilaritySpec::four(0.6, 0.55, 0.5, 0.1).validate());
  Rng rng(1);
  CHECK_THROWS_AS(sample_beta(0.0, 1.0, rng), InvalidArgument);
}
