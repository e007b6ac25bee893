#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmmf/errors.hpp"
#include "gmmf/lap.hpp"
#include "gmmf/matcher.hpp"
#include "support.hpp"

using namespace gmmf;
using testing::for_each_injection;
using testing::random_graph;

namespace {

// Relaxed objective straight from the definition: sum_ij At_ij (P Bt P^T)_ij + lambda <S, P_(1)>.
double relaxed_by_definition(std::span<const PaddedPair> layers, const Matrix& p, const Matrix& s, double lambda) {
  double total = 0.0;
  for (const auto& pp : layers) total += (pp.padded_template().array() * (p * pp.background * p.transpose()).array()).sum();
  if (s.size() > 0) total += lambda * (s.array() * p.topRows(s.rows()).array()).sum();
  return total;
}

DoublyStochastic random_point(std::size_t n, Rng& rng) {
  // Average of a few permutation matrices: interior enough for finite differences.
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = 0; k < 4; ++k) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const double w = 0.25;
    for (std::size_t i = 0; i < n; ++i) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i])) += w;
  }
  return {p};
}

double max_rel_fd_error(std::span<const PaddedPair> layers, const Matrix& p, const Matrix& s, double lambda) {
  const Matrix g = gradient(layers, p, s, lambda);
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      Matrix up = p, down = p;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (relaxed_by_definition(layers, up, s, lambda) - relaxed_by_definition(layers, down, s, lambda)) / (2 * h);
      worst = std::max(worst, std::abs(g(i, j) - fd) / std::max(1.0, std::abs(fd)));
    }
  return worst;
}

Matrix weighted_graph(std::size_t n, Rng& rng) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (testing::uniform(rng) < 0.5) w(i, j) = w(j, i) = testing::uniform(rng) * 3.0;
  return w;
}

}  // namespace

TEST_CASE("init_point: barycenter, permutation and seed block") {
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  const DoublyStochastic flat = init_point(4, 0, 1.0, perm);
  CHECK(flat.entries.isApproxToConstant(0.25));
  const DoublyStochastic vertex = init_point(4, 0, 0.0, perm);
  for (std::size_t i = 0; i < 4; ++i) CHECK(vertex.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i])) == 1.0);
  CHECK(vertex.entries.sum() == 4.0);

  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t s = static_cast<std::size_t>(t % 4);
    const DoublyStochastic p = init_point(rng, 9, s);
    CHECK(p.max_sum_error() <= 1e-12);
    CHECK(p.valid(s, 1e-12));
    CHECK(p.entries.topLeftCorner(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)).isIdentity());
  }
}

TEST_CASE("gradient: naive padding of an empty template leaves only lambda S") {
  Rng rng(4);
  const PaddedPair pp = pad(Graph(3), random_graph(6, 0.5, rng), Padding::naive);
  const Matrix s = testing::random_matrix(3, 6, rng);
  const DoublyStochastic p = random_point(6, rng);
  CHECK(gradient(pp, p.entries, s, 2.5).isApprox(2.5 * s, 1e-14));
}

TEST_CASE("gradient: lambda 0 with symmetric matrices is 2 At P Bt on the first m rows") {
  Rng rng(5);
  const PaddedPair pp = pad(random_graph(4, 0.5, rng), random_graph(8, 0.5, rng), Padding::centered);
  const DoublyStochastic p = random_point(8, rng);
  const Matrix expected = (2.0 * pp.padded_template() * p.entries * pp.background).topRows(4);
  CHECK(gradient(pp, p.entries, Matrix(), 0.0).isApprox(expected, 1e-13));
}

TEST_CASE("gradient: agrees with central finite differences") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial)
    for (const Padding scheme : {Padding::centered, Padding::naive}) {
      const PaddedPair pp = pad(random_graph(4, 0.5, rng), random_graph(8, 0.5, rng), scheme);
      const Matrix s = testing::random_matrix(4, 8, rng);
      const DoublyStochastic p = random_point(8, rng);
      CHECK(max_rel_fd_error(std::span(&pp, 1), p.entries, s, 1.7) < 1e-6);
    }
  for (int trial = 0; trial < 20; ++trial) {
    LayeredPair lp;
    for (int l = 0; l < 2; ++l)
      lp.layers.push_back(pad(Graph::from_adjacency(weighted_graph(4, rng)), Graph::from_adjacency(weighted_graph(8, rng)),
                              Padding::naive));
    const Matrix s = testing::random_matrix(4, 8, rng);
    const DoublyStochastic p = random_point(8, rng);
    CHECK(max_rel_fd_error(lp.layers, p.entries, s, 0.9) < 1e-6);
    CHECK(gradient(lp, p.entries, s, 0.9).isApprox(gradient(std::span<const PaddedPair>(lp.layers), p.entries, s, 0.9)));
  }
}

TEST_CASE("relaxed objective matches the definition and the discrete objective at vertices") {
  Rng rng(7);
  const PaddedPair pp = pad(random_graph(3, 0.5, rng), random_graph(7, 0.5, rng), Padding::centered);
  const Matrix s = testing::random_matrix(3, 7, rng);
  const DoublyStochastic p = random_point(7, rng);
  CHECK(relaxed_objective(pp, p.entries, s, 1.3) ==
        doctest::Approx(relaxed_by_definition(std::span(&pp, 1), p.entries, s, 1.3)).epsilon(1e-12));
  const SquarePermutation q({6, 2, 4, 0, 1, 3, 5});
  CHECK(relaxed_objective(pp, q.to_matrix(), s, 1.3) == doctest::Approx(objective(pp, q, s, 1.3)).epsilon(1e-12));
}

TEST_CASE("search_direction") {
  Matrix diag = Matrix::Zero(3, 6);
  diag.diagonal().setConstant(10.0);
  CHECK(search_direction(diag, 6).head(3).values() == std::vector<std::size_t>{0, 1, 2});
  CHECK(search_direction(Matrix::Zero(3, 6), 6) == SquarePermutation::identity(6));

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix g = testing::random_matrix(3, 6, rng);
    const SquarePermutation q = search_direction(g, 6);
    const double got = (g.array() * q.to_matrix().topRows(3).array()).sum();
    double best = -std::numeric_limits<double>::infinity();
    for_each_injection(3, 6, [&](const std::vector<std::size_t>& sigma) {
      best = std::max(best, g(0, static_cast<Eigen::Index>(sigma[0])) + g(1, static_cast<Eigen::Index>(sigma[1])) +
                                g(2, static_cast<Eigen::Index>(sigma[2])));
    });
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }

  const SquarePermutation seeded = search_direction(testing::random_matrix(4, 7, rng), 7, 2);
  CHECK(seeded[0] == 0);
  CHECK(seeded[1] == 1);
}

TEST_CASE("line search: flat direction keeps P") {
  Rng rng(9);
  const PaddedPair pp = pad(random_graph(3, 0.5, rng), random_graph(6, 0.5, rng), Padding::centered);
  const SquarePermutation q({1, 0, 2, 5, 4, 3});
  CHECK(line_search(pp, Matrix(), 0.0, DoublyStochastic{q.to_matrix()}, q) == 1.0);
  CHECK(line_search_step(LineCoefficients{0.0, 0.0, 3.0}) == 1.0);
}

TEST_CASE("line search: concave quadratic with an interior peak") {
  const LineCoefficients g{-2.0, 1.0, 0.0};  // peak at 0.25
  const double gamma = line_search_step(g);
  CHECK(gamma == doctest::Approx(0.25));
  CHECK(g(gamma) >= std::max(g(0.0), g(1.0)));
}

TEST_CASE("line search: coefficients reproduce the objective along the segment") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const PaddedPair pp = pad(random_graph(4, 0.5, rng), random_graph(8, 0.5, rng), Padding::centered);
    const Matrix s = testing::random_matrix(4, 8, rng);
    const DoublyStochastic p = random_point(8, rng);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const SquarePermutation q(perm);
    const LineCoefficients g = line_coefficients(std::span(&pp, 1), s, 2.0, p.entries, q);
    for (const double gamma : {0.0, 0.3, 0.7, 1.0}) {
      const Matrix x = gamma * p.entries + (1.0 - gamma) * q.to_matrix();
      CHECK(g(gamma) == doctest::Approx(relaxed_by_definition(std::span(&pp, 1), x, s, 2.0)).epsilon(1e-10));
    }
  }
}

TEST_CASE("fw_solve: triangle against triangle") {
  const std::vector<std::pair<std::size_t, std::size_t>> tri{{0, 1}, {1, 2}, {0, 2}};
  const Graph k3 = Graph::from_edges(3, tri);
  const PaddedPair pp = pad(k3, k3, Padding::centered);
  FwConfig cfg;
  Rng rng(1);
  const RestartResult r = fw_solve(pp, Matrix(), cfg, rng);
  CHECK(r.objective == 6.0);
  CHECK(r.assignment.size() == 3);
}

TEST_CASE("fw_solve: fully seeded run returns the seeds") {
  Rng rng(2);
  const PaddedPair pp = pad(random_graph(4, 0.5, rng), random_graph(9, 0.5, rng), Padding::centered);
  FwConfig cfg;
  cfg.seeds = 4;
  const RestartResult r = fw_solve(pp, Matrix(), cfg, rng);
  CHECK(r.assignment.values() == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("fw_solve: seeds never move and the trace never decreases") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const PaddedPair pp = pad(random_graph(6, 0.5, rng), random_graph(20, 0.5, rng), Padding::centered);
    const Matrix s = testing::random_matrix(6, 20, rng);
    FwConfig cfg;
    cfg.seeds = 2;
    cfg.lambda = 1.5;
    cfg.record_trace = true;
    const RestartResult r = fw_solve(pp, s, cfg, rng);
    CHECK(r.assignment[0] == 0);
    CHECK(r.assignment[1] == 1);
    for (std::size_t t = 1; t < r.trace.size(); ++t)
      CHECK(r.trace[t] >= r.trace[t - 1] - 1e-9 * std::max(1.0, std::abs(r.trace[t - 1])));
    CHECK(r.objective == objective(pp, r.assignment, s, 1.5));
  }
}

TEST_CASE("fw_solve_from: projection maximizes agreement with the final point") {
  Rng rng(4);
  const PaddedPair pp = pad(random_graph(5, 0.5, rng), random_graph(12, 0.5, rng), Padding::naive);
  FwConfig cfg;
  cfg.max_iters = 1;
  const DoublyStochastic start = init_point(rng, 12, 0);
  const RestartResult r = fw_solve_from(std::span(&pp, 1), Matrix(), cfg, start);
  CHECK(r.iterations == 1);
  CHECK(r.assignment.size() == 5);
}

TEST_CASE("match_restarts: ranking, determinism and thread invariance") {
  Rng rng(5);
  const PaddedPair pp = pad(random_graph(5, 0.5, rng), random_graph(15, 0.5, rng), Padding::centered);
  const Matrix s = testing::random_matrix(5, 15, rng);
  FwConfig cfg;
  cfg.lambda = 1.0;
  cfg.n_restarts = 1;
  CHECK(match_restarts(pp, s, cfg).size() == 1);

  cfg.n_restarts = 12;
  cfg.master_seed = 77;
  const auto a = match_restarts(pp, s, cfg);
  const auto b = match_restarts(pp, s, cfg);
  cfg.threads = 3;
  const auto c = match_restarts(pp, s, cfg);
  REQUIRE(a.size() == 12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].assignment == b[k].assignment);
    CHECK(a[k].objective == b[k].objective);
    CHECK(a[k].assignment == c[k].assignment);
    CHECK(a[k].restart == c[k].restart);
    if (k > 0) {
      CHECK(a[k - 1].objective >= a[k].objective);
      if (a[k - 1].objective == a[k].objective) CHECK(a[k - 1].restart < a[k].restart);
    }
    CHECK(a[k].objective == objective(pp, a[k].assignment, s, 1.0));
  }
}

TEST_CASE("config validation") {
  FwConfig cfg;
  cfg.n_restarts = 0;
  CHECK_THROWS_AS(cfg.validate(3), ConfigError);
  cfg = {};
  cfg.seeds = 4;
  CHECK_THROWS_AS(cfg.validate(3), ConfigError);
  cfg = {};
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(3), ConfigError);
  CHECK(FwConfig{}.tolerance(200) == doctest::Approx(2e-4));
}

TEST_CASE("SeededFrame moves seed pairs to the front and back") {
  Rng rng(6);
  const Graph a = random_graph(5, 0.5, rng), b = random_graph(9, 0.5, rng);
  const std::vector<std::pair<std::size_t, std::size_t>> seeds{{3, 7}, {1, 2}};
  const SeededFrame frame(5, 9, seeds);
  CHECK(frame.template_order()[0] == 3);
  CHECK(frame.background_order()[1] == 2);
  const Assignment original({7, 2, 0, 1, 4}, 9);
  CHECK(frame.from_frame(frame.to_frame(original)) == original);
  const Matrix s = testing::random_matrix(5, 9, rng);
  CHECK(frame.from_frame(frame.to_frame(s)) == s);

  // Objectives agree across frames.
  const PaddedPair orig = pad(a, b, Padding::centered);
  const PaddedPair framed = pad(frame.template_graph(a), frame.background_graph(b), Padding::centered);
  CHECK(objective(framed, frame.to_frame(original), frame.to_frame(s), 2.0) ==
        doctest::Approx(objective(orig, original, s, 2.0)).epsilon(1e-12));

  FwConfig cfg;
  cfg.seeds = 2;
  cfg.n_restarts = 3;
  const auto ranked = match_restarts(framed, frame.to_frame(s), cfg);
  const Assignment back = frame.from_frame(ranked.front().assignment);
  CHECK(back[3] == 7);
  CHECK(back[1] == 2);
}
