#include <doctest.h>

#include <cmath>

#include "fkflow/experiments.hpp"
#include "fkflow/oracle.hpp"

using namespace fkflow;

namespace {
WeightedMultigraph random_graph(Rng& rng, int max_edges = 6) {
  int n = 2 + int(uniform01(rng) * 4);
  WeightedMultigraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back(i);
  int m = 1 + int(uniform01(rng) * max_edges);
  int id = 0;
  for (int e = 0; e < m; ++e) {
    int u = int(uniform01(rng) * n), v = int(uniform01(rng) * n);
    if (u == v) continue;
    g.edges.push_back({id++, u, v, uniform01(rng) * 2.0});
  }
  return g;
}
}  // namespace

TEST_CASE("partition function examples") {
  // single edge, q=2, pi=1: Z = q^2 + pi q = 6
  auto edge = make_path(2, std::log(2.0));
  CHECK(partition_function(edge, 2.0) == doctest::Approx(6.0).epsilon(1e-12));

  auto tri = make_cycle(3, std::log(2.0));
  CHECK(partition_function(tri, 2.0) == doctest::Approx(28.0).epsilon(1e-12));

  // q=1: independence, Z = prod (1+pi)
  Rng rng = seed_stream(21, 0);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = random_graph(rng);
    double expected = 1.0;
    for (const auto& e : g.edges) expected *= 1.0 + std::expm1(e.c);
    CHECK(partition_function(g, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  }

  CHECK_THROWS_AS(partition_function(edge, -1.0), std::domain_error);
  CHECK_THROWS_AS(partition_function(make_torus(2, 6, 0.5), 2.0), CapacityError);
}

TEST_CASE("deletion-contraction examples") {
  auto tri = make_cycle(3, std::log(2.0));
  CHECK(deletion_contraction_Z(tri, 2.0) == doctest::Approx(28.0).epsilon(1e-12));

  WeightedMultigraph edgeless;
  edgeless.vertices = {0, 1, 2, 3};
  CHECK(deletion_contraction_Z(edgeless, 2.0) == doctest::Approx(16.0));

  auto edge = make_path(2, std::log(2.0));
  CHECK(deletion_contraction_Z(edge, 2.0) == doctest::Approx(6.0));
}

TEST_CASE("enumeration agrees with deletion-contraction on random graphs") {
  Rng rng = seed_stream(22, 0);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_graph(rng);
    for (double q : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      double ze = partition_function(g, q);
      double zdc = deletion_contraction_Z(g, q);
      CHECK(std::abs(ze - zdc) <= 1e-10 * std::max(ze, zdc));
    }
  }
}

TEST_CASE("edge marginals") {
  auto edge = make_path(2, std::log(2.0));
  CHECK(edge_marginal(edge, 2.0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  auto tri = make_cycle(3, c_from_p(0.5));
  for (int id = 0; id < 3; ++id)
    CHECK(edge_marginal(tri, 2.0, id) == doctest::Approx(5.0 / 14.0).epsilon(1e-12));

  Rng rng = seed_stream(23, 0);
  auto g = random_graph(rng);
  for (const auto& e : g.edges)
    CHECK(edge_marginal(g, 1.0, e.id) == doctest::Approx(p_from_c(e.c)).epsilon(1e-12));

  CHECK_THROWS_AS(edge_marginal(edge, 2.0, 99), std::out_of_range);
}

TEST_CASE("marginal bounds p/q <= P(open) <= p for constant weights, q >= 1") {
  for (const auto& [name, g] : flow_suite(c_from_p(0.5)))
    for (double q : {1.0, 1.5, 2.0, 3.0})
      for (const auto& e : g.edges) {
        double m = edge_marginal(g, q, e.id);
        double p = p_from_c(e.c);
        CHECK(m >= p / q - 1e-12);
        CHECK(m <= p + 1e-12);
      }
}

TEST_CASE("marginals are nondecreasing in every conductance (q >= 1)") {
  auto g = make_cycle(4, c_from_p(0.4));
  for (double q : {1.0, 2.0, 3.0})
    for (const auto& bump : g.edges) {
      auto g2 = g;
      g2.edges[bump.id].c += 0.5;
      for (const auto& e : g.edges)
        CHECK(edge_marginal(g2, q, e.id) >= edge_marginal(g, q, e.id) - 1e-12);
    }
}

TEST_CASE("exact distribution sums to one and marginals stay in [0,1]") {
  Rng rng = seed_stream(24, 0);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_graph(rng);
    auto sys = edge_system(g);
    for (double q : {0.5, 1.0, 2.0}) {
      auto dist = enumerate_distribution(sys, q);
      double total = 0.0;
      for (double w : dist.weight) {
        CHECK(w >= 0.0);
        total += w / dist.Z;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t e = 0; e < sys.edge_count(); ++e) {
        double m = edge_marginal(sys, q, e);
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
      }
    }
  }
}

TEST_CASE("exact sampler matches the single-edge marginal") {
  auto edge = make_path(2, std::log(2.0));
  auto sys = edge_system(edge);
  Rng rng = seed_stream(25, 0);
  long N = 100000, open = 0;
  for (long i = 0; i < N; ++i) open += exact_sample(sys, 2.0, rng) & 1;
  double p = 1.0 / 3.0, se = std::sqrt(p * (1 - p) / N);
  CHECK(std::abs(double(open) / N - p) <= 3 * se);
}

TEST_CASE("exact sampler q=1 reduces to independent Bernoulli") {
  auto g = make_path(3, c_from_p(0.3));
  auto sys = edge_system(g);
  Rng rng = seed_stream(26, 0);
  long N = 50000;
  std::vector<long> open(2, 0);
  for (long i = 0; i < N; ++i) {
    auto m = exact_sample(sys, 1.0, rng);
    for (int e = 0; e < 2; ++e) open[e] += (m >> e) & 1;
  }
  for (int e = 0; e < 2; ++e) {
    double se = std::sqrt(0.3 * 0.7 / N);
    CHECK(std::abs(double(open[e]) / N - 0.3) <= 3 * se);
  }
}

TEST_CASE("exact sampler chi-square against the enumerated triangle law") {
  auto tri = make_cycle(3, c_from_p(0.5));
  auto sys = edge_system(tri);
  auto dist = enumerate_distribution(sys, 2.0);
  std::vector<double> probs(8);
  for (int m = 0; m < 8; ++m) probs[m] = dist.weight[m] / dist.Z;
  Rng rng = seed_stream(27, 0);
  long N = 50000;
  std::vector<long> obs(8, 0);
  for (long i = 0; i < N; ++i) obs[exact_sample(sys, 2.0, rng)]++;
  CHECK(chi_square_pvalue(obs, probs, N) > 1e-3);
}

TEST_CASE("decomposition lemma on the triangle (rational)") {
  auto sys = system_from_ends<Rational>({{0, 1}, {1, 2}, {2, 0}}, Rational(1));  // p = 1/2
  auto rep = validate_decomposition(sys, Rational(2), Rational(1, 2));
  CHECK(rep.max_total_variation < 1e-10);
  CHECK(rep.marginal_identity_ok);
  CHECK(rep.conditionals_checked > 0);
}

TEST_CASE("decomposition lemma at q=1 is exact thinning of product measures") {
  auto sys = system_from_ends<Rational>({{0, 1}, {1, 2}}, Rational(1, 4));
  auto rep = validate_decomposition(sys, Rational(1), Rational(3, 10));
  CHECK(rep.max_total_variation == 0.0);
  CHECK(rep.marginal_identity_ok);
}

TEST_CASE("FKG covariances") {
  auto path = make_path(3, std::log(2.0));
  auto sys = edge_system(path);
  CHECK(fkg_covariance(sys, 1.0, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  // on a tree the measure factorizes for every q, so the covariance vanishes
  CHECK(std::abs(fkg_covariance(sys, 2.0, 0, 1)) < 1e-12);
  // a cycle is genuinely correlated at q > 1
  auto tri = edge_system(make_cycle(3, std::log(2.0)));
  CHECK(fkg_covariance(tri, 2.0, 0, 1) > 1e-3);

  // sweep all suite graphs on <= 4 vertices
  for (const auto& [name, ends] : small_connected_graphs()) {
    auto s = system_from_ends<double>(ends, 1.0);
    for (double q : {1.0, 1.5, 2.0, 3.0})
      for (std::size_t e = 0; e < s.edge_count(); ++e)
        for (std::size_t f = e + 1; f < s.edge_count(); ++f)
          CHECK(fkg_covariance(s, q, e, f) >= -1e-12);
  }
}

TEST_CASE("survival closed forms") {
  auto edge = make_path(2, std::log(2.0));
  double t = std::log(2.0);
  CHECK(survival_exact(edge, 2.0, t) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(survival_exact(edge, 2.0, 0.7) ==
        doctest::Approx((2.0 + std::exp(-0.7)) / 3.0).epsilon(1e-12));

  auto pp = parallel_pair(std::log(2.0), std::log(2.0));
  auto f = [](double t) { return (2.0 + 2.0 * std::exp(-t) + std::exp(-2.0 * t)) / 5.0; };
  for (double tt : {0.0, 0.3, std::log(2.0), 2.0})
    CHECK(survival_exact(pp, 2.0, tt) == doctest::Approx(f(tt)).epsilon(1e-12));

  CHECK(survival_exact(edge, 2.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("hazard closed forms and q=1 reduction") {
  auto edge = make_path(2, std::log(2.0));
  CHECK(hazard_exact(edge, 2.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  auto tri = make_cycle(3, c_from_p(0.5));
  CHECK(hazard_exact(tri, 2.0, 0.0) == doctest::Approx(3.0 * 5.0 / 14.0).epsilon(1e-12));

  // q=1: hazard = sum of eroded p_e(t)
  auto g = make_path(4, c_from_p(0.4));
  for (double t : {0.0, 0.5, 1.5}) {
    double expected = 0.0;
    for (const auto& e : g.edges) {
      double pi = std::expm1(e.c) * std::exp(-t);
      expected += pi / (1.0 + pi);
    }
    CHECK(hazard_exact(g, 1.0, t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("hazard equals -d/dt log survival (finite differences)") {
  for (const auto& [name, g] : flow_suite(c_from_p(0.5)))
    for (double q : {1.0, 2.0, 3.0})
      for (double t : {0.0, 0.5, 1.0, 2.0}) {
        double h = 1e-5;
        double fd;
        if (t == 0.0) {
          // second-order one-sided stencil at the boundary
          fd = -(-3.0 * std::log(survival_exact(g, q, 0.0)) +
                 4.0 * std::log(survival_exact(g, q, h)) -
                 std::log(survival_exact(g, q, 2.0 * h))) /
               (2.0 * h);
        } else {
          fd = -(std::log(survival_exact(g, q, t + h)) - std::log(survival_exact(g, q, t - h))) /
               (2.0 * h);
        }
        CHECK(std::abs(fd - hazard_exact(g, q, t)) < 1e-6);
      }
}
