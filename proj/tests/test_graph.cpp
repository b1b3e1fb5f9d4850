#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fkflow/graph.hpp"
#include "fkflow/rng.hpp"

using namespace fkflow;

TEST_CASE("weight conversions") {
  CHECK(convert_weight(std::log(2.0), WeightConvention::c, WeightConvention::pi) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(convert_weight(std::log(2.0), WeightConvention::c, WeightConvention::p) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(convert_weight(0.0, WeightConvention::p, WeightConvention::pi) == 0.0);
  CHECK(convert_weight(0.0, WeightConvention::p, WeightConvention::c) == 0.0);
  CHECK(convert_weight(3.0, WeightConvention::pi, WeightConvention::p) ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK(convert_weight(3.0, WeightConvention::pi, WeightConvention::c) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));

  CHECK_THROWS_AS(convert_weight(1.0, WeightConvention::p, WeightConvention::pi),
                  std::domain_error);
  CHECK_THROWS_AS(convert_weight(-0.1, WeightConvention::p, WeightConvention::c),
                  std::domain_error);
  CHECK_THROWS_AS(convert_weight(-1.0, WeightConvention::c, WeightConvention::pi),
                  std::domain_error);
}

TEST_CASE("weight conversion round-trip stays within 1e-12 relative") {
  for (double p : {0.0, 1e-9, 1e-4, 0.1, 0.5, 0.9, 0.99, 0.999999}) {
    double c = convert_weight(p, WeightConvention::p, WeightConvention::c);
    double back = convert_weight(c, WeightConvention::c, WeightConvention::p);
    CHECK(std::abs(back - p) <= 1e-12 * std::max(p, 1e-300) + 1e-15);
    double pi = convert_weight(p, WeightConvention::p, WeightConvention::pi);
    double back2 = convert_weight(pi, WeightConvention::pi, WeightConvention::p);
    CHECK(std::abs(back2 - p) <= 1e-12 * std::max(p, 1e-300) + 1e-15);
  }
}

TEST_CASE("merge_parallel sums conductances") {
  WeightedMultigraph g;
  g.vertices = {0, 1};
  g.edges = {{0, 0, 1, std::log(2.0)}, {1, 0, 1, std::log(3.0)}};
  auto s = merge_parallel(g);
  CHECK(s.weight(0, 1) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  WeightedMultigraph single;
  single.vertices = {0, 1};
  single.edges = {{0, 0, 1, 0.7}};
  CHECK(merge_parallel(single).weight(0, 1) == doctest::Approx(0.7));
}

TEST_CASE("parallel merge matches at-least-one-open enumeration") {
  // two parallel edges pi1 = pi2 = 1: weight of at-least-one-open over the 4
  // joint states, computed by brute force
  double pi1 = 1.0, pi2 = 1.0;
  double at_least_one = pi1 + pi2 + pi1 * pi2;
  WeightedMultigraph g;
  g.vertices = {0, 1};
  g.edges = {{0, 0, 1, std::log1p(pi1)}, {1, 0, 1, std::log1p(pi2)}};
  double merged_pi = std::expm1(merge_parallel(g).weight(0, 1));
  CHECK(merged_pi == doctest::Approx(at_least_one).epsilon(1e-14));
}

TEST_CASE("contract_edge") {
  double c = std::log(2.0);
  auto tri = make_cycle(3, c);
  auto contracted = contract_edge(tri, 0, 1);
  CHECK(contracted.vertices.size() == 2);
  CHECK(contracted.edges.size() == 2);
  auto merged = merge_parallel(contracted);
  CHECK(merged.weight(0, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-14));

  auto path = make_path(3, 0.4);
  auto pc = contract_edge(path, 0, 1);
  CHECK(pc.vertices.size() == 2);
  REQUIRE(pc.edges.size() == 1);
  CHECK(pc.edges[0].c == doctest::Approx(0.4));

  WeightedMultigraph pp;
  pp.vertices = {0, 1};
  pp.edges = {{0, 0, 1, 0.3}, {1, 0, 1, 0.5}};
  auto single = contract_edge(pp, 0, 1);
  CHECK(single.vertices.size() == 1);
  CHECK(single.edges.empty());

  CHECK_THROWS_AS(contract_edge(tri, 1, 1), std::invalid_argument);
}

TEST_CASE("contract then merge obeys the c-sum rule on random graphs") {
  Rng rng = seed_stream(11, 0);
  std::uniform_real_distribution<double> wdist(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    WeightedMultigraph g;
    int n = 5;
    for (int i = 0; i < n; ++i) g.vertices.push_back(i);
    int id = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uniform01(rng) < 0.7) g.edges.push_back({id++, i, j, wdist(rng)});
    if (g.edges.empty()) continue;
    auto before = merge_parallel(g);
    const Edge& pick = g.edges[0];
    auto after = merge_parallel(contract_edge(g, pick.u, pick.v));
    int xy = std::min(pick.u, pick.v);
    for (int z : after.vertices) {
      if (z == xy) continue;
      CHECK(after.weight(xy, z) ==
            doctest::Approx(before.weight(pick.u, z) + before.weight(pick.v, z)).epsilon(1e-12));
    }
  }
}

TEST_CASE("erode") {
  WeightedMultigraph g;
  g.vertices = {0, 1};
  g.edges = {{0, 0, 1, std::log(2.0)}};
  auto e = erode(g, std::log(2.0));
  CHECK(e.edges[0].c == doctest::Approx(std::log(1.5)).epsilon(1e-14));  // pi halves
  CHECK(e.edges[0].id == 0);

  auto same = erode(g, 0.0);
  CHECK(same.edges[0].c == doctest::Approx(g.edges[0].c));

  CHECK_THROWS_AS(erode(g, -0.1), std::domain_error);
}

TEST_CASE("erode is a semigroup and fixes c=0") {
  Rng rng = seed_stream(12, 0);
  WeightedMultigraph g;
  g.vertices = {0, 1, 2, 3, 4};
  for (int i = 0; i < 5; ++i)
    g.edges.push_back({i, i, (i + 1) % 5, i == 2 ? 0.0 : uniform01(rng) * 3.0});
  auto twice = erode(erode(g, 0.3), 0.9);
  auto once = erode(g, 1.2);
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    CHECK(twice.edges[i].c == doctest::Approx(once.edges[i].c).epsilon(1e-12));
  CHECK(erode(g, 5.0).edges[2].c == 0.0);
}

TEST_CASE("epsilon_skeleton") {
  SimpleWeightedGraph g;
  g.vertices = {0, 1, 2};
  g.weights[{0, 1}] = 0.5;
  g.weights[{1, 2}] = 0.05;
  auto sk = epsilon_skeleton(g, 0.1);
  CHECK(sk.weights.size() == 1);
  CHECK(sk.weight(0, 1) == 0.5);
  CHECK(sk.vertices.size() == 3);
  CHECK(epsilon_skeleton(g, 0.0).weights.size() == 2);
  CHECK(epsilon_skeleton(g, 10.0).weights.empty());
}

TEST_CASE("are_equivalent") {
  SimpleWeightedGraph t1, t2, t3;
  t1.vertices = {0, 1, 2};
  t1.weights[{0, 1}] = 1.0;
  t1.weights[{1, 2}] = 2.0;
  t1.weights[{0, 2}] = 3.0;
  // relabeled copy
  t2.vertices = {10, 20, 30};
  t2.weights[{10, 20}] = 2.0;
  t2.weights[{20, 30}] = 3.0;
  t2.weights[{10, 30}] = 1.0;
  auto r = are_equivalent(t1, t2);
  CHECK(r.equivalent);
  for (auto [a, b] : r.bijection)
    for (auto [a2, b2] : r.bijection)
      if (a != a2) CHECK(t1.weight(a, a2) == doctest::Approx(t2.weight(b, b2)));

  t3 = t1;
  t3.weights[{0, 2}] = 4.0;
  CHECK_FALSE(are_equivalent(t1, t3).equivalent);

  SimpleWeightedGraph star, path;
  star.vertices = {0, 1, 2, 3};
  star.weights[{0, 1}] = star.weights[{0, 2}] = star.weights[{0, 3}] = 1.0;
  path.vertices = {0, 1, 2, 3};
  path.weights[{0, 1}] = path.weights[{1, 2}] = path.weights[{2, 3}] = 1.0;
  CHECK_FALSE(are_equivalent(star, path).equivalent);
}

TEST_CASE("are_equivalent under random relabeling, reflexive and symmetric") {
  Rng rng = seed_stream(13, 0);
  for (int trial = 0; trial < 10; ++trial) {
    SimpleWeightedGraph g;
    int n = 6;
    for (int i = 0; i < n; ++i) g.vertices.push_back(i);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uniform01(rng) < 0.5) g.weights[{i, j}] = uniform01(rng) * 4.0;
    CHECK(are_equivalent(g, g).equivalent);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SimpleWeightedGraph h;
    h.vertices = g.vertices;
    for (const auto& [uv, w] : g.weights) h.weights[std::minmax(perm[uv.first], perm[uv.second])] = w;
    CHECK(are_equivalent(g, h).equivalent);
    CHECK(are_equivalent(h, g).equivalent);
  }
}

TEST_CASE("are_equivalent rejects oversized inputs loudly") {
  SimpleWeightedGraph big;
  for (int i = 0; i < 13; ++i) big.vertices.push_back(i);
  CHECK_THROWS_AS(are_equivalent(big, big), CapacityError);
}

TEST_CASE("generators") {
  auto torus = make_torus(2, 4, std::log(2.0));
  CHECK(torus.vertices.size() == 16);
  CHECK(torus.edges.size() == 32);
  torus.validate();

  auto tri = generate("cycle:3", 0.5);
  CHECK(tri.vertices.size() == 3);
  CHECK(tri.edges.size() == 3);

  CHECK(generate("complete:4", 0.5).edges.size() == 6);
  CHECK(generate("torus:2,4", 0.1).edges.size() == 32);

  CHECK_THROWS_AS(generate("torus:2", 0.1), std::invalid_argument);
  CHECK_THROWS_AS(generate("torus:a,b", 0.1), std::invalid_argument);
  CHECK_THROWS_AS(generate("frobnicate:3", 0.1), std::invalid_argument);
}

TEST_CASE("graph JSON round-trip keeps parallel edges") {
  WeightedMultigraph g;
  g.vertices = {0, 1, 2};
  g.edges = {{0, 0, 1, 0.25}, {1, 0, 1, 0.5}, {2, 1, 2, 1.5}};
  auto path = std::filesystem::temp_directory_path() / "fkflow_test_graph.json";
  save_graph(g, path.string());
  auto back = load_graph(path.string());
  REQUIRE(back.edges.size() == 3);
  CHECK(back.vertices == g.vertices);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.edges[i].u == g.edges[i].u);
    CHECK(back.edges[i].v == g.edges[i].v);
    CHECK(back.edges[i].c == g.edges[i].c);
  }
  CHECK(graph_hash(back) == graph_hash(g));
  std::filesystem::remove(path);
}
