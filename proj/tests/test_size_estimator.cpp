#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qwalk/generate.hpp"
#include "qwalk/oracles.hpp"
#include "qwalk/size_estimator.hpp"
#include "support.hpp"

using namespace qwalk;
using Catch::Approx;

TEST_CASE("theta-to-size arithmetic") {
  CHECK(theta_to_size(kPi, 1.0) == Approx(1.0).epsilon(1e-12));
  // single-edge tree, alpha^2 = 4: sin^2(theta/2) = 1/5 -> 1.25
  auto g = LayeredDag::from_edges(2, {{1, 2}});
  double theta = exact_min_phase(build_reflections(g, 2.0));
  CHECK(theta_to_size(theta, 2.0) == Approx(1.25).epsilon(1e-9));

  CHECK(theta_to_size(0.5, 1.0) > theta_to_size(0.6, 1.0));  // monotone decreasing
  CHECK_THROWS_AS(theta_to_size(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(theta_to_size(4.0, 1.0), DomainError);
  CHECK_THROWS_AS(theta_to_size(0.5, 0.0), ParameterError);
}

TEST_CASE("phase perturbations within delta_min keep the estimate delta-correct") {
  RngStream rng(55);
  for (int rep = 0; rep < 8; ++rep) {
    auto t = random_tree(static_cast<int>(rng.uniform_int(5, 50)), 6, {3}, rng);
    double delta = 0.2 + 0.3 * rng.uniform();
    int n = std::max(1, t.depth());
    double alpha = std::sqrt(2.0 * n / delta);
    double t_true = static_cast<double>(t.edge_count());
    double theta = exact_min_phase(build_reflections(t, alpha));
    double delta_min = std::pow(delta, 1.5) / (4.0 * std::sqrt(3.0 * n * t_true));

    // sandwich with the exact phase (Lemma 10 consequence)
    double exact = theta_to_size(theta, alpha);
    CHECK(exact >= t_true - 1e-9);
    CHECK(exact <= (1.0 + 0.5 * delta) * t_true + 1e-9);

    for (int k = -10; k <= 10; ++k) {
      double th = theta + delta_min * k / 10.0;
      if (!(th > 0.0 && th < kPi)) continue;
      double est = theta_to_size(th, alpha);
      CHECK(est >= (1.0 - delta) * t_true - 1e-9);
      CHECK(est <= (1.0 + delta) * t_true + 1e-9);
    }
  }
}

TEST_CASE("single-edge estimation rounds the 1.25 raw value down to 1") {
  auto g = LayeredDag::from_edges(2, {{1, 2}});
  RngStream rng(66);
  auto est = estimate_dag_size(g, 4.0, 1, 0.5, 0.1, rng);
  CHECK_FALSE(est.exceeds);
  CHECK(est.t_hat == 1);
  CHECK(est.alpha_used == Approx(2.0));
  CHECK(delta_correct(est, 1));
  CHECK(est.raw == Approx(1.25).margin(0.15));  // within the delta band around 1.25
}

TEST_CASE("delta-correctness definition") {
  SizeEstimate value;
  value.exceeds = false;
  value.t_hat = 10;
  value.delta = 0.1;
  value.t0 = 100;
  CHECK(delta_correct(value, 10));
  CHECK_FALSE(delta_correct(value, 20));
  CHECK(delta_correct(value, 11));  // |11-10| <= 1.1

  SizeEstimate exc;
  exc.exceeds = true;
  exc.delta = 0.3;
  exc.t0 = 100;
  CHECK_FALSE(delta_correct(exc, 50));  // 1.3 * 50 <= 100
  CHECK(delta_correct(exc, 80));        // 1.3 * 80 > 100
  CHECK_THROWS_AS(delta_correct(exc, 0), ParameterError);
}

TEST_CASE("end-to-end delta-correct rate on random trees") {
  RngStream rng(77);
  int correct = 0;
  const int trials = 300;
  for (int i = 0; i < trials; ++i) {
    RngStream inst = rng.split(static_cast<std::uint64_t>(i));
    auto t = random_tree(41, 5, {3}, inst);  // T = 40
    RngStream run = inst.split(1);
    auto est = estimate_dag_size(t, 64.0, 5, 0.3, 0.1, run);
    if (delta_correct(est, t.edge_count())) correct++;
  }
  CHECK(correct >= static_cast<int>(trials * 0.9));
}

TEST_CASE("trees twice the bound produce a correct exceeds claim") {
  RngStream rng(88);
  int correct = 0;
  const int trials = 60;
  for (int i = 0; i < trials; ++i) {
    RngStream inst = rng.split(static_cast<std::uint64_t>(i));
    auto t = random_tree(81, 6, {3}, inst);  // T = 80 = 2 * T0
    RngStream run = inst.split(1);
    auto est = estimate_dag_size(t, 40.0, 6, 0.3, 0.1, run);
    // branch 2 requires (1+delta) T > T0, which holds with T = 2 T0
    if (est.exceeds && delta_correct(est, t.edge_count())) correct++;
  }
  CHECK(correct >= static_cast<int>(trials * 0.9));
}

TEST_CASE("parameter and domain errors") {
  auto g = LayeredDag::from_edges(2, {{1, 2}});
  RngStream rng(1);
  CHECK_THROWS_AS(estimate_dag_size(LayeredDag{}, 4.0, 1, 0.5, 0.1, rng), DomainError);
  CHECK_THROWS_AS(estimate_dag_size(g, 4.0, 1, 1.5, 0.1, rng), ParameterError);
  CHECK_THROWS_AS(estimate_dag_size(g, 4.0, 1, 0.5, 0.0, rng), ParameterError);
  CHECK_THROWS_AS(estimate_dag_size(g, 0.5, 1, 0.5, 0.1, rng), ParameterError);
  CHECK_THROWS_AS(estimate_dag_size(g, 4.0, 0, 0.5, 0.1, rng), ParameterError);
}

TEST_CASE("vertex adapter shifts the edge estimate by one") {
  auto g = LayeredDag::from_edges(3, {{1, 2}, {2, 3}});
  RngStream rng(3);
  auto v = estimate_tree_vertices(g, 8.0, 2, 0.4, 0.1, rng);
  CHECK_FALSE(v.exceeds);
  CHECK(v.v_hat >= 2);
  CHECK(v.v_hat <= 4);
}

TEST_CASE("subtree estimators: quantum matches the oracle within tolerance") {
  RngStream rng(101);
  auto t = random_tree(60, 7, {2}, rng);
  auto sizes = subtree_sizes(t);

  auto exact = make_exact_subtree_estimator(t);
  auto ex = exact(1, 100.0, 0.25, 0.1);
  CHECK_FALSE(ex.exceeds);
  CHECK(ex.v_hat == 60);
  CHECK(exact(1, 10.0, 0.25, 0.1).exceeds);

  QueryLedger ledger;
  auto qrng = std::make_shared<RngStream>(rng.split(7));
  auto cache = std::make_shared<WalkProfileCache>();
  auto quantum = make_quantum_subtree_estimator(t, 7, qrng, &ledger, cache);

  int ok = 0, total = 0;
  for (int v = 1; v <= t.vertex_count(); ++v) {
    if (t.children_of(v).empty()) {
      CHECK(quantum(v, 10.0, 0.25, 0.1).v_hat == 1);
      continue;
    }
    auto e = quantum(v, 200.0, 0.25, 0.05);
    total++;
    if (!e.exceeds && std::abs(e.v_hat - sizes[v]) <= 0.25 * sizes[v]) ok++;
  }
  CHECK(ok >= total * 0.85);
  CHECK(ledger.controlled_u > 0);
  CHECK(cache->profiles.size() > 0);
}
