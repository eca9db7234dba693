#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "qwalk/backtracking.hpp"
#include "qwalk/generate.hpp"
#include "qwalk/oracles.hpp"

using namespace qwalk;

namespace {

// path from the root to a given vertex
PathSpec path_to(const LayeredDag& t, int target) {
  std::vector<int> chain;
  for (int v = target;; v = t.parents_of(v).front()) {
    chain.push_back(v);
    if (v == t.root()) break;
  }
  std::reverse(chain.begin(), chain.end());
  return make_path(t, chain);
}

}  // namespace

TEST_CASE("restricted views materialize exactly the DFS prefixes") {
  RngStream rng(201);
  for (int rep = 0; rep < 12; ++rep) {
    auto t = random_tree(static_cast<int>(rng.uniform_int(2, 200)), 8, {2}, rng);
    TreeHandle h(t);
    auto order = dfs_order(h);

    int m = static_cast<int>(rng.uniform_int(1, t.vertex_count()));
    PathSpec p = path_to(t, order[m - 1]);
    auto prefix = materialize_prefix(t, p);
    std::vector<int> expected(order.begin(), order.begin() + m);
    std::sort(expected.begin(), expected.end());
    CHECK(prefix == expected);

    RestrictedHandle view(h, p);
    auto mat = view.materialized();
    CHECK(mat.dag.vertex_count() == m);
    std::vector<int> origs(mat.orig_of.begin() + 1, mat.orig_of.end());
    std::sort(origs.begin(), origs.end());
    CHECK(origs == expected);
  }
}

TEST_CASE("restricted view edge cases") {
  LayeredDag single;
  TreeHandle h(single);
  RestrictedHandle view(h, PathSpec{{1}, {}});
  CHECK(view.materialized().dag.vertex_count() == 1);  // empty path at a leaf root

  RngStream rng(7);
  auto t = random_tree(40, 6, {2}, rng);
  TreeHandle ht(t);
  auto order = dfs_order(ht);
  PathSpec full = path_to(t, order.back());
  RestrictedHandle whole(ht, full);
  CHECK(whole.materialized().dag.vertex_count() == t.vertex_count());  // whole tree

  // queries pass through with accounting
  QueryLedger ledger;
  TreeHandle counted(t, nullptr, &ledger);
  RestrictedHandle rv(counted, full);
  (void)children(rv, 1);
  CHECK(ledger.child_count >= 1);
}

TEST_CASE("detection trivia: single vertex and marked root") {
  LayeredDag single;
  VertexAnnotations markedroot;
  markedroot.marked = {1};
  QueryLedger ledger;
  TreeHandle h(single, &markedroot, &ledger);
  RngStream rng(5);
  CHECK(detect_marked(h, 1.0, 1, 0.1, rng, ledger));

  VertexAnnotations none;
  TreeHandle h2(single, &none, &ledger);
  CHECK_FALSE(detect_marked(h2, 1.0, 1, 0.1, rng, ledger));
}

TEST_CASE("detection error rates on unmarked and single-deep-marked trees") {
  RngStream rng(31);
  auto t = random_tree(60, 8, {2}, rng);
  int n = t.depth();

  VertexAnnotations unmarked;
  QueryLedger ledger;
  TreeHandle h(t, &unmarked, &ledger);
  int false_alarms = 0;
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    RngStream r = rng.split(static_cast<std::uint64_t>(i));
    if (detect_marked(h, 60.0, n, 0.1, r, ledger)) false_alarms++;
  }
  CHECK(false_alarms <= trials / 10);

  // one marked vertex at maximal depth: the hardest positive instance
  int deep = 1;
  for (int v = 1; v <= t.vertex_count(); ++v)
    if (t.layer(v) > t.layer(deep)) deep = v;
  VertexAnnotations marked;
  marked.marked = {deep};
  TreeHandle hm(t, &marked, &ledger);
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    RngStream r = rng.split(1000 + static_cast<std::uint64_t>(i));
    if (detect_marked(hm, 60.0, n, 0.1, r, ledger)) hits++;
  }
  CHECK(hits >= trials - trials / 10);
  CHECK(ledger.controlled_u > 0);
}

TEST_CASE("generate-path trivia") {
  LayeredDag single;
  TreeHandle h(single);
  auto est = make_exact_subtree_estimator(single);
  PathSpec p = generate_path(h, 1, 0.5, 0.1, 3, est);
  CHECK(p.length() == 0);  // leaf root: empty path

  RngStream rng(8);
  auto t = random_tree(50, 7, {2}, rng);
  TreeHandle ht(t);
  auto exact = make_exact_subtree_estimator(t);
  // m at least the tree size with exact estimates: path to the DFS-last vertex
  PathSpec full = generate_path(ht, t.vertex_count(), 0.5, 0.1, 7, exact);
  auto order = dfs_order(ht);
  CHECK(full.last() == order.back());
  CHECK(dfs_prefix_size(t, full) == t.vertex_count());

  // and exact prefix sizes for every m
  for (long long m = 1; m <= t.vertex_count(); ++m) {
    PathSpec pm = generate_path(ht, m, 0.5, 0.1, 7, exact);
    CHECK(dfs_prefix_size(t, pm) == m);
  }
}

TEST_CASE("generate-path realized sizes stay within the delta band") {
  RngStream rng(91);
  int ok = 0;
  const int trials = 120;
  for (int i = 0; i < trials; ++i) {
    RngStream inst = rng.split(static_cast<std::uint64_t>(i));
    auto t = random_tree(60, 8, {2}, inst);
    QueryLedger ledger;
    TreeHandle h(t, nullptr, &ledger);
    auto qrng = std::make_shared<RngStream>(inst.split(3));
    auto cache = std::make_shared<WalkProfileCache>();
    auto est = make_quantum_subtree_estimator(t, 8, qrng, &ledger, cache);
    PathSpec p = generate_path(h, 20, 0.25, 0.1, 8, est);
    long long realized = dfs_prefix_size(t, p);
    if (realized >= 15 && realized <= 25) ok++;
  }
  CHECK(ok >= static_cast<int>(trials * 0.9));
}

TEST_CASE("search finds a marked root at the first stage") {
  auto t = LayeredDag::from_edges(3, {{1, 2}, {1, 3}});
  VertexAnnotations ann;
  ann.marked = {1};
  auto res = search(t, ann, 3.0, 1, 0.1, 99);
  CHECK(res.found);
  CHECK(res.stage_reached == 1);
}

TEST_CASE("search agrees with the classical marked-existence scan") {
  RngStream rng(555);
  int agree = 0;
  const int trials = 60;
  for (int i = 0; i < trials; ++i) {
    RngStream inst = rng.split(static_cast<std::uint64_t>(i));
    auto t = random_tree(static_cast<int>(inst.uniform_int(10, 80)), 8, {2}, inst);
    VertexAnnotations ann;
    bool has_marked = inst.bernoulli(0.5);
    if (has_marked) {
      int cnt = static_cast<int>(inst.uniform_int(1, 3));
      for (int k = 0; k < cnt; ++k)
        ann.marked.insert(static_cast<int>(inst.uniform_int(1, t.vertex_count())));
    }
    auto res = search(t, ann, static_cast<double>(t.vertex_count()), std::max(1, t.depth()), 0.1,
                      inst.split(7).seed());
    if (res.found == !ann.marked.empty()) agree++;
  }
  CHECK(agree >= static_cast<int>(trials * 0.9));
}

TEST_CASE("early marked vertices stop the search at early stages") {
  RngStream rng(777);
  auto t = random_tree(200, 10, {2}, rng);
  TreeHandle h(t);
  auto order = dfs_order(h);
  VertexAnnotations ann;
  ann.marked = {order[4]};  // DFS position 5

  int total_found = 0;
  long long worst_cost = 0;
  int worst_stage = 0;
  for (int i = 0; i < 10; ++i) {
    auto res = search(t, ann, 200.0, t.depth(), 0.1, 4000 + i);
    if (res.found) total_found++;
    worst_cost = std::max(worst_cost, res.ledger.controlled_u);
    worst_stage = std::max(worst_stage, res.stage_reached);

    // cumulative ledger is monotone; detection cost grows with the stage
    for (std::size_t s = 1; s < res.stages.size(); ++s)
      CHECK(res.stages[s].detect_controlled_u >= res.stages[s - 1].detect_controlled_u);
  }
  CHECK(total_found >= 9);
  // stops near ceil(log2 5) + O(1)
  CHECK(worst_stage <= 6);

  // early stopping pays far less than covering the whole tree with the
  // same staged machinery (the unmarked run must reach full coverage)
  VertexAnnotations none;
  auto full = search(t, none, 200.0, t.depth(), 0.1, 4001);
  CHECK(worst_cost * 4 < full.ledger.controlled_u);
}

TEST_CASE("search without marked vertices covers the tree and reports false") {
  RngStream rng(888);
  auto t = random_tree(30, 6, {2}, rng);
  VertexAnnotations none;
  auto res = search(t, none, 30.0, t.depth(), 0.1, 17);
  CHECK_FALSE(res.found);
  REQUIRE(!res.stages.empty());
  CHECK((res.stages.back().whole_tree || res.used_cutover));
}
