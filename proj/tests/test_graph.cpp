#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "qwalk/generate.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/graph_io.hpp"

using namespace qwalk;

namespace {

LayeredDag single_edge() { return LayeredDag::from_edges(2, {{1, 2}}); }
LayeredDag path3() { return LayeredDag::from_edges(3, {{1, 2}, {2, 3}}); }

}  // namespace

TEST_CASE("construction validates the layer structure") {
  auto g = path3();
  CHECK(g.depth() == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.is_tree());
  CHECK(g.layer(3) == 2);

  CHECK_THROWS_AS(LayeredDag::from_edges(3, {{1, 2}}), DomainError);           // unreachable
  CHECK_THROWS_AS(LayeredDag::from_edges(2, {{1, 2}, {1, 2}}), DomainError);   // duplicate
  CHECK_THROWS_AS(LayeredDag::from_edges(2, {{2, 1}}), DomainError);           // root below
  CHECK_THROWS_AS(LayeredDag::from_edges(3, {{1, 2}, {2, 3}, {1, 3}}), DomainError);  // layer skip
  CHECK_THROWS_AS(LayeredDag::from_edges(1, {{1, 1}}), DomainError);           // self loop
}

TEST_CASE("children queries come in order and are counted") {
  auto g = single_edge();
  QueryLedger ledger;
  TreeHandle h(g, nullptr, &ledger);

  CHECK(children(h, 1) == std::vector<int>{2});
  CHECK(children(h, 2).empty());
  CHECK(ledger.child_count == 2);
  CHECK(ledger.child_fetch == 1);
  CHECK_THROWS_AS(h.child(1, 5), DomainError);
  CHECK_THROWS_AS(children(h, 99), DomainError);
}

TEST_CASE("parent queries on a dag with double parents") {
  auto g = LayeredDag::from_edges(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
  QueryLedger ledger;
  TreeHandle h(g, nullptr, &ledger);
  CHECK(h.parent_count(4) == 2);
  CHECK(h.parent(4, 0) == 2);
  CHECK(h.parent(4, 1) == 3);
  CHECK(ledger.parent_count == 1);
  CHECK(ledger.parent_fetch == 2);
  CHECK_THROWS_AS(h.parent(4, 2), DomainError);
  CHECK_FALSE(g.is_tree());
}

TEST_CASE("children order matches the stored adjacency of a generated tree") {
  // balanced binary tree of depth 2, explicit construction order
  auto g = LayeredDag::from_edges(7, {{1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {3, 7}});
  TreeHandle h(g);
  CHECK(children(h, 1) == std::vector<int>{2, 3});
  CHECK(children(h, 1) == g.children_of(1));
}

TEST_CASE("even odd partition splits by layer parity") {
  auto se = single_edge();
  auto p = even_odd_partition(se);
  CHECK(p.set_a == std::vector<int>{1});
  CHECK(p.set_b == std::vector<int>{2});

  auto p3 = even_odd_partition(path3());
  CHECK(p3.set_a == std::vector<int>{1, 3});
  CHECK(p3.set_b == std::vector<int>{2});

  RngStream rng(11);
  auto dag = random_layered_dag(40, 6, {3}, 8, rng);
  auto pd = even_odd_partition(dag);
  CHECK(pd.set_a.size() + pd.set_b.size() == static_cast<std::size_t>(dag.vertex_count()));
  for (int v : pd.set_a) CHECK(dag.layer(v) % 2 == 0);
  for (int v : pd.set_b) CHECK(dag.layer(v) % 2 == 1);
  for (auto [u, v] : dag.edges()) CHECK((dag.layer(u) % 2) != (dag.layer(v) % 2));
}

TEST_CASE("dfs order is preorder") {
  auto g3 = path3();
  TreeHandle p3(g3);
  CHECK(dfs_order(p3) == std::vector<int>{1, 2, 3});

  LayeredDag one;
  TreeHandle h1(one);
  CHECK(dfs_order(h1) == std::vector<int>{1});

  RngStream rng(5);
  auto t = random_tree(60, 8, {3}, rng);
  TreeHandle ht(t);
  auto order = dfs_order(ht);
  REQUIRE(order.size() == 60);
  std::set<int> seen(order.begin(), order.end());
  CHECK(seen.size() == 60);  // permutation
  CHECK(order.front() == 1);
  // every prefix is connected and contains the root: each new vertex's
  // parent must already be present
  std::set<int> prefix;
  for (int v : order) {
    if (v != 1) CHECK(prefix.count(t.parents_of(v).front()) == 1);
    prefix.insert(v);
  }
}

TEST_CASE("binarize keeps binary trees identical") {
  auto g = LayeredDag::from_edges(7, {{1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {3, 7}});
  auto res = binarize(g);
  CHECK(res.tree == g);
  for (int v = 1; v <= 7; ++v) CHECK(res.source_vertex[v] == v);
}

TEST_CASE("binarize splits wide vertices") {
  auto star3 = LayeredDag::from_edges(4, {{1, 2}, {1, 3}, {1, 4}});
  auto res3 = binarize(star3);
  CHECK(res3.tree.vertex_count() == 5);  // one splitter added
  for (int v = 1; v <= res3.tree.vertex_count(); ++v)
    CHECK(res3.tree.children_of(v).size() <= 2);
  // leaves preserved with identity mapping, in DFS order 2,3,4
  std::vector<int> leaves;
  for (int v : dfs_order(TreeHandle(res3.tree)))
    if (res3.tree.children_of(v).empty()) leaves.push_back(v);
  CHECK(leaves == std::vector<int>{2, 3, 4});
  CHECK(res3.tree.depth() == 2);

  auto star4 = LayeredDag::from_edges(5, {{1, 2}, {1, 3}, {1, 4}, {1, 5}});
  auto res4 = binarize(star4);
  CHECK(res4.tree.depth() == star4.depth() + 1);  // ceil(log2 4) = 2 layers
  for (int v = 1; v <= res4.tree.vertex_count(); ++v)
    CHECK(res4.tree.children_of(v).size() <= 2);

  CHECK_THROWS_AS(binarize(LayeredDag::from_edges(3, {{1, 2}, {1, 3}, {2, 3}})), DomainError);
}

TEST_CASE("random generators are deterministic and valid") {
  RngStream a(7), b(7);
  auto t1 = random_tree(30, 6, {2}, a);
  auto t2 = random_tree(30, 6, {2}, b);
  CHECK(t1.edges() == t2.edges());

  RngStream s(1);
  auto tiny = random_tree(1, 3, {2}, s);
  CHECK(tiny.vertex_count() == 1);
  CHECK(tiny.edge_count() == 0);

  CHECK_THROWS_AS(random_tree(10, 1, {2}, s), DomainError);  // depth 1, branching 2

  // validator sweep: construction itself enforces every invariant
  RngStream sweep(99);
  for (int i = 0; i < 500; ++i) {
    auto t = random_tree(static_cast<int>(sweep.uniform_int(1, 50)), 8, {3}, sweep);
    CHECK(t.is_tree());
    CHECK(t.edge_count() == t.vertex_count() - 1);
  }
}

TEST_CASE("subtree extraction keeps order and layers") {
  auto g = LayeredDag::from_edges(7, {{1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {3, 7}});
  auto sub = subtree_of(g, 2);
  CHECK(sub.dag.vertex_count() == 3);
  CHECK(sub.dag.children_of(1).size() == 2);
  CHECK(sub.orig_of[1] == 2);
  CHECK(sub.new_of[4] != 0);
  CHECK(sub.new_of[3] == 0);
}

TEST_CASE("json graph files round trip") {
  RngStream rng(3);
  auto dag = random_layered_dag(25, 5, {3}, 5, rng);
  VertexAnnotations ann;
  ann.marked = {4, 7};
  auto j = graph_to_json(dag, ann);
  auto back = parse_graph_json(j);
  CHECK(back.dag == dag);
  CHECK(back.ann.marked == ann.marked);
  CHECK(graph_to_json(back.dag, back.ann) == j);

  auto bad = j;
  bad["root"] = 2;
  CHECK_THROWS_AS(parse_graph_json(bad), DomainError);

  auto f = random_formula(8, 5, rng);
  auto jf = graph_to_json(f.tree, f.ann);
  auto backf = parse_graph_json(jf);
  CHECK(backf.ann.gates == f.ann.gates);
  CHECK(backf.ann.leaf_values == f.ann.leaf_values);
  CHECK(graph_content_hash(backf.dag, backf.ann) == graph_content_hash(f.tree, f.ann));
}

TEST_CASE("formula generator produces full binary trees") {
  RngStream rng(17);
  auto f = random_formula(16, 8, rng);
  int leaves = 0;
  for (int v = 1; v <= f.tree.vertex_count(); ++v) {
    auto k = f.tree.children_of(v).size();
    CHECK((k == 0 || k == 2));
    if (k == 0) {
      ++leaves;
      CHECK(f.ann.leaf_values.count(v) == 1);
    } else {
      CHECK(f.ann.gates.count(v) == 1);
    }
  }
  CHECK(leaves == 16);
  CHECK(f.tree.vertex_count() == 31);
}
