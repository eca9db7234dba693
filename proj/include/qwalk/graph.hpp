#pragma once

// Rooted trees and layered DAGs with a black-box local-exploration interface.
//
// Vertices are dense 1-based ids with the root at id 1. Every vertex is
// reachable from the root and every edge goes from layer l to layer l+1.
// Child order is the stored insertion order; it doubles as the visiting
// order of the classical search algorithms built on top. Edge indices
// follow insertion order and define the edge-space basis used by the walk
// operators (the anchor edge gets the extra index T, appended last).
//
// Graphs are validated eagerly at construction and immutable afterwards;
// they are safe to share read-only across threads. Black-box access goes
// through Explorable handles whose queries are tallied in a QueryLedger,
// one ledger per algorithm run.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qwalk/errors.hpp"

namespace qwalk {

enum class Gate { And, Or };
enum class NodeKind { Branch, AndGate, OrGate, Leaf };

struct VertexAnnotations {
  std::set<int> marked;
  std::map<int, Gate> gates;
  std::map<int, int> leaf_values;
};

class LayeredDag {
public:
  LayeredDag() = default;

  static LayeredDag from_edges(int vertex_count, const std::vector<std::pair<int, int>>& edges) {
    if (vertex_count < 1) throw DomainError("graph needs at least one vertex");
    LayeredDag g;
    g.vertex_count_ = vertex_count;
    g.children_.assign(vertex_count + 1, {});
    g.parents_.assign(vertex_count + 1, {});
    g.incident_.assign(vertex_count + 1, {});
    g.edges_ = edges;

    std::set<std::pair<int, int>> seen;
    for (int k = 0; k < static_cast<int>(edges.size()); ++k) {
      auto [u, v] = edges[k];
      if (u < 1 || u > vertex_count || v < 1 || v > vertex_count)
        throw DomainError("edge endpoint out of range");
      if (u == v) throw DomainError("self loop");
      if (!seen.insert({u, v}).second) throw DomainError("duplicate edge");
      g.children_[u].push_back(v);
      g.parents_[v].push_back(u);
      g.incident_[u].push_back(k);
      g.incident_[v].push_back(k);
    }

    // layers via BFS over directed edges
    g.layer_.assign(vertex_count + 1, -1);
    g.layer_[1] = 0;
    std::vector<int> queue{1};
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int u = queue[h];
      for (int v : g.children_[u]) {
        if (g.layer_[v] < 0) {
          g.layer_[v] = g.layer_[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int v = 1; v <= vertex_count; ++v)
      if (g.layer_[v] < 0) throw DomainError("vertex " + std::to_string(v) + " unreachable from root");
    for (auto [u, v] : edges)
      if (g.layer_[v] != g.layer_[u] + 1) throw DomainError("edge violates layer property");

    g.depth_ = 0;
    g.max_degree_ = 0;
    g.tree_ = true;
    for (int v = 1; v <= vertex_count; ++v) {
      g.depth_ = std::max(g.depth_, g.layer_[v]);
      g.max_degree_ = std::max(g.max_degree_, g.degree(v));
      if (v != 1 && g.parents_[v].size() != 1) g.tree_ = false;
    }
    if (g.edge_count() != vertex_count - 1) g.tree_ = false;
    return g;
  }

  int vertex_count() const { return vertex_count_; }
  int root() const { return 1; }
  long long edge_count() const { return static_cast<long long>(edges_.size()); }
  int depth() const { return depth_; }
  int max_degree() const { return max_degree_; }
  bool is_tree() const { return tree_; }

  int layer(int v) const {
    check_vertex(v);
    return layer_[v];
  }
  const std::vector<int>& children_of(int v) const {
    check_vertex(v);
    return children_[v];
  }
  const std::vector<int>& parents_of(int v) const {
    check_vertex(v);
    return parents_[v];
  }
  // indices into edges(), both directions
  const std::vector<int>& incident_edges(int v) const {
    check_vertex(v);
    return incident_[v];
  }
  std::pair<int, int> edge(int k) const {
    if (k < 0 || k >= static_cast<int>(edges_.size())) throw DomainError("edge index out of range");
    return edges_[k];
  }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  int degree(int v) const {
    check_vertex(v);
    return static_cast<int>(incident_[v].size());
  }
  int root_degree() const { return degree(1); }

  void check_vertex(int v) const {
    if (v < 1 || v > vertex_count_) throw DomainError("unknown vertex id " + std::to_string(v));
  }

  // structural equality: same vertex set and same ordered child lists
  friend bool operator==(const LayeredDag& a, const LayeredDag& b) {
    return a.vertex_count_ == b.vertex_count_ && a.children_ == b.children_;
  }

private:
  int vertex_count_ = 1;
  std::vector<std::vector<int>> children_{{}, {}};
  std::vector<std::vector<int>> parents_{{}, {}};
  std::vector<std::vector<int>> incident_{{}, {}};
  std::vector<int> layer_{0, 0};
  std::vector<std::pair<int, int>> edges_;
  int depth_ = 0;
  int max_degree_ = 0;
  bool tree_ = true;
};

struct EvenOddPartition {
  std::vector<int> set_a;  // even layers, root first (ascending ids)
  std::vector<int> set_b;  // odd layers (ascending ids)
};

inline EvenOddPartition even_odd_partition(const LayeredDag& g) {
  EvenOddPartition p;
  for (int v = 1; v <= g.vertex_count(); ++v)
    (g.layer(v) % 2 == 0 ? p.set_a : p.set_b).push_back(v);
  return p;
}

struct QueryLedger {
  long long child_count = 0;
  long long child_fetch = 0;
  long long parent_count = 0;
  long long parent_fetch = 0;
  long long node_type = 0;
  long long leaf_value = 0;
  long long marked_predicate = 0;
  long long controlled_u = 0;

  long long structure_queries() const {
    return child_count + child_fetch + parent_count + parent_fetch + node_type + leaf_value +
           marked_predicate;
  }
  long long cost_units() const { return structure_queries() + controlled_u; }
};

struct SubtreeResult {
  LayeredDag dag;
  std::vector<int> orig_of;  // new id -> original id
  std::vector<int> new_of;   // original id -> new id, 0 means absent
};

// Descendant cone of r as its own graph (new root id 1, BFS-order ids).
inline SubtreeResult subtree_of(const LayeredDag& g, int r) {
  g.check_vertex(r);
  SubtreeResult res;
  res.new_of.assign(g.vertex_count() + 1, 0);
  res.orig_of.push_back(0);
  std::vector<int> queue{r};
  res.new_of[r] = 1;
  res.orig_of.push_back(r);
  for (std::size_t h = 0; h < queue.size(); ++h) {
    int v = queue[h];
    for (int c : g.children_of(v)) {
      if (res.new_of[c] == 0) {
        res.new_of[c] = static_cast<int>(res.orig_of.size());
        res.orig_of.push_back(c);
        queue.push_back(c);
      }
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (int v : queue)
    for (int c : g.children_of(v)) edges.push_back({res.new_of[v], res.new_of[c]});
  res.dag = LayeredDag::from_edges(static_cast<int>(res.orig_of.size()) - 1, edges);
  return res;
}

// A handle's structure materialized for the dense simulators; vertex
// annotations are remapped onto the new ids.
struct Materialized {
  LayeredDag dag;
  VertexAnnotations ann;
  std::vector<int> orig_of;  // new id -> original id
};

// Black-box view of a graph. All structural information flows through these
// queries; the attached ledger (if any) tallies them. Simulation internals
// that model quantum subroutines instead charge controlled-U counts.
class Explorable {
public:
  virtual ~Explorable() = default;
  virtual int root() const = 0;
  virtual int child_count(int v) const = 0;
  virtual int child(int v, int i) const = 0;
  virtual int parent_count(int v) const = 0;
  virtual int parent(int v, int i) const = 0;
  virtual NodeKind kind(int v) const = 0;
  virtual int leaf_value(int v) const = 0;
  virtual bool marked(int v) const = 0;
  virtual QueryLedger* ledger() const = 0;

  // Simulator access to the handle's structure, exempt from query
  // accounting; used only to build dense operators for modeled subroutines.
  virtual Materialized materialized() const = 0;
};

class TreeHandle : public Explorable {
public:
  TreeHandle(const LayeredDag& dag, const VertexAnnotations* ann = nullptr,
             QueryLedger* ledger = nullptr)
      : dag_(&dag), ann_(ann), ledger_(ledger) {}

  int root() const override { return dag_->root(); }

  int child_count(int v) const override {
    if (ledger_) ledger_->child_count++;
    return static_cast<int>(dag_->children_of(v).size());
  }
  int child(int v, int i) const override {
    if (ledger_) ledger_->child_fetch++;
    const auto& c = dag_->children_of(v);
    if (i < 0 || i >= static_cast<int>(c.size())) throw DomainError("child index out of range");
    return c[i];
  }
  int parent_count(int v) const override {
    if (ledger_) ledger_->parent_count++;
    return static_cast<int>(dag_->parents_of(v).size());
  }
  int parent(int v, int i) const override {
    if (ledger_) ledger_->parent_fetch++;
    const auto& p = dag_->parents_of(v);
    if (i < 0 || i >= static_cast<int>(p.size())) throw DomainError("parent index out of range");
    return p[i];
  }
  NodeKind kind(int v) const override {
    if (ledger_) ledger_->node_type++;
    dag_->check_vertex(v);
    if (dag_->children_of(v).empty()) return NodeKind::Leaf;
    if (ann_) {
      auto it = ann_->gates.find(v);
      if (it != ann_->gates.end())
        return it->second == Gate::And ? NodeKind::AndGate : NodeKind::OrGate;
    }
    return NodeKind::Branch;
  }
  int leaf_value(int v) const override {
    if (ledger_) ledger_->leaf_value++;
    if (!ann_) throw DomainError("graph carries no leaf values");
    auto it = ann_->leaf_values.find(v);
    if (it == ann_->leaf_values.end()) throw DomainError("no leaf value at vertex " + std::to_string(v));
    return it->second;
  }
  bool marked(int v) const override {
    if (ledger_) ledger_->marked_predicate++;
    dag_->check_vertex(v);
    return ann_ != nullptr && ann_->marked.count(v) > 0;
  }
  QueryLedger* ledger() const override { return ledger_; }

  Materialized materialized() const override {
    Materialized m;
    m.dag = *dag_;
    if (ann_) m.ann = *ann_;
    m.orig_of.resize(dag_->vertex_count() + 1);
    for (int v = 0; v <= dag_->vertex_count(); ++v) m.orig_of[v] = v;
    return m;
  }

private:
  const LayeredDag* dag_;
  const VertexAnnotations* ann_;
  QueryLedger* ledger_;
};

// Handle rooted at an inner vertex: the black box for the subtree T(r).
class RootedView : public Explorable {
public:
  RootedView(const LayeredDag& dag, const VertexAnnotations* ann, int root,
             QueryLedger* ledger = nullptr)
      : dag_(&dag), ann_(ann), root_(root), ledger_(ledger) {
    dag.check_vertex(root);
  }

  int root() const override { return root_; }
  int child_count(int v) const override {
    if (ledger_) ledger_->child_count++;
    return static_cast<int>(dag_->children_of(v).size());
  }
  int child(int v, int i) const override {
    if (ledger_) ledger_->child_fetch++;
    const auto& c = dag_->children_of(v);
    if (i < 0 || i >= static_cast<int>(c.size())) throw DomainError("child index out of range");
    return c[i];
  }
  int parent_count(int v) const override {
    if (ledger_) ledger_->parent_count++;
    return v == root_ ? 0 : static_cast<int>(dag_->parents_of(v).size());
  }
  int parent(int v, int i) const override {
    if (ledger_) ledger_->parent_fetch++;
    if (v == root_) throw DomainError("view root has no parent");
    const auto& p = dag_->parents_of(v);
    if (i < 0 || i >= static_cast<int>(p.size())) throw DomainError("parent index out of range");
    return p[i];
  }
  NodeKind kind(int v) const override {
    if (ledger_) ledger_->node_type++;
    if (dag_->children_of(v).empty()) return NodeKind::Leaf;
    if (ann_) {
      auto it = ann_->gates.find(v);
      if (it != ann_->gates.end())
        return it->second == Gate::And ? NodeKind::AndGate : NodeKind::OrGate;
    }
    return NodeKind::Branch;
  }
  int leaf_value(int v) const override {
    if (ledger_) ledger_->leaf_value++;
    if (!ann_) throw DomainError("graph carries no leaf values");
    auto it = ann_->leaf_values.find(v);
    if (it == ann_->leaf_values.end()) throw DomainError("no leaf value at vertex " + std::to_string(v));
    return it->second;
  }
  bool marked(int v) const override {
    if (ledger_) ledger_->marked_predicate++;
    return ann_ != nullptr && ann_->marked.count(v) > 0;
  }
  QueryLedger* ledger() const override { return ledger_; }

  Materialized materialized() const override {
    SubtreeResult sub = subtree_of(*dag_, root_);
    Materialized m;
    m.dag = sub.dag;
    m.orig_of = sub.orig_of;
    if (ann_) {
      for (int v : ann_->marked)
        if (sub.new_of[v]) m.ann.marked.insert(sub.new_of[v]);
      for (auto [v, g] : ann_->gates)
        if (sub.new_of[v]) m.ann.gates[sub.new_of[v]] = g;
      for (auto [v, b] : ann_->leaf_values)
        if (sub.new_of[v]) m.ann.leaf_values[sub.new_of[v]] = b;
    }
    return m;
  }

private:
  const LayeredDag* dag_;
  const VertexAnnotations* ann_;
  int root_;
  QueryLedger* ledger_;
};

// Ordered child list of v: one count query plus one fetch per child.
inline std::vector<int> children(const Explorable& h, int v) {
  int k = h.child_count(v);
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(h.child(v, i));
  return out;
}

// Depth-first preorder through counted queries. Its prefixes define the
// restricted trees T_m used by the backtracking machinery.
inline std::vector<int> dfs_order(const Explorable& h) {
  std::vector<int> order;
  std::vector<int> stack{h.root()};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    auto kids = children(h, v);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

struct BinarizeResult {
  LayeredDag tree;
  // new id -> original id; 0 for splitter vertices. Original vertices keep
  // their ids, so the leaf mapping is the identity.
  std::vector<int> source_vertex;
  VertexAnnotations ann;
};

// Replace every vertex of out-degree d > 2 by a balanced binary splitter of
// depth ceil(log2 d), preserving the left-to-right child order (and hence
// the DFS leaf order). Splitters inherit the gate of the vertex they split.
inline BinarizeResult binarize(const LayeredDag& t, const VertexAnnotations* ann = nullptr) {
  if (!t.is_tree()) throw DomainError("binarize expects a tree");
  BinarizeResult res;
  int count = t.vertex_count();
  std::vector<std::pair<int, int>> edges;
  res.source_vertex.assign(count + 1, 0);
  for (int v = 1; v <= count; ++v) res.source_vertex[v] = v;

  // attach `kids` (original ids) under new-id `parent`, splitting as needed
  auto attach = [&](auto&& self, int parent, int source, const std::vector<int>& kids) -> void {
    if (kids.empty()) return;
    if (kids.size() <= 2) {
      for (int c : kids) edges.push_back({parent, c});
      return;
    }
    std::size_t mid = (kids.size() + 1) / 2;
    std::vector<int> halves[2] = {{kids.begin(), kids.begin() + mid}, {kids.begin() + mid, kids.end()}};
    for (const auto& half : halves) {
      if (half.size() == 1) {
        edges.push_back({parent, half[0]});
      } else {
        int g = ++count;
        res.source_vertex.push_back(source);
        edges.push_back({parent, g});
        self(self, g, source, half);
      }
    }
  };

  for (int v = 1; v <= t.vertex_count(); ++v) attach(attach, v, v, t.children_of(v));

  res.tree = LayeredDag::from_edges(count, edges);
  if (ann) {
    res.ann.marked = ann->marked;
    res.ann.leaf_values = ann->leaf_values;
    res.ann.gates = ann->gates;
    for (int g = t.vertex_count() + 1; g <= count; ++g) {
      auto it = ann->gates.find(res.source_vertex[g]);
      if (it != ann->gates.end()) res.ann.gates[g] = it->second;
    }
  }
  return res;
}

}  // namespace qwalk
