#pragma once

// Seeded random instance generators. Deterministic for a fixed seed; every
// output passes the LayeredDag validator.

#include <utility>
#include <vector>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/rng.hpp"

namespace qwalk {

struct BranchingLaw {
  int max_children = 2;
};

// Grow a rooted tree to exactly `vertex_budget` vertices by attaching each
// new vertex to a uniformly random vertex that still has depth and fan-out
// headroom. Child order is attachment order.
inline LayeredDag random_tree(int vertex_budget, int depth_bound, const BranchingLaw& law,
                              RngStream& rng) {
  if (vertex_budget < 1) throw ParameterError("vertex budget must be positive");
  if (depth_bound < 0) throw ParameterError("depth bound must be nonnegative");
  if (law.max_children < 1) throw ParameterError("branching law needs max_children >= 1");

  std::vector<std::pair<int, int>> edges;
  std::vector<int> layer{0, 0};
  std::vector<int> out_deg{0, 0};
  for (int id = 2; id <= vertex_budget; ++id) {
    std::vector<int> eligible;
    for (int v = 1; v < id; ++v)
      if (layer[v] < depth_bound && out_deg[v] < law.max_children) eligible.push_back(v);
    if (eligible.empty())
      throw DomainError("infeasible constraints: no room for vertex " + std::to_string(id));
    int p = eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(eligible.size()) - 1))];
    edges.push_back({p, id});
    layer.push_back(layer[p] + 1);
    out_deg.push_back(0);
    out_deg[p]++;
  }
  return LayeredDag::from_edges(vertex_budget, edges);
}

// Random layered DAG: a random tree plus up to `extra_edges` additional
// edges between consecutive layers (second parents). Extra edges append
// after the tree edges in the basis order.
inline LayeredDag random_layered_dag(int vertex_budget, int depth_bound, const BranchingLaw& law,
                                     int extra_edges, RngStream& rng) {
  LayeredDag tree = random_tree(vertex_budget, depth_bound, law, rng);
  std::vector<std::pair<int, int>> edges = tree.edges();
  std::set<std::pair<int, int>> present(edges.begin(), edges.end());

  std::vector<std::vector<int>> by_layer(tree.depth() + 1);
  for (int v = 1; v <= tree.vertex_count(); ++v) by_layer[tree.layer(v)].push_back(v);

  int added = 0;
  int attempts = 8 * extra_edges + 16;
  while (added < extra_edges && attempts-- > 0) {
    int v = static_cast<int>(rng.uniform_int(2, vertex_budget));
    int lv = tree.layer(v);
    const auto& ups = by_layer[lv - 1];
    if (ups.size() <= 1 && lv == 1) continue;  // only the root above
    int u = ups[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(ups.size()) - 1))];
    if (present.count({u, v})) continue;
    present.insert({u, v});
    edges.push_back({u, v});
    ++added;
  }
  return LayeredDag::from_edges(vertex_budget, edges);
}

struct FormulaInstance {
  LayeredDag tree;
  VertexAnnotations ann;
};

// Full binary AND-OR formula with `leaf_budget` leaves: repeatedly expand a
// random leaf (within the depth bound) into an internal gate with two fresh
// children. Gates and leaf bits are uniform.
inline FormulaInstance random_formula(int leaf_budget, int depth_bound, RngStream& rng) {
  if (leaf_budget < 1) throw ParameterError("leaf budget must be positive");
  if (depth_bound < 1 && leaf_budget > 1) throw ParameterError("depth bound too small");

  std::vector<std::pair<int, int>> edges;
  std::vector<int> layer{0, 0};
  std::vector<int> leaves{1};
  int count = 1;
  while (static_cast<int>(leaves.size()) < leaf_budget) {
    std::vector<int> eligible;
    for (std::size_t i = 0; i < leaves.size(); ++i)
      if (layer[leaves[i]] < depth_bound) eligible.push_back(static_cast<int>(i));
    if (eligible.empty()) throw DomainError("infeasible formula constraints");
    int slot = eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(eligible.size()) - 1))];
    int v = leaves[slot];
    int a = ++count, b = ++count;
    edges.push_back({v, a});
    edges.push_back({v, b});
    layer.push_back(layer[v] + 1);
    layer.push_back(layer[v] + 1);
    leaves[slot] = a;
    leaves.push_back(b);
  }

  FormulaInstance f;
  f.tree = LayeredDag::from_edges(count, edges);
  for (int v = 1; v <= count; ++v) {
    if (f.tree.children_of(v).empty())
      f.ann.leaf_values[v] = rng.bernoulli(0.5) ? 1 : 0;
    else
      f.ann.gates[v] = rng.bernoulli(0.5) ? Gate::And : Gate::Or;
  }
  return f;
}

}  // namespace qwalk
