#pragma once

// Brute-force ground truths used by tests and acceptance suites: exact
// sizes, DFS prefixes, minimax values, dense spectra, LCA depths. These
// never run through the sampled estimators they are used to check.

#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/spectral.hpp"
#include "qwalk/walk_operators.hpp"

namespace qwalk {

inline long long exact_edge_count(const LayeredDag& g) { return g.edge_count(); }

// vertex counts of every rooted subtree (trees only), index by vertex id
inline std::vector<long long> subtree_sizes(const LayeredDag& t) {
  if (!t.is_tree()) throw DomainError("subtree sizes need a tree");
  std::vector<long long> sizes(t.vertex_count() + 1, 1);
  // children appear after parents in layer order; accumulate bottom-up
  std::vector<int> order;
  order.reserve(t.vertex_count());
  for (int v = 1; v <= t.vertex_count(); ++v) order.push_back(v);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return t.layer(a) > t.layer(b); });
  for (int v : order)
    if (v != t.root()) sizes[t.parents_of(v).front()] += sizes[v];
  return sizes;
}

// recursive preorder straight off the structure; the counted handle
// traversal in graph.hpp is checked against this
inline std::vector<int> dfs_order_direct(const LayeredDag& t) {
  std::vector<int> order;
  auto rec = [&](auto&& self, int v) -> void {
    order.push_back(v);
    for (int c : t.children_of(v)) self(self, c);
  };
  rec(rec, t.root());
  return order;
}

// vertex set of the restricted tree T_m encoded by a root-to-vertex path:
// the path itself plus the full subtrees hanging off pre-successor children
inline std::vector<int> materialize_prefix(const LayeredDag& t, const PathSpec& p) {
  validate_path(t, p);
  std::set<int> out;
  auto add_subtree = [&](auto&& self, int v) -> void {
    out.insert(v);
    for (int c : t.children_of(v)) self(self, c);
  };
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    int u = p.vertices[i];
    out.insert(u);
    if (i < p.child_indices.size()) {
      const auto& kids = t.children_of(u);
      for (int c = 0; c < p.child_indices[i]; ++c) add_subtree(add_subtree, kids[c]);
    }
  }
  return {out.begin(), out.end()};
}

inline long long dfs_prefix_size(const LayeredDag& t, const PathSpec& p) {
  return static_cast<long long>(materialize_prefix(t, p).size());
}

inline int minimax_value(const LayeredDag& t, const VertexAnnotations& ann) {
  auto rec = [&](auto&& self, int v) -> int {
    const auto& kids = t.children_of(v);
    if (kids.empty()) {
      auto it = ann.leaf_values.find(v);
      if (it == ann.leaf_values.end()) throw DomainError("missing leaf value");
      return it->second;
    }
    auto it = ann.gates.find(v);
    if (it == ann.gates.end()) throw DomainError("missing gate type");
    int acc = (it->second == Gate::And) ? 1 : 0;
    for (int c : kids) {
      int x = self(self, c);
      acc = (it->second == Gate::And) ? (acc & x) : (acc | x);
    }
    return acc;
  };
  return rec(rec, t.root());
}

// Independent route for small formulas: propagate full truth tables over
// the leaf variables as bitsets, then index by the actual assignment.
inline int truth_table_value(const LayeredDag& t, const VertexAnnotations& ann) {
  std::vector<int> leaves;
  for (int v = 1; v <= t.vertex_count(); ++v)
    if (t.children_of(v).empty()) leaves.push_back(v);
  int nl = static_cast<int>(leaves.size());
  if (nl > 20) throw ParameterError("truth-table oracle limited to 20 leaves");
  std::map<int, int> leaf_index;
  for (int i = 0; i < nl; ++i) leaf_index[leaves[i]] = i;

  std::size_t rows = 1ULL << nl;
  std::size_t words = (rows + 63) / 64;
  auto rec = [&](auto&& self, int v) -> std::vector<std::uint64_t> {
    const auto& kids = t.children_of(v);
    std::vector<std::uint64_t> bits(words, 0);
    if (kids.empty()) {
      int idx = leaf_index.at(v);
      for (std::size_t row = 0; row < rows; ++row)
        if ((row >> idx) & 1ULL) bits[row / 64] |= 1ULL << (row % 64);
      return bits;
    }
    Gate gate = ann.gates.at(v);
    bool first = true;
    for (int c : kids) {
      auto sub = self(self, c);
      if (first) {
        bits = sub;
        first = false;
      } else {
        for (std::size_t w = 0; w < words; ++w)
          bits[w] = (gate == Gate::And) ? (bits[w] & sub[w]) : (bits[w] | sub[w]);
      }
    }
    return bits;
  };
  auto table = rec(rec, t.root());
  std::size_t row = 0;
  for (int i = 0; i < nl; ++i)
    if (ann.leaf_values.at(leaves[i])) row |= 1ULL << i;
  return static_cast<int>((table[row / 64] >> (row % 64)) & 1ULL);
}

// depth of the lowest common ancestor for every vertex pair (trees)
inline Eigen::MatrixXi lca_depth_table(const LayeredDag& t) {
  if (!t.is_tree()) throw DomainError("lca table needs a tree");
  int v_count = t.vertex_count();
  Eigen::MatrixXi table(v_count, v_count);
  auto parent = [&](int v) { return t.parents_of(v).front(); };
  for (int i = 1; i <= v_count; ++i)
    for (int j = i; j <= v_count; ++j) {
      int a = i, b = j;
      while (t.layer(a) > t.layer(b)) a = parent(a);
      while (t.layer(b) > t.layer(a)) b = parent(b);
      while (a != b) {
        a = parent(a);
        b = parent(b);
      }
      table(i - 1, j - 1) = table(j - 1, i - 1) = t.layer(a);
    }
  return table;
}

// dense eigendecomposition reference for the smallest nonzero eigenphase
inline double exact_min_phase(const WalkOperators& ops) {
  Eigen::MatrixXd product = ops.r_b * ops.r_a;
  detail::SchurEig eig = detail::schur_eigensystem(product);
  double best = kPi;
  bool found = false;
  for (Eigen::Index i = 0; i < eig.phases.size(); ++i) {
    double a = std::abs(eig.phases[i]);
    if (a > kOnePhaseTol && a < best) {
      best = a;
      found = true;
    }
  }
  if (!found) throw NumericError("walk has no nonzero eigenphase");
  return best;
}

// Ground-truth memo keyed by (graph hash, alpha bits); acceptance suites
// compute oracles once per instance before exercising the estimators.
class OracleCache {
public:
  double min_phase(const LayeredDag& g, double alpha) {
    long long bits = static_cast<long long>(alpha * (1LL << 40));
    auto key = std::make_pair(graph_key(g), bits);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    double theta = exact_min_phase(build_reflections(g, alpha));
    cache_[key] = theta;
    return theta;
  }

private:
  static std::uint64_t graph_key(const LayeredDag& g) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t x) {
      h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(g.vertex_count()));
    for (auto [u, v] : g.edges()) mix((static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v));
    return h;
  }
  std::map<std::pair<std::uint64_t, long long>, double> cache_;
};

}  // namespace qwalk
