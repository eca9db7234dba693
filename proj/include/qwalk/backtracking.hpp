#pragma once

// Marked-vertex detection and accelerated backtracking search.
//
// The restricted tree T_m (the first m vertices in depth-first order) is
// encoded by a root-to-vertex path; a RestrictedHandle exposes it as a
// black box over the original tree, hiding children that come after the
// path successor. Detection simulates phase estimation on the marked walk
// (marked diffusion blocks are identities) from the anchor state and takes
// a majority vote on the zero-phase bin: marked vertices put constant
// weight on the 1-eigenspace, while an unmarked tree of at most T1 vertices
// keeps every eigenphase away from zero by ~1/sqrt((alpha^2+n) T1).
//
// The search loop doubles a target prefix size, generates its path, and
// detects within the restricted view; it stops on a hit, on whole-tree
// coverage, or by cutting over to whole-tree detection once the paid cost
// exceeds that detection's own budget.

#include <algorithm>
#include <climits>
#include <cmath>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/oracles.hpp"
#include "qwalk/phase_estimation.hpp"
#include "qwalk/size_estimator.hpp"
#include "qwalk/spectral.hpp"
#include "qwalk/walk_operators.hpp"

namespace qwalk {

// Black-box view of T_m: children of a path vertex after the path successor
// are hidden, the path end is a leaf, and everything else passes through to
// the base handle (whose ledger keeps counting).
class RestrictedHandle : public Explorable {
public:
  RestrictedHandle(const Explorable& base, PathSpec path) : base_(&base), path_(std::move(path)) {
    if (path_.vertices.empty() || path_.vertices.front() != base.root())
      throw DomainError("path must start at the root");
    if (path_.vertices.size() != path_.child_indices.size() + 1)
      throw DomainError("malformed path spec");
    for (std::size_t i = 0; i < path_.vertices.size(); ++i) pos_[path_.vertices[i]] = static_cast<int>(i);
  }

  const PathSpec& path() const { return path_; }

  int root() const override { return base_->root(); }
  int child_count(int v) const override {
    auto it = pos_.find(v);
    if (it != pos_.end()) {
      if (it->second == path_.length()) {
        base_->child_count(v);  // the underlying query still happens (and counts)
        return 0;
      }
      base_->child_count(v);
      return path_.child_indices[it->second] + 1;
    }
    return base_->child_count(v);
  }
  int child(int v, int i) const override {
    auto it = pos_.find(v);
    if (it != pos_.end()) {
      if (it->second == path_.length() || i > path_.child_indices[it->second])
        throw DomainError("child index out of range in restricted view");
    }
    return base_->child(v, i);
  }
  int parent_count(int v) const override { return base_->parent_count(v); }
  int parent(int v, int i) const override { return base_->parent(v, i); }
  NodeKind kind(int v) const override {
    auto it = pos_.find(v);
    if (it != pos_.end() && it->second == path_.length()) {
      base_->kind(v);
      return NodeKind::Leaf;
    }
    return base_->kind(v);
  }
  int leaf_value(int v) const override { return base_->leaf_value(v); }
  bool marked(int v) const override { return base_->marked(v); }
  QueryLedger* ledger() const override { return base_->ledger(); }

  Materialized materialized() const override {
    Materialized base = base_->materialized();
    // view ids == base ids (TreeHandle bases are identity-mapped)
    const LayeredDag& g = base.dag;
    std::vector<int> keep;
    std::vector<char> in(g.vertex_count() + 1, 0);
    auto add_subtree = [&](auto&& self, int v) -> void {
      if (in[v]) return;
      in[v] = 1;
      keep.push_back(v);
      for (int c : g.children_of(v)) self(self, c);
    };
    for (std::size_t i = 0; i < path_.vertices.size(); ++i) {
      int u = path_.vertices[i];
      if (!in[u]) {
        in[u] = 1;
        keep.push_back(u);
      }
      if (i < path_.child_indices.size()) {
        const auto& kids = g.children_of(u);
        for (int c = 0; c < path_.child_indices[i]; ++c) add_subtree(add_subtree, kids[c]);
      }
    }
    std::sort(keep.begin(), keep.end());

    Materialized m;
    m.orig_of.assign(1, 0);
    std::vector<int> new_of(g.vertex_count() + 1, 0);
    for (int v : keep) {
      new_of[v] = static_cast<int>(m.orig_of.size());
      m.orig_of.push_back(base.orig_of[v]);
    }
    std::vector<std::pair<int, int>> edges;
    for (int v : keep) {
      auto it = pos_.find(v);
      int limit = INT_MAX;
      if (it != pos_.end())
        limit = (it->second == path_.length()) ? -1 : path_.child_indices[it->second];
      const auto& kids = g.children_of(v);
      for (int c = 0; c <= std::min<int>(limit, static_cast<int>(kids.size()) - 1); ++c)
        edges.push_back({new_of[v], new_of[kids[c]]});
    }
    m.dag = LayeredDag::from_edges(static_cast<int>(keep.size()), edges);
    for (int v : keep) {
      if (base.ann.marked.count(v)) m.ann.marked.insert(new_of[v]);
      auto git = base.ann.gates.find(v);
      if (git != base.ann.gates.end()) m.ann.gates[new_of[v]] = git->second;
      auto lit = base.ann.leaf_values.find(v);
      if (lit != base.ann.leaf_values.end()) m.ann.leaf_values[new_of[v]] = lit->second;
    }
    return m;
  }

private:
  const Explorable* base_;
  PathSpec path_;
  std::unordered_map<int, int> pos_;
};

inline RestrictedHandle restricted_view(const Explorable& base, PathSpec path) {
  return RestrictedHandle(base, std::move(path));
}

// Montanaro-style detection, simulated at the outcome level: majority vote
// over 2 ceil(ln(1/eps)) + 1 phase-estimation reads with
// ceil(log2 sqrt(T1 n)) + 3 precision bits, declaring a marked vertex iff
// the zero-phase bin wins. The marked walk uses alpha = sqrt(6n), which
// keeps the worst-case 1-eigenspace overlap at 6/7 while the unmarked gap
// stays below one grid bin. Charges runs * window controlled-U.
inline bool detect_marked(const Explorable& tree, double t1_vertices, int n, double epsilon,
                          RngStream& rng, QueryLedger& ledger) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (t1_vertices < 1.0 || n < 1) throw ParameterError("bounds must be positive");

  Materialized m = tree.materialized();
  if (m.dag.edge_count() == 0) {
    ledger.marked_predicate++;
    return m.ann.marked.count(m.dag.root()) > 0;
  }

  double alpha = std::sqrt(6.0 * n);
  PhaseProfile profile = walk_phase_profile(m.dag, alpha, m.ann.marked);

  int bits = static_cast<int>(std::ceil(std::log2(std::sqrt(std::max(2.0, t1_vertices * n))))) + 3;
  bits = std::max(1, std::min(bits, 24));
  long long window = 1LL << bits;
  int runs = 2 * static_cast<int>(std::ceil(std::log(1.0 / epsilon))) + 1;

  double zero_bin = 0.0;
  for (std::size_t j = 0; j < profile.phases.size(); ++j)
    zero_bin += profile.weights[j] * qpe_kernel(profile.phases[j], window);
  zero_bin = std::min(1.0, zero_bin);

  int zeros = 0;
  for (int i = 0; i < runs; ++i) zeros += rng.bernoulli(zero_bin) ? 1 : 0;
  ledger.controlled_u += static_cast<long long>(runs) * window;
  return zeros > runs / 2;
}

// Generate-path: walk down from the root, estimating the first child's
// subtree against the remaining vertex budget (upper bound (m-1)/(1-delta),
// per-call failure eps/n); descend into the first child when the estimate
// covers the budget, finish along last children when it matches exactly,
// and otherwise move the remaining budget into the second child.
inline PathSpec generate_path(const Explorable& tree, long long m, double delta, double epsilon,
                              int n, const SubtreeEstimator& estimator) {
  if (m < 1) throw ParameterError("m must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (n < 1) throw ParameterError("depth bound must be >= 1");

  PathSpec path;
  path.vertices.push_back(tree.root());
  long long budget = m;
  int v = tree.root();

  auto descend_last = [&](int from) {
    int cur = from;
    while (true) {
      auto kids = children(tree, cur);
      if (kids.empty()) break;
      path.child_indices.push_back(static_cast<int>(kids.size()) - 1);
      cur = kids.back();
      path.vertices.push_back(cur);
    }
  };

  while (true) {
    auto kids = children(tree, v);
    if (kids.empty() || budget <= 1) break;  // leaf, or a single-vertex request
    if (kids.size() > 2) throw DomainError("generate_path expects a binary tree; binarize first");
    int first = kids[0];

    long long estimate;
    if (tree.child_count(first) == 0) {
      estimate = 1;  // a leaf needs no quantum estimate
    } else {
      double t0 = static_cast<double>(budget - 1) / (1.0 - delta);
      VertexEstimate e = estimator(first, t0, delta, epsilon / n);
      estimate = e.exceeds ? LLONG_MAX : e.v_hat;
    }

    if (estimate > budget - 1) {
      path.vertices.push_back(first);
      path.child_indices.push_back(0);
      v = first;
      budget -= 1;
      continue;
    }
    if (estimate == budget - 1 || kids.size() < 2) {
      path.vertices.push_back(first);
      path.child_indices.push_back(0);
      descend_last(first);
      break;
    }
    path.vertices.push_back(kids[1]);
    path.child_indices.push_back(1);
    v = kids[1];
    budget -= 1 + estimate;
  }
  return path;
}

struct StageRecord {
  int stage = 0;
  long long m_target = 0;
  long long m_realized = 0;
  bool detect_outcome = false;
  long long gen_controlled_u = 0;
  long long detect_controlled_u = 0;
  bool whole_tree = false;
};

struct SearchResult {
  bool found = false;
  int stage_reached = 0;
  bool used_cutover = false;
  std::vector<StageRecord> stages;
  QueryLedger ledger;
};

namespace detail {

// the all-last-children path ending at a leaf covers the whole tree
inline bool covers_whole_tree(const LayeredDag& g, const PathSpec& p) {
  for (int i = 0; i < p.length(); ++i) {
    const auto& kids = g.children_of(p.vertices[i]);
    if (p.child_indices[i] != static_cast<int>(kids.size()) - 1) return false;
  }
  return g.children_of(p.last()).empty();
}

}  // namespace detail

// Doubling search (prefix sizes 2^i) with per-stage failure
// eps / (2 ceil(log2 T1)) split between path generation (delta = 1/2) and
// detection with vertex bound (3/2) 2^i. Falls back to one whole-tree
// detection at eps/2 when the accumulated cost passes that detection's
// budget.
inline SearchResult search(const LayeredDag& tree, const VertexAnnotations& ann, double t1_vertices,
                           int n, double epsilon, std::uint64_t seed) {
  if (!tree.is_tree()) throw DomainError("search expects a tree");
  if (tree.max_degree() > 3) throw DomainError("search expects a binary tree; binarize first");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (t1_vertices < 1.0 || n < 1) throw ParameterError("bounds must be positive");

  SearchResult res;
  TreeHandle handle(tree, &ann, &res.ledger);
  RngStream root_rng(seed);
  auto est_rng = std::make_shared<RngStream>(root_rng.split(1));
  auto cache = std::make_shared<WalkProfileCache>();
  SubtreeEstimator estimator = make_quantum_subtree_estimator(tree, n, est_rng, &res.ledger, cache);

  int log_t1 = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(2.0, t1_vertices)))));
  double stage_eps = epsilon / (2.0 * log_t1);

  // Whole-tree cost guard. The asymptotic cutover rule compares against the
  // sqrt(T1 n) log(1/eps) detection expression; in this implementation's
  // units a single path-generation stage already outweighs that raw
  // expression, so the guard carries the per-stage constants (one full
  // final stage, times the geometric sum of the doubling schedule).
  long long m_last = 1LL << (log_t1 + 1);
  double t0_last = std::max(1.0, static_cast<double>(m_last - 1) / 0.5 - 1.0);
  MinPhaseConfig gen_cfg(4.0 / 9.0,
                         std::pow(0.5, 1.5) / (4.0 * std::sqrt(3.0 * n * t0_last)),
                         std::min(0.5, stage_eps / n));
  QpeConfig gen_run = gen_cfg.per_run();
  long long gen_call = static_cast<long long>(gen_cfg.repetitions()) * gen_run.median_runs() *
                       gen_run.window();
  int full_bits = static_cast<int>(std::ceil(std::log2(std::sqrt(std::max(2.0, 3.0 * t1_vertices * n))))) + 3;
  full_bits = std::max(1, std::min(full_bits, 24));
  long long det_full = (2 * static_cast<long long>(std::ceil(std::log(1.0 / stage_eps))) + 1)
                       << full_bits;
  long long cutover_budget = 4 * (static_cast<long long>(n + 1) * gen_call + det_full);

  for (int stage = 1; stage <= log_t1 + 1; ++stage) {
    long long m = 1LL << stage;
    long long before_gen = res.ledger.controlled_u;
    PathSpec path = generate_path(handle, m, 0.5, stage_eps, n, estimator);
    RestrictedHandle view(handle, path);

    StageRecord rec;
    rec.stage = stage;
    rec.m_target = m;
    rec.m_realized = dfs_prefix_size(tree, path);
    rec.whole_tree = detail::covers_whole_tree(tree, path);
    rec.gen_controlled_u = res.ledger.controlled_u - before_gen;

    long long before = res.ledger.controlled_u;
    RngStream det_rng = root_rng.split(100 + static_cast<std::uint64_t>(stage));
    rec.detect_outcome =
        detect_marked(view, 1.5 * static_cast<double>(m), n, stage_eps, det_rng, res.ledger);
    rec.detect_controlled_u = res.ledger.controlled_u - before;
    res.stages.push_back(rec);
    res.stage_reached = stage;

    if (rec.detect_outcome) {
      res.found = true;
      return res;
    }
    if (rec.whole_tree) {
      res.found = false;
      return res;
    }
    if (res.ledger.controlled_u > cutover_budget || stage == log_t1 + 1) {
      RngStream fin_rng = root_rng.split(999);
      long long before_fin = res.ledger.controlled_u;
      res.found = detect_marked(handle, t1_vertices, n, epsilon / 2.0, fin_rng, res.ledger);
      res.used_cutover = true;
      StageRecord fin;
      fin.stage = stage + 1;
      fin.m_target = static_cast<long long>(t1_vertices);
      fin.m_realized = tree.vertex_count();
      fin.detect_outcome = res.found;
      fin.detect_controlled_u = res.ledger.controlled_u - before_fin;
      fin.whole_tree = true;
      res.stages.push_back(fin);
      res.stage_reached = stage + 1;
      return res;
    }
  }
  return res;
}

}  // namespace qwalk
