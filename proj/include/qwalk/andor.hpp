#pragma once

// AND-OR formula evaluation under local exploration.
//
// Heavy-subtree extraction keeps every vertex whose subtree holds at least
// m vertices (plus its children), probing each candidate with a size
// estimate at delta = 1/4 and per-call failure m*eps/(6nT); recursion cuts
// off below estimate 2m/3 and a hard cap of 6Tn/m vertices bounds the
// work. Unknown-evaluate peels the formula level by level with thresholds
// T_i = T^{i/c}: each level extracts a heavy subtree, evaluates it as a
// known-structure formula through a pluggable evaluator model, and
// recurses at the frontier leaves with failure eps/s^3.
//
// The evaluator model implements the external contract of the known-
// structure algorithms: correct value with probability >= 1 - eps at a
// charged cost of ceil(kappa sqrt(s n) ln(1/eps)) leaf queries. Reported
// query counts follow that cost law (each charged leaf query at the mean
// realized sub-call cost, doubled below the top level for uncomputation),
// while the classical simulation underneath evaluates every frontier leaf
// exactly once.

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/oracles.hpp"
#include "qwalk/rng.hpp"
#include "qwalk/size_estimator.hpp"

namespace qwalk {

struct HeavySubtree {
  std::vector<int> vertices;  // connected, contains the handle root
  std::vector<int> frontier;  // members that root unexplored nonempty subtrees
  long long size = 0;
};

inline HeavySubtree heavy_subtree(const Explorable& tree, long long m, double epsilon,
                                  double t_bound, int n, const SubtreeEstimator& estimator) {
  if (m < 2) throw ParameterError("m must be >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (t_bound < 1.0 || n < 1) throw ParameterError("bounds must be positive");

  double cap = 6.0 * t_bound * n / static_cast<double>(m);
  double eps_call = static_cast<double>(m) * epsilon / (6.0 * n * t_bound);
  eps_call = std::min(eps_call, 0.5);

  HeavySubtree out;
  bool stopped = false;
  std::vector<int> unclassified;

  auto rec = [&](auto&& self, int v) -> void {
    if (stopped) return;
    out.vertices.push_back(v);
    if (static_cast<double>(out.vertices.size()) >= cap) {
      stopped = true;
      unclassified.push_back(v);
      return;
    }
    int kid_count = tree.child_count(v);
    if (kid_count == 0) return;  // real leaf
    VertexEstimate e = estimator(v, static_cast<double>(m), 0.25, eps_call);
    long long estimate = e.exceeds ? LLONG_MAX : e.v_hat;
    if (static_cast<double>(estimate) < 2.0 * static_cast<double>(m) / 3.0) {
      out.frontier.push_back(v);
      return;
    }
    for (int i = 0; i < kid_count && !stopped; ++i) self(self, tree.child(v, i));
  };
  rec(rec, tree.root());

  for (int v : unclassified)
    if (tree.child_count(v) > 0) out.frontier.push_back(v);
  out.size = static_cast<long long>(out.vertices.size());
  return out;
}

// Exact-size validator for the m-heavy definition: (1) every x with
// |T(x)| >= m is present along with its children; (2) every member other
// than the root has |T(.)| >= m/2 itself or via its parent. The root is
// always a member by construction and is exempt from clause 2.
inline bool is_heavy_subtree(const std::vector<int>& candidate, const LayeredDag& tree,
                             long long m) {
  if (!tree.is_tree()) throw DomainError("heavy-subtree check needs a tree");
  std::set<int> members(candidate.begin(), candidate.end());
  if (!members.count(tree.root())) throw DomainError("candidate must contain the root");
  for (int v : members)
    if (v != tree.root() && !members.count(tree.parents_of(v).front()))
      throw DomainError("candidate is not a connected root subtree");

  std::vector<long long> sizes = subtree_sizes(tree);
  for (int v = 1; v <= tree.vertex_count(); ++v) {
    if (sizes[v] >= m) {
      if (!members.count(v)) return false;
      for (int c : tree.children_of(v))
        if (!members.count(c)) return false;
    }
  }
  double half = static_cast<double>(m) / 2.0;
  for (int v : members) {
    if (v == tree.root()) continue;
    if (static_cast<double>(sizes[v]) >= half) continue;
    int p = tree.parents_of(v).front();
    if (static_cast<double>(sizes[p]) >= half) continue;
    return false;
  }
  return true;
}

struct KnownEvaluatorModel {
  enum class Mode { Exact, Noisy };
  Mode mode = Mode::Exact;
  double kappa = 1.0;  // constant in the charged cost ceil(kappa sqrt(s n) ln(1/eps))
};

struct EvalReport {
  int value = 0;
  double measured_queries = 0.0;   // model-accounted cost of the whole run
  double predicted_queries = 0.0;  // closed-form level-c cost at the same parameters
  QueryLedger ledger;              // raw simulation tallies
};

// closed-form cost at level i = c: n^c sqrt(T * T^(1/c)) (ln T + ln 1/eps)^c
inline double predicted_query_cost(int c, double t_bound, int n, double epsilon) {
  if (c < 1) throw ParameterError("c must be >= 1");
  if (t_bound <= 1.0) throw ParameterError("t bound must exceed 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (n < 1) throw ParameterError("depth bound must be >= 1");
  double logs = std::log(t_bound) + std::log(1.0 / epsilon);
  return std::pow(static_cast<double>(n), c) * std::sqrt(t_bound * std::pow(t_bound, 1.0 / c)) *
         std::pow(logs, c);
}

namespace detail {

struct LevelResult {
  int value = 0;
  double modeled_cost = 0.0;
};

struct EvalContext {
  const LayeredDag* formula;
  const VertexAnnotations* ann;
  QueryLedger* ledger;
  const SubtreeEstimator* estimator;
  const KnownEvaluatorModel* model;
  RngStream* rng;
  int c = 1;
  double t_bound = 1.0;
  int n = 1;
};

// T' as an explicit child map over original ids, root included
struct LocalTree {
  int root = 0;
  std::map<int, std::vector<int>> kids;
  std::vector<int> leaves;  // in DFS order
};

inline LocalTree assemble_local_tree(const Explorable& handle, const std::vector<int>& members,
                                     int root) {
  std::set<int> in(members.begin(), members.end());
  LocalTree lt;
  lt.root = root;
  auto rec = [&](auto&& self, int v) -> void {
    int kc = handle.child_count(v);
    std::vector<int> mine;
    for (int i = 0; i < kc; ++i) {
      int ch = handle.child(v, i);
      if (in.count(ch)) mine.push_back(ch);
    }
    // demote partial internal nodes (possible after a hard stop) to leaves
    if (static_cast<int>(mine.size()) != kc) mine.clear();
    lt.kids[v] = mine;
    if (mine.empty())
      lt.leaves.push_back(v);
    else
      for (int ch : mine) self(self, ch);
  };
  rec(rec, root);
  return lt;
}

inline LevelResult unknown_evaluate_level(const EvalContext& ctx, int v, int level, double epsilon);

// evaluate T' as a known-structure formula; frontier leaves recurse
inline LevelResult evaluate_local(const EvalContext& ctx, const LocalTree& lt, int level,
                                  double epsilon, double build_cost) {
  long long s = static_cast<long long>(lt.kids.size());
  TreeHandle probe(*ctx.formula, ctx.ann, ctx.ledger);

  std::map<int, int> leaf_bits;
  double leaf_cost_total = 0.0;
  for (int leaf : lt.leaves) {
    if (probe.kind(leaf) == NodeKind::Leaf) {
      leaf_bits[leaf] = probe.leaf_value(leaf);
      leaf_cost_total += 1.0;
    } else {
      double sub_eps = epsilon / std::max(8.0, std::pow(static_cast<double>(s), 3));
      LevelResult sub = unknown_evaluate_level(ctx, leaf, level - 1, sub_eps);
      leaf_bits[leaf] = sub.value;
      leaf_cost_total += 2.0 * sub.modeled_cost;  // uncompute: reverse the first three steps
    }
  }

  auto eval = [&](auto&& self, int node) -> int {
    const auto& mine = lt.kids.at(node);
    if (mine.empty()) return leaf_bits.at(node);
    NodeKind k = probe.kind(node);
    if (k != NodeKind::AndGate && k != NodeKind::OrGate)
      throw DomainError("internal vertex without a gate type");
    int acc = (k == NodeKind::AndGate) ? 1 : 0;
    for (int ch : mine) {
      int x = self(self, ch);
      acc = (k == NodeKind::AndGate) ? (acc & x) : (acc | x);
    }
    return acc;
  };

  LevelResult res;
  res.value = eval(eval, lt.root);
  double eval_eps = epsilon / 5.0;
  if (ctx.model->mode == KnownEvaluatorModel::Mode::Noisy && ctx.rng->bernoulli(eval_eps))
    res.value ^= 1;

  double charged_leaf_queries =
      std::ceil(ctx.model->kappa * std::sqrt(static_cast<double>(s) * ctx.n) * std::log(1.0 / eval_eps));
  double mean_leaf_cost =
      lt.leaves.empty() ? 0.0 : leaf_cost_total / static_cast<double>(lt.leaves.size());
  res.modeled_cost = build_cost + charged_leaf_queries * mean_leaf_cost;
  return res;
}

inline LevelResult unknown_evaluate_level(const EvalContext& ctx, int v, int level, double epsilon) {
  RootedView at(*ctx.formula, ctx.ann, v, ctx.ledger);
  long long before = ctx.ledger->cost_units();

  std::vector<int> members;
  if (level <= 1) {
    // explore the whole subtree through counted queries
    auto rec = [&](auto&& self, int u) -> void {
      members.push_back(u);
      int kc = at.child_count(u);
      for (int i = 0; i < kc; ++i) self(self, at.child(u, i));
    };
    rec(rec, v);
  } else {
    long long m = std::max<long long>(
        2, static_cast<long long>(std::ceil(std::pow(ctx.t_bound, (level - 1.0) / ctx.c))));
    HeavySubtree hs = heavy_subtree(at, m, epsilon / 5.0, ctx.t_bound, ctx.n, *ctx.estimator);
    members = hs.vertices;
  }
  double build_cost = static_cast<double>(ctx.ledger->cost_units() - before);

  LocalTree lt = assemble_local_tree(at, members, v);
  return evaluate_local(ctx, lt, level, epsilon, build_cost);
}

}  // namespace detail

// Evaluate an AND-OR formula of unknown structure with c recursion levels
// against a size bound T. The estimator supplies subtree-size estimates
// (quantum-simulated or exact); the evaluator model supplies the
// known-structure evaluation step.
inline EvalReport unknown_evaluate(const LayeredDag& formula, const VertexAnnotations& ann, int c,
                                   double epsilon, double t_bound, std::uint64_t seed,
                                   const KnownEvaluatorModel& model,
                                   const SubtreeEstimator& estimator) {
  if (c < 1) throw ParameterError("c must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
  if (!formula.is_tree()) throw DomainError("formula must be a tree");
  for (int v = 1; v <= formula.vertex_count(); ++v) {
    std::size_t kc = formula.children_of(v).size();
    if (kc != 0 && kc != 2) throw DomainError("formula must be binary; binarize first");
  }

  EvalReport rep;
  RngStream rng(seed);
  detail::EvalContext ctx;
  ctx.formula = &formula;
  ctx.ann = &ann;
  ctx.ledger = &rep.ledger;
  ctx.estimator = &estimator;
  ctx.model = &model;
  ctx.rng = &rng;
  ctx.c = c;
  ctx.t_bound = std::max(t_bound, 2.0);
  ctx.n = std::max(1, formula.depth());

  detail::LevelResult top = detail::unknown_evaluate_level(ctx, formula.root(), c, epsilon);
  rep.value = top.value;
  rep.measured_queries = top.modeled_cost;
  rep.predicted_queries = predicted_query_cost(c, ctx.t_bound, ctx.n, epsilon);
  return rep;
}

}  // namespace qwalk
