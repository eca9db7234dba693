#pragma once

// Numerical checks for the analytical statements behind the walk: each
// checker returns its worst violation on one instance (0 means exact), and
// run_verify_suite sweeps seeded instance families and aggregates into a
// {lemma, instances, max_violation, pass} report. Violations are measured
// in the same units the statements are made in; tolerances sit with the
// suite definitions at the bottom.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qwalk/errors.hpp"
#include "qwalk/generate.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/oracles.hpp"
#include "qwalk/spectral.hpp"
#include "qwalk/walk_operators.hpp"

namespace qwalk {

// Szegedy correspondence: the nonzero, non-flip eigenphase pairs of
// R_B R_A match the singular values of L through cos(theta/2), with
// multiplicity. Also checks the +- pairing of the spectrum.
inline double szegedy_violation(const LayeredDag& g, double alpha) {
  auto ops = build_reflections(g, alpha);
  auto gd = build_gram(g, alpha);
  auto summary = eigendecompose_walk(ops, gd);

  std::vector<double> plus, minus;
  for (Eigen::Index i = 0; i < summary.eigenphases.size(); ++i) {
    double th = summary.eigenphases[i];
    if (std::abs(th) <= kOnePhaseTol || kPi - std::abs(th) <= 1e-7) continue;
    (th > 0 ? plus : minus).push_back(std::abs(th));
  }
  std::sort(plus.begin(), plus.end());
  std::sort(minus.begin(), minus.end());
  if (plus.size() != minus.size()) return 1.0;
  double viol = 0.0;
  for (std::size_t i = 0; i < plus.size(); ++i) viol = std::max(viol, std::abs(plus[i] - minus[i]));

  std::vector<double> from_phases;
  for (double th : plus) from_phases.push_back(std::cos(0.5 * th));
  std::sort(from_phases.begin(), from_phases.end());

  std::vector<double> sigmas;
  for (Eigen::Index i = 0; i < summary.singular_values.size(); ++i) {
    double s = summary.singular_values[i];
    if (s > 5e-8 && s < 1.0 - 1e-12) sigmas.push_back(s);
  }
  std::sort(sigmas.begin(), sigmas.end());
  if (sigmas.size() != from_phases.size()) return 1.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    viol = std::max(viol, std::abs(sigmas[i] - from_phases[i]));

  // lambda_K sin^2(theta_min/2) = 1
  viol = std::max(viol, std::abs(summary.lambda_k * std::pow(std::sin(0.5 * summary.theta_min), 2) - 1.0));
  return viol;
}

inline double one_eigenspace_violation(const LayeredDag& g, double alpha) {
  auto ops = build_reflections(g, alpha);
  auto gd = build_gram(g, alpha);
  auto rep = verify_one_eigenspace(ops, gd);
  double viol = rep.e0_projection_norm;
  if (rep.intersection_dim != 0) viol = std::max(viol, 1.0);
  return viol;
}

// Lemma 11 corner values of N and the constant rows of N~ (Corollary 12).
inline double corner_violation(const LayeredDag& g, double alpha) {
  auto w = fundamental_matrix(g, alpha);
  int vp1 = g.vertex_count();  // 0-based index of v_{V+1}
  double viol = 0.0;
  double inv1mb = 1.0 / (1.0 - w.beta);
  viol = std::max(viol, std::abs(w.n_mat(0, vp1) - inv1mb));
  viol = std::max(viol, std::abs(w.n_mat(vp1, 0) - inv1mb));
  viol = std::max(viol, std::abs(w.n_mat(vp1, vp1) - inv1mb));
  viol = std::max(viol, std::abs(w.n_mat(0, 0) - 1.0 / (w.beta * (1.0 - w.beta))));

  double c_anchor = 1.0 / w.d1;
  double c_root = alpha * alpha + 1.0 / w.d1;
  for (int i = 0; i <= vp1; ++i)
    viol = std::max(viol, std::abs(w.n_tilde(i, vp1) - c_anchor));
  for (int i = 0; i < vp1; ++i) viol = std::max(viol, std::abs(w.n_tilde(i, 0) - c_root));

  // structural sanity: transient rows are stochastic, the last row leaks 1-beta
  for (int i = 0; i < vp1; ++i) viol = std::max(viol, std::abs(w.q_mat.row(i).sum() - 1.0));
  viol = std::max(viol, std::abs(w.q_mat.row(vp1).sum() - w.beta));
  viol = std::max(viol, (w.n_tilde - w.n_tilde.transpose()).cwiseAbs().maxCoeff());
  return viol;
}

// Lemma 13: on trees N~[i,j] = alpha^2 + 1/d_1 + depth(lca(i,j)).
inline double tree_formula_violation(const LayeredDag& g, double alpha) {
  if (!g.is_tree()) throw DomainError("tree formula needs a tree");
  auto w = fundamental_matrix(g, alpha);
  auto lca = lca_depth_table(g);
  double base = alpha * alpha + 1.0 / w.d1;
  double viol = 0.0;
  for (int i = 0; i < g.vertex_count(); ++i)
    for (int j = 0; j < g.vertex_count(); ++j)
      viol = std::max(viol, std::abs(w.n_tilde(i, j) - (base + lca(i, j))));
  return viol;
}

// Corollary 15: on layered DAGs 0 <= N~[i,j] - (alpha^2 + 1/d_1) <= n,
// with equality on the first row and column.
inline double dag_bound_violation(const LayeredDag& g, double alpha) {
  auto w = fundamental_matrix(g, alpha);
  double base = alpha * alpha + 1.0 / w.d1;
  double n = g.depth();
  double viol = 0.0;
  for (int i = 0; i < g.vertex_count(); ++i)
    for (int j = 0; j < g.vertex_count(); ++j) {
      double x = w.n_tilde(i, j) - base;
      viol = std::max(viol, std::max(-x, x - n));
      if (i == 0 || j == 0) viol = std::max(viol, std::abs(x));
    }
  return viol;
}

// N~ rows are harmonic for the absorbing walk away from their own index.
inline double harmonic_property_violation(const LayeredDag& g, double alpha) {
  auto w = fundamental_matrix(g, alpha);
  int dim = g.vertex_count() + 1;
  double viol = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 1; j < g.vertex_count(); ++j) {  // j in [2..V]
      if (j == i) continue;
      double avg = 0.0;
      for (int l = 0; l < dim; ++l) avg += w.q_mat(j, l) * w.n_tilde(i, l);
      viol = std::max(viol, std::abs(w.n_tilde(i, j) - avg));
    }
  return viol;
}

// Harmonic potentials stay within their boundary values (maximum principle)
// and tree resistances equal depths; extra edges only shrink resistance.
inline double resistance_violation(const LayeredDag& g) {
  double viol = 0.0;
  if (g.is_tree()) {
    for (int i = 2; i <= g.vertex_count(); ++i)
      viol = std::max(viol, std::abs(effective_resistance(g, i) - g.layer(i)));
  }
  for (int i = 2; i <= g.vertex_count(); ++i) {
    Eigen::VectorXd phi = harmonic_potential(g, 1, i);
    viol = std::max(viol, std::max(phi.maxCoeff() - 1.0, -phi.minCoeff()));
  }
  return viol;
}

inline double overlap_violation(const LayeredDag& g, double alpha) {
  auto gd = build_gram(g, alpha);
  auto res = top_pair_overlap(gd);
  return std::max(0.0, 2.0 / 3.0 - res.overlap);
}

struct SuiteOptions {
  std::string family = "tree";  // tree | dag | path | tree+chord
  int count = 50;
  int min_size = 8;
  int max_size = 40;
  int depth_bound = 6;
  int max_branching = 3;
  int extra_edges = 6;
  std::vector<double> alpha_scales = {1.0};  // multiples of sqrt(2n)
  std::uint64_t seed = 1;
};

struct SuiteReport {
  std::string lemma;
  int instances = 0;
  double max_violation = 0.0;
  bool pass = false;
  double tolerance = 0.0;
};

inline LayeredDag make_family_instance(const SuiteOptions& opt, RngStream& rng) {
  int size = static_cast<int>(rng.uniform_int(opt.min_size, opt.max_size));
  if (opt.family == "tree") return random_tree(size, opt.depth_bound, {opt.max_branching}, rng);
  if (opt.family == "dag")
    return random_layered_dag(size, opt.depth_bound, {opt.max_branching}, opt.extra_edges, rng);
  if (opt.family == "path") {
    std::vector<std::pair<int, int>> edges;
    for (int v = 2; v <= size; ++v) edges.push_back({v - 1, v});
    return LayeredDag::from_edges(size, edges);
  }
  if (opt.family == "tree+chord")
    return random_layered_dag(size, opt.depth_bound, {opt.max_branching}, 1, rng);
  throw ParameterError("unknown instance family: " + opt.family);
}

inline SuiteReport run_verify_suite(const std::string& suite, const SuiteOptions& opt) {
  SuiteReport rep;
  rep.instances = opt.count;
  RngStream rng(opt.seed);

  auto sweep = [&](const std::string& lemma, double tol, auto&& checker) {
    rep.lemma = lemma;
    rep.tolerance = tol;
    for (int i = 0; i < opt.count; ++i) {
      RngStream inst = rng.split(static_cast<std::uint64_t>(i));
      LayeredDag g = make_family_instance(opt, inst);
      if (g.edge_count() < 1) continue;
      double n = std::max(1, g.depth());
      for (double scale : opt.alpha_scales)
        rep.max_violation = std::max(rep.max_violation, checker(g, scale * std::sqrt(2.0 * n)));
    }
    rep.pass = rep.max_violation <= tol;
  };

  if (suite == "szegedy") {
    sweep("szegedy-correspondence", 1e-9, [](const LayeredDag& g, double a) { return szegedy_violation(g, a); });
  } else if (suite == "one-eigenspace") {
    sweep("lemma4", 1e-9, [](const LayeredDag& g, double a) { return one_eigenspace_violation(g, a); });
  } else if (suite == "k-bounds") {
    sweep("lemma9-10", 1e-9, [](const LayeredDag& g, double a) {
      auto r = verify_K_bounds(g, a);
      return r.max_violation;
    });
  } else if (suite == "k-identity") {
    sweep("lemma17", 1e-8, [](const LayeredDag& g, double a) {
      auto r = verify_K_identity(g, a);
      return r.max_violation;
    });
  } else if (suite == "corners") {
    sweep("lemma11-corollary12", 1e-9, [](const LayeredDag& g, double a) { return corner_violation(g, a); });
  } else if (suite == "tree-formula") {
    sweep("lemma13", 1e-9, [](const LayeredDag& g, double a) { return tree_formula_violation(g, a); });
  } else if (suite == "dag-bound") {
    sweep("corollary15", 1e-9, [](const LayeredDag& g, double a) { return dag_bound_violation(g, a); });
  } else if (suite == "harmonic") {
    sweep("harmonic-averaging", 1e-9, [](const LayeredDag& g, double a) { return harmonic_property_violation(g, a); });
  } else if (suite == "overlap") {
    sweep("lemma2", 1e-12, [](const LayeredDag& g, double a) { return overlap_violation(g, a); });
  } else if (suite == "resistance") {
    sweep("resistance-depth", 1e-9, [](const LayeredDag& g, double) { return resistance_violation(g); });
  } else if (suite == "rayleigh") {
    // build a tree, add one chord, compare resistances pointwise
    rep.lemma = "rayleigh-monotonicity";
    rep.tolerance = 1e-9;
    for (int i = 0; i < opt.count; ++i) {
      RngStream inst = rng.split(static_cast<std::uint64_t>(i));
      int size = static_cast<int>(inst.uniform_int(opt.min_size, opt.max_size));
      LayeredDag dag = random_layered_dag(size, opt.depth_bound, {opt.max_branching}, 1, inst);
      if (dag.edge_count() == size - 1) continue;  // no chord fit this shape
      std::vector<std::pair<int, int>> tree_edges(dag.edges().begin(),
                                                  dag.edges().begin() + (size - 1));
      LayeredDag tree = LayeredDag::from_edges(size, tree_edges);
      for (int v = 2; v <= size; ++v)
        rep.max_violation = std::max(
            rep.max_violation, effective_resistance(dag, v) - effective_resistance(tree, v));
    }
    rep.pass = rep.max_violation <= rep.tolerance;
  } else {
    throw ParameterError("unknown verify suite: " + suite);
  }
  return rep;
}

inline std::vector<std::string> verify_suite_names() {
  return {"szegedy",   "one-eigenspace", "k-bounds", "k-identity", "corners", "tree-formula",
          "dag-bound", "harmonic",       "overlap",  "resistance", "rayleigh"};
}

}  // namespace qwalk
