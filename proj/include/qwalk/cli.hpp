#pragma once

// Command implementations behind the qwalk binary. Every report embeds the
// schema version, the full parameter set, the seed, and the input hash, so
// re-running an embedded configuration reproduces the report bit-exactly.
// Trials split their RNG streams by index, which keeps --parallel runs
// identical to sequential ones.

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qwalk/andor.hpp"
#include "qwalk/backtracking.hpp"
#include "qwalk/errors.hpp"
#include "qwalk/generate.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/graph_io.hpp"
#include "qwalk/oracles.hpp"
#include "qwalk/size_estimator.hpp"
#include "qwalk/verify.hpp"

namespace qwalk::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchema = 1;

using nlohmann::json;

inline json envelope(const std::string& command, std::uint64_t seed) {
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

inline void run_trials(int trials, int parallel, const std::function<void(int)>& body) {
  if (parallel <= 1) {
    for (int i = 0; i < trials; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  int workers = std::min(parallel, trials);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < trials; i += workers) body(i);
    });
  for (auto& th : pool) th.join();
}

// --- gen ---

struct GenSpec {
  std::string kind = "tree";  // tree | binary-tree | dag | formula
  int vertices = 15;
  int depth = 6;
  int branching = 3;
  int extra_edges = 4;
  int leaves = 8;
  std::vector<int> marked;
  std::uint64_t seed = 1;
};

inline json cmd_gen(const GenSpec& spec) {
  RngStream rng(spec.seed);
  LayeredDag dag;
  VertexAnnotations ann;
  if (spec.kind == "tree") {
    dag = random_tree(spec.vertices, spec.depth, {spec.branching}, rng);
  } else if (spec.kind == "binary-tree") {
    dag = random_tree(spec.vertices, spec.depth, {2}, rng);
  } else if (spec.kind == "dag") {
    dag = random_layered_dag(spec.vertices, spec.depth, {spec.branching}, spec.extra_edges, rng);
  } else if (spec.kind == "formula") {
    auto f = random_formula(spec.leaves, spec.depth, rng);
    dag = f.tree;
    ann = f.ann;
  } else {
    throw ParameterError("unknown kind: " + spec.kind);
  }
  for (int v : spec.marked) {
    dag.check_vertex(v);
    ann.marked.insert(v);
  }
  return graph_to_json(dag, ann);
}

// --- estimate-size ---

struct EstimateSpec {
  double t0 = 0.0;  // 0: twice the true edge count
  int n = 0;        // 0: actual depth
  double delta = 0.3;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  int trials = 1;
  int parallel = 1;
};

inline json cmd_estimate_size(const GraphFile& input, const EstimateSpec& spec) {
  const LayeredDag& g = input.dag;
  if (g.edge_count() < 1) throw ParameterError("graph has no edges to estimate");
  double t0 = spec.t0 > 0 ? spec.t0 : 2.0 * static_cast<double>(g.edge_count());
  int n = spec.n > 0 ? spec.n : std::max(1, g.depth());

  json rep = envelope("estimate-size", spec.seed);
  rep["input_hash"] = graph_content_hash(g, input.ann);
  rep["params"] = {{"t0", t0},         {"n", n},         {"delta", spec.delta},
                   {"epsilon", spec.epsilon}, {"trials", spec.trials}, {"parallel", spec.parallel}};
  rep["true_t"] = g.edge_count();

  double alpha = std::sqrt(2.0 * n / spec.delta);
  PhaseProfile profile = walk_phase_profile(g, alpha);

  RngStream base(spec.seed);
  std::vector<json> out(static_cast<std::size_t>(spec.trials));
  std::atomic<int> correct{0};
  run_trials(spec.trials, spec.parallel, [&](int i) {
    RngStream run = base.split(static_cast<std::uint64_t>(i));
    SizeEstimate est = estimate_size_from_profile(profile, t0, n, spec.delta, spec.epsilon, run);
    bool ok = delta_correct(est, g.edge_count());
    if (ok) correct++;
    json t;
    t["outcome"] = est.exceeds ? "exceeds" : "value";
    if (!est.exceeds) t["t_hat"] = est.t_hat;
    t["t0"] = est.t0;
    t["delta"] = est.delta;
    t["epsilon"] = est.epsilon;
    t["alpha"] = est.alpha_used;
    t["theta_hat"] = est.theta_hat;
    t["controlled_u_count"] = est.controlled_u;
    t["queries"] = {{"controlled_u", est.controlled_u}};
    t["seed"] = run.seed();
    t["delta_correct"] = ok;
    out[static_cast<std::size_t>(i)] = t;
  });
  rep["trials"] = out;
  rep["delta_correct_rate"] = static_cast<double>(correct.load()) / spec.trials;
  return rep;
}

// --- backtrack ---

struct BacktrackSpec {
  double t1 = 0.0;  // 0: vertex count
  int n = 0;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  int trials = 1;
  int parallel = 1;
};

inline json cmd_backtrack(const GraphFile& input, const BacktrackSpec& spec) {
  const LayeredDag& g = input.dag;
  if (!g.is_tree()) throw ParameterError("backtracking expects a tree");
  double t1 = spec.t1 > 0 ? spec.t1 : static_cast<double>(g.vertex_count());
  int n = spec.n > 0 ? spec.n : std::max(1, g.depth());

  json rep = envelope("backtrack", spec.seed);
  rep["input_hash"] = graph_content_hash(g, input.ann);
  rep["params"] = {{"t1", t1},         {"n", n},           {"epsilon", spec.epsilon},
                   {"trials", spec.trials}, {"parallel", spec.parallel}};
  bool truth = !input.ann.marked.empty();
  rep["classically_marked"] = truth;

  RngStream base(spec.seed);
  std::vector<json> out(static_cast<std::size_t>(spec.trials));
  std::atomic<int> agree{0};
  run_trials(spec.trials, spec.parallel, [&](int i) {
    std::uint64_t run_seed = base.split(static_cast<std::uint64_t>(i)).seed();
    SearchResult res = search(g, input.ann, t1, n, spec.epsilon, run_seed);
    if (res.found == truth) agree++;
    json t;
    t["found"] = res.found;
    t["stage_reached"] = res.stage_reached;
    t["used_cutover"] = res.used_cutover;
    t["seed"] = run_seed;
    t["controlled_u_count"] = res.ledger.controlled_u;
    t["structure_queries"] = res.ledger.structure_queries();
    json stages = json::array();
    for (const auto& s : res.stages)
      stages.push_back({{"i", s.stage},
                        {"m_target", s.m_target},
                        {"m_realized", s.m_realized},
                        {"detect_outcome", s.detect_outcome},
                        {"controlled_u_count", s.gen_controlled_u + s.detect_controlled_u}});
    t["stages"] = stages;
    out[static_cast<std::size_t>(i)] = t;
  });
  rep["trials"] = out;
  rep["agreement_rate"] = static_cast<double>(agree.load()) / spec.trials;
  return rep;
}

// --- evaluate ---

struct EvaluateSpec {
  int c = 2;
  double epsilon = 0.1;
  double size_bound = 0.0;  // 0: vertex count
  std::uint64_t seed = 1;
  int trials = 1;
  int parallel = 1;
  bool exact_evaluator = false;
  bool exact_sizes = false;
  double kappa = 1.0;
};

inline json cmd_evaluate(const GraphFile& input, const EvaluateSpec& spec) {
  const LayeredDag& g = input.dag;
  int oracle = minimax_value(g, input.ann);

  double t_bound = spec.size_bound > 0 ? spec.size_bound : static_cast<double>(g.vertex_count());

  json rep = envelope("evaluate", spec.seed);
  rep["input_hash"] = graph_content_hash(g, input.ann);
  rep["params"] = {{"c", spec.c},
                   {"epsilon", spec.epsilon},
                   {"size_bound", t_bound},
                   {"trials", spec.trials},
                   {"parallel", spec.parallel},
                   {"exact_evaluator", spec.exact_evaluator},
                   {"exact_sizes", spec.exact_sizes},
                   {"kappa", spec.kappa}};
  rep["oracle_value"] = oracle;

  KnownEvaluatorModel model{spec.exact_evaluator ? KnownEvaluatorModel::Mode::Exact
                                                 : KnownEvaluatorModel::Mode::Noisy,
                            spec.kappa};
  int n = std::max(1, g.depth());

  RngStream base(spec.seed);
  std::vector<json> out(static_cast<std::size_t>(spec.trials));
  std::atomic<int> agree{0};
  run_trials(spec.trials, spec.parallel, [&](int i) {
    RngStream run = base.split(static_cast<std::uint64_t>(i));
    QueryLedger ledger;
    SubtreeEstimator est;
    if (spec.exact_sizes) {
      est = make_exact_subtree_estimator(g);
    } else {
      auto qrng = std::make_shared<RngStream>(run.split(1));
      auto cache = std::make_shared<WalkProfileCache>();
      est = make_quantum_subtree_estimator(g, n, qrng, &ledger, cache);
    }
    EvalReport ev = unknown_evaluate(g, input.ann, spec.c, spec.epsilon, t_bound,
                                     run.split(2).seed(), model, est);
    if (ev.value == oracle) agree++;
    json t;
    t["value"] = ev.value;
    t["agree_with_oracle"] = (ev.value == oracle);
    t["measured_queries"] = ev.measured_queries;
    t["predicted_queries"] = ev.predicted_queries;
    t["c"] = spec.c;
    t["epsilon"] = spec.epsilon;
    t["seed"] = run.seed();
    out[static_cast<std::size_t>(i)] = t;
  });
  rep["trials"] = out;
  rep["agreement_rate"] = static_cast<double>(agree.load()) / spec.trials;
  return rep;
}

// --- verify ---

inline json cmd_verify(const std::string& suite, const SuiteOptions& opt) {
  SuiteReport r = run_verify_suite(suite, opt);
  json rep = envelope("verify", opt.seed);
  rep["params"] = {{"suite", suite},       {"family", opt.family},  {"count", opt.count},
                   {"min_size", opt.min_size}, {"max_size", opt.max_size}, {"alpha_scales", opt.alpha_scales}};
  rep["lemma"] = r.lemma;
  rep["instances"] = r.instances;
  rep["max_violation"] = r.max_violation;
  rep["tolerance"] = r.tolerance;
  rep["pass"] = r.pass;
  return rep;
}

// --- bench ---

struct BenchSpec {
  std::string axis = "t0";  // t0 | delta | n
  std::vector<double> grid;
  double t0 = 128.0;
  int n = 5;
  double delta = 0.3;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
};

// One measured Algorithm-1 ledger cost per grid point; the cost is a
// deterministic function of (t0, n, delta, epsilon), so a small fixed
// instance suffices.
inline std::string cmd_bench_csv(const BenchSpec& spec) {
  RngStream gen(spec.seed);
  LayeredDag g = random_tree(24, std::min(5, 24 - 1), {2}, gen);

  std::vector<double> grid = spec.grid;
  if (grid.empty()) {
    if (spec.axis == "t0")
      grid = {32, 64, 128, 256, 512, 1024};
    else if (spec.axis == "delta")
      grid = {0.5, 0.25, 0.125, 0.0625, 0.03125};
    else if (spec.axis == "n")
      grid = {2, 4, 8, 16, 32};
    else
      throw ParameterError("unknown bench axis: " + spec.axis);
  }

  std::string csv = "parameter,measured_cost\n";
  for (double x : grid) {
    double t0 = spec.axis == "t0" ? x : spec.t0;
    int n = spec.axis == "n" ? static_cast<int>(x) : spec.n;
    double delta = spec.axis == "delta" ? x : spec.delta;
    RngStream run(gen.split(static_cast<std::uint64_t>(x * 1024)).seed());
    SizeEstimate est = estimate_dag_size(g, t0, n, delta, spec.epsilon, run);
    csv += std::to_string(x) + "," + std::to_string(est.controlled_u) + "\n";
  }
  return csv;
}

}  // namespace qwalk::cli
