// qwalk: generate instances, estimate sizes, search backtracking trees,
// evaluate AND-OR formulas, verify the analytical statements, and benchmark
// cost scaling. Reports are JSON (CSV for bench) with embedded seeds and
// parameters for bit-exact reproduction.
//
// Exit codes: 0 success, 2 parameter error, 3 property violation (verify),
// 4 I/O error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qwalk/cli.hpp"

namespace {

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw qwalk::IoError("cannot write " + out_path);
  out << text << "\n";
}

qwalk::GraphFile load_input(const std::string& path) {
  if (path.empty()) throw qwalk::ParameterError("--input is required");
  return qwalk::load_graph_json(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-walk tree and DAG algorithm simulator"};
  app.require_subcommand(1);

  std::string input, out;
  std::uint64_t seed = 1;
  int trials = 1, parallel = 1;
  std::string format = "json";

  auto add_common = [&](CLI::App* cmd, bool with_input) {
    if (with_input) cmd->add_option("--input", input, "graph json file");
    cmd->add_option("--out", out, "output path (default stdout)");
    cmd->add_option("--seed", seed, "rng seed")->envname("QWALK_SEED");
    cmd->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  };

  // gen
  qwalk::cli::GenSpec gen;
  auto* cgen = app.add_subcommand("gen", "generate a graph instance file");
  cgen->add_option("--kind", gen.kind, "tree|binary-tree|dag|formula");
  cgen->add_option("--vertices", gen.vertices);
  cgen->add_option("--depth", gen.depth);
  cgen->add_option("--branching", gen.branching);
  cgen->add_option("--extra-edges", gen.extra_edges);
  cgen->add_option("--leaves", gen.leaves);
  cgen->add_option("--mark", gen.marked, "vertex ids to mark");
  add_common(cgen, false);

  // estimate-size
  qwalk::cli::EstimateSpec est;
  auto* cest = app.add_subcommand("estimate-size", "run DAG size estimation");
  cest->add_option("--t0", est.t0, "edge-count upper bound (default 2T)");
  cest->add_option("--n", est.n, "depth bound (default actual depth)");
  cest->add_option("--delta", est.delta);
  cest->add_option("--eps", est.epsilon);
  cest->add_option("--trials", trials);
  cest->add_option("--parallel", parallel);
  add_common(cest, true);

  // backtrack
  qwalk::cli::BacktrackSpec bt;
  auto* cbt = app.add_subcommand("backtrack", "search a marked vertex in a tree");
  cbt->add_option("--t1", bt.t1, "vertex-count upper bound (default V)");
  cbt->add_option("--n", bt.n, "depth bound (default actual depth)");
  cbt->add_option("--eps", bt.epsilon);
  cbt->add_option("--trials", trials);
  cbt->add_option("--parallel", parallel);
  add_common(cbt, true);

  // evaluate
  qwalk::cli::EvaluateSpec ev;
  auto* cev = app.add_subcommand("evaluate", "evaluate an AND-OR formula");
  cev->add_option("--c", ev.c, "recursion levels");
  cev->add_option("--eps", ev.epsilon);
  cev->add_option("--m", ev.size_bound, "formula size bound (default: vertex count)");
  cev->add_option("--trials", trials);
  cev->add_option("--parallel", parallel);
  cev->add_flag("--exact-evaluator", ev.exact_evaluator);
  cev->add_flag("--exact-sizes", ev.exact_sizes);
  cev->add_option("--kappa", ev.kappa);
  add_common(cev, true);

  // verify
  std::string suite = "szegedy";
  qwalk::SuiteOptions vopt;
  std::vector<double> alpha_scales;
  auto* cver = app.add_subcommand("verify", "check an analytical statement numerically");
  cver->add_option("--suite", suite, "one of: szegedy one-eigenspace k-bounds k-identity corners "
                                     "tree-formula dag-bound harmonic overlap resistance rayleigh");
  cver->add_option("--family", vopt.family, "tree|dag|path|tree+chord");
  cver->add_option("--count", vopt.count);
  cver->add_option("--min-size", vopt.min_size);
  cver->add_option("--max-size", vopt.max_size);
  cver->add_option("--alpha-scales", alpha_scales, "multiples of sqrt(2n)");
  add_common(cver, false);

  // bench
  qwalk::cli::BenchSpec bench;
  auto* cb = app.add_subcommand("bench", "measure Algorithm-1 cost scaling");
  cb->add_option("--axis", bench.axis, "t0|delta|n");
  cb->add_option("--grid", bench.grid, "grid points (defaults per axis)");
  cb->add_option("--t0", bench.t0);
  cb->add_option("--n", bench.n);
  cb->add_option("--delta", bench.delta);
  cb->add_option("--eps", bench.epsilon);
  add_common(cb, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cgen->parsed()) {
      gen.seed = seed;
      write_output(out, qwalk::cli::cmd_gen(gen).dump(2));
    } else if (cest->parsed()) {
      est.seed = seed;
      est.trials = trials;
      est.parallel = parallel;
      write_output(out, qwalk::cli::cmd_estimate_size(load_input(input), est).dump(2));
    } else if (cbt->parsed()) {
      bt.seed = seed;
      bt.trials = trials;
      bt.parallel = parallel;
      write_output(out, qwalk::cli::cmd_backtrack(load_input(input), bt).dump(2));
    } else if (cev->parsed()) {
      ev.seed = seed;
      ev.trials = trials;
      ev.parallel = parallel;
      write_output(out, qwalk::cli::cmd_evaluate(load_input(input), ev).dump(2));
    } else if (cver->parsed()) {
      vopt.seed = seed;
      if (!alpha_scales.empty()) vopt.alpha_scales = alpha_scales;
      auto rep = qwalk::cli::cmd_verify(suite, vopt);
      write_output(out, rep.dump(2));
      if (!rep["pass"].get<bool>()) return 3;
    } else if (cb->parsed()) {
      bench.seed = seed;
      write_output(out, qwalk::cli::cmd_bench_csv(bench));
    }
  } catch (const qwalk::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const qwalk::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const qwalk::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
