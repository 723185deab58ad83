#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "lagrelax/discrete_lr.hpp"
#include "lagrelax/error.hpp"
#include "lagrelax/experiment.hpp"
#include "lagrelax/gaussian_lr.hpp"
#include "lagrelax/generators.hpp"
#include "lagrelax/model_io.hpp"
#include "lagrelax/multiscale.hpp"
#include "lagrelax/oracle.hpp"
#include "lagrelax/report.hpp"

using namespace lagrelax;

namespace {

struct DecompositionFlags {
  std::string strategy;
  DecompositionParams params;

  void attach(CLI::App* app, const std::string& fallback) {
    strategy = fallback;
    app->add_option("--strategy", strategy, "disjoint-edges, spanning-trees, tree-plus-leaves, loops, induced-blocks, thin-strips")
        ->capture_default_str();
    app->add_option("--K", params.strip_width, "strip width")->capture_default_str();
    app->add_option("--L", params.strip_overlap, "strip overlap")->capture_default_str();
    app->add_option("--block", params.block, "block side for induced-blocks")->capture_default_str();
    app->add_option("--treewidth-bound", params.treewidth_bound)->capture_default_str();
    app->add_option("--max-trees", params.max_trees, "spanning forests for non-grid graphs (0: as needed)");
    app->add_flag("--overlap-edges", params.overlap_edges, "add zero edges across shared block boundaries");
  }
};

template <typename M>
M load(const std::string& path, const char* kind) {
  auto any = read_model_file(path);
  if (auto* m = std::get_if<M>(&any)) return std::move(*m);
  throw InvalidInput(path + " is not a " + kind + " model");
}

void write_outputs(const std::string& out, const nlohmann::json& report, const std::string& trace_path,
                   const std::string& trace) {
  if (out.empty())
    std::cout << report.dump(2) << '\n';
  else
    write_text_file(out, report.dump(2) + "\n");
  if (!trace_path.empty()) write_text_file(trace_path, trace);
}

template <typename Entry>
std::string csv(const std::vector<Entry>& trace) {
  std::ostringstream s;
  write_trace_csv(s, std::span<const Entry>(trace));
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAP estimation by Lagrangian relaxation"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "discrete MAP by annealed dual coordinate descent");
  std::string model_path, out, trace, dump_jt;
  DecompositionFlags dflags;
  DiscreteSolveOptions dopt;
  std::uint64_t seed = 0;
  solve->add_option("--model", model_path)->required();
  dflags.attach(solve, "spanning-trees");
  solve->add_option("--tau0", dopt.schedule.initial)->capture_default_str();
  solve->add_option("--decay", dopt.schedule.decay)->capture_default_str();
  solve->add_option("--tau-min", dopt.schedule.minimum)->capture_default_str();
  solve->add_option("--tol", dopt.schedule.inner_tol, "inner tolerance per temperature")->capture_default_str();
  solve->add_option("--max-sweeps", dopt.schedule.max_sweeps_per_temperature)->capture_default_str();
  solve->add_option("--gap-tol", dopt.gap_tol)->capture_default_str();
  solve->add_option("--tie-tol", dopt.tie_tol)->capture_default_str();
  solve->add_option("--seed", seed, "recorded in the report; the solver itself is deterministic");
  solve->add_option("--out", out, "report.json path (stdout if omitted)");
  solve->add_option("--trace", trace, "trace.csv path");
  solve->add_option("--dump-jt", dump_jt, "write every component's junction tree to this file");

  // gsolve
  auto* gsolve = app.add_subcommand("gsolve", "Gaussian means and variance bounds by moment matching");
  DecompositionFlags gflags;
  GaussianSolveOptions gopt;
  gsolve->add_option("--model", model_path)->required();
  gflags.attach(gsolve, "thin-strips");
  gsolve->add_option("--tol", gopt.tol)->capture_default_str();
  gsolve->add_option("--max-iters", gopt.max_iters)->capture_default_str();
  gsolve->add_option("--out", out);
  gsolve->add_option("--trace", trace);

  // mssolve
  auto* mssolve = app.add_subcommand("mssolve", "multiscale relaxation of a 1D Gaussian chain");
  std::size_t levels = 2, block = 2;
  MultiscaleOptions mopt;
  mssolve->add_option("--model", model_path)->required();
  mssolve->add_option("--levels", levels)->capture_default_str();
  mssolve->add_option("--block", block)->capture_default_str();
  mssolve->add_option("--tol", mopt.tol)->capture_default_str();
  mssolve->add_option("--max-iters", mopt.max_iters)->capture_default_str();
  mssolve->add_option("--out", out);
  mssolve->add_option("--trace", trace);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact reference values");
  oracle->add_option("--model", model_path)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "run an experiment from a YAML config");
  std::string config, outdir;
  bench->add_option("--config", config)->required();
  bench->add_option("--outdir", outdir, "overrides the config's outdir");

  // generate
  auto* generate = app.add_subcommand("generate", "write a generated model file");
  std::string kind, mode = "attractive";
  std::size_t size = 10;
  double sigma = 1.0, eps = 0.01;
  generate->add_option("--kind", kind, "ising, membrane, plate or chain")->required();
  generate->add_option("--size", size, "grid side (chain length for chain)")->capture_default_str();
  generate->add_option("--sigma", sigma)->capture_default_str();
  generate->add_option("--mode", mode, "attractive or frustrated")->capture_default_str();
  generate->add_option("--eps", eps)->capture_default_str();
  generate->add_option("--seed", seed)->capture_default_str();
  generate->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const auto model = load<DiscreteFactorModel>(model_path, "discrete");
      const Strategy strategy = parse_strategy(dflags.strategy);
      dopt.decomposition = dflags.params;
      if (!dump_jt.empty()) {
        DiscreteSolver solver(prepare_discrete(model, strategy, dflags.params), dopt);
        std::ofstream f(dump_jt);
        if (!f) throw InvalidInput("cannot write " + dump_jt);
        for (std::size_t c = 0; c < solver.augmented().map().components.size(); ++c) {
          f << "component " << c << '\n';
          solver.engine(c).dump(f);
        }
      }
      const auto report = solve_discrete(model, strategy, dopt);
      auto j = to_json(report);
      j["seed"] = seed;
      write_outputs(out, j, trace, csv(report.trace));
    } else if (gsolve->parsed()) {
      const auto model = load<GaussianInfoModel>(model_path, "Gaussian");
      gopt.decomposition = gflags.params;
      const auto report = solve_gaussian(model, parse_strategy(gflags.strategy), gopt);
      write_outputs(out, to_json(report), trace, csv(report.trace));
    } else if (mssolve->parsed()) {
      const auto model = load<GaussianInfoModel>(model_path, "Gaussian");
      const auto report = solve_multiscale(model, levels, block, mopt);
      write_outputs(out, to_json(report), trace, csv(report.trace));
    } else if (oracle->parsed()) {
      const auto any = read_model_file(model_path);
      nlohmann::json j;
      if (const auto* d = std::get_if<DiscreteFactorModel>(&any)) {
        if (d->vertex_count() <= kBruteForceCap) {
          const auto opt = brute_force_map(*d);
          j["method"] = "brute-force";
          j["f_star"] = opt.value;
          j["maximizers"] = opt.maximizers;
        } else {
          const auto opt = exact_grid_map(*d);
          j["method"] = "grid-dp";
          j["f_star"] = opt.value;
          j["maximizer"] = opt.maximizer;
        }
      } else {
        const auto opt = exact_gaussian_solve(std::get<GaussianInfoModel>(any));
        j["method"] = "factorization";
        j["value"] = opt.value;
        j["mean"] = to_json(opt.mean);
        j["variance"] = to_json(opt.variance);
      }
      std::cout << j.dump(2) << '\n';
    } else if (bench->parsed()) {
      const auto result = run_experiment(config, outdir);
      for (const auto& f : result.files) std::cout << result.outdir << '/' << f << '\n';
    } else if (generate->parsed()) {
      if (kind == "ising")
        write_model_file(out, generate_ising_grid(size, sigma, parse_coupling(mode), seed));
      else if (kind == "membrane")
        write_model_file(out, generate_thin_membrane(size, eps, seed));
      else if (kind == "plate")
        write_model_file(out, generate_thin_plate(size, eps, seed));
      else if (kind == "chain")
        write_model_file(out, generate_membrane_chain(size, eps, seed));
      else
        throw InvalidInput("unknown model kind '" + kind + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
