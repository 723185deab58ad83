#include "lagrelax/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "lagrelax/baselines.hpp"
#include "lagrelax/discrete_lr.hpp"
#include "lagrelax/error.hpp"
#include "lagrelax/gaussian_lr.hpp"
#include "lagrelax/generators.hpp"
#include "lagrelax/multiscale.hpp"
#include "lagrelax/oracle.hpp"
#include "lagrelax/report.hpp"

namespace lagrelax {

namespace {

template <typename T>
T read_field(const YAML::Node& cfg, const std::string& field) {
  const YAML::Node node = cfg[field];
  if (!node) throw ParseError("missing config field '" + field + "'");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("malformed config field '" + field + "'");
  }
}

template <typename T>
T read_field(const YAML::Node& cfg, const std::string& field, T fallback) {
  return cfg[field] ? read_field<T>(cfg, field) : fallback;
}

struct Bundle {
  std::filesystem::path dir;
  bool timing = false;
  ExperimentResult result;

  void write(const std::string& name, const std::string& text) {
    write_text_file((dir / name).string(), text);
    result.files.push_back(name);
  }
  template <typename Entry>
  std::string trace(std::vector<Entry> entries) const {
    if constexpr (requires(Entry e) { e.wall_ms; })
      if (!timing)
        for (auto& e : entries) e.wall_ms = 0.0;
    std::ostringstream out;
    write_trace_csv(out, std::span<const Entry>(entries));
    return out.str();
  }
};

TemperatureSchedule read_schedule(const YAML::Node& cfg) {
  TemperatureSchedule s;
  s.initial = read_field<double>(cfg, "tau0", s.initial);
  s.decay = read_field<double>(cfg, "decay", s.decay);
  s.minimum = read_field<double>(cfg, "tau_min", s.minimum);
  s.inner_tol = read_field<double>(cfg, "tol", s.inner_tol);
  return s;
}

void discrete_grid(const YAML::Node& cfg, std::uint64_t seed, Bundle& b) {
  const auto m = read_field<std::size_t>(cfg, "m");
  const auto sigmas = read_field<std::vector<double>>(cfg, "sigmas");
  std::vector<std::string> modes(sigmas.size(), read_field<std::string>(cfg, "mode", "frustrated"));
  if (cfg["modes"]) {
    modes = read_field<std::vector<std::string>>(cfg, "modes");
    if (modes.size() != sigmas.size()) throw ParseError("config field 'modes' must match 'sigmas' in length");
  }
  const auto instances = read_field<std::size_t>(cfg, "instances", 1);
  DiscreteSolveOptions options;
  options.schedule = read_schedule(cfg);
  const Strategy strategy = parse_strategy(read_field<std::string>(cfg, "strategy", "spanning-trees"));

  std::ostringstream summary, traces, fig;
  summary << "sigma,f_star,dual,gap,tied_nodes\n";
  traces << "run,sweep,tau,g_smooth,g,best_primal,max_residual,wall_ms\n";
  fig << "run,sigma,node,row,col,resummed_diff,tied,estimate,exact\n";
  nlohmann::json runs = nlohmann::json::array();
  std::size_t run = 0;
  for (std::size_t k = 0; k < sigmas.size(); ++k)
    for (std::size_t i = 0; i < instances; ++i, ++run) {
      const std::uint64_t s = seed + run;
      const auto model = generate_ising_grid(m, sigmas[k], parse_coupling(modes[k]), s);
      const auto report = solve_discrete(model, strategy, options);
      const auto exact = exact_grid_map(model);
      const double gap = report.final_dual - exact.value;
      summary << format_number(sigmas[k]) << ',' << format_number(exact.value) << ','
              << format_number(report.final_dual) << ',' << format_number(gap) << ',' << report.tie_nodes.size()
              << '\n';
      std::istringstream t(b.trace(report.trace));
      std::string line;
      std::getline(t, line);
      while (std::getline(t, line)) traces << run << ',' << line << '\n';

      std::vector<bool> tied(m * m, false);
      for (std::size_t v : report.tie_nodes) tied[v] = true;
      std::size_t untied = 0, agree = 0;
      for (std::size_t v = 0; v < m * m; ++v) {
        const auto& r = report.resummed[v];
        fig << run << ',' << format_number(sigmas[k]) << ',' << v << ',' << v / m << ',' << v % m << ','
            << format_number(r[0] - r[1]) << ',' << (tied[v] ? 1 : 0) << ',' << report.estimate[v] << ','
            << exact.maximizer[v] << '\n';
        if (!tied[v]) {
          ++untied;
          if (report.estimate[v] == exact.maximizer[v]) ++agree;
        }
      }
      nlohmann::json j = to_json(report);
      j["sigma"] = sigmas[k];
      j["mode"] = modes[k];
      j["seed"] = s;
      j["f_star"] = exact.value;
      j["untied_agreement"] = untied ? static_cast<double>(agree) / static_cast<double>(untied) : 1.0;
      runs.push_back(std::move(j));
    }
  b.result.report["runs"] = runs;
  b.write("summary.csv", summary.str());
  b.write("trace.csv", traces.str());
  b.write("max_marginals.csv", fig.str());
}

void gaussian_grid(const YAML::Node& cfg, std::uint64_t seed, bool plate, Bundle& b) {
  const auto m = read_field<std::size_t>(cfg, "m");
  const auto eps = read_field<double>(cfg, "eps", 0.01);
  const auto model = plate ? generate_thin_plate(m, eps, seed) : generate_thin_membrane(m, eps, seed);
  GaussianSolveOptions options;
  options.tol = read_field<double>(cfg, "tol", options.tol);
  options.max_iters = read_field<std::size_t>(cfg, "max_iters", options.max_iters);
  options.decomposition.strip_width = read_field<std::size_t>(cfg, "K", options.decomposition.strip_width);
  options.decomposition.strip_overlap = read_field<std::size_t>(cfg, "L", options.decomposition.strip_overlap);
  options.decomposition.treewidth_bound =
      read_field<std::size_t>(cfg, "treewidth_bound", options.decomposition.treewidth_bound);
  const Strategy strategy = parse_strategy(read_field<std::string>(cfg, "strategy", "thin-strips"));
  const auto exact = exact_gaussian_solve(model);
  options.reference = exact.mean;
  const auto report = solve_gaussian(model, strategy, options);
  const auto lbp = baseline_gaussian_lbp(model, read_field<std::size_t>(cfg, "lbp_iters", 500));

  std::ostringstream fig;
  fig << "node,row,col,exact_mean,lr_mean,exact_variance,lr_variance_bound,lbp_variance\n";
  for (std::size_t v = 0; v < m * m; ++v) {
    const auto i = static_cast<Eigen::Index>(v);
    fig << v << ',' << v / m << ',' << v % m << ',' << format_number(exact.mean(i)) << ','
        << format_number(report.means(i)) << ',' << format_number(exact.variance(i)) << ','
        << format_number(report.variance_bound(i)) << ',' << format_number(lbp.variances(i)) << '\n';
  }
  auto& r = b.result.report;
  r["lr"] = to_json(report);
  r["lbp"] = to_json(lbp);
  r["exact_value"] = exact.value;
  r["exact_means"] = to_json(exact.mean);
  r["exact_variances"] = to_json(exact.variance);
  r["mean_error"] = (report.means - exact.mean).cwiseAbs().maxCoeff();
  r["dual_relative_error"] = std::abs(report.dual - exact.value) / std::max(1.0, std::abs(exact.value));
  b.write("trace.csv", b.trace(report.trace));
  b.write(plate ? "variances_plate.csv" : "variances_membrane.csv", fig.str());
}

std::size_t default_levels(std::size_t n, std::size_t block) {
  std::size_t levels = 1;
  while (n % block == 0 && n / block >= 2 * block) {
    n /= block;
    ++levels;
  }
  return levels;
}

void multiscale_1d(const YAML::Node& cfg, std::uint64_t seed, Bundle& b) {
  const auto n = read_field<std::size_t>(cfg, "n");
  const auto eps = read_field<double>(cfg, "eps", 1e-4);
  const auto block = read_field<std::size_t>(cfg, "block", 4);
  const auto levels = read_field<std::size_t>(cfg, "levels", default_levels(n, block));
  const auto target = read_field<double>(cfg, "target", 1e-6);
  const auto max_iters = read_field<std::size_t>(cfg, "max_iters", 5000);

  const auto model = generate_membrane_chain(n, eps, seed);
  const auto exact = exact_gaussian_solve(model);
  MultiscaleOptions options;
  options.tol = 0.0;
  options.max_iters = max_iters;
  options.reference = exact.mean;
  options.target_relative_error = target;
  const auto multi = solve_multiscale(model, levels, block, options);
  const auto single = solve_multiscale(model, 1, block, options);
  const auto bgs = baseline_block_gauss_seidel(model, chain_blocks(n, 2 * block, block), 0.0, max_iters, exact.mean,
                                               target);

  std::vector<double> bgs_err;
  for (const auto& e : bgs.trace) bgs_err.push_back(e.relative_error);
  const std::size_t rows = std::max({multi.relative_error.size(), single.relative_error.size(), bgs_err.size()});
  auto cell = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? format_number(v[i]) : ""; };
  std::ostringstream fig;
  fig << "iteration,multiscale,single_scale,block_gauss_seidel\n";
  for (std::size_t i = 0; i < rows; ++i)
    fig << i + 1 << ',' << cell(multi.relative_error, i) << ',' << cell(single.relative_error, i) << ','
        << cell(bgs_err, i) << '\n';

  auto to = [&](const std::vector<double>& err) -> nlohmann::json {
    const auto it = iterations_to(err, target);
    return it ? nlohmann::json(*it) : nlohmann::json(nullptr);
  };
  auto& r = b.result.report;
  r["levels"] = levels;
  r["block"] = block;
  r["target_relative_error"] = target;
  r["multiscale"] = to_json(multi);
  r["single_scale"] = to_json(single);
  r["block_gauss_seidel"] = to_json(bgs);
  r["iterations_to_target"] = {{"multiscale", to(multi.relative_error)},
                               {"single_scale", to(single.relative_error)},
                               {"block_gauss_seidel", to(bgs_err)}};
  b.write("trace.csv", b.trace(multi.trace));
  b.write("trace_single_scale.csv", b.trace(single.trace));
  b.write("trace_block_gauss_seidel.csv", b.trace(bgs.trace));
  b.write("convergence.csv", fig.str());
}

}  // namespace

ExperimentResult run_experiment(const std::string& config_path, const std::string& outdir) {
  YAML::Node cfg;
  try {
    cfg = YAML::LoadFile(config_path);
  } catch (const YAML::BadFile&) {
    throw ParseError("cannot read config " + config_path);
  } catch (const YAML::Exception& e) {
    throw ParseError("config " + config_path + ": " + e.what());
  }
  if (!cfg.IsMap()) throw ParseError("config " + config_path + " is not a key-value map");

  Bundle b;
  b.result.name = read_field<std::string>(cfg, "experiment");
  const auto seed = read_field<std::uint64_t>(cfg, "seed");
  b.timing = read_field<bool>(cfg, "timing", false);
  b.result.outdir = outdir.empty() ? read_field<std::string>(cfg, "outdir") : outdir;
  b.dir = b.result.outdir;
  b.result.report["experiment"] = b.result.name;
  b.result.report["seed"] = seed;

  const std::string& name = b.result.name;
  if (name != "discrete-grid" && name != "gaussian-membrane" && name != "gaussian-plate" && name != "multiscale-1d")
    throw InvalidInput("unknown experiment '" + name + "'");
  std::filesystem::create_directories(b.dir);
  if (name == "discrete-grid")
    discrete_grid(cfg, seed, b);
  else if (name == "gaussian-membrane")
    gaussian_grid(cfg, seed, false, b);
  else if (name == "gaussian-plate")
    gaussian_grid(cfg, seed, true, b);
  else
    multiscale_1d(cfg, seed, b);
  b.write("report.json", b.result.report.dump(2) + "\n");
  return b.result;
}

}  // namespace lagrelax
