#include "lagrelax/discrete_lr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "lagrelax/error.hpp"
#include "lagrelax/log_table.hpp"

namespace lagrelax {

void TemperatureSchedule::validate() const {
  if (!(minimum > 0.0)) throw InvalidInput("tau_min must be positive");
  if (!(initial > minimum)) throw InvalidInput("tau0 must exceed tau_min");
  if (!(decay > 0.0 && decay < 1.0)) throw InvalidInput("decay must lie in (0, 1)");
  if (!(inner_tol > 0.0)) throw InvalidInput("inner tolerance must be positive");
  if (max_sweeps_per_temperature == 0) throw InvalidInput("max_sweeps_per_tau must be positive");
}

std::vector<double> TemperatureSchedule::temperatures() const {
  validate();
  std::vector<double> out;
  for (double t = initial; t >= minimum; t *= decay) out.push_back(t);
  return out;
}

DiscreteSolver::DiscreteSolver(DiscreteAugmented aug, DiscreteSolveOptions options)
    : aug_(std::move(aug)), options_(std::move(options)) {
  const auto& map = aug_.map();
  node_local_.resize(map.augmented_vertex_count());
  for (const auto& c : map.components)
    for (std::size_t i = 0; i < c.nodes.size(); ++i) node_local_[c.nodes[i]] = i;

  factor_local_.resize(aug_.factor_count());
  engines_.reserve(map.components.size());
  for (std::size_t c = 0; c < map.components.size(); ++c) {
    const auto& factors = aug_.component_factors()[c];
    std::vector<std::vector<std::size_t>> scopes;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      factor_local_[factors[k]] = k;
      std::vector<std::size_t> s;
      for (std::size_t v : aug_.factor(factors[k]).nodes) s.push_back(node_local_[v]);
      scopes.push_back(std::move(s));
    }
    engines_.emplace_back(map.components[c].nodes.size(), std::move(scopes));
    engines_.back().set_tau_floor(options_.tau_floor);
    for (std::size_t k = 0; k < factors.size(); ++k) engines_.back().set_factor(k, aug_.factor(factors[k]).table);
  }
}

void DiscreteSolver::set_table(std::size_t f, std::span<const double> table) {
  auto& t = aug_.table(f);
  if (table.size() != t.size()) throw InvalidInput("replica table size mismatch");
  std::copy(table.begin(), table.end(), t.begin());
  engines_[aug_.factor(f).component].set_factor(factor_local_[f], t);
}

double DiscreteSolver::dual_value() {
  double g = aug_.base().constant;
  for (auto& e : engines_) g += e.log_partition(0.0);
  return g;
}

double DiscreteSolver::smooth_dual_value(double tau) {
  if (!(tau > 0.0)) throw InvalidInput("smooth dual needs tau > 0");
  double g = aug_.base().constant;
  for (auto& e : engines_) g += e.log_partition(tau);
  return g;
}

double DiscreteSolver::sandwich_width(double tau) const {
  return tau * static_cast<double>(aug_.map().augmented_vertex_count()) * std::numbers::ln2;
}

std::vector<double> DiscreteSolver::replica_marginal(std::size_t f, double tau) {
  return engines_[aug_.factor(f).component].marginal(factor_local_[f], tau);
}

std::vector<double> DiscreteSolver::dual_gradient(double tau, std::size_t cls) {
  if (!(tau > 0.0)) throw InvalidInput("dual gradient needs tau > 0");
  const auto& factors = aug_.classes().at(cls).factors;
  auto probabilities = [&](std::size_t f) {
    auto t = replica_marginal(f, tau);
    for (double& x : t) x = std::exp(x / tau);
    return t;
  };
  const auto p0 = probabilities(factors[0]);
  std::vector<double> grad;
  for (std::size_t i = 1; i < factors.size(); ++i) {
    const auto pi = probabilities(factors[i]);
    for (std::size_t x = 0; x < p0.size(); ++x) grad.push_back(p0[x] - pi[x]);
  }
  return grad;
}

double DiscreteSolver::update_class(std::size_t cls, double tau) {
  const auto& c = aug_.classes().at(cls);
  double residual = 0.0;
  for (const auto& group : c.groups) {
    std::vector<std::vector<double>> hat;
    for (std::size_t pos : group) hat.push_back(replica_marginal(c.factors[pos], tau));
    std::vector<double> bar(hat[0].size(), 0.0);
    for (const auto& h : hat)
      for (std::size_t x = 0; x < bar.size(); ++x) bar[x] += h[x];
    for (double& b : bar) b /= static_cast<double>(group.size());
    for (std::size_t k = 0; k < group.size(); ++k) {
      const std::size_t f = c.factors[group[k]];
      auto& t = aug_.table(f);
      for (std::size_t x = 0; x < t.size(); ++x) {
        residual = std::max(residual, std::abs(hat[k][x] - bar[x]));
        t[x] += bar[x] - hat[k][x];
      }
      engines_[aug_.factor(f).component].set_factor(factor_local_[f], t);
    }
  }
  return residual;
}

double DiscreteSolver::sweep_log_marginal_averaging(double tau) {
  if (!(tau > 0.0)) throw InvalidInput("log-marginal averaging needs tau > 0");
  double residual = 0.0;
  for (std::size_t c = 0; c < aug_.classes().size(); ++c)
    if (aug_.classes()[c].factors.size() > 1) residual = std::max(residual, update_class(c, tau));
  return residual;
}

double DiscreteSolver::sweep_max_marginal_averaging() {
  double residual = 0.0;
  for (std::size_t c = 0; c < aug_.classes().size(); ++c)
    if (aug_.classes()[c].factors.size() > 1) residual = std::max(residual, update_class(c, 0.0));
  return residual;
}

std::vector<double> DiscreteSolver::global_max_marginal(std::size_t f) {
  auto t = replica_marginal(f, 0.0);
  const double g = dual_value();
  for (double& x : t) x += g;
  return t;
}

void DiscreteSolver::consider(const Assignment& x, double value) {
  if (value > best_primal_) {
    best_primal_ = value;
    best_assignment_ = x;
  }
}

Estimate DiscreteSolver::extract_estimate() {
  const auto& map = aug_.map();
  const std::size_t n = map.original_vertex_count;
  Estimate est;
  est.resummed.assign(n, {0.0, 0.0});
  for (std::size_t r = 0; r < map.augmented_vertex_count(); ++r) {
    const auto t = engines_[map.node_component[r]].variable_marginal(node_local_[r], 0.0);
    auto& acc = est.resummed[map.node_origin[r]];
    acc[0] += t[0];
    acc[1] += t[1];
  }
  est.assignment.resize(n);
  for (Vertex v = 0; v < n; ++v) {
    const auto& m = est.resummed[v];
    est.assignment[v] = m[1] > m[0] ? -1 : 1;
    if (std::abs(m[0] - m[1]) < options_.tie_tol) est.ties.push_back(v);
  }
  est.value = evaluate_objective(aug_.base(), est.assignment);
  consider(est.assignment, est.value);

  Assignment x_aug(map.augmented_vertex_count(), 1);
  for (std::size_t c = 0; c < map.components.size(); ++c) {
    const Assignment local = engines_[c].argmax();
    for (std::size_t i = 0; i < local.size(); ++i) x_aug[map.components[c].nodes[i]] = local[i];
  }
  auto projected = project_assignment(x_aug, map);
  if (projected.assignment) {
    est.consistent = projected.assignment;
    consider(*projected.assignment, evaluate_objective(aug_.base(), *projected.assignment));
  }
  return est;
}

std::size_t DiscreteSolver::message_count() const {
  std::size_t m = 0;
  for (const auto& e : engines_) m += e.message_count();
  return m;
}

DiscreteSolveReport DiscreteSolver::run() {
  const auto taus = options_.schedule.temperatures();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  DiscreteSolveReport report;
  report.components = aug_.map().components.size();
  report.augmented_vertices = aug_.map().augmented_vertex_count();
  std::size_t sweep = 0;
  auto record = [&](double tau, double residual) {
    extract_estimate();
    DualTraceEntry e;
    e.sweep = ++sweep;
    e.tau = tau;
    e.dual = dual_value();
    e.smooth_dual = tau > 0.0 ? smooth_dual_value(tau) : e.dual;
    e.best_primal = best_primal_;
    e.max_residual = residual;
    e.wall_ms = elapsed_ms();
    report.trace.push_back(e);
  };

  for (double tau : taus) {
    for (std::size_t s = 0; s < options_.schedule.max_sweeps_per_temperature; ++s) {
      const double r = sweep_log_marginal_averaging(tau);
      record(tau, r);
      if (r < options_.schedule.inner_tol) break;
    }
    report.stage_duals.emplace_back(tau, report.trace.back().smooth_dual);
  }
  for (std::size_t s = 0; s < options_.max_polish_sweeps; ++s) {
    const double r = sweep_max_marginal_averaging();
    record(0.0, r);
    if (r < options_.schedule.inner_tol) break;
  }

  const Estimate est = extract_estimate();
  report.final_dual = dual_value();
  report.best_primal = best_primal_;
  report.best_assignment = best_assignment_;
  report.gap = report.final_dual - best_primal_ > options_.gap_tol * (1.0 + std::abs(report.final_dual));
  report.estimate = est.assignment;
  report.tie_nodes = est.ties;
  report.resummed = est.resummed;
  report.consistent_decode = est.consistent.has_value();
  report.sweeps = sweep;
  report.messages = message_count();
  return report;
}

DiscreteAugmented prepare_discrete(const DiscreteFactorModel& model, Strategy strategy,
                                   const DecompositionParams& params) {
  DiscreteFactorModel work = model;
  if (params.overlap_edges) work = with_extra_edges(model, overlap_edge_candidates(model.graph, strategy, params));
  return split_potentials(work, add_intermediaries(build_decomposition(work.graph, strategy, params)));
}

DiscreteSolveReport solve_discrete(const DiscreteFactorModel& model, Strategy strategy,
                                   const DiscreteSolveOptions& options) {
  options.schedule.validate();
  DiscreteSolver solver(prepare_discrete(model, strategy, options.decomposition), options);
  auto report = solver.run();
  report.strategy = to_string(strategy);
  return report;
}

}  // namespace lagrelax
