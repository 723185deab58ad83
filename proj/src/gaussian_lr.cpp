#include "lagrelax/gaussian_lr.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "lagrelax/error.hpp"

namespace lagrelax {

GaussianSolver::GaussianSolver(GaussianInfoModel model, GaussianAugmented aug)
    : model_(std::move(model)), aug_(std::move(aug)) {
  if (aug_.original_vertex_count != model_.vertex_count())
    throw InvalidInput("augmented model does not match the Gaussian model");
  check_factorizations();
}

double GaussianSolver::dual_value() const {
  double g = 0.0;
  for (const auto& c : aug_.components) g += gaussian_log_partition(c.information, c.potential);
  return g;
}

MarginalInfo GaussianSolver::replica_info(std::size_t cls, std::size_t replica) const {
  const auto& rep = aug_.classes.at(cls).replicas.at(replica);
  const auto& blk = aug_.components[rep.component];
  return gaussian_marginal_info(blk.information, blk.potential, rep.local);
}

double GaussianSolver::update_class(std::size_t cls) {
  const auto& c = aug_.classes.at(cls);
  double residual = 0.0, info_residual = 0.0;
  for (const auto& group : c.groups) {
    std::vector<MarginalInfo> hat;
    for (std::size_t r : group) hat.push_back(replica_info(cls, r));
    Eigen::MatrixXd jbar = Eigen::MatrixXd::Zero(hat[0].information.rows(), hat[0].information.cols());
    Eigen::VectorXd hbar = Eigen::VectorXd::Zero(hat[0].potential.size());
    for (const auto& m : hat) {
      jbar += m.information;
      hbar += m.potential;
    }
    jbar /= static_cast<double>(group.size());
    hbar /= static_cast<double>(group.size());
    for (std::size_t k = 0; k < group.size(); ++k) {
      const Eigen::MatrixXd dj = jbar - hat[k].information;
      const Eigen::VectorXd dh = hbar - hat[k].potential;
      info_residual = std::max(info_residual, dj.cwiseAbs().maxCoeff());
      residual = std::max({residual, dj.cwiseAbs().maxCoeff(), dh.cwiseAbs().maxCoeff()});
      const auto& rep = c.replicas[group[k]];
      auto& blk = aug_.components[rep.component];
      blk.information(rep.local, rep.local) += dj;
      blk.potential(rep.local) += dh;
    }
  }
  last_info_residual_ = std::max(last_info_residual_, info_residual);
  return residual;
}

double GaussianSolver::sweep(std::optional<std::size_t> scale) {
  last_info_residual_ = 0.0;
  double residual = 0.0;
  for (std::size_t k = 0; k < aug_.classes.size(); ++k)
    if (!scale || aug_.classes[k].scale == *scale) residual = std::max(residual, update_class(k));
  return residual;
}

Eigen::VectorXd GaussianSolver::replica_means() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(aug_.augmented_vertex_count()));
  for (const auto& c : aug_.components) {
    if (c.nodes.empty()) continue;
    const Eigen::VectorXd xc = SpdFactor(c.information).solve(c.potential);
    for (std::size_t a = 0; a < c.nodes.size(); ++a) x(static_cast<Eigen::Index>(c.nodes[a])) = xc(static_cast<Eigen::Index>(a));
  }
  return x;
}

Eigen::VectorXd GaussianSolver::means() const {
  const Eigen::VectorXd xa = replica_means();
  Eigen::VectorXd x(static_cast<Eigen::Index>(aug_.original_vertex_count));
  for (std::size_t v = 0; v < aug_.original_vertex_count; ++v) {
    double s = 0.0;
    for (std::size_t r : aug_.node_replicas[v]) s += xa(static_cast<Eigen::Index>(r));
    x(static_cast<Eigen::Index>(v)) = s / static_cast<double>(aug_.node_replicas[v].size());
  }
  return x;
}

double GaussianSolver::mean_disagreement() const {
  const Eigen::VectorXd xa = replica_means();
  double worst = 0.0;
  for (const auto& reps : aug_.node_replicas) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t r : reps) {
      lo = std::min(lo, xa(static_cast<Eigen::Index>(r)));
      hi = std::max(hi, xa(static_cast<Eigen::Index>(r)));
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

void GaussianSolver::check_factorizations() const {
  for (std::size_t k = 0; k < aug_.components.size(); ++k) {
    if (aug_.components[k].nodes.empty()) continue;
    try {
      SpdFactor f(aug_.components[k].information);
    } catch (const NotPositiveDefinite&) {
      throw NotPositiveDefinite("component " + std::to_string(k) + " lost positive definiteness");
    }
  }
}

std::vector<ClassBound> GaussianSolver::class_bounds() const {
  std::vector<ClassBound> out;
  for (std::size_t k = 0; k < aug_.classes.size(); ++k) {
    const auto& c = aug_.classes[k];
    if (c.scale != 0) continue;
    const std::size_t r = c.replicas.size();
    Eigen::MatrixXd jbar = replica_info(k, 0).information;
    for (std::size_t i = 1; i < r; ++i) jbar += replica_info(k, i).information;
    jbar /= static_cast<double>(r);
    ClassBound b{c.vertices, jbar.inverse(), std::nullopt};
    std::set<std::size_t> comps;
    for (const auto& rep : c.replicas) comps.insert(rep.component);
    if (comps.size() == r) b.tighter = (static_cast<double>(r) * jbar).inverse();
    out.push_back(std::move(b));
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GaussianSolver::variance_bounds() const {
  const auto n = static_cast<Eigen::Index>(aug_.original_vertex_count);
  Eigen::VectorXd bound = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd tighter = bound;
  for (const auto& b : class_bounds())
    for (std::size_t i = 0; i < b.vertices.size(); ++i) {
      const auto v = static_cast<Eigen::Index>(b.vertices[i]);
      const auto ii = static_cast<Eigen::Index>(i);
      if (!std::isnan(bound(v)) || aug_.node_replicas[static_cast<std::size_t>(v)].size() < 2) continue;
      bound(v) = b.bound(ii, ii);
      if (b.tighter) tighter(v) = (*b.tighter)(ii, ii);
    }
  // Unreplicated nodes: the marginal variance of their single replica.
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!std::isnan(bound(v))) continue;
    const std::size_t r = aug_.node_replicas[static_cast<std::size_t>(v)].front();
    const auto& blk = aug_.components[aug_.node_component[r]];
    const Eigen::Index local[] = {aug_.node_local[r]};
    bound(v) = 1.0 / gaussian_marginal_info(blk.information, blk.potential, local).information(0, 0);
  }
  return {bound, tighter};
}

GaussianSolveReport GaussianSolver::run(const GaussianSolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GaussianSolveReport report;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    GaussianTraceEntry e;
    e.sweep = it;
    e.max_residual = sweep();
    e.var_residual = last_info_residual_;
    try {
      check_factorizations();
    } catch (const NotPositiveDefinite&) {
      e.factorizations_ok = false;
      report.all_factorizations_ok = false;
      report.trace.push_back(e);
      throw;
    }
    e.dual = dual_value();
    e.mean_err_proxy = mean_disagreement();
    e.consistency = aug_.consistency_residual(model_);
    e.mean_error = options.reference ? (means() - *options.reference).cwiseAbs().maxCoeff()
                                     : std::numeric_limits<double>::quiet_NaN();
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.max_consistency_residual = std::max(report.max_consistency_residual, e.consistency);
    report.trace.push_back(e);
    report.iterations = it;
    if (e.max_residual < options.tol) {
      report.converged = true;
      break;
    }
  }
  report.means = means();
  report.dual = dual_value();
  auto [bound, tighter] = variance_bounds();
  report.variance_bound = std::move(bound);
  report.tighter_variance_bound = std::move(tighter);
  report.class_bounds = class_bounds();
  return report;
}

GaussianAugmented prepare_gaussian(const GaussianInfoModel& model, Strategy strategy, const DecompositionParams& params) {
  if (strategy == Strategy::TreePlusLeaves)
    throw InvalidInput("tree-plus-leaves places replicas in one component; not usable for Gaussian models");
  return split_potentials(model, build_decomposition(model.graph(), strategy, params));
}

GaussianSolveReport solve_gaussian(const GaussianInfoModel& model, Strategy strategy,
                                   const GaussianSolveOptions& options) {
  const auto diag = validate_model(model);
  if (!diag.ok()) throw InvalidInput("invalid Gaussian model: " + diag.issues.front());
  GaussianSolver solver(model, prepare_gaussian(model, strategy, options.decomposition));
  auto report = solver.run(options);
  report.strategy = to_string(strategy);
  return report;
}

}  // namespace lagrelax
