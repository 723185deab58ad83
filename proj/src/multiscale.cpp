#include "lagrelax/multiscale.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "lagrelax/error.hpp"

namespace lagrelax {

namespace {

bool factors(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

struct CoarseReplica {
  std::size_t component;
  Eigen::Index local;
};

}  // namespace

MultiscaleModel build_multiscale(const GaussianInfoModel& chain, std::size_t levels, std::size_t block) {
  if (levels == 0) throw InvalidInput("multiscale needs at least one level");
  if (block < 2) throw InvalidInput("multiscale block must be at least 2");
  const std::size_t n = chain.vertex_count();
  MultiscaleModel ms;
  ms.base = chain;
  ms.block = block;
  ms.scale_sizes.push_back(n);
  for (std::size_t s = 1; s < levels; ++s) {
    const std::size_t fine = ms.scale_sizes.back();
    if (fine % block != 0 || fine / block < 2)
      throw InvalidInput("scale " + std::to_string(s - 1) + " of size " + std::to_string(fine) +
                         " cannot be coarsened by " + std::to_string(block));
    ms.scale_sizes.push_back(fine / block);
  }

  // Scale 0: windows of 2 * block chain nodes overlapping by block.
  const Hypergraph line(n, std::vector<VertexSet>(chain.graph().edges().begin(), chain.graph().edges().end()),
                        GridShape{1, n});
  DecompositionParams params;
  params.strip_width = 2 * block;
  params.strip_overlap = block;
  params.treewidth_bound = 2 * block;
  ms.aug = split_potentials(chain, build_decomposition(line, Strategy::ThinStrips, params));
  ms.component_scale.assign(ms.aug.components.size(), 0);

  std::vector<Eigen::Triplet<double>> lift;
  for (Eigen::Index k = 0; k < ms.aug.lift.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(ms.aug.lift, k); it; ++it)
      lift.emplace_back(it.row(), it.col(), it.value());

  // Coarse scales: zero blocks over the same window layout.
  std::vector<std::vector<std::vector<CoarseReplica>>> replicas(levels);
  std::vector<std::vector<std::size_t>> scale_components(levels), starts(levels);
  for (std::size_t c = 0; c < ms.aug.components.size(); ++c) scale_components[0].push_back(c);
  starts[0] = window_starts(n, 2 * block, block);
  std::size_t span = 1;
  for (std::size_t s = 1; s < levels; ++s) {
    span *= block;
    const std::size_t size = ms.scale_sizes[s];
    const std::size_t width = std::min(2 * block, size);
    replicas[s].resize(size);
    starts[s] = window_starts(size, 2 * block, block);
    for (std::size_t a : starts[s]) {
      const std::size_t comp = ms.aug.components.size();
      GaussianBlock blk;
      for (std::size_t j = a; j < a + width; ++j) {
        const std::size_t id = ms.aug.node_component.size();
        blk.nodes.push_back(id);
        ms.aug.node_component.push_back(comp);
        ms.aug.node_local.push_back(static_cast<Eigen::Index>(j - a));
        replicas[s][j].push_back({comp, static_cast<Eigen::Index>(j - a)});
        for (std::size_t v = j * span; v < (j + 1) * span; ++v)
          lift.emplace_back(static_cast<Eigen::Index>(id), static_cast<Eigen::Index>(v), 1.0 / static_cast<double>(span));
      }
      const auto w = static_cast<Eigen::Index>(width);
      blk.information = Eigen::MatrixXd::Zero(w, w);
      blk.potential = Eigen::VectorXd::Zero(w);
      ms.aug.components.push_back(std::move(blk));
      ms.component_scale.push_back(s);
      scale_components[s].push_back(comp);
    }
    // In-scale classes: runs of coarse nodes shared by the same pair of windows.
    for (std::size_t j0 = 0; j0 < size;) {
      auto same = [&](std::size_t a, std::size_t b) {
        if (replicas[s][a].size() != replicas[s][b].size()) return false;
        for (std::size_t i = 0; i < replicas[s][a].size(); ++i)
          if (replicas[s][a][i].component != replicas[s][b][i].component) return false;
        return true;
      };
      std::size_t j1 = j0 + 1;
      while (j1 < size && same(j0, j1)) ++j1;
      if (replicas[s][j0].size() >= 2) {
        AgreementClass cls;
        cls.scale = s;
        for (std::size_t j = j0; j < j1; ++j) cls.vertices.push_back(j);
        for (std::size_t i = 0; i < replicas[s][j0].size(); ++i) {
          ClassReplica rep{replicas[s][j0][i].component, {}};
          for (std::size_t j = j0; j < j1; ++j) rep.local.push_back(replicas[s][j][i].local);
          cls.replicas.push_back(std::move(rep));
        }
        cls.groups = {std::vector<std::size_t>(cls.replicas.size())};
        for (std::size_t i = 0; i < cls.replicas.size(); ++i) cls.groups[0][i] = i;
        ms.aug.classes.push_back(std::move(cls));
      }
      j0 = j1;
    }
  }
  ms.aug.lift.resize(static_cast<Eigen::Index>(ms.aug.node_component.size()), static_cast<Eigen::Index>(n));
  ms.aug.lift.setFromTriplets(lift.begin(), lift.end());

  // Cross-scale pairs: fine window k summarizes into the coarse nodes of its two blocks.
  for (std::size_t s = 0; s + 1 < levels; ++s) {
    for (std::size_t k = 0; k < scale_components[s].size(); ++k) {
      const std::size_t comp = scale_components[s][k];
      const std::size_t a = starts[s][k];
      const auto width = static_cast<Eigen::Index>(ms.aug.components[comp].nodes.size());
      const std::size_t rows = static_cast<std::size_t>(width) / block;
      CrossScalePair pair;
      pair.scale = s;
      pair.fine_component = comp;
      pair.summary = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), width);
      for (Eigen::Index i = 0; i < width; ++i)
        pair.summary(i / static_cast<Eigen::Index>(block), i) = 1.0 / static_cast<double>(block);
      const std::size_t j0 = a / block;
      bool placed = false;
      for (const auto& first : replicas[s + 1][j0]) {
        std::vector<Eigen::Index> local;
        for (std::size_t r = 0; r < rows; ++r)
          for (const auto& rep : replicas[s + 1][j0 + r])
            if (rep.component == first.component) local.push_back(rep.local);
        if (local.size() == rows) {
          pair.coarse_component = first.component;
          pair.coarse_local = std::move(local);
          placed = true;
          break;
        }
      }
      if (!placed) throw InvalidInput("no coarse window holds the summary of fine window " + std::to_string(k));
      ms.pairs.push_back(std::move(pair));
    }
  }

  // Initial coarse potentials: a matching step against empty coarse marginals,
  // shared evenly by every coarse window holding the pair. This keeps every
  // block positive definite and the model equivalent to the original.
  for (const auto& pair : ms.pairs) {
    auto& fine = ms.aug.components[pair.fine_component];
    const auto rows = pair.summary.rows();
    const MarginalInfo empty{Eigen::MatrixXd::Zero(rows, rows), Eigen::VectorXd::Zero(rows)};
    const CrossScaleStep step = cross_scale_step(pair.summary, {fine.information, fine.potential}, empty);
    fine.information -= pair.summary.transpose() * step.coarse_information * pair.summary;
    fine.potential -= pair.summary.transpose() * step.coarse_potential;

    const std::size_t s = pair.scale + 1;
    // Coarse index of the first summary row, recovered from the canonical replica.
    const std::size_t first = starts[s][static_cast<std::size_t>(
        std::find(scale_components[s].begin(), scale_components[s].end(), pair.coarse_component) -
        scale_components[s].begin())] + static_cast<std::size_t>(pair.coarse_local[0]);
    std::vector<std::pair<std::size_t, std::vector<Eigen::Index>>> holders;
    for (const auto& rep : replicas[s][first]) {
      std::vector<Eigen::Index> local;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (const auto& other : replicas[s][first + static_cast<std::size_t>(r)])
          if (other.component == rep.component) local.push_back(other.local);
      if (static_cast<Eigen::Index>(local.size()) == rows) holders.emplace_back(rep.component, std::move(local));
    }
    const double share = 1.0 / static_cast<double>(holders.size());
    for (const auto& [comp, local] : holders) {
      auto& blk = ms.aug.components[comp];
      blk.information(local, local) += share * step.coarse_information;
      blk.potential(local) += share * step.coarse_potential;
    }
  }
  return ms;
}

CrossScaleStep cross_scale_step(const Eigen::MatrixXd& summary, const MarginalInfo& fine, const MarginalInfo& coarse) {
  Eigen::LLT<Eigen::MatrixXd> fine_llt(fine.information);
  if (fine_llt.info() != Eigen::Success) throw NotPositiveDefinite("fine marginal information is not positive definite");
  const Eigen::MatrixXd gain = fine_llt.solve(summary.transpose());  // J1^-1 A^T
  const Eigen::MatrixXd s = summary * gain;
  Eigen::LLT<Eigen::MatrixXd> s_llt(0.5 * (s + s.transpose()));
  if (s_llt.info() != Eigen::Success) throw NotPositiveDefinite("summary covariance A J1^-1 A^T is singular");
  const Eigen::MatrixXd s_inv = s_llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  const Eigen::VectorXd fine_mean = fine_llt.solve(fine.potential);
  CrossScaleStep step;
  step.coarse_information = 0.5 * (s_inv - coarse.information);
  step.coarse_information = 0.5 * (step.coarse_information + step.coarse_information.transpose()).eval();
  step.coarse_potential = 0.5 * (s_inv * (summary * fine_mean) - coarse.potential);
  return step;
}

double cross_scale_update(GaussianAugmented& aug, const CrossScalePair& pair) {
  auto& fine = aug.components[pair.fine_component];
  auto& coarse = aug.components[pair.coarse_component];
  const MarginalInfo coarse_info = gaussian_marginal_info(coarse.information, coarse.potential, pair.coarse_local);
  const CrossScaleStep step = cross_scale_step(pair.summary, {fine.information, fine.potential}, coarse_info);
  const Eigen::MatrixXd fine_j = pair.summary.transpose() * step.coarse_information * pair.summary;
  const Eigen::VectorXd fine_h = pair.summary.transpose() * step.coarse_potential;

  auto apply = [&](double scale) {
    coarse.information(pair.coarse_local, pair.coarse_local) += scale * step.coarse_information;
    coarse.potential(pair.coarse_local) += scale * step.coarse_potential;
    fine.information -= scale * fine_j;
    fine.potential -= scale * fine_h;
  };
  apply(1.0);
  if (!factors(coarse.information) || !factors(fine.information)) {
    apply(-0.5);
    if (!factors(coarse.information) || !factors(fine.information)) {
      apply(-0.5);
      throw NotPositiveDefinite("cross-scale update breaks positive definiteness even at half step");
    }
  }
  return std::max(step.coarse_information.cwiseAbs().maxCoeff(), step.coarse_potential.cwiseAbs().maxCoeff());
}

MultiscaleReport solve_multiscale(const GaussianInfoModel& chain, std::size_t levels, std::size_t block,
                                  const MultiscaleOptions& options) {
  MultiscaleModel ms = build_multiscale(chain, levels, block);
  GaussianSolver solver(chain, ms.aug);
  const auto start = std::chrono::steady_clock::now();
  const double reference_scale =
      options.reference ? std::max(options.reference->cwiseAbs().maxCoeff(), std::numeric_limits<double>::min()) : 1.0;

  MultiscaleReport report;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    GaussianTraceEntry e;
    e.sweep = it;
    double info = 0.0;
    for (std::size_t s = 0; s < levels; ++s) {
      e.max_residual = std::max(e.max_residual, solver.sweep(s));
      info = std::max(info, solver.last_information_residual());
    }
    for (const auto& pair : ms.pairs) e.max_residual = std::max(e.max_residual, cross_scale_update(solver.augmented(), pair));
    e.var_residual = info;
    solver.check_factorizations();
    e.dual = solver.dual_value();
    e.mean_err_proxy = solver.mean_disagreement();
    e.consistency = solver.augmented().consistency_residual(chain);
    const Eigen::VectorXd x = solver.means();
    e.mean_error = std::numeric_limits<double>::quiet_NaN();
    if (options.reference) {
      e.mean_error = (x - *options.reference).cwiseAbs().maxCoeff();
      report.relative_error.push_back(e.mean_error / reference_scale);
    }
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.max_consistency_residual = std::max(report.max_consistency_residual, e.consistency);
    report.trace.push_back(e);
    report.iterations = it;
    if (e.max_residual < options.tol) {
      report.converged = true;
      break;
    }
    if (options.target_relative_error > 0.0 && !report.relative_error.empty() &&
        report.relative_error.back() < options.target_relative_error)
      break;
  }
  report.means = solver.means();
  report.dual = solver.dual_value();
  return report;
}

std::optional<std::size_t> iterations_to(const std::vector<double>& relative_error, double target) {
  for (std::size_t i = 0; i < relative_error.size(); ++i)
    if (relative_error[i] < target) return i + 1;
  return std::nullopt;
}

}  // namespace lagrelax
