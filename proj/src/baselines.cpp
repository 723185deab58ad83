#include "lagrelax/baselines.hpp"

#include <cmath>
#include <limits>

#include "lagrelax/decomposition.hpp"
#include "lagrelax/error.hpp"

namespace lagrelax {

std::vector<VertexSet> chain_blocks(std::size_t n, std::size_t width, std::size_t overlap) {
  if (width == 0 || overlap >= width) throw InvalidInput("chain blocks need 0 <= overlap < width");
  std::vector<VertexSet> blocks;
  const std::size_t w = std::min(width, n);
  for (std::size_t a : window_starts(n, w, width - overlap)) {
    VertexSet b;
    for (std::size_t v = a; v < a + w; ++v) b.push_back(v);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<VertexSet> strip_blocks(const GridShape& grid, std::size_t width, std::size_t overlap) {
  std::vector<VertexSet> blocks;
  for (const auto& cols : chain_blocks(grid.cols, width, overlap)) {
    VertexSet b;
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t c : cols) b.push_back(grid.index(r, c));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

BlockGaussSeidelReport baseline_block_gauss_seidel(const GaussianInfoModel& model, const std::vector<VertexSet>& blocks,
                                                   double tol, std::size_t max_iters,
                                                   const std::optional<Eigen::VectorXd>& reference,
                                                   double target_relative_error) {
  const auto n = static_cast<Eigen::Index>(model.vertex_count());
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (const auto& b : blocks)
    for (Vertex v : b) covered.at(v) = true;
  for (bool c : covered)
    if (!c) throw InvalidInput("Gauss-Seidel blocks do not cover every vertex");

  const Eigen::MatrixXd j(model.information());
  const Eigen::VectorXd& h = model.potential();
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
  std::vector<std::vector<Eigen::Index>> index;
  for (const auto& b : blocks) {
    index.emplace_back(b.begin(), b.end());
    factors.emplace_back(j(index.back(), index.back()));
    if (factors.back().info() != Eigen::Success) throw NotPositiveDefinite("Gauss-Seidel block is not positive definite");
  }
  const double scale =
      reference ? std::max(reference->cwiseAbs().maxCoeff(), std::numeric_limits<double>::min()) : 1.0;

  BlockGaussSeidelReport report;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    double change = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& idx = index[k];
      // r_B = h_B - J_{B,:} x + J_BB x_B
      const Eigen::VectorXd xb = x(idx);
      const Eigen::VectorXd rhs = h(idx) - j(idx, Eigen::all) * x + j(idx, idx) * xb;
      const Eigen::VectorXd next = factors[k].solve(rhs);
      change = std::max(change, (next - xb).cwiseAbs().maxCoeff());
      x(idx) = next;
    }
    BlockGaussSeidelEntry e{it, change, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    if (reference) {
      e.mean_error = (x - *reference).cwiseAbs().maxCoeff();
      e.relative_error = e.mean_error / scale;
    }
    report.trace.push_back(e);
    report.iterations = it;
    if (change < tol) {
      report.converged = true;
      break;
    }
    if (reference && target_relative_error > 0.0 && e.relative_error < target_relative_error) break;
  }
  report.means = x;
  return report;
}

LbpReport baseline_gaussian_lbp(const GaussianInfoModel& model, std::size_t max_iters, double tol) {
  const Eigen::MatrixXd j(model.information());
  const Eigen::VectorXd& h = model.potential();
  const auto n = j.rows();

  // Directed messages i -> k for every nonzero off-diagonal entry.
  struct Message {
    Eigen::Index from, to;
    double precision = 0.0, potential = 0.0;
  };
  std::vector<Message> msgs;
  std::vector<std::vector<std::size_t>> incoming(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i != k && j(i, k) != 0.0) {
        incoming[static_cast<std::size_t>(k)].push_back(msgs.size());
        msgs.push_back({i, k});
      }
  // Reverse message index for the cavity.
  std::vector<std::size_t> reverse(msgs.size());
  for (std::size_t m = 0; m < msgs.size(); ++m)
    for (std::size_t q : incoming[static_cast<std::size_t>(msgs[m].from)])
      if (msgs[q].from == msgs[m].to) reverse[m] = q;

  LbpReport report;
  auto beliefs = [&](Eigen::VectorXd& prec, Eigen::VectorXd& pot) {
    prec = j.diagonal();
    pot = h;
    for (const auto& m : msgs) {
      prec(m.to) += m.precision;
      pot(m.to) += m.potential;
    }
  };
  Eigen::VectorXd prec, pot;
  for (std::size_t it = 1; it <= max_iters && !report.broke_down; ++it) {
    beliefs(prec, pot);
    std::vector<Message> next = msgs;
    double change = 0.0;
    for (std::size_t m = 0; m < msgs.size(); ++m) {
      const auto& r = msgs[reverse[m]];
      const double cavity_prec = prec(msgs[m].from) - r.precision;
      const double cavity_pot = pot(msgs[m].from) - r.potential;
      if (!(cavity_prec > 0.0) || !std::isfinite(cavity_prec)) {
        report.broke_down = true;
        break;
      }
      const double jik = j(msgs[m].to, msgs[m].from);
      next[m].precision = -jik * jik / cavity_prec;
      next[m].potential = -jik * cavity_pot / cavity_prec;
      change = std::max({change, std::abs(next[m].precision - msgs[m].precision),
                         std::abs(next[m].potential - msgs[m].potential)});
    }
    if (report.broke_down) break;
    msgs = std::move(next);
    report.iterations = it;
    if (!std::isfinite(change)) {
      report.broke_down = true;
      break;
    }
    if (change < tol) {
      report.converged = true;
      break;
    }
  }
  beliefs(prec, pot);
  report.variances = prec.cwiseInverse();
  report.means = pot.cwiseQuotient(prec);
  return report;
}

}  // namespace lagrelax
