#include "lagrelax/gaussian_marginal.hpp"

#include <vector>

#include "lagrelax/error.hpp"

namespace lagrelax {

SpdFactor::SpdFactor(const Eigen::MatrixXd& m) : size_(m.rows()) {
  if (m.rows() != m.cols()) throw InvalidInput("factorization needs a square matrix");
  if (size_ < kDenseLimit) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("dense Cholesky factorization failed");
    factor_ = std::move(llt);
  } else {
    Eigen::SparseMatrix<double> s = m.sparseView();
    auto& llt = factor_.emplace<1>();
    llt.compute(s);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("sparse Cholesky factorization failed");
  }
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& rhs) const {
  return std::visit([&](const auto& f) -> Eigen::MatrixXd { return f.solve(rhs); }, factor_);
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& rhs) const {
  return std::visit([&](const auto& f) -> Eigen::VectorXd { return f.solve(rhs); }, factor_);
}

MarginalInfo gaussian_marginal_info(const Eigen::MatrixXd& information, const Eigen::VectorXd& potential,
                                    std::span<const Eigen::Index> target) {
  const Eigen::Index n = information.rows();
  std::vector<char> in_target(static_cast<std::size_t>(n), 0);
  for (Eigen::Index t : target) {
    if (t < 0 || t >= n) throw InvalidInput("marginal target out of range");
    in_target[static_cast<std::size_t>(t)] = 1;
  }
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!in_target[static_cast<std::size_t>(i)]) rest.push_back(i);
  const std::vector<Eigen::Index> keep(target.begin(), target.end());

  MarginalInfo out;
  out.information = information(keep, keep);
  out.potential = potential(keep);
  // J is positive definite iff J_CC and the Schur complement both are.
  auto checked = [](MarginalInfo m) {
    if (m.information.size() > 0 && Eigen::LLT<Eigen::MatrixXd>(m.information).info() != Eigen::Success)
      throw NotPositiveDefinite("marginal information is not positive definite");
    return m;
  };
  if (rest.empty()) return checked(std::move(out));

  const SpdFactor factor(information(rest, rest));
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(rest.size()), static_cast<Eigen::Index>(keep.size()) + 1);
  rhs.leftCols(static_cast<Eigen::Index>(keep.size())) = information(rest, keep);
  rhs.rightCols(1) = potential(rest);
  const Eigen::MatrixXd x = factor.solve(rhs);
  const Eigen::MatrixXd coupling = information(keep, rest);
  out.information -= coupling * x.leftCols(static_cast<Eigen::Index>(keep.size()));
  out.information = 0.5 * (out.information + out.information.transpose()).eval();
  out.potential -= coupling * x.rightCols(1);
  return checked(std::move(out));
}

double gaussian_log_partition(const Eigen::MatrixXd& information, const Eigen::VectorXd& potential) {
  if (potential.size() == 0) return 0.0;
  const SpdFactor factor(information);
  return 0.5 * potential.dot(factor.solve(potential));
}

}  // namespace lagrelax
