#pragma once

#include <span>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lagrelax {

/// Components at or above this many variables use the sparse factorization.
inline constexpr Eigen::Index kDenseLimit = 64;

/// Cholesky factorization of a symmetric positive-definite block; dense below
/// kDenseLimit variables, sparse (fill-reducing ordering) otherwise.
/// Throws NotPositiveDefinite when the factorization fails.
class SpdFactor {
 public:
  explicit SpdFactor(const Eigen::MatrixXd& m);

  Eigen::Index size() const { return size_; }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::Index size_ = 0;
  std::variant<Eigen::LLT<Eigen::MatrixXd>, Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor_;
};

struct MarginalInfo {
  Eigen::MatrixXd information;
  Eigen::VectorXd potential;
};

/// Information form of the marginal on `target` after eliminating the rest:
/// J_EE - J_EC J_CC^-1 J_CE and h_E - J_EC J_CC^-1 h_C.
MarginalInfo gaussian_marginal_info(const Eigen::MatrixXd& information, const Eigen::VectorXd& potential,
                                    std::span<const Eigen::Index> target);

/// 1/2 h^T J^-1 h.
double gaussian_log_partition(const Eigen::MatrixXd& information, const Eigen::VectorXd& potential);

}  // namespace lagrelax
