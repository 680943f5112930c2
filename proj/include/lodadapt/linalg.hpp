#pragma once

/** @file linalg.hpp
    @brief Sparse direct solvers used throughout: a simplicial Cholesky (CHOLMOD)
    for SPD systems, exposing the triangular half-solves needed by the Schur
    complement corrector solve.
*/

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>

namespace lodadapt {

/// A = Pᵀ L Lᵀ P. Owns its CHOLMOD workspace, so distinct instances may be
/// used from distinct threads.
class SparseCholesky {
public:
  /// Factorizes the SPD matrix A (full or lower storage; only the lower
  /// triangle is read). Throws SolverError if A is not positive definite.
  explicit SparseCholesky(const Eigen::SparseMatrix<double>& a);
  ~SparseCholesky();
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;

  int size() const;

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// L⁻¹ P b
  Eigen::MatrixXd forward(const Eigen::MatrixXd& b) const;
  /// Pᵀ L⁻ᵀ y
  Eigen::MatrixXd backward(const Eigen::MatrixXd& y) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace lodadapt
