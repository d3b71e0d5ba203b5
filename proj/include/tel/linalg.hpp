#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <gmpxx.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tel/graph.hpp"

namespace tel {

/// Numerical failure inside a solver (loss of definiteness, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  explicit NotPositiveDefinite(Eigen::Index pivot)
      : NumericalError("matrix is not positive definite: pivot " + std::to_string(pivot) + " is not positive"),
        pivot_(pivot) {}
  [[nodiscard]] Eigen::Index pivot() const noexcept { return pivot_; }

 private:
  Eigen::Index pivot_;
};

class NotConverged : public NumericalError {
 public:
  NotConverged(int iterations, double residual)
      : NumericalError("conjugate gradient did not converge after " + std::to_string(iterations) +
                       " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  [[nodiscard]] int iterations() const noexcept { return iterations_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Symmetric sparse matrix. Both triangles are stored; construction only ever
/// goes through symmetric assembly, explicit zeros are pruned.
class SparseSymmetric {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

  SparseSymmetric() = default;

  /// Each triplet (i, j, v) with i != j contributes v at both (i, j) and (j, i).
  static SparseSymmetric from_triplets(Eigen::Index dimension,
                                       const std::vector<Eigen::Triplet<double>>& upper);
  static SparseSymmetric identity(Eigen::Index dimension);
  static SparseSymmetric diagonal(const Eigen::VectorXd& d);

  [[nodiscard]] Eigen::Index dimension() const noexcept { return m_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] double coeff(Eigen::Index i, Eigen::Index j) const { return m_.coeff(i, j); }

  /// Copy with `shift` added to the diagonal.
  [[nodiscard]] SparseSymmetric shifted(double shift) const;
  /// Copy with row/column `k` removed.
  [[nodiscard]] SparseSymmetric without(Eigen::Index k) const;

 private:
  explicit SparseSymmetric(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Δ: off-diagonal (x, y) is minus the total non-loop weight between x and y;
/// the diagonal is the Laplacian diagonal. Loops do not enter.
SparseSymmetric laplacian_of(const WeightedMultigraph& g);

/// Dense square matrix over an exact scalar (mpz_class, mpq_class).
template <class Scalar>
class DenseMatrixExact {
 public:
  explicit DenseMatrixExact(int dimension) : n_(dimension), a_(static_cast<std::size_t>(dimension * dimension)) {
    if (dimension < 0) throw std::invalid_argument("negative dimension");
  }
  [[nodiscard]] int dimension() const noexcept { return n_; }
  Scalar& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * n_ + j)]; }
  const Scalar& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * n_ + j)]; }

 private:
  int n_;
  std::vector<Scalar> a_;
};

/// Fraction-free (Bareiss) elimination with row pivoting on non-zero entries.
/// Every division is exact, so integer input stays integral throughout.
template <class Scalar>
Scalar det_exact(DenseMatrixExact<Scalar> m) {
  const int n = m.dimension();
  if (n == 0) return Scalar(1);
  Scalar sign(1);
  Scalar prev(1);
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int swap = -1;
      for (int r = k + 1; r < n; ++r) {
        if (m(r, k) != 0) {
          swap = r;
          break;
        }
      }
      if (swap < 0) return Scalar(0);
      for (int c = 0; c < n; ++c) std::swap(m(k, c), m(swap, c));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        Scalar t = m(i, j) * m(k, k) - m(i, k) * m(k, j);
        t /= prev;
        m(i, j) = std::move(t);
      }
      m(i, k) = 0;
    }
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

/// Exact Laplacian with row/column `removed` deleted (pass -1 to keep all).
DenseMatrixExact<mpq_class> reduced_laplacian_exact(const WeightedMultigraph& g, VertexId removed);

/// Natural log of a positive exact rational.
double log_of(const mpq_class& q);

/// Σ log of LDLᵀ pivots (fill-reducing ordering). Throws NotPositiveDefinite.
double logdet_spd(const SparseSymmetric& m);

struct SolveReport {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradient; stops once the true residual
/// satisfies ‖m·x − rhs‖ ≤ tol·(‖m‖₁‖x‖ + ‖rhs‖). Iteration cap 10·dimension, then NotConverged.
SolveReport solve_spd(const SparseSymmetric& m, const Eigen::VectorXd& rhs, double tol);

/// Direct sparse LDLᵀ solve; used where many well-posed solves make the
/// iterative route too slow.
Eigen::VectorXd solve_spd_direct(const SparseSymmetric& m, const Eigen::VectorXd& rhs);

/// Spectral resolution restricted to one basis vector: eigenvalues and the
/// squared components of e_distinguished, degenerate eigenspaces merged.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  std::vector<double> masses_at_vector;
};

inline constexpr Eigen::Index kDenseEigenLimit = 4096;

EigenDecomposition eig_small(const SparseSymmetric& m, VertexId distinguished);

}  // namespace tel
