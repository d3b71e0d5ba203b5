#include "tel/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>
#include <numeric>

namespace tel {

SparseSymmetric SparseSymmetric::from_triplets(Eigen::Index dimension,
                                               const std::vector<Eigen::Triplet<double>>& upper) {
  std::vector<Eigen::Triplet<double>> both;
  both.reserve(upper.size() * 2);
  for (const auto& t : upper) {
    both.push_back(t);
    if (t.row() != t.col()) both.emplace_back(t.col(), t.row(), t.value());
  }
  Matrix m(dimension, dimension);
  m.setFromTriplets(both.begin(), both.end());
  m.prune(0.0);
  m.makeCompressed();
  return SparseSymmetric(std::move(m));
}

SparseSymmetric SparseSymmetric::identity(Eigen::Index dimension) {
  return diagonal(Eigen::VectorXd::Ones(dimension));
}

SparseSymmetric SparseSymmetric::diagonal(const Eigen::VectorXd& d) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  return from_triplets(d.size(), t);
}

SparseSymmetric SparseSymmetric::shifted(double shift) const {
  Matrix m = m_;
  Matrix eye(m.rows(), m.cols());
  eye.setIdentity();
  m += shift * eye;
  m.prune(0.0);
  m.makeCompressed();
  return SparseSymmetric(std::move(m));
}

SparseSymmetric SparseSymmetric::without(Eigen::Index k) const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m_.nonZeros()));
  for (Eigen::Index c = 0; c < m_.outerSize(); ++c) {
    for (Matrix::InnerIterator it(m_, c); it; ++it) {
      if (it.row() == k || it.col() == k) continue;
      const Eigen::Index r = it.row() - (it.row() > k ? 1 : 0);
      const Eigen::Index cc = it.col() - (it.col() > k ? 1 : 0);
      t.emplace_back(r, cc, it.value());
    }
  }
  Matrix m(m_.rows() - 1, m_.cols() - 1);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return SparseSymmetric(std::move(m));
}

SparseSymmetric laplacian_of(const WeightedMultigraph& g) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.edge_count() * 3);
  for (const Edge& e : g.edges()) {
    if (e.is_loop()) continue;
    t.emplace_back(e.u, e.u, e.weight);
    t.emplace_back(e.v, e.v, e.weight);
    t.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v), -e.weight);
  }
  return SparseSymmetric::from_triplets(g.vertex_count(), t);
}

DenseMatrixExact<mpq_class> reduced_laplacian_exact(const WeightedMultigraph& g, VertexId removed) {
  const int n = g.vertex_count();
  DenseMatrixExact<mpq_class> full(n);
  for (const Edge& e : g.edges()) {
    if (e.is_loop()) continue;
    const mpq_class w(e.weight);  // exact: every double is a dyadic rational
    full(e.u, e.u) += w;
    full(e.v, e.v) += w;
    full(e.u, e.v) -= w;
    full(e.v, e.u) -= w;
  }
  if (removed < 0) return full;
  DenseMatrixExact<mpq_class> out(n - 1);
  for (int i = 0, oi = 0; i < n; ++i) {
    if (i == removed) continue;
    for (int j = 0, oj = 0; j < n; ++j) {
      if (j == removed) continue;
      out(oi, oj) = full(i, j);
      ++oj;
    }
    ++oi;
  }
  return out;
}

double log_of(const mpq_class& q) {
  if (sgn(q) <= 0) throw std::domain_error("log of a non-positive rational");
  long en = 0, ed = 0;
  const double mn = mpz_get_d_2exp(&en, q.get_num_mpz_t());
  const double md = mpz_get_d_2exp(&ed, q.get_den_mpz_t());
  return std::log(mn) - std::log(md) + static_cast<double>(en - ed) * std::log(2.0);
}

double logdet_spd(const SparseSymmetric& m) {
  if (m.dimension() == 0) return 0.0;
  Eigen::SimplicialLDLT<SparseSymmetric::Matrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.compute(m.matrix());
  if (ldlt.info() != Eigen::Success) throw NumericalError("LDLT factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw NotPositiveDefinite(i);
    acc += std::log(d[i]);
  }
  return acc;
}

SolveReport solve_spd(const SparseSymmetric& m, const Eigen::VectorXd& rhs, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_spd: tol must be positive");
  const auto& a = m.matrix();
  const Eigen::Index n = a.rows();
  if (rhs.size() != n) throw std::invalid_argument("solve_spd: rhs dimension mismatch");
  SolveReport out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return out;

  double anorm = 0.0;
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    double col = 0.0;
    for (SparseSymmetric::Matrix::InnerIterator it(a, j); it; ++it) col += std::abs(it.value());
    anorm = std::max(anorm, col);
  }
  // normwise backward error: what floating point can actually deliver
  auto small_enough = [&](double rnorm) { return rnorm <= tol * (anorm * out.x.norm() + bnorm); };

  const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  const int cap = static_cast<int>(std::max<Eigen::Index>(10 * n, 10));
  for (int it = 1; it <= cap; ++it) {
    ap.noalias() = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw NotPositiveDefinite(-1);
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    if (small_enough(r.norm())) {
      // confirm on the true residual, recurrences drift
      const Eigen::VectorXd true_r = rhs - a * out.x;
      const double rel = true_r.norm() / bnorm;
      if (small_enough(true_r.norm())) {
        out.iterations = it;
        out.relative_residual = rel;
        return out;
      }
      // restart from the true residual with a fresh steepest-descent direction
      r = true_r;
      z = inv_diag.cwiseProduct(r);
      p = z;
      rz = r.dot(z);
      continue;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw NotConverged(cap, (rhs - a * out.x).norm() / bnorm);
}

Eigen::VectorXd solve_spd_direct(const SparseSymmetric& m, const Eigen::VectorXd& rhs) {
  Eigen::SimplicialLDLT<SparseSymmetric::Matrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.compute(m.matrix());
  if (ldlt.info() != Eigen::Success) throw NumericalError("LDLT factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw NotPositiveDefinite(i);
  }
  return ldlt.solve(rhs);
}

EigenDecomposition eig_small(const SparseSymmetric& m, VertexId distinguished) {
  const Eigen::Index n = m.dimension();
  if (n > kDenseEigenLimit) throw std::invalid_argument("eig_small: dimension exceeds the dense limit");
  if (distinguished < 0 || distinguished >= n) throw std::invalid_argument("eig_small: distinguished index out of range");
  const Eigen::MatrixXd dense = Eigen::MatrixXd(m.matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();  // ascending
  const Eigen::VectorXd weight = solver.eigenvectors().row(distinguished).transpose().array().square();
  const double scale = std::max(1.0, dense.cwiseAbs().rowwise().sum().maxCoeff());

  EigenDecomposition out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool same = !out.eigenvalues.empty() && std::abs(lambda[i] - out.eigenvalues.back()) <= 1e-12 * scale;
    if (same) {
      out.masses_at_vector.back() += weight[i];
    } else {
      out.eigenvalues.push_back(lambda[i]);
      out.masses_at_vector.push_back(weight[i]);
    }
  }
  return out;
}

}  // namespace tel
