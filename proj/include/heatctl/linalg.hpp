#pragma once

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatctl/errors.hpp"

namespace heatctl {

template <typename Scalar>
using SparseSym = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Eigen::Index>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sparse k x n matrix S with S(i, indices[i]) = 1, so S*x gathers and
/// S^T*y scatters.
template <typename Scalar>
SparseSym<Scalar> selection_matrix(std::span<const Eigen::Index> indices, Eigen::Index n) {
  SparseSym<Scalar> s(static_cast<Eigen::Index>(indices.size()), n);
  std::vector<Eigen::Triplet<Scalar, Eigen::Index>> trips;
  trips.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) trips.emplace_back(static_cast<Eigen::Index>(i), indices[i], Scalar(1));
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

/// Principal submatrix A(idx, idx).
template <typename Scalar>
SparseSym<Scalar> restrict_sym(const SparseSym<Scalar>& a, std::span<const Eigen::Index> idx) {
  const SparseSym<Scalar> s = selection_matrix<Scalar>(idx, a.rows());
  SparseSym<Scalar> out = s * a * s.transpose();
  out.makeCompressed();
  return out;
}

/// Largest relative asymmetry |A_ij - A_ji| / max|A| over stored entries.
template <typename Scalar>
Scalar asymmetry(const SparseSym<Scalar>& a) {
  const SparseSym<Scalar> at = a.transpose();
  const SparseSym<Scalar> diff = a - at;
  Scalar scale = 0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (typename SparseSym<Scalar>::InnerIterator it(a, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  Scalar worst = 0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (typename SparseSym<Scalar>::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return scale > 0 ? worst / scale : Scalar(0);
}

/// Factorization of a symmetric positive definite matrix, built once and
/// reused for any number of right-hand sides. Sparse LDL^T up to
/// `direct_limit` unknowns, Jacobi-preconditioned conjugate gradient above.
/// solve() is const and may be called concurrently.
template <typename Scalar = double>
class SpdSolver {
 public:
  static constexpr Eigen::Index kDefaultDirectLimit = 200000;
  static constexpr double kResidualTolerance = 1e-10;

  SpdSolver() = default;

  explicit SpdSolver(const SparseSym<Scalar>& a, Eigen::Index direct_limit = kDefaultDirectLimit) {
    compute(a, direct_limit);
  }

  void compute(const SparseSym<Scalar>& a, Eigen::Index direct_limit = kDefaultDirectLimit) {
    if (a.rows() != a.cols()) throw ContractError("SpdSolver: matrix must be square");
    matrix_ = a;
    matrix_.makeCompressed();
    direct_ = a.rows() <= direct_limit;
    if (direct_) {
      ldlt_.compute(matrix_);
      if (ldlt_.info() != Eigen::Success) throw SolverError("SpdSolver: LDL^T factorization failed", 0.0);
      const auto d = ldlt_.vectorD();
      if (d.size() > 0 && !(d.minCoeff() > 0)) throw SolverError("SpdSolver: matrix is not positive definite", 0.0);
    } else {
      cg_.setTolerance(static_cast<Scalar>(kResidualTolerance) * Scalar(0.1));
      cg_.setMaxIterations(std::max<Eigen::Index>(1000, 10 * a.rows()));
      cg_.compute(matrix_);
    }
  }

  Eigen::Index size() const { return matrix_.rows(); }
  bool is_direct() const { return direct_; }
  const SparseSym<Scalar>& matrix() const { return matrix_; }

  template <typename Rhs>
  Vector<Scalar> solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    if (rhs.size() != size()) throw ContractError("SpdSolver: right-hand side has wrong length");
    const Scalar bnorm = rhs.norm();
    if (bnorm == 0) return Vector<Scalar>::Zero(size());
    Vector<Scalar> x = direct_ ? Vector<Scalar>(ldlt_.solve(rhs)) : Vector<Scalar>(cg_.solve(rhs));
    const Scalar rel = (matrix_ * x - rhs).norm() / bnorm;
    if (!(rel <= static_cast<Scalar>(kResidualTolerance))) {
      throw SolverError("SpdSolver: relative residual " + std::to_string(static_cast<double>(rel)) + " above tolerance",
                        static_cast<double>(rel));
    }
    return x;
  }

 private:
  SparseSym<Scalar> matrix_;
  bool direct_ = true;
  Eigen::SimplicialLDLT<SparseSym<Scalar>> ldlt_;
  Eigen::ConjugateGradient<SparseSym<Scalar>, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<Scalar>> cg_;
};

template <typename Scalar, typename Rhs>
Vector<Scalar> spd_solve(const SparseSym<Scalar>& a, const Eigen::MatrixBase<Rhs>& rhs) {
  return SpdSolver<Scalar>(a).solve(rhs);
}

template <typename Scalar, typename Vec>
Scalar rayleigh(const SparseSym<Scalar>& a, const SparseSym<Scalar>& b, const Eigen::MatrixBase<Vec>& x) {
  return x.dot(a * x) / x.dot(b * x);
}

enum class Extreme { Smallest, Largest };

struct EigenIterationOptions {
  int max_iter = 50000;
  double tol = 1e-8;
};

/// Extreme eigenvalue of the pencil A x = lambda B x with B SPD and A
/// symmetric positive semidefinite. Smallest: inverse iteration on the
/// slightly shifted A + sB.
/// Largest: power iteration on B^{-1} A. Both start from the B-normalized
/// all-ones vector.
template <typename Scalar>
Scalar gen_eig_extreme(const SparseSym<Scalar>& a, const SparseSym<Scalar>& b, Extreme which,
                       EigenIterationOptions opt = {}) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ContractError("gen_eig_extreme: A and B must be square and of equal size");
  const Eigen::Index n = a.rows();
  if (n == 0) throw ContractError("gen_eig_extreme: empty pencil");

  std::optional<SpdSolver<Scalar>> solver;
  if (which == Extreme::Smallest) {
    const Scalar ta = a.diagonal().sum();
    const Scalar tb = b.diagonal().sum();
    const Scalar shift = ta > 0 ? Scalar(1e-3) * ta / tb : Scalar(1);
    solver.emplace(SparseSym<Scalar>(a + shift * b));
  } else {
    solver.emplace(b);
  }

  Vector<Scalar> x = Vector<Scalar>::Ones(n);
  x /= std::sqrt(x.dot(b * x));
  Scalar lambda = x.dot(a * x);
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  const Scalar tol = static_cast<Scalar>(opt.tol);
  int settled = 0;
  const Scalar a_scale = a.diagonal().cwiseAbs().maxCoeff();
  const Scalar b_scale = b.diagonal().cwiseAbs().maxCoeff();

  for (int it = 0; it < opt.max_iter; ++it) {
    Vector<Scalar> y = which == Extreme::Smallest ? solver->solve(b * x) : solver->solve(a * x);
    const Scalar ny = std::sqrt(y.dot(b * y));
    if (!(ny > 0)) return Scalar(0);  // A x = 0 in power iteration: pencil is identically zero
    x = y / ny;
    const Scalar next = x.dot(a * x);
    const Vector<Scalar> bx = b * x;
    residual = (a * x - next * bx).norm() / ((a_scale + std::abs(next) * b_scale) * x.norm());
    const Scalar change = std::abs(next - lambda);
    lambda = next;
    // Stop on residual tol^(5/4) or a quotient stalled at 1e-6 tol.
    if (change <= Scalar(1e-6) * tol * std::max(std::abs(lambda), a_scale / b_scale * tol) || residual <= tol * std::pow(tol, Scalar(0.25))) {
      if (++settled >= 3) return lambda;
    } else {
      settled = 0;
    }
  }
  throw SolverError("gen_eig_extreme: iteration cap exceeded (last Rayleigh quotient " +
                        std::to_string(static_cast<double>(lambda)) + ")",
                    static_cast<double>(residual), static_cast<double>(lambda));
}

}  // namespace heatctl
