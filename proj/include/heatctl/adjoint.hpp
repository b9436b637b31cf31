#pragma once

#include <Eigen/Core>

#include "heatctl/errors.hpp"
#include "heatctl/problem.hpp"
#include "heatctl/state.hpp"

namespace heatctl {

/// Transpose of the forward sweep applied to a tracking residual
/// (column j = residual at t_{j+1}).
///
/// With the cost quadrature tau * sum_{n=1..N} |u^n - z^n|_M^2 / 2 the
/// exact transpose is the backward sweep
///
///   S p[k] = (M/tau) p[k+1] + M r[k],   p[N] = 0,
///
/// on the same unknown rows as the forward solve. Slice k pairs with
/// the control at t_{k+1}.
template <typename Scalar>
Trajectory<Scalar> adjoint_sweep(const Matrix<Scalar>& residual, const Propagator<Scalar>& prop) {
  const auto& ops = prop.ops();
  if (residual.rows() != ops.num_nodes() || residual.cols() != prop.n_steps())
    throw ContractError("adjoint_sweep: residual must be (nodes x n_steps)");
  Trajectory<Scalar> p{Matrix<Scalar>::Zero(ops.num_nodes(), prop.n_steps() + 1), Role::Adjoint};
  for (Eigen::Index k = prop.n_steps() - 1; k >= 0; --k) {
    const Vector<Scalar> rhs = prop.mass_over_tau() * p.slices.col(k + 1) + ops.M * residual.col(k);
    p.slices.col(k) = prop.solve_unknowns(rhs);
  }
  return p;
}

template <typename Scalar>
Trajectory<Scalar> solve_adjoint(const ProblemData<Scalar>& data, const Trajectory<Scalar>& u,
                                 const Propagator<Scalar>& prop) {
  if (u.role != Role::State || u.n_steps() != data.n_steps() || u.slices.rows() != prop.ops().num_nodes())
    throw ContractError("solve_adjoint: state trajectory does not match the problem data");
  return adjoint_sweep<Scalar>(u.active() - data.z_d, prop);
}

template <typename Scalar>
Trajectory<Scalar> solve_adjoint_P(const ProblemData<Scalar>& data, const Trajectory<Scalar>& u,
                                   const DiscreteOperators<Scalar>& ops) {
  return solve_adjoint(data, u, Propagator<Scalar>(ops, data.grid, Variant::P));
}

template <typename Scalar>
Trajectory<Scalar> solve_adjoint_Palpha(const ProblemData<Scalar>& data, const Trajectory<Scalar>& u_alpha,
                                        const DiscreteOperators<Scalar>& ops) {
  return solve_adjoint(data, u_alpha, Propagator<Scalar>(ops, data.grid, Variant::Palpha, data.alpha));
}

}  // namespace heatctl
