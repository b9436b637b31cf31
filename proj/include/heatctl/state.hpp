#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "heatctl/assembly.hpp"
#include "heatctl/errors.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/problem.hpp"

namespace heatctl {

/// Implicit Euler step operator for one variant on one mesh and time grid.
/// The system matrix M/tau + K (+ alpha B1) does not depend on time and is
/// factorized once here. For P only the free-node block is factorized; the
/// Dirichlet columns are moved to the right-hand side.
template <typename Scalar = double>
class Propagator {
 public:
  Propagator(const DiscreteOperators<Scalar>& ops, const TimeGrid<Scalar>& grid, Variant variant,
             Scalar alpha = Scalar(1))
      : ops_(&ops), variant_(variant), alpha_(alpha), tau_(grid.tau()), n_steps_(grid.n_steps()) {
    if (variant == Variant::Palpha && !(alpha > 0)) throw ContractError("Propagator: alpha must be positive");
    mass_over_tau_ = ops.M / tau_;
    system_ = mass_over_tau_ + ops.K;
    if (variant == Variant::Palpha) system_ += alpha * ops.B1;
    system_.makeCompressed();

    if (variant == Variant::P) {
      unknowns_ = ops.partition.free;
    } else {
      unknowns_.resize(static_cast<std::size_t>(ops.num_nodes()));
      for (Eigen::Index k = 0; k < ops.num_nodes(); ++k) unknowns_[static_cast<std::size_t>(k)] = k;
    }
    gather_ = selection_matrix<Scalar>(unknowns_, ops.num_nodes());
    solver_.compute(restrict_sym(system_, std::span<const Eigen::Index>(unknowns_)));
  }

  const DiscreteOperators<Scalar>& ops() const { return *ops_; }
  Variant variant() const { return variant_; }
  Scalar alpha() const { return alpha_; }
  Scalar tau() const { return tau_; }
  Eigen::Index n_steps() const { return n_steps_; }
  const SparseSym<Scalar>& system() const { return system_; }
  const SparseSym<Scalar>& mass_over_tau() const { return mass_over_tau_; }

  /// Solves the unknown rows of system * x = rhs with x = 0 on pinned nodes.
  Vector<Scalar> solve_unknowns(const Vector<Scalar>& rhs_full) const {
    return gather_.transpose() * solver_.solve(gather_ * rhs_full);
  }

  /// Load vector M g - trace2^T B2q q for control column j.
  Vector<Scalar> control_load(const ControlPair<Scalar>& c, Eigen::Index j) const {
    return ops_->M * c.g.col(j) - ops_->trace2.transpose() * (ops_->B2q * c.q.col(j));
  }

  void check_controls(const ControlPair<Scalar>& c) const {
    if (c.g.rows() != ops_->num_nodes() || c.g.cols() != n_steps_ || c.q.rows() != ops_->num_gamma2() ||
        c.q.cols() != n_steps_)
      throw ContractError("control pair has wrong shape for this mesh and time grid");
  }

 private:
  const DiscreteOperators<Scalar>* ops_;
  Variant variant_;
  Scalar alpha_;
  Scalar tau_;
  Eigen::Index n_steps_;
  SparseSym<Scalar> mass_over_tau_;
  SparseSym<Scalar> system_;
  std::vector<Eigen::Index> unknowns_;
  SparseSym<Scalar> gather_;
  SpdSolver<Scalar> solver_;
};

/// Forward sweep for the affine control-to-state map.
template <typename Scalar>
Trajectory<Scalar> solve_state(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                               const Propagator<Scalar>& prop) {
  const auto& ops = prop.ops();
  prop.check_controls(ctrl);
  const Vector<Scalar> bt = extend_b(data, ops);
  // P: x_F solves with the Dirichlet lift moved right, then u = x + b~.
  // Palpha: Robin data enters as alpha B1 b~.
  const Vector<Scalar> fixed =
      prop.variant() == Variant::P ? Vector<Scalar>(-(prop.system() * bt)) : Vector<Scalar>(prop.alpha() * (ops.B1 * bt));

  Trajectory<Scalar> u{Matrix<Scalar>(ops.num_nodes(), prop.n_steps() + 1), Role::State};
  u.slices.col(0) = data.v_b;
  for (Eigen::Index n = 0; n < prop.n_steps(); ++n) {
    const Vector<Scalar> rhs = prop.mass_over_tau() * u.slices.col(n) + prop.control_load(ctrl, n) + fixed;
    u.slices.col(n + 1) = prop.solve_unknowns(rhs);
    if (prop.variant() == Variant::P) u.slices.col(n + 1) += bt;
  }
  return u;
}

/// Linear part of the control-to-state map: zero b, zero v_b.
template <typename Scalar>
Trajectory<Scalar> solve_linearized_state(const ControlPair<Scalar>& ctrl, const Propagator<Scalar>& prop) {
  const auto& ops = prop.ops();
  prop.check_controls(ctrl);
  Trajectory<Scalar> u{Matrix<Scalar>::Zero(ops.num_nodes(), prop.n_steps() + 1), Role::State};
  for (Eigen::Index n = 0; n < prop.n_steps(); ++n) {
    const Vector<Scalar> rhs = prop.mass_over_tau() * u.slices.col(n) + prop.control_load(ctrl, n);
    u.slices.col(n + 1) = prop.solve_unknowns(rhs);
  }
  return u;
}

template <typename Scalar>
Trajectory<Scalar> solve_state_P(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                                 const DiscreteOperators<Scalar>& ops) {
  return solve_state(data, ctrl, Propagator<Scalar>(ops, data.grid, Variant::P));
}

template <typename Scalar>
Trajectory<Scalar> solve_state_Palpha(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                                      const DiscreteOperators<Scalar>& ops) {
  if (!(data.alpha > 0)) throw ContractError("solve_state_Palpha: alpha must be positive");
  return solve_state(data, ctrl, Propagator<Scalar>(ops, data.grid, Variant::Palpha, data.alpha));
}

/// sqrt(alpha - 1) * ||u - b~||_{L2(0,T; L2(Gamma1))}.
template <typename Scalar>
Scalar boundary_residual(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops,
                         const Trajectory<Scalar>& u, Scalar alpha) {
  const Vector<Scalar> bt = extend_b(data, ops);
  const Matrix<Scalar> diff = u.active().colwise() - bt;
  const Scalar l2 = std::sqrt(std::max(Scalar(0), weighted_inner(ops.B1, data.tau(), diff, diff)));
  return std::sqrt(std::max(Scalar(0), alpha - 1)) * l2;
}

}  // namespace heatctl
