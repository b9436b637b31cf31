#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "heatctl/adjoint.hpp"
#include "heatctl/assembly.hpp"
#include "heatctl/errors.hpp"
#include "heatctl/problem.hpp"
#include "heatctl/state.hpp"

namespace heatctl {

/// The reduced quadratic
///
///   J(g, q) = 1/2 |u_gq - z_d|_H^2 + M1/2 |g|_H^2 + M2/2 |q|_Q^2
///
/// over controls, with u_gq from P or Palpha. Holds one factorization;
/// `data` and `ops` must outlive the object.
template <typename Scalar = double>
class ReducedProblem {
 public:
  ReducedProblem(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops, Variant variant)
      : data_(&data), ops_(&ops), prop_(ops, data.grid, variant, data.alpha) {
    validate(data, ops);
  }

  const ProblemData<Scalar>& data() const { return *data_; }
  const DiscreteOperators<Scalar>& ops() const { return *ops_; }
  const Propagator<Scalar>& propagator() const { return prop_; }
  Variant variant() const { return prop_.variant(); }
  Scalar tau() const { return data_->tau(); }

  ControlPair<Scalar> zero_control() const { return ControlPair<Scalar>::zeros(*ops_, data_->n_steps()); }

  Scalar inner(const ControlPair<Scalar>& a, const ControlPair<Scalar>& b) const {
    return heatctl::inner(*ops_, tau(), a, b);
  }
  Scalar norm(const ControlPair<Scalar>& c) const { return heatctl::norm(*ops_, tau(), c); }

  Trajectory<Scalar> state(const ControlPair<Scalar>& c) const { return solve_state(*data_, c, prop_); }
  Trajectory<Scalar> adjoint(const Trajectory<Scalar>& u) const { return solve_adjoint(*data_, u, prop_); }

  /// C(g, q) = u_gq - u_00, computed from the homogeneous sweep.
  Trajectory<Scalar> apply_C(const ControlPair<Scalar>& c) const { return solve_linearized_state(c, prop_); }

  Scalar cost(const ControlPair<Scalar>& c, const Trajectory<Scalar>& u) const {
    const Matrix<Scalar> r = u.active() - data_->z_d;
    return Scalar(0.5) * inner_H(*ops_, tau(), r, r) + Scalar(0.5) * data_->M1 * inner_H(*ops_, tau(), c.g, c.g) +
           Scalar(0.5) * data_->M2 * inner_Q(*ops_, tau(), c.q, c.q);
  }
  Scalar cost(const ControlPair<Scalar>& c) const { return cost(c, state(c)); }

  /// Riesz representative (M1 g + p, M2 q - p|Gamma2) in H x Q.
  ControlPair<Scalar> gradient_from_adjoint(const ControlPair<Scalar>& c, const Trajectory<Scalar>& p) const {
    const auto ps = p.active();
    return {data_->M1 * c.g + ps, data_->M2 * c.q - ops_->trace2 * ps};
  }
  ControlPair<Scalar> gradient(const ControlPair<Scalar>& c) const {
    return gradient_from_adjoint(c, adjoint(state(c)));
  }

  /// Action of the reduced Hessian, gradient(c + d) - gradient(c).
  ControlPair<Scalar> hessian_apply(const ControlPair<Scalar>& d) const {
    const Trajectory<Scalar> du = apply_C(d);
    const Trajectory<Scalar> dp = adjoint_sweep<Scalar>(du.active(), prop_);
    return gradient_from_adjoint(d, dp);
  }

  /// W(g, q) = (-p/M1, p|Gamma2/M2).
  ControlPair<Scalar> apply_W(const ControlPair<Scalar>& c) const { return apply_W_from_adjoint(adjoint(state(c))); }
  ControlPair<Scalar> apply_W_from_adjoint(const Trajectory<Scalar>& p) const {
    const auto ps = p.active();
    return {-ps / data_->M1, (ops_->trace2 * ps) / data_->M2};
  }

 private:
  const ProblemData<Scalar>* data_;
  const DiscreteOperators<Scalar>* ops_;
  Propagator<Scalar> prop_;
};

enum class SolverKind { Cg, FixedPoint };

inline std::string_view to_string(SolverKind s) { return s == SolverKind::Cg ? "cg" : "fixed_point"; }

template <typename Scalar = double>
struct IterationRecord {
  Eigen::Index iteration = 0;
  Scalar cost = 0;
  Scalar grad_norm = 0;
  Scalar step_norm = 0;
};

template <typename Scalar = double>
struct OptimalityReport {
  ControlPair<Scalar> control;
  Scalar cost = 0;
  Scalar grad_norm = 0;  // H x Q norm of the gradient, recomputed at the returned control
  Scalar tolerance = 0;  // absolute threshold the run was held to
  Eigen::Index iterations = 0;
  SolverKind solver = SolverKind::Cg;
  Variant variant = Variant::P;
  bool converged = false;
  Scalar contraction_ratio = 0;  // fixed point only: largest ratio of successive step norms
  std::vector<IterationRecord<Scalar>> history;
};

struct CgOptions {
  double tol = 1e-10;
  Eigen::Index max_iter = 500;
  bool freeze_q = false;  // optimize g only, keep q from the initial control
};

namespace detail {

template <typename Scalar>
void zero_q(ControlPair<Scalar>& c) {
  c.q.setZero();
}

}  // namespace detail

/// Conjugate gradient in the H x Q inner product on the reduced Hessian,
/// started at `start`. Stops when the freshly computed gradient norm is
/// at most tol * (1 + |grad J(start)|). The recurrence is restarted from a
/// recomputed gradient whenever it believes it has converged.
template <typename Scalar>
OptimalityReport<Scalar> minimize_cg(const ReducedProblem<Scalar>& rp, ControlPair<Scalar> start, CgOptions opt) {
  if (!(opt.tol > 0)) throw ContractError("solve_cg: tol must be positive");
  OptimalityReport<Scalar> rep;
  rep.solver = SolverKind::Cg;
  rep.variant = rp.variant();

  auto fresh_gradient = [&](const ControlPair<Scalar>& c, Scalar& cost) {
    const Trajectory<Scalar> u = rp.state(c);
    cost = rp.cost(c, u);
    ControlPair<Scalar> g = rp.gradient_from_adjoint(c, rp.adjoint(u));
    if (opt.freeze_q) detail::zero_q(g);
    return g;
  };

  ControlPair<Scalar> c = std::move(start);
  Scalar cost = 0;
  ControlPair<Scalar> grad = fresh_gradient(c, cost);
  Scalar gnorm = rp.norm(grad);
  const Scalar threshold = static_cast<Scalar>(opt.tol) * (Scalar(1) + gnorm);
  rep.tolerance = threshold;
  rep.history.push_back({0, cost, gnorm, 0});

  Eigen::Index it = 0;
  while (gnorm > threshold && it < opt.max_iter) {
    // Quadratic model about the restart point: J(c + s) = J + <grad, s> + <s, H s>/2.
    const Scalar base_cost = cost;
    const ControlPair<Scalar> base_grad = grad;
    ControlPair<Scalar> step = rp.zero_control();
    ControlPair<Scalar> hstep = rp.zero_control();
    ControlPair<Scalar> r = Scalar(-1) * grad;
    ControlPair<Scalar> d = r;
    Scalar rr = rp.inner(r, r);
    const Eigen::Index restart_at = it;

    while (it < opt.max_iter) {
      ControlPair<Scalar> hd = rp.hessian_apply(d);
      if (opt.freeze_q) detail::zero_q(hd);
      const Scalar dhd = rp.inner(d, hd);
      if (!(dhd > 0)) break;
      const Scalar a = rr / dhd;
      step += a * d;
      hstep += a * hd;
      r -= a * hd;
      ++it;
      const Scalar rr_next = rp.inner(r, r);
      const Scalar model_cost = base_cost + rp.inner(base_grad, step) + Scalar(0.5) * rp.inner(step, hstep);
      rep.history.push_back({it, model_cost, std::sqrt(rr_next), std::abs(a) * rp.norm(d)});
      if (std::sqrt(rr_next) <= Scalar(0.5) * threshold) break;
      d = r + (rr_next / rr) * d;
      rr = rr_next;
    }
    if (it == restart_at) break;  // no admissible search direction
    c += step;
    grad = fresh_gradient(c, cost);
    gnorm = rp.norm(grad);
  }

  rep.iterations = it;
  rep.cost = cost;
  rep.grad_norm = gnorm;
  rep.converged = gnorm <= threshold;
  rep.control = std::move(c);
  if (!rep.history.empty()) {
    rep.history.back().cost = cost;
    rep.history.back().grad_norm = gnorm;
  }
  return rep;
}

template <typename Scalar>
OptimalityReport<Scalar> solve_cg(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops,
                                  Variant variant, double tol, Eigen::Index max_iter = 500) {
  const ReducedProblem<Scalar> rp(data, ops, variant);
  return minimize_cg(rp, rp.zero_control(), CgOptions{tol, max_iter, false});
}

/// Minimizes over g alone with q frozen at q_fixed. The cost keeps the
/// constant M2/2 |q_fixed|_Q^2 term.
template <typename Scalar>
OptimalityReport<Scalar> solve_distributed_only(const ProblemData<Scalar>& data, const Matrix<Scalar>& q_fixed,
                                                const DiscreteOperators<Scalar>& ops, Variant variant, double tol,
                                                Eigen::Index max_iter = 500) {
  const ReducedProblem<Scalar> rp(data, ops, variant);
  ControlPair<Scalar> start = rp.zero_control();
  if (q_fixed.rows() != start.q.rows() || q_fixed.cols() != start.q.cols())
    throw ContractError("solve_distributed_only: q_fixed has wrong shape");
  start.q = q_fixed;
  return minimize_cg(rp, std::move(start), CgOptions{tol, max_iter, true});
}

struct FixedPointOptions {
  double tol = 1e-10;
  Eigen::Index max_iter = 500;
  double blowup = 1e12;  // step norms beyond this stop the run as divergent
};

/// Picard iteration c <- W(c) from (0, 0). Stops when the H x Q step norm
/// drops to tol; a diverging run is reported with converged = false.
template <typename Scalar>
OptimalityReport<Scalar> solve_fixed_point(const ReducedProblem<Scalar>& rp, FixedPointOptions opt) {
  if (!(opt.tol > 0)) throw ContractError("solve_fixed_point: tol must be positive");
  OptimalityReport<Scalar> rep;
  rep.solver = SolverKind::FixedPoint;
  rep.variant = rp.variant();
  rep.tolerance = static_cast<Scalar>(opt.tol);

  ControlPair<Scalar> c = rp.zero_control();
  Scalar prev_step = 0;
  Scalar first_step = 0;
  Eigen::Index it = 0;
  bool converged = false;
  while (it < opt.max_iter) {
    const Trajectory<Scalar> u = rp.state(c);
    const Trajectory<Scalar> p = rp.adjoint(u);
    const Scalar cost = rp.cost(c, u);
    const Scalar gnorm = rp.norm(rp.gradient_from_adjoint(c, p));
    ControlPair<Scalar> next = rp.apply_W_from_adjoint(p);
    const Scalar step = rp.norm(next - c);
    ++it;
    rep.history.push_back({it, cost, gnorm, step});
    if (it == 1) first_step = step;
    if (it > 1 && prev_step > 0) rep.contraction_ratio = std::max(rep.contraction_ratio, step / prev_step);
    c = std::move(next);
    if (step <= rep.tolerance) {
      converged = true;
      break;
    }
    if (!std::isfinite(static_cast<double>(step)) || step > static_cast<Scalar>(opt.blowup) * (Scalar(1) + first_step))
      break;
    prev_step = step;
  }

  const Trajectory<Scalar> u = rp.state(c);
  rep.cost = rp.cost(c, u);
  rep.grad_norm = rp.norm(rp.gradient_from_adjoint(c, rp.adjoint(u)));
  rep.iterations = it;
  rep.converged = converged;
  rep.control = std::move(c);
  return rep;
}

template <typename Scalar>
OptimalityReport<Scalar> solve_fixed_point(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops,
                                           Variant variant, double tol, Eigen::Index max_iter = 500) {
  const ReducedProblem<Scalar> rp(data, ops, variant);
  return solve_fixed_point(rp, FixedPointOptions{tol, max_iter});
}

template <typename Scalar>
Trajectory<Scalar> apply_C(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                           const DiscreteOperators<Scalar>& ops, Variant variant) {
  return ReducedProblem<Scalar>(data, ops, variant).apply_C(ctrl);
}

template <typename Scalar>
Scalar cost_J(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl, const DiscreteOperators<Scalar>& ops,
              Variant variant) {
  return ReducedProblem<Scalar>(data, ops, variant).cost(ctrl);
}

template <typename Scalar>
ControlPair<Scalar> gradient_J(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                               const DiscreteOperators<Scalar>& ops, Variant variant) {
  return ReducedProblem<Scalar>(data, ops, variant).gradient(ctrl);
}

template <typename Scalar>
ControlPair<Scalar> apply_W(const ProblemData<Scalar>& data, const ControlPair<Scalar>& ctrl,
                            const DiscreteOperators<Scalar>& ops, Variant variant) {
  return ReducedProblem<Scalar>(data, ops, variant).apply_W(ctrl);
}

/// (1-t) J(c2) + t J(c1) - J((1-t) c2 + t c1).
template <typename Scalar>
Scalar convexity_gap(const ReducedProblem<Scalar>& rp, const ControlPair<Scalar>& c1, const ControlPair<Scalar>& c2,
                     Scalar t) {
  if (!(t >= 0 && t <= 1)) throw ContractError("convexity_gap: t must lie in [0, 1]");
  const ControlPair<Scalar> mid = (Scalar(1) - t) * c2 + t * c1;
  return (Scalar(1) - t) * rp.cost(c2) + t * rp.cost(c1) - rp.cost(mid);
}

template <typename Scalar>
Scalar convexity_gap(const ProblemData<Scalar>& data, const ControlPair<Scalar>& c1, const ControlPair<Scalar>& c2,
                     Scalar t, const DiscreteOperators<Scalar>& ops, Variant variant) {
  return convexity_gap(ReducedProblem<Scalar>(data, ops, variant), c1, c2, t);
}

/// Lipschitz bound of W:
///   2 / lambda^2 * sqrt(1/M1^2 + |gamma0|^2/M2^2) * (1 + |gamma0|),
/// with lambda = lambda0 for P and lambda1 * min(1, alpha) for Palpha.
template <typename Scalar>
Scalar contraction_constant(const ConstantsReport<Scalar>& k, Scalar M1, Scalar M2, Variant variant,
                            Scalar alpha = Scalar(1)) {
  if (variant == Variant::Palpha && !(alpha > 0)) throw ContractError("contraction_constant: alpha must be positive");
  const Scalar lambda = variant == Variant::P ? k.lambda0 : k.lambda1 * std::min(Scalar(1), alpha);
  const Scalar gamma = k.trace_norm;
  return Scalar(2) / (lambda * lambda) * std::sqrt(Scalar(1) / (M1 * M1) + gamma * gamma / (M2 * M2)) *
         (Scalar(1) + gamma);
}

}  // namespace heatctl
