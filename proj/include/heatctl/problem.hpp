#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <string_view>

#include "heatctl/assembly.hpp"
#include "heatctl/errors.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/mesh.hpp"

namespace heatctl {

/// Which state system drives the control problem: P pins u = b on Gamma1,
/// Palpha imposes the Robin condition -du/dn = alpha (u - b) there.
enum class Variant { P, Palpha };

inline std::string_view to_string(Variant v) { return v == Variant::P ? "P" : "Palpha"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "P" || s == "p") return Variant::P;
  if (s == "Palpha" || s == "palpha" || s == "P_alpha") return Variant::Palpha;
  throw ContractError("unknown problem variant '" + std::string(s) + "' (expected P or Palpha)");
}

/// One fully specified problem instance. Time slice j of z_d (column j)
/// is the target at t_{j+1}.
template <typename Scalar = double>
struct ProblemData {
  Vector<Scalar> b;    // on Dirichlet nodes, ordered as partition.dirichlet
  Vector<Scalar> v_b;  // initial condition, all nodes
  Matrix<Scalar> z_d;  // n x n_steps
  Scalar M1 = 1;
  Scalar M2 = 1;
  Scalar alpha = 1;
  TimeGrid<Scalar> grid{Scalar(1), 1};

  Eigen::Index n_steps() const { return grid.n_steps(); }
  Scalar tau() const { return grid.tau(); }
};

/// b extended by zero off the Dirichlet nodes.
template <typename Scalar>
Vector<Scalar> extend_b(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops) {
  Vector<Scalar> out = Vector<Scalar>::Zero(ops.num_nodes());
  const auto& dir = ops.partition.dirichlet;
  for (std::size_t i = 0; i < dir.size(); ++i) out[dir[i]] = data.b[static_cast<Eigen::Index>(i)];
  return out;
}

template <typename Scalar>
void validate(const ProblemData<Scalar>& data, const DiscreteOperators<Scalar>& ops) {
  const Eigen::Index n = ops.num_nodes();
  const auto& dir = ops.partition.dirichlet;
  if (!(data.M1 > 0) || !(data.M2 > 0)) throw ContractError("problem data: M1 and M2 must be positive");
  if (!(data.alpha > 0)) throw ContractError("problem data: alpha must be positive");
  if (data.b.size() != static_cast<Eigen::Index>(dir.size()))
    throw ContractError("problem data: b must have one value per Dirichlet node");
  if (data.v_b.size() != n) throw ContractError("problem data: v_b must have one value per node");
  if (data.z_d.rows() != n || data.z_d.cols() != data.n_steps())
    throw ContractError("problem data: z_d must be (nodes x n_steps)");
  for (std::size_t i = 0; i < dir.size(); ++i) {
    if (data.v_b[dir[i]] != data.b[static_cast<Eigen::Index>(i)])
      throw ContractError("problem data: v_b must equal b on Dirichlet node " + std::to_string(dir[i]));
  }
}

/// Distributed control g (all nodes) and boundary flux q (gamma2 nodes),
/// one column per time step t_1..t_N.
template <typename Scalar = double>
struct ControlPair {
  Matrix<Scalar> g;
  Matrix<Scalar> q;

  static ControlPair zeros(const DiscreteOperators<Scalar>& ops, Eigen::Index n_steps) {
    return {Matrix<Scalar>::Zero(ops.num_nodes(), n_steps), Matrix<Scalar>::Zero(ops.num_gamma2(), n_steps)};
  }

  Eigen::Index n_steps() const { return g.cols(); }

  ControlPair& operator+=(const ControlPair& o) {
    g += o.g;
    q += o.q;
    return *this;
  }
  ControlPair& operator-=(const ControlPair& o) {
    g -= o.g;
    q -= o.q;
    return *this;
  }
  ControlPair& operator*=(Scalar s) {
    g *= s;
    q *= s;
    return *this;
  }
  friend ControlPair operator+(ControlPair a, const ControlPair& b) { return a += b; }
  friend ControlPair operator-(ControlPair a, const ControlPair& b) { return a -= b; }
  friend ControlPair operator*(Scalar s, ControlPair a) { return a *= s; }
};

enum class Role { State, Adjoint };

/// n_steps + 1 nodal slices. State: slice n is u at t_n, slice 0 = v_b.
/// Adjoint: slice k pairs with the control at t_{k+1}; slice n_steps = 0.
template <typename Scalar = double>
struct Trajectory {
  Matrix<Scalar> slices;  // n x (n_steps + 1)
  Role role = Role::State;

  Eigen::Index n_steps() const { return slices.cols() - 1; }

  /// Columns that carry the time-quadrature weight: 1..N for states,
  /// 0..N-1 for adjoints.
  auto active() const { return slices.middleCols(role == Role::State ? 1 : 0, n_steps()); }

  friend Trajectory operator-(const Trajectory& a, const Trajectory& b) { return {a.slices - b.slices, a.role}; }
};

/// tau * sum_j A_j^T W B_j over columns.
template <typename Scalar, typename A, typename B>
Scalar weighted_inner(const SparseSym<Scalar>& w, Scalar tau, const Eigen::MatrixBase<A>& a,
                      const Eigen::MatrixBase<B>& b) {
  return tau * a.cwiseProduct(w * b).sum();
}

template <typename Scalar>
Scalar inner_H(const DiscreteOperators<Scalar>& ops, Scalar tau, const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  return weighted_inner(ops.M, tau, a, b);
}

template <typename Scalar>
Scalar inner_Q(const DiscreteOperators<Scalar>& ops, Scalar tau, const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  return weighted_inner(ops.B2q, tau, a, b);
}

/// (g, h)_H + (q, eta)_Q.
template <typename Scalar>
Scalar inner(const DiscreteOperators<Scalar>& ops, Scalar tau, const ControlPair<Scalar>& a,
             const ControlPair<Scalar>& b) {
  return inner_H(ops, tau, a.g, b.g) + inner_Q(ops, tau, a.q, b.q);
}

template <typename Scalar>
Scalar norm(const DiscreteOperators<Scalar>& ops, Scalar tau, const ControlPair<Scalar>& c) {
  return std::sqrt(std::max(Scalar(0), inner(ops, tau, c, c)));
}

/// L2(0,T; H) norm over the active slices.
template <typename Scalar>
Scalar l2_H_norm(const DiscreteOperators<Scalar>& ops, Scalar tau, const Trajectory<Scalar>& t) {
  const auto s = t.active();
  return std::sqrt(std::max(Scalar(0), weighted_inner(ops.M, tau, s, s)));
}

/// L2(0,T; V) norm over the active slices, V-norm v^T (K + M) v.
template <typename Scalar>
Scalar l2_V_norm(const DiscreteOperators<Scalar>& ops, Scalar tau, const Trajectory<Scalar>& t) {
  const auto s = t.active();
  const SparseSym<Scalar> w = ops.v_norm_matrix();
  return std::sqrt(std::max(Scalar(0), weighted_inner(w, tau, s, s)));
}

}  // namespace heatctl
