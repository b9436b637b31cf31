#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <string>
#include <vector>

#include "heatctl/errors.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/mesh.hpp"

namespace heatctl {

/// Assembled P1 operators on one mesh.
///
///   K   stiffness, a(u, v) = int grad u . grad v
///   M   domain mass, (u, v)_H
///   B1  boundary mass on Gamma1
///   B2  boundary mass on Gamma2 (full node numbering)
///   B2q B2 restricted to gamma2 nodes, the Q inner product
///   trace2  gathers gamma2 nodal values from a full nodal field
///
/// The discrete V-norm is v^T (K + M) v.
template <typename Scalar = double>
struct DiscreteOperators {
  SparseSym<Scalar> K, M, B1, B2, B2q;
  SparseSym<Scalar> trace2;  // m x n
  std::vector<Eigen::Index> gamma2;
  DofPartition partition;
  Eigen::Index nx = 0, ny = 0;
  SideSet gamma1;

  Eigen::Index num_nodes() const { return K.rows(); }
  Eigen::Index num_gamma2() const { return static_cast<Eigen::Index>(gamma2.size()); }
  SparseSym<Scalar> v_norm_matrix() const { return K + M; }
};

template <typename Scalar>
DiscreteOperators<Scalar> assemble(const Mesh<Scalar>& mesh) {
  using Triplet = Eigen::Triplet<Scalar, Eigen::Index>;
  using Point = typename Mesh<Scalar>::Point;
  const Eigen::Index n = mesh.num_nodes();
  std::vector<Triplet> kt, mt, b1t, b2t;
  kt.reserve(mesh.triangles.size() * 9);
  mt.reserve(mesh.triangles.size() * 9);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Scalar area = mesh.signed_area(t);
    if (!(area > 0)) {
      throw AssemblyError("assemble: triangle " + std::to_string(t) + " is degenerate or clockwise",
                          static_cast<long>(t));
    }
    // Edge opposite local vertex i; grad(phi_i) = rot90(edge_i) / (2 area).
    std::array<Point, 3> edge;
    for (int i = 0; i < 3; ++i) edge[i] = mesh.nodes[tri[(i + 2) % 3]] - mesh.nodes[tri[(i + 1) % 3]];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(tri[i], tri[j], edge[i].dot(edge[j]) / (Scalar(4) * area));
        mt.emplace_back(tri[i], tri[j], area / Scalar(12) * (i == j ? Scalar(2) : Scalar(1)));
      }
    }
  }

  for (const auto& e : mesh.boundary_edges) {
    const Scalar len = mesh.edge_length(e);
    auto& dst = e.tag == BoundaryTag::Gamma1 ? b1t : b2t;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) dst.emplace_back(e.nodes[i], e.nodes[j], len / Scalar(6) * (i == j ? Scalar(2) : Scalar(1)));
    }
  }

  DiscreteOperators<Scalar> ops;
  auto build = [n](SparseSym<Scalar>& m, const std::vector<Triplet>& trips) {
    m.resize(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
  };
  build(ops.K, kt);
  build(ops.M, mt);
  build(ops.B1, b1t);
  build(ops.B2, b2t);
  ops.gamma2 = gamma2_nodes(mesh);
  ops.trace2 = selection_matrix<Scalar>(ops.gamma2, n);
  ops.B2q = restrict_sym(ops.B2, std::span<const Eigen::Index>(ops.gamma2));
  ops.partition = dof_partition(mesh);
  ops.nx = mesh.nx;
  ops.ny = mesh.ny;
  ops.gamma1 = mesh.gamma1;
  return ops;
}

template <typename Scalar = double>
struct ConstantsReport {
  Scalar lambda0 = 0;     // coercivity of a on V0
  Scalar lambda1 = 0;     // coercivity of a + int_{Gamma1} u v on V
  Scalar trace_norm = 0;  // norm of the Gamma2 trace, V -> Q
  Eigen::Index nx = 0, ny = 0;
  SideSet gamma1;
};

/// Discrete coercivity and trace constants as generalized Rayleigh-quotient
/// extremes against the V-norm matrix K + M.
template <typename Scalar>
ConstantsReport<Scalar> compute_constants(const DiscreteOperators<Scalar>& ops) {
  const SparseSym<Scalar> vnorm = ops.v_norm_matrix();
  const std::span<const Eigen::Index> free(ops.partition.free);

  ConstantsReport<Scalar> out;
  out.lambda0 = gen_eig_extreme(restrict_sym(ops.K, free), restrict_sym(vnorm, free), Extreme::Smallest);
  out.lambda1 = gen_eig_extreme(SparseSym<Scalar>(ops.K + ops.B1), vnorm, Extreme::Smallest);
  out.trace_norm = std::sqrt(gen_eig_extreme(ops.B2, vnorm, Extreme::Largest));
  out.nx = ops.nx;
  out.ny = ops.ny;
  out.gamma1 = ops.gamma1;
  return out;
}

}  // namespace heatctl
