#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "heatctl/errors.hpp"

namespace heatctl {

enum class BoundaryTag : std::uint8_t { Gamma1, Gamma2 };

enum class Side : std::uint8_t { Left = 1, Right = 2, Bottom = 4, Top = 8 };

/// Subset of the four sides of the unit square.
class SideSet {
 public:
  constexpr SideSet() = default;
  constexpr SideSet(Side s) : bits_(static_cast<std::uint8_t>(s)) {}  // NOLINT

  constexpr SideSet operator|(SideSet o) const { return SideSet(static_cast<std::uint8_t>(bits_ | o.bits_)); }
  constexpr bool contains(Side s) const { return (bits_ & static_cast<std::uint8_t>(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool all() const { return bits_ == 15; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool operator==(const SideSet&) const = default;

  static constexpr SideSet everything() { return SideSet(std::uint8_t{15}); }

 private:
  constexpr explicit SideSet(std::uint8_t b) : bits_(b) {}
  std::uint8_t bits_ = 0;
};

constexpr SideSet operator|(Side a, Side b) { return SideSet(a) | SideSet(b); }

/// Parses a comma separated list such as "left,top". Throws ContractError
/// on unknown names.
inline SideSet parse_sides(std::string_view text) {
  SideSet out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
    if (tok == "left") {
      out = out | Side::Left;
    } else if (tok == "right") {
      out = out | Side::Right;
    } else if (tok == "bottom") {
      out = out | Side::Bottom;
    } else if (tok == "top") {
      out = out | Side::Top;
    } else if (!tok.empty()) {
      throw ContractError("unknown boundary side '" + std::string(tok) + "'");
    }
    pos = end + 1;
  }
  return out;
}

inline std::string to_string(SideSet s) {
  std::string out;
  auto add = [&](Side side, const char* name) {
    if (!s.contains(side)) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(Side::Left, "left");
  add(Side::Right, "right");
  add(Side::Bottom, "bottom");
  add(Side::Top, "top");
  return out;
}

struct BoundaryEdge {
  std::array<Eigen::Index, 2> nodes;
  BoundaryTag tag;
};

/// Structured triangulation of the unit square. Immutable once built.
template <typename Scalar = double>
struct Mesh {
  using Point = Eigen::Matrix<Scalar, 2, 1>;

  std::vector<Point> nodes;
  std::vector<std::array<Eigen::Index, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  Eigen::Index nx = 0;
  Eigen::Index ny = 0;
  SideSet gamma1;

  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(nodes.size()); }

  Scalar signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point e1 = nodes[tri[1]] - nodes[tri[0]];
    const Point e2 = nodes[tri[2]] - nodes[tri[0]];
    return Scalar(0.5) * (e1.x() * e2.y() - e1.y() * e2.x());
  }

  Scalar edge_length(const BoundaryEdge& e) const { return (nodes[e.nodes[1]] - nodes[e.nodes[0]]).norm(); }
};

/// Uniform implicit time grid on [0, T].
template <typename Scalar = double>
class TimeGrid {
 public:
  TimeGrid(Scalar final_time, Eigen::Index n_steps) : n_steps_(n_steps) {
    if (!(final_time > 0)) throw ContractError("time grid: T must be positive");
    if (n_steps < 1) throw ContractError("time grid: n_steps must be >= 1");
    tau_ = final_time / static_cast<Scalar>(n_steps);
    // T is stored as tau * n_steps.
    final_time_ = tau_ * static_cast<Scalar>(n_steps);
  }

  Scalar final_time() const { return final_time_; }
  Eigen::Index n_steps() const { return n_steps_; }
  Scalar tau() const { return tau_; }
  Scalar time(Eigen::Index n) const { return tau_ * static_cast<Scalar>(n); }

 private:
  Scalar final_time_;
  Eigen::Index n_steps_;
  Scalar tau_;
};

/// Unit square split into nx*ny cells, each cut along its lower-left to
/// upper-right diagonal. Node (i, j) has index j*(nx+1)+i.
template <typename Scalar = double>
Mesh<Scalar> build_rect_mesh(Eigen::Index nx, Eigen::Index ny, SideSet gamma1 = Side::Left) {
  if (nx < 1 || ny < 1) throw ContractError("build_rect_mesh: nx and ny must be >= 1");
  if (gamma1.empty()) throw ContractError("build_rect_mesh: Gamma1 must contain at least one side");
  if (gamma1.all()) throw ContractError("build_rect_mesh: Gamma1 may not cover all four sides (Gamma2 would be empty)");

  Mesh<Scalar> mesh;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.gamma1 = gamma1;
  const auto id = [nx](Eigen::Index i, Eigen::Index j) { return j * (nx + 1) + i; };

  mesh.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (Eigen::Index j = 0; j <= ny; ++j) {
    for (Eigen::Index i = 0; i <= nx; ++i) {
      mesh.nodes.emplace_back(static_cast<Scalar>(i) / static_cast<Scalar>(nx),
                              static_cast<Scalar>(j) / static_cast<Scalar>(ny));
    }
  }

  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const auto n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
      mesh.triangles.push_back({n00, n10, n11});
      mesh.triangles.push_back({n00, n11, n01});
    }
  }

  auto tag_for = [&](Side s) { return gamma1.contains(s) ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2; };
  for (Eigen::Index i = 0; i < nx; ++i) mesh.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, tag_for(Side::Bottom)});
  for (Eigen::Index j = 0; j < ny; ++j) mesh.boundary_edges.push_back({{id(nx, j), id(nx, j + 1)}, tag_for(Side::Right)});
  for (Eigen::Index i = nx; i > 0; --i) mesh.boundary_edges.push_back({{id(i, ny), id(i - 1, ny)}, tag_for(Side::Top)});
  for (Eigen::Index j = ny; j > 0; --j) mesh.boundary_edges.push_back({{id(0, j), id(0, j - 1)}, tag_for(Side::Left)});
  return mesh;
}

struct DofPartition {
  std::vector<Eigen::Index> dirichlet;  // sorted
  std::vector<Eigen::Index> free;       // sorted
};

/// Nodes touching any Gamma1 edge are Dirichlet nodes, the rest are free.
template <typename Scalar>
DofPartition dof_partition(const Mesh<Scalar>& mesh) {
  std::vector<bool> pinned(mesh.nodes.size(), false);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != BoundaryTag::Gamma1) continue;
    pinned[static_cast<std::size_t>(e.nodes[0])] = true;
    pinned[static_cast<std::size_t>(e.nodes[1])] = true;
  }
  DofPartition out;
  for (Eigen::Index k = 0; k < mesh.num_nodes(); ++k) {
    (pinned[static_cast<std::size_t>(k)] ? out.dirichlet : out.free).push_back(k);
  }
  return out;
}

/// Sorted list of nodes touching any Gamma2 edge.
template <typename Scalar>
std::vector<Eigen::Index> gamma2_nodes(const Mesh<Scalar>& mesh) {
  std::vector<bool> on(mesh.nodes.size(), false);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != BoundaryTag::Gamma2) continue;
    on[static_cast<std::size_t>(e.nodes[0])] = true;
    on[static_cast<std::size_t>(e.nodes[1])] = true;
  }
  std::vector<Eigen::Index> out;
  for (Eigen::Index k = 0; k < mesh.num_nodes(); ++k) {
    if (on[static_cast<std::size_t>(k)]) out.push_back(k);
  }
  return out;
}

}  // namespace heatctl
