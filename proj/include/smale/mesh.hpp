#pragma once

// Meshes of the unit ball B(0,1) in one and two dimensions.
//
// 1D: uniform partition of [-1, 1].
// 2D: polar-ring triangulation. Ring i of R has 6i nodes at radius i/R and
//     consecutive rings are stitched by a zipper sweep over the angle, which
//     gives 6(2i-1) triangles per ring, 6R^2 in total, and a mesh that is
//     invariant under rotation by 60 degrees.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "smale/errors.hpp"

namespace smale {

template <int Dim>
struct BoundaryFacet {
  std::array<int, Dim> nodes;
  int element;
  Eigen::Matrix<double, Dim, 1> normal;  // outward unit normal
  double measure;                        // edge length; 1 for 1D end points
};

template <int Dim>
struct Mesh {
  static_assert(Dim == 1 || Dim == 2, "meshes exist in dimensions 1 and 2");
  using Point = Eigen::Matrix<double, Dim, 1>;
  using Element = std::array<int, Dim + 1>;

  std::vector<Point> nodes;
  std::vector<Element> elements;
  std::vector<bool> boundary;                 // per node
  std::vector<BoundaryFacet<Dim>> boundary_facets;
  std::vector<int> dof_of_node;               // -1 on the boundary
  std::vector<int> node_of_dof;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_dofs() const { return static_cast<int>(node_of_dof.size()); }
};

/// Signed element measure (length in 1D, area in 2D).
template <int Dim>
double element_measure(const Mesh<Dim>& mesh, const typename Mesh<Dim>::Element& e) {
  if constexpr (Dim == 1) {
    return mesh.nodes[static_cast<std::size_t>(e[1])](0) - mesh.nodes[static_cast<std::size_t>(e[0])](0);
  } else {
    const auto& a = mesh.nodes[static_cast<std::size_t>(e[0])];
    const auto& b = mesh.nodes[static_cast<std::size_t>(e[1])];
    const auto& c = mesh.nodes[static_cast<std::size_t>(e[2])];
    return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (c(0) - a(0)) * (b(1) - a(1)));
  }
}

namespace detail {

template <int Dim>
void number_dofs(Mesh<Dim>& mesh) {
  mesh.dof_of_node.assign(mesh.nodes.size(), -1);
  mesh.node_of_dof.clear();
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (!mesh.boundary[i]) {
      mesh.dof_of_node[i] = static_cast<int>(mesh.node_of_dof.size());
      mesh.node_of_dof.push_back(static_cast<int>(i));
    }
  }
}

}  // namespace detail

inline Mesh<1> build_interval_mesh(int resolution) {
  if (resolution < 2) throw std::invalid_argument("1D mesh resolution must be >= 2");
  Mesh<1> mesh;
  const double h = 2.0 / resolution;
  for (int i = 0; i <= resolution; ++i) {
    // exact end points, symmetric interior
    const double x = (i == resolution) ? 1.0 : -1.0 + h * i;
    mesh.nodes.push_back(Eigen::Matrix<double, 1, 1>(x));
    mesh.boundary.push_back(i == 0 || i == resolution);
  }
  for (int i = 0; i < resolution; ++i) mesh.elements.push_back({i, i + 1});
  mesh.boundary_facets.push_back({{0}, 0, Eigen::Matrix<double, 1, 1>(-1.0), 1.0});
  mesh.boundary_facets.push_back({{resolution}, resolution - 1, Eigen::Matrix<double, 1, 1>(1.0), 1.0});
  detail::number_dofs(mesh);
  return mesh;
}

inline Mesh<2> build_disc_mesh(int rings) {
  if (rings < 1) throw std::invalid_argument("2D mesh needs at least one ring");
  Mesh<2> mesh;
  const int total = 1 + 3 * rings * (rings + 1);
  mesh.nodes.reserve(static_cast<std::size_t>(total));

  // ring_start[i] = index of the first node on ring i
  std::vector<int> ring_start(static_cast<std::size_t>(rings) + 1);
  mesh.nodes.push_back(Eigen::Vector2d::Zero());
  mesh.boundary.push_back(false);
  for (int i = 1; i <= rings; ++i) {
    ring_start[static_cast<std::size_t>(i)] = static_cast<int>(mesh.nodes.size());
    const int count = 6 * i;
    const double radius = static_cast<double>(i) / rings;
    for (int k = 0; k < count; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / count;
      Eigen::Vector2d p(std::cos(theta), std::sin(theta));
      if (i == rings) p /= p.norm();
      else p *= radius;
      mesh.nodes.push_back(p);
      mesh.boundary.push_back(i == rings);
    }
  }

  auto add_triangle = [&mesh](int a, int b, int c) {
    typename Mesh<2>::Element e{a, b, c};
    if (element_measure(mesh, e) < 0.0) std::swap(e[1], e[2]);
    mesh.elements.push_back(e);
    return static_cast<int>(mesh.elements.size()) - 1;
  };

  // outer_edge_element[k] = triangle adjacent to boundary edge (k, k+1)
  std::vector<int> outer_edge_element(static_cast<std::size_t>(6 * rings), -1);

  for (int i = 1; i <= rings; ++i) {
    const int n_out = 6 * i;
    const int out0 = ring_start[static_cast<std::size_t>(i)];
    auto out = [&](int k) { return out0 + (k % n_out); };
    if (i == 1) {
      for (int k = 0; k < n_out; ++k) {
        const int t = add_triangle(0, out(k), out(k + 1));
        if (rings == 1) outer_edge_element[static_cast<std::size_t>(k)] = t;
      }
      continue;
    }
    const int n_in = 6 * (i - 1);
    const int in0 = ring_start[static_cast<std::size_t>(i - 1)];
    auto in = [&](int k) { return in0 + (k % n_in); };
    int a = 0;
    int b = 0;
    while (a < n_in || b < n_out) {
      // advance the ring whose next node has the smaller angle; outer first on ties
      const bool advance_outer =
          a == n_in || (b < n_out && static_cast<std::int64_t>(b + 1) * n_in <= static_cast<std::int64_t>(a + 1) * n_out);
      if (advance_outer) {
        const int t = add_triangle(in(a), out(b), out(b + 1));
        if (i == rings) outer_edge_element[static_cast<std::size_t>(b)] = t;
        ++b;
      } else {
        add_triangle(in(a), out(b), in(a + 1));
        ++a;
      }
    }
  }

  const int n_boundary = 6 * rings;
  const int b0 = ring_start[static_cast<std::size_t>(rings)];
  for (int k = 0; k < n_boundary; ++k) {
    const int p = b0 + k;
    const int q = b0 + (k + 1) % n_boundary;
    const Eigen::Vector2d d = mesh.nodes[static_cast<std::size_t>(q)] - mesh.nodes[static_cast<std::size_t>(p)];
    const double len = d.norm();
    // boundary traversed counter-clockwise, so the outward normal is d rotated by -90 degrees
    mesh.boundary_facets.push_back({{p, q}, outer_edge_element[static_cast<std::size_t>(k)],
                                    Eigen::Vector2d(d(1), -d(0)) / len, len});
  }
  detail::number_dofs(mesh);
  return mesh;
}

template <int Dim>
Mesh<Dim> build_mesh(int resolution) {
  if constexpr (Dim == 1) return build_interval_mesh(resolution);
  else return build_disc_mesh(resolution);
}

/// Writes nodes (index, coordinates, boundary flag) and elements as CSV.
template <int Dim>
void write_mesh_csv(const Mesh<Dim>& mesh, const std::string& nodes_path, const std::string& elements_path) {
  std::ofstream nodes(nodes_path);
  std::ofstream elems(elements_path);
  if (!nodes || !elems) throw std::runtime_error("cannot open mesh CSV output");
  nodes.precision(17);
  nodes << "node" << (Dim == 1 ? ",x" : ",x,y") << ",boundary\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    nodes << i;
    for (int d = 0; d < Dim; ++d) nodes << ',' << mesh.nodes[static_cast<std::size_t>(i)](d);
    nodes << ',' << (mesh.boundary[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
  }
  elems << "element" << (Dim == 1 ? ",n0,n1" : ",n0,n1,n2") << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) {
    elems << e;
    for (int v : mesh.elements[static_cast<std::size_t>(e)]) elems << ',' << v;
    elems << '\n';
  }
}

}  // namespace smale
