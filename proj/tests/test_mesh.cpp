#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "smale/mesh.hpp"

using namespace smale;

TEST(Mesh, IntervalExample) {
  const auto m = build_mesh<1>(4);
  ASSERT_EQ(m.num_nodes(), 5);
  const double expected[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(m.nodes[static_cast<std::size_t>(i)](0), expected[i]);
  EXPECT_EQ(m.num_elements(), 4);
  EXPECT_EQ(m.num_dofs(), 3);
  EXPECT_TRUE(m.boundary.front());
  EXPECT_TRUE(m.boundary.back());
  ASSERT_EQ(m.boundary_facets.size(), 2u);
  EXPECT_DOUBLE_EQ(m.boundary_facets[0].normal(0) * m.nodes[static_cast<std::size_t>(m.boundary_facets[0].nodes[0])](0), 1.0);
}

TEST(Mesh, SmallestDisc) {
  const auto m = build_mesh<2>(1);
  EXPECT_EQ(m.num_nodes(), 7);
  EXPECT_EQ(m.num_elements(), 6);
  EXPECT_EQ(m.num_dofs(), 1);
  EXPECT_EQ(m.nodes[static_cast<std::size_t>(m.node_of_dof[0])].norm(), 0.0);
  EXPECT_EQ(m.boundary_facets.size(), 6u);
}

TEST(Mesh, InvalidResolution) {
  EXPECT_THROW(build_mesh<1>(1), std::invalid_argument);
  EXPECT_THROW(build_mesh<1>(0), std::invalid_argument);
  EXPECT_THROW(build_mesh<2>(0), std::invalid_argument);
}

class DiscMesh : public ::testing::TestWithParam<int> {};

TEST_P(DiscMesh, Counts) {
  const int R = GetParam();
  const auto m = build_mesh<2>(R);
  EXPECT_EQ(m.num_nodes(), 1 + 3 * R * (R + 1));
  EXPECT_EQ(m.num_elements(), 6 * R * R);
  EXPECT_EQ(m.num_dofs(), 1 + 3 * R * (R - 1));
  EXPECT_EQ(static_cast<int>(m.boundary_facets.size()), 6 * R);
}

TEST_P(DiscMesh, GeometryInvariants) {
  const auto m = build_mesh<2>(GetParam());
  double area = 0.0;
  for (const auto& e : m.elements) {
    const double a = element_measure(m, e);
    EXPECT_GT(a, 1e-14);
    area += a;
  }
  const int nb = 6 * GetParam();
  const double polygon = 0.5 * nb * std::sin(2.0 * std::numbers::pi / nb);
  EXPECT_NEAR(area, polygon, 1e-12);

  for (int i = 0; i < m.num_nodes(); ++i) {
    const double t = m.nodes[static_cast<std::size_t>(i)].norm();
    EXPECT_LE(t, 1.0 + 1e-12);
    if (m.boundary[static_cast<std::size_t>(i)]) {
      EXPECT_LE(std::abs(t - 1.0), 1e-12);
      EXPECT_EQ(m.dof_of_node[static_cast<std::size_t>(i)], -1);
    } else {
      EXPECT_GE(m.dof_of_node[static_cast<std::size_t>(i)], 0);
    }
  }
}

TEST_P(DiscMesh, ConformingEdges) {
  // every interior edge is shared by exactly two triangles, boundary edges by one
  const auto m = build_mesh<2>(GetParam());
  std::map<std::pair<int, int>, int> count;
  for (const auto& e : m.elements)
    for (int k = 0; k < 3; ++k) {
      const int a = e[static_cast<std::size_t>(k)], b = e[static_cast<std::size_t>((k + 1) % 3)];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  int boundary_edges = 0;
  for (const auto& [edge, c] : count) {
    const bool on_boundary = m.boundary[static_cast<std::size_t>(edge.first)] && m.boundary[static_cast<std::size_t>(edge.second)];
    EXPECT_EQ(c, on_boundary ? 1 : 2);
    boundary_edges += on_boundary;
  }
  EXPECT_EQ(boundary_edges, 6 * GetParam());
}

TEST_P(DiscMesh, BoundaryFacets) {
  const auto m = build_mesh<2>(GetParam());
  double perimeter = 0.0;
  for (const auto& f : m.boundary_facets) {
    const auto& a = m.nodes[static_cast<std::size_t>(f.nodes[0])];
    const auto& b = m.nodes[static_cast<std::size_t>(f.nodes[1])];
    EXPECT_NEAR(f.measure, (b - a).norm(), 1e-14);
    EXPECT_NEAR(f.normal.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.normal.dot(b - a), 0.0, 1e-14);
    EXPECT_GT(f.normal.dot(0.5 * (a + b)), 0.0);
    const auto& el = m.elements[static_cast<std::size_t>(f.element)];
    EXPECT_TRUE(std::find(el.begin(), el.end(), f.nodes[0]) != el.end());
    EXPECT_TRUE(std::find(el.begin(), el.end(), f.nodes[1]) != el.end());
    perimeter += f.measure;
  }
  const int nb = 6 * GetParam();
  EXPECT_NEAR(perimeter, 2.0 * nb * std::sin(std::numbers::pi / nb), 1e-12);
}

TEST_P(DiscMesh, Deterministic) {
  const auto a = build_mesh<2>(GetParam());
  const auto b = build_mesh<2>(GetParam());
  ASSERT_EQ(a.num_nodes(), b.num_nodes());
  for (int i = 0; i < a.num_nodes(); ++i) EXPECT_EQ(a.nodes[static_cast<std::size_t>(i)], b.nodes[static_cast<std::size_t>(i)]);
  EXPECT_EQ(a.elements, b.elements);
}

INSTANTIATE_TEST_SUITE_P(Rings, DiscMesh, ::testing::Values(1, 2, 3, 7, 20));

TEST(Mesh, CsvDump) {
  const auto m = build_mesh<2>(2);
  const auto dir = std::filesystem::temp_directory_path() / "smale_mesh_dump";
  std::filesystem::create_directories(dir);
  write_mesh_csv(m, (dir / "nodes.csv").string(), (dir / "elements.csv").string());
  std::ifstream nodes(dir / "nodes.csv"), elements(dir / "elements.csv");
  int lines = 0;
  for (std::string s; std::getline(nodes, s);) ++lines;
  EXPECT_EQ(lines, m.num_nodes() + 1);
  lines = 0;
  for (std::string s; std::getline(elements, s);) ++lines;
  EXPECT_EQ(lines, m.num_elements() + 1);
  std::filesystem::remove_all(dir);
}
