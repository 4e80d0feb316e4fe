#ifndef NEUROFEM_MESH_HPP
#define NEUROFEM_MESH_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace neurofem {

struct BoundaryFacet {
    std::vector<std::size_t> nodes;  // 2 nodes for an edge, 3 for a face
    int marker = 0;
};

// Unstructured simplex mesh: triangles in 2D, tetrahedra in 3D.
// 2D triangles are stored counterclockwise.
struct Mesh {
    int dim = 2;
    std::vector<std::array<double, 3>> nodes;
    std::vector<std::vector<std::size_t>> elements;
    std::vector<BoundaryFacet> boundary_facets;

    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_elements() const { return elements.size(); }
};

struct BoundaryClass {
    std::set<std::size_t> dirichlet_nodes;
    std::map<int, std::vector<BoundaryFacet>> neumann_facets;  // keyed by marker
};

struct MeshStats {
    std::size_t n_nodes = 0;
    std::size_t n_interior = 0;
    std::size_t n_elements = 0;
    double max_element_size = 0.0;  // area in 2D, volume in 3D
};

// Deterministic unit-disk triangulation built from concentric rings.
// Ring k of K sits at radius k/K and carries 6k evenly spaced nodes; the
// outermost ring is marked boundary with marker 1. A nonzero jitter in
// [0, 0.5) perturbs node positions deterministically (boundary nodes stay on
// the unit circle), emulating an unstructured mesh; the max-area bound is
// only guaranteed for jitter 0.
Mesh gen_disk_mesh(double max_area, double jitter = 0.0);

// Ring count the generator will use for a given max_area.
std::size_t disk_mesh_rings(double max_area);

// Gmsh MSH 2.2 ASCII subset: element types 1 (line), 2 (triangle),
// 4 (tetrahedron), 15 (point).
Mesh parse_gmsh(std::istream& in);
Mesh parse_gmsh_file(const std::string& path);
void write_gmsh(const Mesh& mesh, std::ostream& out);
void write_gmsh_file(const Mesh& mesh, const std::string& path);

// JSON interchange document {nodes, elements, boundary_facets}.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

BoundaryClass classify_boundary(const Mesh& mesh, const std::set<int>& dirichlet_markers);

MeshStats mesh_stats(const Mesh& mesh);

double triangle_area(const std::array<double, 3>& a, const std::array<double, 3>& b,
                     const std::array<double, 3>& c);
double element_measure(const Mesh& mesh, std::size_t e);

}  // namespace neurofem

#endif
