#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mesh.hpp"

using namespace neurofem;

namespace {

double signed_area(const Mesh& m, std::size_t e) {
    auto& a = m.nodes[m.elements[e][0]];
    auto& b = m.nodes[m.elements[e][1]];
    auto& c = m.nodes[m.elements[e][2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

}  // namespace

TEST_CASE("disk mesh geometry") {
    Mesh m = gen_disk_mesh(0.01);
    CHECK(m.n_nodes() == 217);  // 1 + 3*K*(K+1) with K = 8 rings
    std::set<std::size_t> boundary;
    for (const auto& f : m.boundary_facets) {
        CHECK(f.marker == 1);
        for (auto n : f.nodes) boundary.insert(n);
    }
    CHECK(boundary.size() == 48);  // 6K nodes on the outer ring
    for (std::size_t i = 0; i < m.n_nodes(); ++i) {
        double r = std::hypot(m.nodes[i][0], m.nodes[i][1]);
        CHECK(r <= 1.0 + 1e-12);
        if (boundary.count(i)) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t e = 0; e < m.n_elements(); ++e) {
        double s = signed_area(m, e);
        CHECK(s > 0.0);  // counterclockwise
        CHECK(s <= 0.01);
    }
}

TEST_CASE("disk mesh is deterministic and refines") {
    Mesh a = gen_disk_mesh(0.004);
    Mesh b = gen_disk_mesh(0.004);
    CHECK(a.nodes == b.nodes);
    CHECK(a.elements == b.elements);
    CHECK(gen_disk_mesh(0.001).n_nodes() > a.n_nodes());
}

TEST_CASE("jitter keeps boundary on the circle and stays deterministic") {
    Mesh plain = gen_disk_mesh(0.01);
    Mesh j1 = gen_disk_mesh(0.01, 0.35);
    Mesh j2 = gen_disk_mesh(0.01, 0.35);
    CHECK(j1.nodes == j2.nodes);
    CHECK(j1.n_nodes() == plain.n_nodes());
    CHECK(j1.nodes != plain.nodes);
    std::set<std::size_t> boundary;
    for (const auto& f : j1.boundary_facets)
        for (auto n : f.nodes) boundary.insert(n);
    for (auto n : boundary)
        CHECK(std::hypot(j1.nodes[n][0], j1.nodes[n][1]) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t e = 0; e < j1.n_elements(); ++e) CHECK(signed_area(j1, e) > 0.0);
    CHECK_THROWS_AS(gen_disk_mesh(0.01, 0.5), DomainError);
    CHECK_THROWS_AS(gen_disk_mesh(0.01, -0.1), DomainError);
    CHECK_THROWS_AS(gen_disk_mesh(0.0), DomainError);
}

TEST_CASE("msh round-trip is exact") {
    Mesh m = gen_disk_mesh(0.02);
    std::stringstream ss;
    write_gmsh(m, ss);
    Mesh back = parse_gmsh(ss);
    CHECK(back.dim == m.dim);
    CHECK(back.nodes == m.nodes);
    CHECK(back.elements == m.elements);
    REQUIRE(back.boundary_facets.size() == m.boundary_facets.size());
    for (std::size_t i = 0; i < m.boundary_facets.size(); ++i) {
        CHECK(back.boundary_facets[i].nodes == m.boundary_facets[i].nodes);
        CHECK(back.boundary_facets[i].marker == m.boundary_facets[i].marker);
    }
}

TEST_CASE("json round-trip is exact") {
    Mesh m = gen_disk_mesh(0.02, 0.2);
    Mesh back = mesh_from_json(mesh_to_json(m));
    CHECK(back.nodes == m.nodes);
    CHECK(back.elements == m.elements);
    CHECK(back.boundary_facets.size() == m.boundary_facets.size());
}

TEST_CASE("msh parse errors") {
    std::stringstream bad("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    CHECK_THROWS_AS(parse_gmsh(bad), ParseError);
    std::stringstream empty("");
    CHECK_THROWS_AS(parse_gmsh(empty), ParseError);
}

TEST_CASE("boundary classification and stats") {
    Mesh m = gen_disk_mesh(0.01);
    auto bc = classify_boundary(m, {1});
    CHECK(bc.dirichlet_nodes.size() == 48);
    CHECK(bc.neumann_facets.empty());
    CHECK_THROWS_AS(classify_boundary(m, {2}), DomainError);
    Mesh m2 = m;
    for (auto& f : m2.boundary_facets) f.marker = 2;
    auto bc2 = classify_boundary(m2, {2});
    CHECK(bc2.dirichlet_nodes.size() == 48);
    m2.boundary_facets[0].marker = 3;  // mixed markers: 3 stays neumann
    auto bc3 = classify_boundary(m2, {2});
    CHECK(bc3.neumann_facets.count(3) == 1);
    CHECK(bc3.neumann_facets.at(3).size() == 1);
    MeshStats st = mesh_stats(m);
    CHECK(st.n_nodes == 217);
    CHECK(st.n_interior == 169);
    CHECK(st.n_elements == m.n_elements());
    CHECK(st.max_element_size <= 0.01);
}

TEST_CASE("ring count tracks max_area") {
    CHECK(disk_mesh_rings(0.0251076) == 6);
    CHECK(disk_mesh_rings(0.00980765) == 9);
}
