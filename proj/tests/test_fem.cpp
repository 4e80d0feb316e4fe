#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "fem.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

using namespace neurofem;

namespace {

// cyclic Jacobi eigenvalue iteration, used as the definiteness oracle
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    return eig;
}

}  // namespace

TEST_CASE("local stiffness matches the hand-integrated reference triangle") {
    // unit right triangle (0,0),(1,0),(0,1): gradients are constant and the
    // entries integrate to -[[1,-1/2,-1/2],[-1/2,1/2,0],[-1/2,0,1/2]]
    auto k = local_stiffness({{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}});
    const double ref[3][3] = {{-1.0, 0.5, 0.5}, {0.5, -0.5, 0.0}, {0.5, 0.0, -0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k[i][j] == doctest::Approx(ref[i][j]).epsilon(1e-12));
}

TEST_CASE("local stiffness is translation and scale covariant") {
    auto k1 = local_stiffness({{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}});
    auto k2 = local_stiffness({{{3.0, -2.0}, {4.0, -2.0}, {3.0, -1.0}}});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k2[i][j] == doctest::Approx(k1[i][j]).epsilon(1e-12));
    // stiffness is scale invariant in 2D
    auto k3 = local_stiffness({{{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}}});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k3[i][j] == doctest::Approx(k1[i][j]).epsilon(1e-12));
}

TEST_CASE("local load quadrature is exact for quadratics") {
    // f = x^2 over the unit right triangle; exact integral of phi_1*f is
    // 1/60 * (3*x1^2 + ...): use the constant-f sanity plus a quadratic check
    auto lc = local_load({{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}}, [](double, double) { return 6.0; });
    for (int i = 0; i < 3; ++i) CHECK(lc[i] == doctest::Approx(1.0).epsilon(1e-12));
    // exact: int phi_0 * x dx over the triangle = 1/24
    auto lx = local_load({{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}}, [](double x, double) { return x; });
    CHECK(lx[0] == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
    CHECK(lx[1] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    CHECK(lx[2] == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
}

TEST_CASE("assembled system: A symmetric, -A positive definite") {
    Mesh m = gen_disk_mesh(0.06);  // small instance for the dense oracle
    auto bc = classify_boundary(m, {1});
    auto sys = assemble(m, forcing_f1, bc);
    REQUIRE(sys.n() < 100);
    CHECK(sys.a.is_symmetric(1e-12));
    std::vector<std::vector<double>> dense(sys.n(), std::vector<double>(sys.n()));
    for (std::size_t i = 0; i < sys.n(); ++i)
        for (std::size_t j = 0; j < sys.n(); ++j) dense[i][j] = -sys.a.at(i, j);
    for (double ev : jacobi_eigenvalues(dense)) CHECK(ev > 0.0);
}

TEST_CASE("interior map excludes dirichlet nodes") {
    Mesh m = gen_disk_mesh(0.06);
    auto bc = classify_boundary(m, {1});
    auto sys = assemble(m, forcing_f1, bc);
    CHECK(sys.n() == m.n_nodes() - bc.dirichlet_nodes.size());
    for (auto n : bc.dirichlet_nodes) CHECK(sys.interior_map.count(n) == 0);
    for (std::size_t i = 0; i < sys.interior_nodes.size(); ++i)
        CHECK(sys.interior_map.at(sys.interior_nodes[i]) == i);
}

TEST_CASE("conventional solution converges to the analytic one") {
    double prev = 1e9;
    for (double area : {0.02, 0.005}) {
        Mesh m = gen_disk_mesh(area);
        auto bc = classify_boundary(m, {1});
        auto sys = assemble(m, forcing_f1, bc);
        CsrMatrix na = sys.a;
        for (double& v : na.values) v = -v;
        std::vector<double> nb = sys.b;
        for (double& v : nb) v = -v;
        auto cg = cg_solve(na, nb, 1e-12, 10 * sys.n());
        REQUIRE(cg.converged);
        double err = rel_error(cg.x, analytic_on_system(m, sys));
        CHECK(err < prev);
        CHECK(err < 0.01);
        prev = err;
    }
}

TEST_CASE("forcing and analytic evaluators") {
    CHECK(analytic_u(0.0, 0.0) == doctest::Approx(5.0));
    CHECK(analytic_u(1.0, 0.0) == doctest::Approx(0.0));
    CHECK(forcing_f1(0.3, -0.7) == doctest::Approx(-20.0));
    CHECK(forcing_f2(0.25, -0.13) == doctest::Approx(12.0));
}

TEST_CASE("neumann flux enters the load vector") {
    Mesh m = gen_disk_mesh(0.06);
    // relabel the boundary as marker 2 so it classifies as neumann
    for (auto& f : m.boundary_facets) f.marker = 2;
    Mesh tagged = m;
    tagged.boundary_facets.push_back({{0, 1}, 9});  // dummy dirichlet marker owner
    auto bc = classify_boundary(tagged, {9});
    auto sys0 = assemble(tagged, forcing_f1, bc, {{2, 0.0}});
    auto sys1 = assemble(tagged, forcing_f1, bc, {{2, 2.5}});
    CHECK(sys0.n() == m.n_nodes() - 2);  // only the two dummy dirichlet nodes drop
    double total_diff = 0.0;
    for (std::size_t i = 0; i < sys0.n(); ++i) total_diff += sys1.b[i] - sys0.b[i];
    // sum of boundary-edge loads = flux * circumference of the polygon
    double perim = 0.0;
    for (const auto& f : m.boundary_facets) {
        auto& a = m.nodes[f.nodes[0]];
        auto& b = m.nodes[f.nodes[1]];
        perim += std::hypot(a[0] - b[0], a[1] - b[1]);
    }
    CHECK(total_diff == doctest::Approx(2.5 * perim).epsilon(1e-10));
}

TEST_CASE("system export and rhs csv round-trip") {
    Mesh m = gen_disk_mesh(0.06);
    auto bc = classify_boundary(m, {1});
    auto sys = assemble(m, forcing_f1, bc);
    export_system(sys, m, "/tmp/nf_test_A.mtx", "/tmp/nf_test_b.csv");
    CsrMatrix a = mm_read_file("/tmp/nf_test_A.mtx");
    CHECK(a.n_rows == sys.n());
    for (std::size_t k = 0; k < sys.a.nnz(); ++k) CHECK(a.values[k] == sys.a.values[k]);
    auto b = read_rhs_csv("/tmp/nf_test_b.csv");
    REQUIRE(b.size() == sys.b.size());
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == sys.b[i]);
    std::remove("/tmp/nf_test_A.mtx");
    std::remove("/tmp/nf_test_b.csv");
}
