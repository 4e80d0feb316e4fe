#ifndef NEUROFEM_FEM_HPP
#define NEUROFEM_FEM_HPP

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "sparse.hpp"

namespace neurofem {

using ScalarField = std::function<double(double, double)>;

// Assembled P1 system over interior (non-Dirichlet) nodes. A carries the
// weak form's negative sign, so -A is positive definite.
struct FemSystem {
    CsrMatrix a;
    std::vector<double> b;
    std::vector<std::size_t> interior_nodes;          // system index -> mesh node
    std::map<std::size_t, std::size_t> interior_map;  // mesh node -> system index
    std::size_t n() const { return b.size(); }
};

// Entry (i,j) = -area * (grad phi_i . grad phi_j), constant P1 gradients.
std::array<std::array<double, 3>, 3> local_stiffness(
    const std::array<std::array<double, 2>, 3>& verts);

// 3-point edge-midpoint quadrature; exact for f of polynomial degree <= 2.
std::array<double, 3> local_load(const std::array<std::array<double, 2>, 3>& verts,
                                 const ScalarField& f);

FemSystem assemble(const Mesh& mesh, const ScalarField& f, const BoundaryClass& bc,
                   const std::map<int, double>& neumann_flux = {});

double analytic_u(double x, double y);
double forcing_f1(double x, double y);
double forcing_f2(double x, double y);

// Nodal values of the analytic solution at the system's interior nodes.
std::vector<double> analytic_on_system(const Mesh& mesh, const FemSystem& sys);

// ||a - b|| / ||b||
double rel_error(const std::vector<double>& a, const std::vector<double>& b);

// A as Matrix Market; b and interior_map as CSV (system_index, mesh_node, x, y, b_value).
void export_system(const FemSystem& sys, const Mesh& mesh,
                   const std::string& matrix_path, const std::string& vector_path);
std::vector<double> read_rhs_csv(const std::string& path);

}  // namespace neurofem

#endif
