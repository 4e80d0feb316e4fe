#include "fem.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace neurofem {

std::array<std::array<double, 3>, 3> local_stiffness(
    const std::array<std::array<double, 2>, 3>& v) {
    double area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) -
                   (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    if (std::abs(area2) <= 2e-14) throw DomainError("local_stiffness: degenerate triangle");
    double area = 0.5 * std::abs(area2);
    // grad phi_i = (b_i, c_i) / area2 with b_i = y_j - y_k, c_i = x_k - x_j
    std::array<double, 3> gb, gc;
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        gb[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(j)][1] - v[static_cast<std::size_t>(k)][1];
        gc[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(k)][0] - v[static_cast<std::size_t>(j)][0];
    }
    std::array<std::array<double, 3>, 3> m;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            m[i][j] = -area * (gb[i] * gb[j] + gc[i] * gc[j]) / (area2 * area2);
        }
    }
    return m;
}

std::array<double, 3> local_load(const std::array<std::array<double, 2>, 3>& v,
                                 const ScalarField& f) {
    double area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) -
                   (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    if (std::abs(area2) <= 2e-14) throw DomainError("local_load: degenerate triangle");
    double area = 0.5 * std::abs(area2);
    // Edge midpoints carry weight 1/3 each; phi_i is 1/2 on the two midpoints
    // adjacent to vertex i and 0 on the opposite one.
    std::array<double, 3> load{0.0, 0.0, 0.0};
    for (std::size_t e = 0; e < 3; ++e) {
        std::size_t p = (e + 1) % 3, q = (e + 2) % 3;  // midpoint opposite vertex e
        double mx = 0.5 * (v[p][0] + v[q][0]);
        double my = 0.5 * (v[p][1] + v[q][1]);
        double fv = f(mx, my);
        load[p] += area / 3.0 * 0.5 * fv;
        load[q] += area / 3.0 * 0.5 * fv;
    }
    return load;
}

FemSystem assemble(const Mesh& mesh, const ScalarField& f, const BoundaryClass& bc,
                   const std::map<int, double>& neumann_flux) {
    if (mesh.dim != 2) throw DomainError("assemble: only 2D P1 assembly is supported");
    for (const auto& [marker, facets] : bc.neumann_facets) {
        if (!neumann_flux.count(marker))
            throw DomainError("assemble: missing Neumann flux for marker " +
                              std::to_string(marker));
        (void)facets;
    }

    FemSystem sys;
    for (std::size_t n = 0; n < mesh.n_nodes(); ++n) {
        if (!bc.dirichlet_nodes.count(n)) {
            sys.interior_map[n] = sys.interior_nodes.size();
            sys.interior_nodes.push_back(n);
        }
    }
    std::size_t dim = sys.interior_nodes.size();
    if (dim == 0) throw DomainError("assemble: mesh has no interior nodes");

    std::vector<Triplet> trips;
    sys.b.assign(dim, 0.0);
    for (const auto& el : mesh.elements) {
        std::array<std::array<double, 2>, 3> verts;
        for (std::size_t v = 0; v < 3; ++v)
            verts[v] = {mesh.nodes[el[v]][0], mesh.nodes[el[v]][1]};
        auto ke = local_stiffness(verts);
        auto fe = local_load(verts, f);
        for (std::size_t i = 0; i < 3; ++i) {
            auto it_i = sys.interior_map.find(el[i]);
            if (it_i == sys.interior_map.end()) continue;  // Dirichlet row eliminated
            sys.b[it_i->second] += fe[i];
            for (std::size_t j = 0; j < 3; ++j) {
                auto it_j = sys.interior_map.find(el[j]);
                if (it_j == sys.interior_map.end()) continue;  // u=0 column, no correction
                trips.push_back({it_i->second, it_j->second, ke[i][j]});
            }
        }
    }
    // constant flux g per Neumann facet: g * length / 2 at each endpoint
    for (const auto& [marker, facets] : bc.neumann_facets) {
        double g = neumann_flux.at(marker);
        for (const auto& fac : facets) {
            const auto& p = mesh.nodes[fac.nodes[0]];
            const auto& q = mesh.nodes[fac.nodes[1]];
            double len = std::hypot(q[0] - p[0], q[1] - p[1]);
            for (std::size_t n : fac.nodes) {
                auto it = sys.interior_map.find(n);
                if (it != sys.interior_map.end()) sys.b[it->second] += g * len / 2.0;
            }
        }
    }
    sys.a = csr_from_triplets(trips, dim, dim);
    return sys;
}

double analytic_u(double x, double y) { return 5.0 * (1.0 - x * x - y * y); }

double forcing_f1(double, double) { return -20.0; }

double forcing_f2(double x, double y) {
    return 12.0 - 60.0 * (x - 0.25) * (x - 0.25) - 60.0 * (y + 0.13) * (y + 0.13);
}

std::vector<double> analytic_on_system(const Mesh& mesh, const FemSystem& sys) {
    std::vector<double> u(sys.n());
    for (std::size_t i = 0; i < sys.n(); ++i) {
        const auto& p = mesh.nodes[sys.interior_nodes[i]];
        u[i] = analytic_u(p[0], p[1]);
    }
    return u;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw StructuralError("rel_error: dimension mismatch");
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
    double den = norm2(b);
    if (den == 0.0) throw DomainError("rel_error: zero reference norm");
    return std::sqrt(num) / den;
}

void export_system(const FemSystem& sys, const Mesh& mesh,
                   const std::string& matrix_path, const std::string& vector_path) {
    mm_write_file(sys.a, matrix_path);
    std::ofstream out(vector_path);
    if (!out) throw ParseError("export_system: cannot open " + vector_path);
    out << std::setprecision(17);
    out << "system_index,mesh_node,x,y,b_value\n";
    for (std::size_t i = 0; i < sys.n(); ++i) {
        std::size_t n = sys.interior_nodes[i];
        out << i << ',' << n << ',' << mesh.nodes[n][0] << ',' << mesh.nodes[n][1] << ','
            << sys.b[i] << '\n';
    }
}

std::vector<double> read_rhs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_rhs_csv: cannot open " + path);
    std::vector<double> b;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        // accept either a bare value per line or the export_system schema
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.empty()) continue;
        const std::string& v = cells.size() >= 5 ? cells[4] : cells.back();
        try {
            b.push_back(std::stod(v));
        } catch (const std::exception&) {
            if (lineno == 1) continue;  // header row
            throw ParseError("read_rhs_csv: bad value at line " + std::to_string(lineno));
        }
    }
    return b;
}

}  // namespace neurofem
