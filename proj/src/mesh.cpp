#include "mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "rng.hpp"

namespace neurofem {

namespace {

constexpr double kPi = std::numbers::pi;

// Fixed constant of the ring generator; chosen so the per-band average
// triangle area pi/(6 K^2) sits below max_area with margin for the spread
// between the largest and average triangle in a band.
constexpr double kRingAreaRef = 5.0;

}  // namespace

double triangle_area(const std::array<double, 3>& a, const std::array<double, 3>& b,
                     const std::array<double, 3>& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double element_measure(const Mesh& mesh, std::size_t e) {
    const auto& el = mesh.elements[e];
    if (el.size() == 3) {
        return std::abs(triangle_area(mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]));
    }
    if (el.size() == 4) {
        const auto& p0 = mesh.nodes[el[0]];
        std::array<std::array<double, 3>, 3> d;
        for (int k = 0; k < 3; ++k)
            for (int c = 0; c < 3; ++c) d[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] =
                mesh.nodes[el[static_cast<std::size_t>(k) + 1]][static_cast<std::size_t>(c)] - p0[static_cast<std::size_t>(c)];
        double det = d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1]) -
                     d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0]) +
                     d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]);
        return std::abs(det) / 6.0;
    }
    throw StructuralError("element_measure: unsupported element arity");
}

std::size_t disk_mesh_rings(double max_area) {
    if (!(max_area > 0.0) || !(max_area < kPi))
        throw DomainError("gen_disk_mesh: max_area must be in (0, pi)");
    double k = std::sqrt(kPi / (max_area * kRingAreaRef));
    std::size_t rings = static_cast<std::size_t>(std::ceil(k));
    if (rings < 1) rings = 1;
    return rings;
}

Mesh gen_disk_mesh(double max_area, double jitter) {
    if (jitter < 0.0 || jitter >= 0.5)
        throw DomainError("gen_disk_mesh: jitter must be in [0, 0.5)");
    const std::size_t rings = disk_mesh_rings(max_area);
    // nodes = 1 + 3 K (K + 1)
    if (1.0 + 3.0 * static_cast<double>(rings) * (static_cast<double>(rings) + 1.0) > 1e7)
        throw CapacityError("gen_disk_mesh: max_area implies more than 10^7 nodes");

    Mesh mesh;
    mesh.dim = 2;
    std::vector<std::size_t> ring_start(rings + 1, 0);  // index of first node of each ring
    mesh.nodes.push_back({0.0, 0.0, 0.0});
    for (std::size_t k = 1; k <= rings; ++k) {
        ring_start[k] = mesh.nodes.size();
        std::size_t n_k = 6 * k;
        double r = static_cast<double>(k) / static_cast<double>(rings);
        if (k == rings) r = 1.0;  // boundary lands exactly on the unit circle
        for (std::size_t j = 0; j < n_k; ++j) {
            double a = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_k);
            double rj = r, aj = a;
            if (jitter > 0.0) {
                // deterministic perturbation keyed by node index; the
                // boundary ring only slides along the circle
                std::size_t idx = mesh.nodes.size();
                double u1 = static_cast<double>(noise_word(99, idx, 0) & 0xFFFFFF) /
                                16777216.0 - 0.5;
                double u2 = static_cast<double>(noise_word(99, idx, 1) & 0xFFFFFF) /
                                16777216.0 - 0.5;
                aj += u1 * jitter * 2.0 * kPi / static_cast<double>(n_k);
                if (k < rings)
                    rj += u2 * jitter * 0.857 / static_cast<double>(rings);
            }
            mesh.nodes.push_back({rj * std::cos(aj), rj * std::sin(aj), 0.0});
        }
    }

    auto add_tri = [&mesh](std::size_t a, std::size_t b, std::size_t c) {
        if (triangle_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0.0) std::swap(b, c);
        mesh.elements.push_back({a, b, c});
    };

    // center fan
    for (std::size_t j = 0; j < 6; ++j)
        add_tri(0, ring_start[1] + j, ring_start[1] + (j + 1) % 6);

    // angular sweep between consecutive rings
    for (std::size_t k = 2; k <= rings; ++k) {
        std::size_t n_in = 6 * (k - 1), n_out = 6 * k;
        std::size_t si = ring_start[k - 1], so = ring_start[k];
        std::size_t i = 0, j = 0;
        while (i < n_in || j < n_out) {
            double next_in = i < n_in
                ? 2.0 * kPi * static_cast<double>(i + 1) / static_cast<double>(n_in)
                : std::numeric_limits<double>::infinity();
            double next_out = j < n_out
                ? 2.0 * kPi * static_cast<double>(j + 1) / static_cast<double>(n_out)
                : std::numeric_limits<double>::infinity();
            if (next_out <= next_in) {
                add_tri(si + i % n_in, so + j % n_out, so + (j + 1) % n_out);
                ++j;
            } else {
                add_tri(si + i % n_in, so + j % n_out, si + (i + 1) % n_in);
                ++i;
            }
        }
    }

    std::size_t n_bnd = 6 * rings;
    for (std::size_t j = 0; j < n_bnd; ++j) {
        BoundaryFacet f;
        f.nodes = {ring_start[rings] + j, ring_start[rings] + (j + 1) % n_bnd};
        f.marker = 1;
        mesh.boundary_facets.push_back(f);
    }
    return mesh;
}

BoundaryClass classify_boundary(const Mesh& mesh, const std::set<int>& dirichlet_markers) {
    std::set<int> present;
    for (const auto& f : mesh.boundary_facets) present.insert(f.marker);
    for (int m : dirichlet_markers) {
        if (!present.count(m))
            throw DomainError("classify_boundary: marker " + std::to_string(m) +
                              " not present in mesh");
    }
    BoundaryClass bc;
    for (const auto& f : mesh.boundary_facets) {
        if (dirichlet_markers.count(f.marker)) {
            for (std::size_t n : f.nodes) bc.dirichlet_nodes.insert(n);
        } else {
            bc.neumann_facets[f.marker].push_back(f);
        }
    }
    return bc;
}

MeshStats mesh_stats(const Mesh& mesh) {
    MeshStats st;
    st.n_nodes = mesh.n_nodes();
    st.n_elements = mesh.n_elements();
    std::set<std::size_t> on_boundary;
    for (const auto& f : mesh.boundary_facets)
        for (std::size_t n : f.nodes) on_boundary.insert(n);
    st.n_interior = st.n_nodes - on_boundary.size();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e)
        st.max_element_size = std::max(st.max_element_size, element_measure(mesh, e));
    return st;
}

namespace {

std::string next_content_line(std::istream& in, std::size_t& lineno) {
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) return line;
    }
    throw ParseError("parse_gmsh: unexpected end of file at line " + std::to_string(lineno));
}

}  // namespace

Mesh parse_gmsh(std::istream& in) {
    std::size_t lineno = 0;
    std::string line = next_content_line(in, lineno);
    if (line != "$MeshFormat")
        throw ParseError("parse_gmsh: expected $MeshFormat at line " + std::to_string(lineno));
    line = next_content_line(in, lineno);
    {
        std::istringstream fs(line);
        double version = 0.0;
        int file_type = 0;
        fs >> version >> file_type;
        if (std::abs(version - 2.2) > 1e-9 || file_type != 0)
            throw ParseError("parse_gmsh: unsupported MSH version/type '" + line +
                             "' at line " + std::to_string(lineno) + " (need ASCII 2.2)");
    }
    line = next_content_line(in, lineno);
    if (line != "$EndMeshFormat")
        throw ParseError("parse_gmsh: expected $EndMeshFormat at line " + std::to_string(lineno));

    line = next_content_line(in, lineno);
    if (line != "$Nodes")
        throw ParseError("parse_gmsh: expected $Nodes at line " + std::to_string(lineno));
    std::size_t n_nodes = std::stoul(next_content_line(in, lineno));

    Mesh mesh;
    std::unordered_map<long long, std::size_t> id_map;
    id_map.reserve(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        std::istringstream ns(next_content_line(in, lineno));
        long long id = 0;
        double x = 0, y = 0, z = 0;
        if (!(ns >> id >> x >> y >> z))
            throw ParseError("parse_gmsh: bad node at line " + std::to_string(lineno));
        id_map[id] = mesh.nodes.size();
        mesh.nodes.push_back({x, y, z});
    }
    line = next_content_line(in, lineno);
    if (line != "$EndNodes")
        throw ParseError("parse_gmsh: expected $EndNodes at line " + std::to_string(lineno));

    line = next_content_line(in, lineno);
    if (line != "$Elements")
        throw ParseError("parse_gmsh: expected $Elements at line " + std::to_string(lineno));
    std::size_t n_elems = std::stoul(next_content_line(in, lineno));

    struct RawElem {
        int type;
        int phys;
        std::vector<std::size_t> nodes;
    };
    std::vector<RawElem> raw;
    raw.reserve(n_elems);
    for (std::size_t k = 0; k < n_elems; ++k) {
        std::istringstream es(next_content_line(in, lineno));
        long long id = 0;
        int type = 0, ntags = 0;
        if (!(es >> id >> type >> ntags))
            throw ParseError("parse_gmsh: bad element at line " + std::to_string(lineno));
        int n_vert;
        switch (type) {
            case 1: n_vert = 2; break;
            case 2: n_vert = 3; break;
            case 4: n_vert = 4; break;
            case 15: n_vert = 1; break;
            default:
                throw ParseError("parse_gmsh: unsupported element type " +
                                 std::to_string(type) + " at line " + std::to_string(lineno));
        }
        RawElem re;
        re.type = type;
        re.phys = 0;
        for (int t = 0; t < ntags; ++t) {
            int tag = 0;
            if (!(es >> tag))
                throw ParseError("parse_gmsh: bad tags at line " + std::to_string(lineno));
            if (t == 0) re.phys = tag;
        }
        for (int v = 0; v < n_vert; ++v) {
            long long nid = 0;
            if (!(es >> nid))
                throw ParseError("parse_gmsh: missing vertex at line " + std::to_string(lineno));
            auto it = id_map.find(nid);
            if (it == id_map.end())
                throw StructuralError("parse_gmsh: dangling node reference " +
                                      std::to_string(nid) + " at line " + std::to_string(lineno));
            re.nodes.push_back(it->second);
        }
        raw.push_back(std::move(re));
    }
    line = next_content_line(in, lineno);
    if (line != "$EndElements")
        throw ParseError("parse_gmsh: expected $EndElements at line " + std::to_string(lineno));

    bool has_tets = std::any_of(raw.begin(), raw.end(),
                                [](const RawElem& e) { return e.type == 4; });
    mesh.dim = has_tets ? 3 : 2;
    for (auto& re : raw) {
        if (re.type == 15) continue;
        bool is_volume = has_tets ? re.type == 4 : re.type == 2;
        if (is_volume) {
            if (!has_tets) {
                // enforce counterclockwise storage
                if (triangle_area(mesh.nodes[re.nodes[0]], mesh.nodes[re.nodes[1]],
                                  mesh.nodes[re.nodes[2]]) < 0.0)
                    std::swap(re.nodes[1], re.nodes[2]);
            }
            mesh.elements.push_back(re.nodes);
        } else if (re.type == 1 || (has_tets && re.type == 2)) {
            BoundaryFacet f;
            f.nodes = re.nodes;
            f.marker = re.phys;
            mesh.boundary_facets.push_back(f);
        }
    }
    return mesh;
}

Mesh parse_gmsh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("parse_gmsh: cannot open " + path);
    return parse_gmsh(in);
}

void write_gmsh(const Mesh& mesh, std::ostream& out) {
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << std::setprecision(17);
    out << "$Nodes\n" << mesh.n_nodes() << '\n';
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
        out << i + 1 << ' ' << mesh.nodes[i][0] << ' ' << mesh.nodes[i][1] << ' '
            << mesh.nodes[i][2] << '\n';
    }
    out << "$EndNodes\n";
    out << "$Elements\n" << mesh.boundary_facets.size() + mesh.n_elements() << '\n';
    std::size_t id = 1;
    for (const auto& f : mesh.boundary_facets) {
        int type = f.nodes.size() == 2 ? 1 : 2;
        out << id++ << ' ' << type << " 2 " << f.marker << ' ' << f.marker;
        for (std::size_t n : f.nodes) out << ' ' << n + 1;
        out << '\n';
    }
    for (const auto& el : mesh.elements) {
        int type = el.size() == 3 ? 2 : 4;
        out << id++ << ' ' << type << " 2 0 0";
        for (std::size_t n : el) out << ' ' << n + 1;
        out << '\n';
    }
    out << "$EndElements\n";
}

void write_gmsh_file(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("write_gmsh: cannot open " + path);
    write_gmsh(mesh, out);
}

std::string mesh_to_json(const Mesh& mesh) {
    nlohmann::json j;
    j["dim"] = mesh.dim;
    j["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes) j["nodes"].push_back({p[0], p[1], p[2]});
    j["elements"] = mesh.elements;
    j["boundary_facets"] = nlohmann::json::array();
    for (const auto& f : mesh.boundary_facets)
        j["boundary_facets"].push_back({{"nodes", f.nodes}, {"marker", f.marker}});
    return j.dump(2);
}

Mesh mesh_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Mesh mesh;
    mesh.dim = j.at("dim").get<int>();
    for (const auto& p : j.at("nodes"))
        mesh.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                              p.at(2).get<double>()});
    mesh.elements = j.at("elements").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& f : j.at("boundary_facets")) {
        BoundaryFacet bf;
        bf.nodes = f.at("nodes").get<std::vector<std::size_t>>();
        bf.marker = f.at("marker").get<int>();
        mesh.boundary_facets.push_back(bf);
    }
    return mesh;
}

}  // namespace neurofem
