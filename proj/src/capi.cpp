#include "neurofem.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fem.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "partition.hpp"
#include "sim_fixed.hpp"
#include "sim_float.hpp"
#include "sparse.hpp"
#include "studies.hpp"

using json = nlohmann::json;
using namespace neurofem;

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const DivergenceError& e) {
        return fail(NF_ERR_DIVERGE, e.what());
    } catch (const QuantizationError& e) {
        return fail(NF_ERR_QUANTIZE, e.what());
    } catch (const CapacityError& e) {
        return fail(NF_ERR_CAPACITY, e.what());
    } catch (const ParseError& e) {
        return fail(NF_ERR_PARSE, e.what());
    } catch (const NumericalError& e) {
        return fail(NF_ERR_NUMERIC, e.what());
    } catch (const StructuralError& e) {
        return fail(NF_ERR_STRUCTURE, e.what());
    } catch (const DomainError& e) {
        return fail(NF_ERR_DOMAIN, e.what());
    } catch (const json::exception& e) {
        return fail(NF_ERR_PARSE, e.what());
    } catch (const std::exception& e) {
        return fail(NF_ERR_UNKNOWN, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

SnnParams to_params(const nf_params* p) {
    SnnParams out;
    if (p) {
        out.npm = p->npm;
        out.gamma_mag = p->gamma_mag;
        out.lambda_d = p->lambda_d;
        out.lambda_v = p->lambda_v;
        out.k_p = p->k_p;
        out.k_i = p->k_i;
        out.sigma_v = p->sigma_v;
        out.dt = p->dt;
    }
    return out;
}

}  // namespace

struct nf_mesh {
    Mesh mesh;
};

struct nf_system {
    FemSystem sys;
};

struct nf_network {
    SnnNetwork net;
};

struct nf_fixed_network {
    FixedNetwork net;
};

struct nf_result {
    std::vector<double> values;
    std::map<std::string, double> metrics;
    std::string csv;
};

extern "C" {

const char* nf_version(void) { return "1.0.0"; }

const char* nf_last_error(void) { return g_last_error.c_str(); }

void nf_string_free(char* s) { std::free(s); }

/* ---- mesh ---------------------------------------------------------- */

int nf_mesh_gen_disk(double max_area, double jitter, nf_mesh** out) {
    if (!out) return fail(NF_ERR_DOMAIN, "out is null");
    return guarded([&] {
        *out = new nf_mesh{gen_disk_mesh(max_area, jitter)};
        return NF_OK;
    });
}

int nf_mesh_read_msh(const char* path, nf_mesh** out) {
    if (!path || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        *out = new nf_mesh{parse_gmsh_file(path)};
        return NF_OK;
    });
}

int nf_mesh_write_msh(const nf_mesh* mesh, const char* path) {
    if (!mesh || !path) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        write_gmsh_file(mesh->mesh, path);
        return NF_OK;
    });
}

int nf_mesh_read_json(const char* path, nf_mesh** out) {
    if (!path || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        std::ifstream in(path);
        if (!in) throw ParseError(std::string("cannot open ") + path);
        std::stringstream ss;
        ss << in.rdbuf();
        *out = new nf_mesh{mesh_from_json(ss.str())};
        return NF_OK;
    });
}

int nf_mesh_write_json(const nf_mesh* mesh, const char* path) {
    if (!mesh || !path) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        std::ofstream outf(path);
        if (!outf) throw ParseError(std::string("cannot open ") + path);
        outf << mesh_to_json(mesh->mesh);
        return NF_OK;
    });
}

int nf_mesh_stats_json(const nf_mesh* mesh, char** out_json) {
    if (!mesh || !out_json) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        MeshStats st = mesh_stats(mesh->mesh);
        json j = {{"n_nodes", st.n_nodes},
                  {"n_interior", st.n_interior},
                  {"n_elements", st.n_elements},
                  {"max_element_size", st.max_element_size}};
        *out_json = dup_string(j.dump(2));
        return NF_OK;
    });
}

size_t nf_mesh_n_nodes(const nf_mesh* mesh) { return mesh ? mesh->mesh.n_nodes() : 0; }

size_t nf_mesh_n_elements(const nf_mesh* mesh) { return mesh ? mesh->mesh.n_elements() : 0; }

void nf_mesh_free(nf_mesh* mesh) { delete mesh; }

/* ---- assembly ------------------------------------------------------ */

int nf_assemble(const nf_mesh* mesh, int forcing, const int* dirichlet_tags,
                size_t n_dirichlet, const int* neumann_tags, const double* neumann_flux,
                size_t n_neumann, nf_system** out) {
    if (!mesh || !out) return fail(NF_ERR_DOMAIN, "null argument");
    if (forcing != 1 && forcing != 2) return fail(NF_ERR_DOMAIN, "forcing must be 1 or 2");
    if (n_neumann > 0 && (!neumann_tags || !neumann_flux))
        return fail(NF_ERR_DOMAIN, "neumann arrays are null");
    return guarded([&] {
        std::set<int> dtags;
        if (dirichlet_tags)
            for (size_t i = 0; i < n_dirichlet; ++i) dtags.insert(dirichlet_tags[i]);
        if (dtags.empty()) dtags.insert(1);
        std::map<int, double> flux;
        for (size_t i = 0; i < n_neumann; ++i) flux[neumann_tags[i]] = neumann_flux[i];
        auto bc = classify_boundary(mesh->mesh, dtags);
        const ScalarField& f = forcing == 1 ? ScalarField(forcing_f1) : ScalarField(forcing_f2);
        *out = new nf_system{assemble(mesh->mesh, f, bc, flux)};
        return NF_OK;
    });
}

size_t nf_system_n(const nf_system* sys) { return sys ? sys->sys.n() : 0; }

int nf_system_export(const nf_system* sys, const nf_mesh* mesh, const char* matrix_path,
                     const char* vector_path) {
    if (!sys || !mesh || !matrix_path || !vector_path)
        return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        export_system(sys->sys, mesh->mesh, matrix_path, vector_path);
        return NF_OK;
    });
}

void nf_system_free(nf_system* sys) { delete sys; }

/* ---- results ------------------------------------------------------- */

size_t nf_result_size(const nf_result* res) { return res ? res->values.size() : 0; }

int nf_result_values(const nf_result* res, double* buf, size_t cap) {
    if (!res || !buf) return fail(NF_ERR_DOMAIN, "null argument");
    if (cap < res->values.size()) return fail(NF_ERR_DOMAIN, "buffer too small");
    std::memcpy(buf, res->values.data(), res->values.size() * sizeof(double));
    return NF_OK;
}

size_t nf_result_metric_count(const nf_result* res) { return res ? res->metrics.size() : 0; }

int nf_result_metric_name(const nf_result* res, size_t index, char** out_name) {
    if (!res || !out_name) return fail(NF_ERR_DOMAIN, "null argument");
    if (index >= res->metrics.size()) return fail(NF_ERR_DOMAIN, "metric index out of range");
    auto it = res->metrics.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(index));
    *out_name = dup_string(it->first);
    return NF_OK;
}

int nf_result_metric(const nf_result* res, const char* name, double* out) {
    if (!res || !name || !out) return fail(NF_ERR_DOMAIN, "null argument");
    auto it = res->metrics.find(name);
    if (it == res->metrics.end())
        return fail(NF_ERR_DOMAIN, std::string("no metric named ") + name);
    *out = it->second;
    return NF_OK;
}

const char* nf_result_csv(const nf_result* res) { return res ? res->csv.c_str() : ""; }

void nf_result_free(nf_result* res) { delete res; }

/* ---- solvers ------------------------------------------------------- */

void nf_params_default(nf_params* p) {
    if (!p) return;
    SnnParams d;
    p->npm = d.npm;
    p->gamma_mag = d.gamma_mag;
    p->lambda_d = d.lambda_d;
    p->lambda_v = d.lambda_v;
    p->k_p = d.k_p;
    p->k_i = d.k_i;
    p->sigma_v = d.sigma_v;
    p->dt = d.dt;
}

int nf_solve_cg(const nf_system* sys, double tol, size_t max_iter, nf_result** out) {
    if (!sys || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        CsrMatrix na = sys->sys.a;
        for (double& v : na.values) v = -v;
        std::vector<double> nb = sys->sys.b;
        for (double& v : nb) v = -v;
        auto cg = cg_solve(na, nb, tol, max_iter);
        auto* res = new nf_result;
        res->values = cg.x;
        res->metrics["iterations"] = static_cast<double>(cg.iterations);
        res->metrics["rel_residual"] = cg.final_rel_residual;
        res->metrics["converged"] = cg.converged ? 1.0 : 0.0;
        std::ostringstream os;
        os << "index,x\n";
        for (size_t i = 0; i < cg.x.size(); ++i) os << i << ',' << cg.x[i] << '\n';
        res->csv = os.str();
        *out = res;
        return NF_OK;
    });
}

int nf_network_build(const nf_system* sys, const nf_params* params, nf_network** out) {
    if (!sys || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        *out = new nf_network{build_network(sys->sys.a, sys->sys.b, to_params(params))};
        return NF_OK;
    });
}

int nf_network_export(const nf_network* net, const char* dir) {
    if (!net || !dir) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        export_network(net->net, dir);
        return NF_OK;
    });
}

int nf_network_import(const char* dir, nf_network** out) {
    if (!dir || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        *out = new nf_network{import_network(dir)};
        return NF_OK;
    });
}

int nf_network_quantize(const nf_network* net, nf_fixed_network** out) {
    if (!net || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        *out = new nf_fixed_network{quantize_network(net->net)};
        return NF_OK;
    });
}

size_t nf_network_n_neurons(const nf_network* net) { return net ? net->net.n_neurons() : 0; }

void nf_network_free(nf_network* net) { delete net; }

void nf_fixed_network_free(nf_fixed_network* net) { delete net; }

int nf_solve_float(const nf_network* net, size_t steps, size_t window, uint64_t seed,
                   int p_only, nf_result** out) {
    if (!net || !out) return fail(NF_ERR_DOMAIN, "null argument");
    if (window == 0 || window > steps)
        return fail(NF_ERR_DOMAIN, "window must be in [1, steps]");
    return guarded([&] {
        SimOptions opts;
        opts.estimate_windows = {window};
        auto trace = p_only ? run_p_only(net->net, steps, seed, opts)
                            : run(net->net, steps, seed, opts);
        auto* res = new nf_result;
        res->values = trace.window_estimates.at(window);
        res->metrics["rel_residual"] =
            rel_residual(net->net.system_a, res->values, net->net.system_b);
        double spikes = 0;
        for (auto c : trace.spike_counts) spikes += static_cast<double>(c);
        res->metrics["spike_rate"] =
            spikes / (static_cast<double>(steps) * static_cast<double>(net->net.n_neurons()));
        std::ostringstream os;
        os << "index,x\n";
        for (size_t i = 0; i < res->values.size(); ++i)
            os << i << ',' << res->values[i] << '\n';
        res->csv = os.str();
        *out = res;
        return NF_OK;
    });
}

int nf_solve_fixed(const nf_fixed_network* net, size_t steps, size_t window, uint64_t seed,
                   nf_result** out) {
    if (!net || !out) return fail(NF_ERR_DOMAIN, "null argument");
    if (window == 0 || window > steps)
        return fail(NF_ERR_DOMAIN, "window must be in [1, steps]");
    return guarded([&] {
        auto est = run_fixed_eval(net->net, steps, seed, window);
        auto* res = new nf_result;
        res->values = est;
        res->metrics["rel_residual"] =
            rel_residual(net->net.system_a, est, net->net.system_b);
        std::ostringstream os;
        os << "index,x\n";
        for (size_t i = 0; i < est.size(); ++i) os << i << ',' << est[i] << '\n';
        res->csv = os.str();
        *out = res;
        return NF_OK;
    });
}

int nf_run_fixed_epochs(const nf_fixed_network* net, size_t epoch_len, size_t n_epochs,
                        int transient, uint64_t seed, nf_result** out) {
    if (!net || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        EpochConfig cfg;
        cfg.epoch_len = epoch_len;
        cfg.n_epochs = n_epochs;
        cfg.transient = transient != 0;
        auto run = run_fixed(net->net, cfg, seed);
        auto* res = new nf_result;
        if (!run.epoch_solutions.empty()) res->values = run.epoch_solutions.back();
        res->metrics["saturations"] = static_cast<double>(run.saturation_count);
        double total = 0;
        std::ostringstream os;
        os << "epoch,transient,spike_count,mean_readout_residual\n";
        for (const auto& e : run.epochs) {
            total += static_cast<double>(e.spike_count);
            os << e.epoch << ',' << (e.transient ? 1 : 0) << ',' << e.spike_count << ','
               << e.mean_readout_residual << '\n';
        }
        res->metrics["spikes_total"] = total;
        res->csv = os.str();
        *out = res;
        return NF_OK;
    });
}

int nf_solve_ingested(const char* matrix_path, const char* rhs_path, const nf_params* params,
                      size_t steps, size_t window, uint64_t seed, nf_result** out) {
    if (!matrix_path || !rhs_path || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        auto ing = solve_ingested(matrix_path, rhs_path, to_params(params), steps, window,
                                  seed);
        auto* res = new nf_result;
        res->values = ing.solution;
        res->metrics["rel_residual"] = ing.rel_residual;
        res->metrics["deviation_from_cg"] = ing.deviation_from_cg;
        res->metrics["cg_baseline"] = ing.cg_baseline ? 1.0 : 0.0;
        res->csv = ing.csv;
        *out = res;
        return NF_OK;
    });
}

int nf_rel_error(const double* a, const double* b, size_t n, double* out) {
    if (!a || !b || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        std::vector<double> va(a, a + n), vb(b, b + n);
        *out = rel_error(va, vb);
        return NF_OK;
    });
}

/* ---- partitioning -------------------------------------------------- */

int nf_partition(const nf_mesh* mesh, const nf_system* sys, size_t n_chips, size_t npm,
                 size_t iterations, uint64_t seed, const char* out_csv, nf_result** out) {
    if (!mesh || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        auto part = partition_mesh(mesh->mesh, n_chips, iterations, 1.0, seed);
        auto layout = assign_cores(part, npm);
        auto* res = new nf_result;
        res->values.reserve(part.assignment.size());
        for (size_t a : part.assignment) res->values.push_back(static_cast<double>(a));
        res->metrics["iterations"] = static_cast<double>(part.iterations_run);
        PartitionMetrics pm;
        if (sys) {
            pm = partition_metrics(part, sys->sys.a);
            res->metrics["edge_cut"] = static_cast<double>(pm.edge_cut);
        } else {
            // load metrics only need the assignment; use an empty pattern
            CsrMatrix empty;
            empty.n_rows = empty.n_cols = part.assignment.size();
            empty.row_ptr.assign(part.assignment.size() + 1, 0);
            pm = partition_metrics(part, empty);
        }
        res->metrics["load_std"] = pm.load_std;
        res->metrics["max_load_ratio"] = pm.max_load_ratio;
        if (out_csv) export_partition_csv(part, layout, mesh->mesh, out_csv);
        std::ostringstream os;
        os << "node,chip,core\n";
        for (size_t i = 0; i < part.assignment.size(); ++i)
            os << i << ',' << part.assignment[i] << ',' << layout.core_of_node[i].second
               << '\n';
        res->csv = os.str();
        *out = res;
        return NF_OK;
    });
}

/* ---- studies ------------------------------------------------------- */

int nf_study_run(const char* name, const char* config_json, nf_result** out) {
    if (!name || !out) return fail(NF_ERR_DOMAIN, "null argument");
    return guarded([&] {
        StudyConfig cfg;
        if (config_json && *config_json) {
            json j = json::parse(config_json);
            if (j.contains("max_areas")) cfg.max_areas = j["max_areas"].get<std::vector<double>>();
            if (j.contains("npm")) cfg.npm_list = j["npm"].get<std::vector<std::size_t>>();
            if (j.contains("gamma")) cfg.gamma_list = j["gamma"].get<std::vector<double>>();
            if (j.contains("steps")) cfg.steps = j["steps"].get<std::size_t>();
            if (j.contains("window")) cfg.window = j["window"].get<std::size_t>();
            if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            if (j.contains("epoch_len")) cfg.epoch_len = j["epoch_len"].get<std::size_t>();
            if (j.contains("n_epochs")) cfg.n_epochs = j["n_epochs"].get<std::size_t>();
            if (j.contains("switch_step")) cfg.switch_step = j["switch_step"].get<std::size_t>();
            if (j.contains("mode")) cfg.mode = j["mode"].get<std::string>();
            if (j.contains("jitter")) cfg.jitter = j["jitter"].get<double>();
        }
        std::string n = name;
        StudyResult sr;
        if (n == "convergence") sr = study_convergence(cfg);
        else if (n == "residual") sr = study_residual_scaling(cfg);
        else if (n == "averaging") sr = study_averaging(cfg);
        else if (n == "switch") sr = study_switch_rhs(cfg);
        else if (n == "fixedpoint") sr = study_fixed_point(cfg);
        else if (n == "p-vs-pi") sr = study_p_vs_pi(cfg);
        else throw DomainError("unknown study: " + n);
        auto* res = new nf_result;
        res->metrics = sr.metrics;
        res->csv = sr.csv;
        *out = res;
        return NF_OK;
    });
}

}  // extern "C"
