// Command-line driver for the NeuroFEM toolkit. Talks to the core library
// exclusively through the C API in neurofem.h.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neurofem.h"

namespace {

[[noreturn]] void die(const std::string& context) {
    std::fprintf(stderr, "error: %s: %s\n", context.c_str(), nf_last_error());
    std::exit(1);
}

void check(int rc, const std::string& context) {
    if (rc != NF_OK) die(context);
}

struct MeshPtr {
    nf_mesh* p = nullptr;
    ~MeshPtr() { nf_mesh_free(p); }
};
struct SystemPtr {
    nf_system* p = nullptr;
    ~SystemPtr() { nf_system_free(p); }
};
struct NetworkPtr {
    nf_network* p = nullptr;
    ~NetworkPtr() { nf_network_free(p); }
};
struct FixedPtr {
    nf_fixed_network* p = nullptr;
    ~FixedPtr() { nf_fixed_network_free(p); }
};
struct ResultPtr {
    nf_result* p = nullptr;
    ~ResultPtr() { nf_result_free(p); }
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void load_or_gen_mesh(const std::string& mesh_path, double max_area, double jitter,
                      MeshPtr& mesh) {
    if (!mesh_path.empty()) {
        if (ends_with(mesh_path, ".json"))
            check(nf_mesh_read_json(mesh_path.c_str(), &mesh.p), "reading mesh " + mesh_path);
        else
            check(nf_mesh_read_msh(mesh_path.c_str(), &mesh.p), "reading mesh " + mesh_path);
    } else {
        check(nf_mesh_gen_disk(max_area, jitter, &mesh.p), "generating mesh");
    }
}

void write_text(const std::string& path, const char* text) {
    std::ofstream out(path);
    if (!out) {
        std::fprintf(stderr, "error: cannot open %s\n", path.c_str());
        std::exit(1);
    }
    out << text;
}

void print_metrics(const nf_result* res) {
    size_t n = nf_result_metric_count(res);
    for (size_t i = 0; i < n; ++i) {
        char* name = nullptr;
        check(nf_result_metric_name(res, i, &name), "reading metric name");
        double v = 0;
        nf_result_metric(res, name, &v);
        std::printf("%s = %.10g\n", name, v);
        nf_string_free(name);
    }
}

void emit_result(const ResultPtr& res, const std::string& out_path) {
    print_metrics(res.p);
    if (!out_path.empty()) {
        write_text(out_path, nf_result_csv(res.p));
        std::printf("wrote %s\n", out_path.c_str());
    }
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17) << '[';
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
    return os.str();
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NeuroFEM: spiking-network solver for FEM sparse linear systems"};
    app.require_subcommand(1);

    // shared option storage
    std::string mesh_path, out_path, matrix_path, rhs_path, mode = "both";
    double max_area = 0.008, jitter = 0.0, gamma = 0.015625, tol = 1e-12;
    std::size_t npm = 8, steps = 50000, window = 10000, epoch_len = 4096, epochs = 8;
    std::size_t chips = 32, iterations = 16, max_iter = 20000, switch_step = 25000;
    std::uint64_t seed = 1;
    int forcing = 1;
    bool p_only = false;

    // ---- mesh ----
    auto* mesh_cmd = app.add_subcommand("mesh", "Generate, import, or inspect meshes");
    mesh_cmd->require_subcommand(1);

    auto* mesh_gen = mesh_cmd->add_subcommand("gen", "Generate a unit-disk mesh");
    mesh_gen->add_option("--max-area", max_area, "Maximum triangle area");
    mesh_gen->add_option("--jitter", jitter, "Deterministic node jitter in [0,0.5)");
    mesh_gen->add_option("--out", out_path, "Output path (.msh or .json)");
    mesh_gen->callback([&] {
        MeshPtr mesh;
        check(nf_mesh_gen_disk(max_area, jitter, &mesh.p), "generating mesh");
        if (!out_path.empty()) {
            int rc = ends_with(out_path, ".json") ? nf_mesh_write_json(mesh.p, out_path.c_str())
                                                  : nf_mesh_write_msh(mesh.p, out_path.c_str());
            check(rc, "writing " + out_path);
            std::printf("wrote %s\n", out_path.c_str());
        }
        char* stats = nullptr;
        check(nf_mesh_stats_json(mesh.p, &stats), "computing stats");
        std::printf("%s\n", stats);
        nf_string_free(stats);
    });

    auto* mesh_import = mesh_cmd->add_subcommand("import", "Convert between .msh and .json");
    mesh_import->add_option("--in", mesh_path, "Input mesh (.msh or .json)")->required();
    mesh_import->add_option("--out", out_path, "Output mesh (.msh or .json)")->required();
    mesh_import->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, 0, 0, mesh);
        int rc = ends_with(out_path, ".json") ? nf_mesh_write_json(mesh.p, out_path.c_str())
                                              : nf_mesh_write_msh(mesh.p, out_path.c_str());
        check(rc, "writing " + out_path);
        std::printf("wrote %s\n", out_path.c_str());
    });

    auto* mesh_stats = mesh_cmd->add_subcommand("stats", "Print mesh statistics as JSON");
    mesh_stats->add_option("--in", mesh_path, "Input mesh (.msh or .json)");
    mesh_stats->add_option("--max-area", max_area, "Generate instead of reading");
    mesh_stats->add_option("--jitter", jitter, "Jitter when generating");
    mesh_stats->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        char* stats = nullptr;
        check(nf_mesh_stats_json(mesh.p, &stats), "computing stats");
        std::printf("%s\n", stats);
        nf_string_free(stats);
    });

    // ---- assemble ----
    auto* asm_cmd = app.add_subcommand("assemble", "Assemble the P1 Poisson system");
    asm_cmd->add_option("--mesh", mesh_path, "Input mesh (.msh or .json)");
    asm_cmd->add_option("--max-area", max_area, "Generate mesh instead of reading");
    asm_cmd->add_option("--jitter", jitter, "Jitter when generating");
    asm_cmd->add_option("--forcing", forcing, "Benchmark forcing function (1 or 2)");
    asm_cmd->add_option("--out", out_path, "Output prefix: writes <out>_A.mtx, <out>_b.csv")
        ->required();
    asm_cmd->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        SystemPtr sys;
        check(nf_assemble(mesh.p, forcing, nullptr, 0, nullptr, nullptr, 0, &sys.p),
              "assembling system");
        std::string a_path = out_path + "_A.mtx", b_path = out_path + "_b.csv";
        check(nf_system_export(sys.p, mesh.p, a_path.c_str(), b_path.c_str()),
              "exporting system");
        std::printf("n_unknowns = %zu\nwrote %s\nwrote %s\n", nf_system_n(sys.p),
                    a_path.c_str(), b_path.c_str());
    });

    // ---- solve ----
    auto* solve_cmd = app.add_subcommand("solve", "Solve the benchmark or an ingested system");
    solve_cmd->require_subcommand(1);

    auto add_problem_opts = [&](CLI::App* c) {
        c->add_option("--mesh", mesh_path, "Input mesh (.msh or .json)");
        c->add_option("--max-area", max_area, "Generate mesh instead of reading");
        c->add_option("--jitter", jitter, "Jitter when generating");
        c->add_option("--forcing", forcing, "Benchmark forcing function (1 or 2)");
        c->add_option("--out", out_path, "Solution CSV path");
    };
    auto add_snn_opts = [&](CLI::App* c) {
        c->add_option("--npm", npm, "Neurons per mesh node (even)");
        c->add_option("--gamma", gamma, "Readout weight magnitude");
        c->add_option("--steps", steps, "Simulation steps");
        c->add_option("--window", window, "Trailing averaging window");
        c->add_option("--seed", seed, "RNG seed");
    };

    auto* solve_cg = solve_cmd->add_subcommand("cg", "Conventional conjugate-gradient solve");
    add_problem_opts(solve_cg);
    solve_cg->add_option("--tol", tol, "Relative residual tolerance");
    solve_cg->add_option("--max-iter", max_iter, "Iteration cap");
    solve_cg->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        SystemPtr sys;
        check(nf_assemble(mesh.p, forcing, nullptr, 0, nullptr, nullptr, 0, &sys.p),
              "assembling system");
        ResultPtr res;
        check(nf_solve_cg(sys.p, tol, max_iter, &res.p), "cg solve");
        emit_result(res, out_path);
    });

    auto* solve_float = solve_cmd->add_subcommand("nf-float", "Floating-point spiking solve");
    add_problem_opts(solve_float);
    add_snn_opts(solve_float);
    solve_float->add_flag("--p-only", p_only, "Disable the integral path");
    solve_float->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        SystemPtr sys;
        check(nf_assemble(mesh.p, forcing, nullptr, 0, nullptr, nullptr, 0, &sys.p),
              "assembling system");
        nf_params p;
        nf_params_default(&p);
        p.npm = npm;
        p.gamma_mag = gamma;
        NetworkPtr net;
        check(nf_network_build(sys.p, &p, &net.p), "building network");
        ResultPtr res;
        check(nf_solve_float(net.p, steps, window, seed, p_only ? 1 : 0, &res.p),
              "nf-float solve");
        // deviation from the conventional solution, for convenience
        ResultPtr cg;
        check(nf_solve_cg(sys.p, 1e-12, 20000, &cg.p), "cg reference");
        std::vector<double> x(nf_result_size(res.p)), xc(nf_result_size(cg.p));
        nf_result_values(res.p, x.data(), x.size());
        nf_result_values(cg.p, xc.data(), xc.size());
        double dev = 0;
        check(nf_rel_error(x.data(), xc.data(), x.size(), &dev), "rel error");
        std::printf("rel_err_vs_conventional = %.10g\n", dev);
        emit_result(res, out_path);
    });

    auto* solve_fixed = solve_cmd->add_subcommand("nf-fixed", "Fixed-point spiking solve");
    add_problem_opts(solve_fixed);
    add_snn_opts(solve_fixed);
    solve_fixed->add_option("--mode", mode, "eval (windowed estimate) or epoch (bias flips)");
    solve_fixed->add_option("--epoch-len", epoch_len, "Steps per epoch (epoch mode)");
    solve_fixed->add_option("--epochs", epochs, "Number of epochs (epoch mode)");
    solve_fixed->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        SystemPtr sys;
        check(nf_assemble(mesh.p, forcing, nullptr, 0, nullptr, nullptr, 0, &sys.p),
              "assembling system");
        nf_params p;
        nf_params_default(&p);
        p.npm = npm;
        p.gamma_mag = gamma;
        NetworkPtr net;
        check(nf_network_build(sys.p, &p, &net.p), "building network");
        FixedPtr fx;
        check(nf_network_quantize(net.p, &fx.p), "quantizing network");
        ResultPtr res;
        if (mode == "epoch") {
            check(nf_run_fixed_epochs(fx.p, epoch_len, epochs, 1, seed, &res.p),
                  "fixed epoch run");
        } else {
            check(nf_solve_fixed(fx.p, steps, window, seed, &res.p), "nf-fixed solve");
        }
        emit_result(res, out_path);
    });

    auto* solve_ingest = solve_cmd->add_subcommand("ingest", "Solve an external sparse system");
    solve_ingest->add_option("--matrix", matrix_path, "Matrix Market file")->required();
    solve_ingest->add_option("--rhs", rhs_path, "Right-hand side CSV (one value per line)")
        ->required();
    add_snn_opts(solve_ingest);
    solve_ingest->add_option("--out", out_path, "Solution CSV path");
    solve_ingest->callback([&] {
        nf_params p;
        nf_params_default(&p);
        p.npm = npm;
        p.gamma_mag = gamma;
        ResultPtr res;
        check(nf_solve_ingested(matrix_path.c_str(), rhs_path.c_str(), &p, steps, window,
                                seed, &res.p),
              "ingest solve");
        double sym = 0;
        nf_result_metric(res.p, "cg_baseline", &sym);
        if (sym == 0.0)
            std::fprintf(stderr, "warning: system is not symmetric; reporting residual only\n");
        emit_result(res, out_path);
    });

    // ---- partition ----
    auto* part_cmd = app.add_subcommand("partition", "Partition a mesh onto chips and cores");
    part_cmd->add_option("--mesh", mesh_path, "Input mesh (.msh or .json)");
    part_cmd->add_option("--max-area", max_area, "Generate mesh instead of reading");
    part_cmd->add_option("--jitter", jitter, "Jitter when generating");
    part_cmd->add_option("--chips", chips, "Number of chips");
    part_cmd->add_option("--npm", npm, "Neurons per mesh node");
    part_cmd->add_option("--iterations", iterations, "Centroid refinement iterations");
    part_cmd->add_option("--seed", seed, "RNG seed");
    part_cmd->add_option("--out", out_path, "Partition CSV path");
    part_cmd->callback([&] {
        MeshPtr mesh;
        load_or_gen_mesh(mesh_path, max_area, jitter, mesh);
        SystemPtr sys;
        check(nf_assemble(mesh.p, 1, nullptr, 0, nullptr, nullptr, 0, &sys.p),
              "assembling system");
        ResultPtr res;
        check(nf_partition(mesh.p, sys.p, chips, npm, iterations, seed,
                           out_path.empty() ? nullptr : out_path.c_str(), &res.p),
              "partitioning");
        print_metrics(res.p);
        if (!out_path.empty()) std::printf("wrote %s\n", out_path.c_str());
    });

    // ---- study ----
    std::vector<double> areas, gammas;
    std::vector<std::uint64_t> npms, seeds;
    auto* study_cmd = app.add_subcommand("study", "Run a benchmark study and emit CSV");
    study_cmd->require_subcommand(1);
    std::string study_name;
    for (const char* name :
         {"convergence", "residual", "averaging", "switch", "fixedpoint", "p-vs-pi"}) {
        auto* c = study_cmd->add_subcommand(name);
        c->add_option("--max-area", areas, "Mesh resolutions (repeatable)");
        c->add_option("--npm", npms, "Neurons-per-node grid (repeatable)");
        c->add_option("--gamma", gammas, "Readout magnitude grid (repeatable)");
        c->add_option("--steps", steps, "Simulation steps");
        c->add_option("--window", window, "Trailing averaging window");
        c->add_option("--seed", seeds, "Seeds (repeatable)");
        c->add_option("--epoch-len", epoch_len, "Steps per epoch");
        c->add_option("--epochs", epochs, "Number of epochs");
        c->add_option("--switch-step", switch_step, "Bias switch step (switch study)");
        c->add_option("--mode", mode, "fixedpoint study mode: eval, epoch, or both");
        c->add_option("--jitter", jitter, "Mesh node jitter");
        c->add_option("--out", out_path, "Study CSV path");
        c->callback([&, name] { study_name = name; });
    }
    study_cmd->callback([&] {
        // default grids per study, applied only for flags the user omitted
        auto parsed = study_cmd->get_subcommands();
        CLI::App* sub = parsed.empty() ? nullptr : parsed.front();
        auto omitted = [&](const char* flag) { return sub && sub->count(flag) == 0; };
        if (areas.empty()) {
            if (study_name == "convergence")
                areas = {0.0251076, 0.00980765, 0.00435896, 0.00217194, 0.0010043};
            else if (study_name == "residual")
                areas = {0.0251076, 0.00980765, 0.00627689, 0.00371414};
            else if (study_name == "fixedpoint")
                areas = {0.00980765, 0.00627689, 0.00435896, 0.00320249, 0.00217194};
            else if (study_name == "p-vs-pi")
                areas = {0.00627689};
            else if (study_name == "switch")
                areas = {0.00980765};
            else
                areas = {0.0251076};
        }
        if (study_name == "fixedpoint") {
            if (omitted("--jitter")) jitter = 0.35;
            if (omitted("--steps")) steps = 10000;
            if (omitted("--window")) window = 1000;
            if (seeds.empty()) seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        }
        if (study_name == "averaging" && omitted("--steps")) steps = 262144;
        std::ostringstream cfg;
        cfg << '{';
        if (!areas.empty()) cfg << "\"max_areas\":" << join_doubles(areas) << ',';
        if (!npms.empty()) cfg << "\"npm\":" << join_u64(npms) << ',';
        if (!gammas.empty()) cfg << "\"gamma\":" << join_doubles(gammas) << ',';
        if (!seeds.empty()) cfg << "\"seeds\":" << join_u64(seeds) << ',';
        cfg << "\"steps\":" << steps << ",\"window\":" << window
            << ",\"epoch_len\":" << epoch_len << ",\"n_epochs\":" << epochs
            << ",\"switch_step\":" << switch_step << ",\"jitter\":" << jitter
            << ",\"mode\":\"" << mode << "\"}";
        ResultPtr res;
        check(nf_study_run(study_name.c_str(), cfg.str().c_str(), &res.p),
              "study " + study_name);
        emit_result(res, out_path);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
