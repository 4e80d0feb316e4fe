#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "neurofem.h"

TEST_CASE("version and error strings exist") {
    CHECK(nf_version() != nullptr);
    CHECK(nf_last_error() != nullptr);
}

TEST_CASE("null arguments yield NF_ERR_DOMAIN with a message") {
    CHECK(nf_mesh_gen_disk(0.01, 0.0, nullptr) == NF_ERR_DOMAIN);
    CHECK(std::strlen(nf_last_error()) > 0);
    nf_mesh* m = nullptr;
    CHECK(nf_mesh_read_msh(nullptr, &m) == NF_ERR_DOMAIN);
    CHECK(nf_assemble(nullptr, 1, nullptr, 0, nullptr, nullptr, 0, nullptr) == NF_ERR_DOMAIN);
}

TEST_CASE("invalid parameters map to typed error codes") {
    nf_mesh* m = nullptr;
    CHECK(nf_mesh_gen_disk(-1.0, 0.0, &m) == NF_ERR_DOMAIN);
    CHECK(nf_mesh_gen_disk(0.01, 0.9, &m) == NF_ERR_DOMAIN);
    CHECK(nf_mesh_read_msh("/tmp/nf_no_such_file.msh", &m) == NF_ERR_PARSE);
    nf_result* r = nullptr;
    CHECK(nf_solve_ingested("/tmp/nf_no_such.mtx", "/tmp/nf_no_such.csv", nullptr, 10, 5, 1,
                            &r) == NF_ERR_PARSE);
}

TEST_CASE("mesh pipeline through the c api") {
    nf_mesh* m = nullptr;
    REQUIRE(nf_mesh_gen_disk(0.01, 0.0, &m) == NF_OK);
    CHECK(nf_mesh_n_nodes(m) == 217);
    CHECK(nf_mesh_n_elements(m) > 0);
    char* stats = nullptr;
    REQUIRE(nf_mesh_stats_json(m, &stats) == NF_OK);
    CHECK(std::string(stats).find("\"n_interior\": 169") != std::string::npos);
    nf_string_free(stats);

    REQUIRE(nf_mesh_write_msh(m, "/tmp/nf_capi.msh") == NF_OK);
    nf_mesh* back = nullptr;
    REQUIRE(nf_mesh_read_msh("/tmp/nf_capi.msh", &back) == NF_OK);
    CHECK(nf_mesh_n_nodes(back) == 217);
    REQUIRE(nf_mesh_write_json(back, "/tmp/nf_capi.json") == NF_OK);
    nf_mesh* back2 = nullptr;
    REQUIRE(nf_mesh_read_json("/tmp/nf_capi.json", &back2) == NF_OK);
    CHECK(nf_mesh_n_nodes(back2) == 217);
    nf_mesh_free(back2);
    nf_mesh_free(back);
    nf_mesh_free(m);
    std::remove("/tmp/nf_capi.msh");
    std::remove("/tmp/nf_capi.json");
}

TEST_CASE("assemble, solve, and compare through the c api") {
    nf_mesh* m = nullptr;
    REQUIRE(nf_mesh_gen_disk(0.025, 0.0, &m) == NF_OK);
    nf_system* sys = nullptr;
    REQUIRE(nf_assemble(m, 1, nullptr, 0, nullptr, nullptr, 0, &sys) == NF_OK);
    size_t n = nf_system_n(sys);
    REQUIRE(n > 0);

    nf_result* cg = nullptr;
    REQUIRE(nf_solve_cg(sys, 1e-12, 5000, &cg) == NF_OK);
    double converged = 0;
    REQUIRE(nf_result_metric(cg, "converged", &converged) == NF_OK);
    CHECK(converged == 1.0);
    REQUIRE(nf_result_size(cg) == n);

    nf_params p;
    nf_params_default(&p);
    CHECK(p.npm == 8);
    nf_network* net = nullptr;
    REQUIRE(nf_network_build(sys, &p, &net) == NF_OK);
    CHECK(nf_network_n_neurons(net) == n * p.npm);

    nf_result* sol = nullptr;
    REQUIRE(nf_solve_float(net, 20000, 4000, 1, 0, &sol) == NF_OK);
    REQUIRE(nf_result_size(sol) == n);
    std::vector<double> x(n), xc(n);
    REQUIRE(nf_result_values(sol, x.data(), n) == NF_OK);
    REQUIRE(nf_result_values(cg, xc.data(), n) == NF_OK);
    double dev = 0;
    REQUIRE(nf_rel_error(x.data(), xc.data(), n, &dev) == NF_OK);
    CHECK(dev < 0.2);

    // metric enumeration
    size_t mc = nf_result_metric_count(sol);
    CHECK(mc >= 2);
    bool saw_residual = false;
    for (size_t i = 0; i < mc; ++i) {
        char* name = nullptr;
        REQUIRE(nf_result_metric_name(sol, i, &name) == NF_OK);
        if (std::string(name) == "rel_residual") saw_residual = true;
        nf_string_free(name);
    }
    CHECK(saw_residual);
    CHECK(std::string(nf_result_csv(sol)).rfind("index,x", 0) == 0);

    nf_result_free(sol);
    nf_result_free(cg);
    nf_network_free(net);
    nf_system_free(sys);
    nf_mesh_free(m);
}

TEST_CASE("fixed-point pipeline through the c api") {
    nf_mesh* m = nullptr;
    REQUIRE(nf_mesh_gen_disk(0.02, 0.35, &m) == NF_OK);
    nf_system* sys = nullptr;
    REQUIRE(nf_assemble(m, 1, nullptr, 0, nullptr, nullptr, 0, &sys) == NF_OK);
    nf_params p;
    nf_params_default(&p);
    nf_network* net = nullptr;
    REQUIRE(nf_network_build(sys, &p, &net) == NF_OK);
    nf_fixed_network* fx = nullptr;
    REQUIRE(nf_network_quantize(net, &fx) == NF_OK);

    nf_result* sol = nullptr;
    REQUIRE(nf_solve_fixed(fx, 6000, 1000, 1, &sol) == NF_OK);
    CHECK(nf_result_size(sol) == nf_system_n(sys));
    nf_result_free(sol);

    nf_result* ep = nullptr;
    REQUIRE(nf_run_fixed_epochs(fx, 2048, 3, 1, 1, &ep) == NF_OK);
    double spikes = 0;
    REQUIRE(nf_result_metric(ep, "spikes_total", &spikes) == NF_OK);
    CHECK(spikes > 0);
    CHECK(std::string(nf_result_csv(ep)).rfind("epoch,transient", 0) == 0);
    nf_result_free(ep);

    nf_fixed_network_free(fx);
    nf_network_free(net);
    nf_system_free(sys);
    nf_mesh_free(m);
}

TEST_CASE("network export/import through the c api") {
    nf_mesh* m = nullptr;
    REQUIRE(nf_mesh_gen_disk(0.06, 0.0, &m) == NF_OK);
    nf_system* sys = nullptr;
    REQUIRE(nf_assemble(m, 1, nullptr, 0, nullptr, nullptr, 0, &sys) == NF_OK);
    nf_network* net = nullptr;
    REQUIRE(nf_network_build(sys, nullptr, &net) == NF_OK);
    REQUIRE(nf_network_export(net, "/tmp/nf_capi_net") == NF_OK);
    nf_network* back = nullptr;
    REQUIRE(nf_network_import("/tmp/nf_capi_net", &back) == NF_OK);
    CHECK(nf_network_n_neurons(back) == nf_network_n_neurons(net));
    nf_network_free(back);
    nf_network_free(net);
    nf_system_free(sys);
    nf_mesh_free(m);
}

TEST_CASE("partition through the c api") {
    nf_mesh* m = nullptr;
    REQUIRE(nf_mesh_gen_disk(0.004, 0.0, &m) == NF_OK);
    nf_result* res = nullptr;
    REQUIRE(nf_partition(m, nullptr, 8, 16, 16, 1, nullptr, &res) == NF_OK);
    CHECK(nf_result_size(res) == nf_mesh_n_nodes(m));
    double ratio = 0;
    REQUIRE(nf_result_metric(res, "max_load_ratio", &ratio) == NF_OK);
    CHECK(ratio < 1.25);
    nf_result_free(res);
    nf_mesh_free(m);
}

TEST_CASE("study through the c api") {
    nf_result* res = nullptr;
    const char* cfg = "{\"max_areas\":[0.05],\"steps\":2000,\"window\":500}";
    REQUIRE(nf_study_run("p-vs-pi", cfg, &res) == NF_OK);
    double ratio = 0;
    REQUIRE(nf_result_metric(res, "ratio_p_over_pi", &ratio) == NF_OK);
    CHECK(ratio > 1.0);
    nf_result_free(res);
    CHECK(nf_study_run("nope", "{}", &res) == NF_ERR_DOMAIN);
    CHECK(nf_study_run("p-vs-pi", "{bad json", &res) == NF_ERR_PARSE);
}
