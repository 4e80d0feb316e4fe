#include <cmath>

#include "doctest.h"
#include "fem.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "sim_float.hpp"
#include "sparse.hpp"

using namespace neurofem;

namespace {

SnnNetwork scalar_net(double a = -2.0, double b = -2.0, std::size_t npm = 8) {
    CsrMatrix m = csr_from_triplets({{0, 0, a}}, 1, 1);
    SnnParams p;
    p.npm = npm;
    return build_network(m, {b}, p);  // solution x = b/a
}

SnnNetwork mesh_net(double max_area = 0.025) {
    Mesh mesh = gen_disk_mesh(max_area);
    auto bc = classify_boundary(mesh, {1});
    auto sys = assemble(mesh, forcing_f1, bc);
    SnnParams p;
    p.npm = 8;
    return build_network(sys.a, sys.b, p);
}

std::vector<double> conventional(const SnnNetwork& net) {
    CsrMatrix na = net.system_a;
    for (double& v : na.values) v = -v;
    std::vector<double> nb = net.system_b;
    for (double& v : nb) v = -v;
    auto cg = cg_solve(na, nb, 1e-12, 10 * na.n_rows + 100);
    REQUIRE(cg.converged);
    return cg.x;
}

}  // namespace

TEST_CASE("noise-free scalar system converges to b/a") {
    auto net = scalar_net(-2.0, -3.0);
    SimOptions opts;
    opts.noise = NoiseMode::Off;
    opts.estimate_windows = {100};
    auto trace = run(net, 30000, 1, opts);
    CHECK(trace.window_estimates.at(100)[0] == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("noisy scalar system fluctuates around the solution") {
    auto net = scalar_net(-2.0, -2.0);
    SimOptions opts;
    opts.estimate_windows = {20000};
    auto trace = run(net, 50000, 3, opts);
    CHECK(trace.window_estimates.at(20000)[0] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("simulation is deterministic per seed") {
    auto net = mesh_net();
    SimOptions opts;
    opts.estimate_windows = {500};
    auto a = run(net, 2000, 42, opts);
    auto b = run(net, 2000, 42, opts);
    CHECK(a.window_estimates.at(500) == b.window_estimates.at(500));
    auto c = run(net, 2000, 43, opts);
    CHECK(a.window_estimates.at(500) != c.window_estimates.at(500));
}

TEST_CASE("mesh problem tracks the conventional solution") {
    auto net = mesh_net();
    auto ref = conventional(net);
    SimOptions opts;
    opts.estimate_windows = {10000};
    auto trace = run(net, 50000, 1, opts);
    CHECK(rel_error(trace.window_estimates.at(10000), ref) < 0.08);
}

TEST_CASE("windowed estimate beats the instantaneous readout residual") {
    auto net = mesh_net();
    SimOptions opts;
    opts.record_residual = true;
    opts.estimate_windows = {4000};
    auto trace = run(net, 20000, 1, opts);
    REQUIRE(trace.residual_history.size() == 20000);
    for (double r : trace.residual_history) CHECK(std::isfinite(r));
    double windowed =
        rel_residual(net.system_a, trace.window_estimates.at(4000), net.system_b);
    CHECK(windowed < trace.residual_history.back());
}

TEST_CASE("p-only steady error exceeds the PI error") {
    auto net = mesh_net();
    auto ref = conventional(net);
    SimOptions opts;
    opts.estimate_windows = {5000};
    auto pi = run(net, 30000, 1, opts);
    auto p = run_p_only(net, 30000, 1, opts);
    double e_pi = rel_error(pi.window_estimates.at(5000), ref);
    double e_p = rel_error(p.window_estimates.at(5000), ref);
    CHECK(e_p > 2.0 * e_pi);
}

TEST_CASE("set_rhs redirects the running network") {
    auto net = scalar_net(-2.0, -2.0);
    FloatSimulator sim(net, 5);
    for (int i = 0; i < 20000; ++i) sim.step();
    sim.set_rhs({-4.0});  // new solution: 2
    std::vector<double> acc(1, 0.0);
    for (int i = 0; i < 30000; ++i) {
        sim.step();
        if (i >= 20000) acc[0] += sim.readout()[0];
    }
    CHECK(acc[0] / 10000.0 == doctest::Approx(2.0).epsilon(0.06));
}

TEST_CASE("trace recording options") {
    auto net = scalar_net();
    SimOptions opts;
    opts.record_spikes = true;
    opts.record_readout = true;
    auto trace = run(net, 300, 1, opts);
    CHECK(trace.readout_history.size() == 300);
    CHECK(trace.spike_counts.size() == net.n_neurons());
    for (const auto& [step, neuron] : trace.spike_raster) {
        CHECK(step < 300);
        CHECK(neuron < net.n_neurons());
    }
}

TEST_CASE("estimate window validation") {
    auto net = scalar_net();
    SimOptions opts;
    opts.estimate_windows = {1000};
    CHECK_THROWS_AS(run(net, 100, 1, opts), DomainError);
}

TEST_CASE("run rejects a zero step count") {
    auto net = scalar_net();
    CHECK_THROWS_AS(run(net, 0, 1, {}), DomainError);
}
