#include <cstdint>
#include <vector>

#include "doctest.h"
#include "fem.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "sim_fixed.hpp"
#include "sparse.hpp"

using namespace neurofem;

namespace {

// hand-built 2-neuron (1 mesh node, npm=2) fixture
FixedNetwork fixture_net() {
    FixedNetwork fx;
    fx.n_mesh = 1;
    fx.npm = 2;
    fx.weights_slow = csr_from_triplets(
        {{0, 0, -40.0}, {0, 1, 25.0}, {1, 0, 25.0}, {1, 1, -40.0}}, 2, 2);
    fx.weights_fast = csr_from_triplets(
        {{0, 0, 96.0}, {0, 1, -96.0}, {1, 0, -96.0}, {1, 1, 96.0}}, 2, 2);
    fx.bias_fixed = {3000, -3000};
    fx.theta_fixed = 1024;
    fx.params.npm = 2;
    fx.params.gamma_mag = 0.015625;  // gamma at scale 2^13 = +-128
    fx.system_a = csr_from_triplets({{0, 0, -1.0}}, 1, 1);
    fx.system_b = {1.0};
    return fx;
}

struct Expected {
    std::int32_t u1[2], u2[2], u_err[2], u_int[2], v[2];
    std::uint8_t s[2];
    std::int64_t x_fixed;
};

}  // namespace

TEST_CASE("arithmetic shifts match the documented examples") {
    CHECK(asr(511 * 512, 9) == 511);
    CHECK(asr(-1, 3) == -1);        // floor semantics
    CHECK(asr(-1000, 8) == -4);
    CHECK(asr(1000, 8) == 3);
}

TEST_CASE("uniform 24-bit noise stays in the signed range") {
    std::int32_t lo = 0, hi = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        std::int32_t w = uniform24_noise(1, i, i * 7);
        CHECK(w >= -(1 << 23));
        CHECK(w < (1 << 23));
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    CHECK(lo < -(1 << 22));
    CHECK(hi > (1 << 22));
}

TEST_CASE("fixed_step bit-exact 2-neuron fixture, noise disabled") {
    // expected integers evaluated by hand from the five update equations
    const std::vector<Expected> expected = {
        {{0, 0}, {0, 0}, {1408, -1536}, {5, -6}, {4608, -6144}, {1, 0}, 1024},
        {{-40960, 25600}, {3, -3}, {1408, -1536}, {10, -12}, {-38925, 35858}, {0, 1}, -2},
        {{-15280, -15410}, {-1, 0}, {-39552, 24064}, {-145, 82}, {-147819, 81784}, {0, 1},
         -1026},
        {{10349, -56340}, {-4, 3}, {-13872, -16946}, {-200, 15}, {-153724, -35390}, {0, 0},
         -1024},
        {{10328, -56230}, {-4, 2}, {11757, -57876}, {-155, -212}, {-106297, -266741}, {0, 0},
         -1022},
        {{10307, -56121}, {-4, 1}, {11736, -57766}, {-110, -438}, {-59094, -496976}, {0, 0},
         -1021},
        {{10286, -56012}, {-4, 0}, {11715, -57657}, {-65, -664}, {-12115, -726101}, {0, 0},
         -1020},
        {{10265, -55903}, {-4, 0}, {11694, -57548}, {-20, -889}, {33618, -954121}, {1, 0}, 5},
    };
    FixedSimulator sim(fixture_net(), 1, /*noise_enabled=*/false);
    for (std::size_t step = 0; step < expected.size(); ++step) {
        sim.step();
        const Expected& e = expected[step];
        for (int a = 0; a < 2; ++a) {
            CAPTURE(step);
            CAPTURE(a);
            CHECK(sim.u1()[a] == e.u1[a]);
            CHECK(sim.u2()[a] == e.u2[a]);
            CHECK(sim.u_err()[a] == e.u_err[a]);
            CHECK(sim.u_int()[a] == e.u_int[a]);
            CHECK(sim.membrane()[a] == e.v[a]);
            CHECK(sim.spikes()[a] == e.s[a]);
        }
        CHECK(sim.readout()[0] * 65536.0 == static_cast<double>(e.x_fixed));
    }
}

TEST_CASE("all-zero state with zero bias and no noise stays zero") {
    FixedNetwork fx = fixture_net();
    fx.bias_fixed = {0, 0};
    FixedSimulator sim(fx, 1, false);
    for (int i = 0; i < 50; ++i) sim.step();
    for (int a = 0; a < 2; ++a) {
        CHECK(sim.u1()[a] == 0);
        CHECK(sim.membrane()[a] == 0);
        CHECK(sim.spikes()[a] == 0);
    }
    CHECK(sim.readout()[0] == 0.0);
    CHECK(sim.saturation_count() == 0);
}

TEST_CASE("saturation clips and counts instead of overflowing") {
    FixedNetwork fx = fixture_net();
    fx.bias_fixed = {8000000, 8000000};  // v jumps past the 24-bit cap
    FixedSimulator sim(fx, 1, false);
    sim.step();
    CHECK(sim.saturation_count() > 0);
    CHECK(sim.membrane()[0] <= (1 << 23) - 1);
}

TEST_CASE("fixed run is deterministic per seed") {
    FixedNetwork fx = fixture_net();
    FixedSimulator a(fx, 9), b(fx, 9), c(fx, 10);
    for (int i = 0; i < 200; ++i) {
        a.step();
        b.step();
        c.step();
    }
    CHECK(a.u1() == b.u1());
    CHECK(a.membrane() == b.membrane());
    CHECK(a.u1() != c.u1());
}

TEST_CASE("bias flip mirrors the solution sign") {
    FixedNetwork fx = fixture_net();
    FixedSimulator sim(fx, 2);
    CHECK(sim.bias_sign() == 1);
    sim.flip_bias_sign();
    CHECK(sim.bias_sign() == -1);
}

TEST_CASE("run_fixed epoch protocol") {
    Mesh mesh = gen_disk_mesh(0.02, 0.35);
    auto bc = classify_boundary(mesh, {1});
    auto sys = assemble(mesh, forcing_f1, bc);
    SnnParams p;
    p.npm = 8;
    auto net = build_network(sys.a, sys.b, p);
    auto fx = quantize_network(net);
    EpochConfig cfg;
    cfg.epoch_len = 2048;
    cfg.n_epochs = 4;
    cfg.transient = true;
    auto res = run_fixed(fx, cfg, 1);
    REQUIRE(res.epochs.size() == 4);
    REQUIRE(res.epoch_solutions.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
        CHECK(res.epochs[e].epoch == e);
        CHECK(res.epochs[e].transient);
        CHECK(res.epochs[e].spike_count > 0);
        CHECK(res.epoch_solutions[e].size() == sys.n());
    }
    // sign-corrected epoch solutions agree with each other within fluctuations
    double d = rel_error(res.epoch_solutions[3], res.epoch_solutions[2]);
    CHECK(d < 0.5);
    cfg.transient = false;
    auto steady = run_fixed(fx, cfg, 1);
    for (const auto& e : steady.epochs) CHECK_FALSE(e.transient);
    CHECK_THROWS_AS(run_fixed(fx, EpochConfig{0, 0, false}, 1), DomainError);
}

TEST_CASE("run_fixed_eval tracks the conventional solution on a jittered mesh") {
    Mesh mesh = gen_disk_mesh(0.01, 0.35);
    auto bc = classify_boundary(mesh, {1});
    auto sys = assemble(mesh, forcing_f1, bc);
    SnnParams p;
    p.npm = 8;
    auto net = build_network(sys.a, sys.b, p);
    auto fx = quantize_network(net);
    auto est = run_fixed_eval(fx, 10000, 1, 1000);
    CsrMatrix na = sys.a;
    for (double& v : na.values) v = -v;
    std::vector<double> nb = sys.b;
    for (double& v : nb) v = -v;
    auto cg = cg_solve(na, nb, 1e-12, 10 * sys.n());
    CHECK(rel_error(est, cg.x) < 0.3);
}

TEST_CASE("fixed_vs_float_diff is deterministic and zero without drive") {
    CsrMatrix m = csr_from_triplets({{0, 0, -1.0}}, 1, 1);
    SnnParams p;
    p.npm = 2;
    auto net = build_network(m, {0.0}, p);
    auto d = fixed_vs_float_diff(net, 200, 1, /*noise_enabled=*/false);
    CHECK(d.readout_deviation == 0.0);
    for (const auto& [name, dev] : d.max_deviation) {
        CAPTURE(name);
        CHECK(dev == 0.0);
    }
    auto net2 = build_network(m, {-1.0}, p);
    auto a = fixed_vs_float_diff(net2, 500, 7);
    auto b = fixed_vs_float_diff(net2, 500, 7);
    CHECK(a.readout_deviation == b.readout_deviation);
    CHECK(a.max_deviation == b.max_deviation);
}
