#include "sim_fixed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "rng.hpp"

namespace neurofem {

namespace {
constexpr std::int64_t kStateMax = (1 << 23) - 1;
constexpr std::int64_t kStateMin = -((1 << 23) - 1);
}  // namespace

std::int32_t FixedSimulator::saturate24(std::int64_t v) {
    if (v > kStateMax) {
        ++saturations_;
        return static_cast<std::int32_t>(kStateMax);
    }
    if (v < kStateMin) {
        ++saturations_;
        return static_cast<std::int32_t>(kStateMin);
    }
    return static_cast<std::int32_t>(v);
}

FixedSimulator::FixedSimulator(const FixedNetwork& net, std::uint64_t seed,
                               bool noise_enabled)
    : net_(net),
      slow_cols_(net.weights_slow.transposed()),
      fast_cols_(net.weights_fast.transposed()),
      seed_(seed),
      noise_enabled_(noise_enabled) {
    const std::size_t n = net_.n_neurons();
    u1_.assign(n, 0);
    u2_.assign(n, 0);
    u_err_.assign(n, 0);
    u_int_.assign(n, 0);
    v_.assign(n, 0);
    da_slow_.assign(n, 0);
    da_fast_.assign(n, 0);
    s_.assign(n, 0);
    x_fixed_.assign(net_.n_mesh, 0);
    gamma_fixed_.resize(n);
    double g13 = net_.params.gamma_mag * 8192.0;  // scale 2^13
    for (std::size_t a = 0; a < n; ++a) {
        double sign = (a % net_.npm) < net_.npm / 2 ? 1.0 : -1.0;
        gamma_fixed_[a] = static_cast<std::int32_t>(std::nearbyint(sign * g13));
    }
}

void FixedSimulator::flip_bias_sign() { bias_sign_ = -bias_sign_; }

std::vector<double> FixedSimulator::readout() const {
    std::vector<double> x(net_.n_mesh);
    for (std::size_t i = 0; i < net_.n_mesh; ++i)
        x[i] = static_cast<double>(x_fixed_[i]) / 65536.0;  // scale 2^16
    return x;
}

void FixedSimulator::step() {
    const std::size_t n = net_.n_neurons();

    std::fill(da_slow_.begin(), da_slow_.end(), 0);
    std::fill(da_fast_.begin(), da_fast_.end(), 0);
    for (std::uint32_t beta : spike_list_) {
        for (std::size_t k = slow_cols_.row_ptr[beta]; k < slow_cols_.row_ptr[beta + 1]; ++k)
            da_slow_[slow_cols_.col_idx[k]] +=
                static_cast<std::int64_t>(slow_cols_.values[k]);
        for (std::size_t k = fast_cols_.row_ptr[beta]; k < fast_cols_.row_ptr[beta + 1]; ++k)
            da_fast_[fast_cols_.col_idx[k]] +=
                static_cast<std::int64_t>(fast_cols_.values[k]);
    }

    for (std::size_t a = 0; a < n; ++a) {
        std::int64_t u1_old = u1_[a];
        std::int64_t u2_old = u2_[a];
        std::int64_t u_int_old = u_int_[a];

        // bias at stored scale 2^17 pre-shifted to keep u_err at 2^16
        std::int64_t bias =
            asr(static_cast<std::int64_t>(bias_sign_) * net_.bias_fixed[a], 8) << 7;
        std::int64_t u_err_new = u1_old + bias;
        std::int64_t u1_new = asr(511 * u1_old, 9) + (da_slow_[a] << 10);
        std::int64_t u2_new = asr(511 * u2_old, 9) + asr(da_fast_[a], 5);
        std::int64_t u_int_new = u_int_old + asr(u_err_new, 8);

        std::int64_t noise = 0;
        if (noise_enabled_) noise = asr(uniform24_noise(seed_, a, step_), 3);
        std::int64_t v_new = asr(255 * static_cast<std::int64_t>(v_[a]), 8) +
                             (u_err_new << 2) + u_int_old + asr(u2_old, 4) -
                             (da_fast_[a] << 9) + noise;

        u1_[a] = saturate24(u1_new);
        u2_[a] = saturate24(u2_new);
        u_err_[a] = saturate24(u_err_new);
        u_int_[a] = saturate24(u_int_new);
        v_[a] = saturate24(v_new);
    }

    spike_list_.clear();
    for (std::size_t a = 0; a < n; ++a) {
        if (v_[a] >= net_.theta_fixed) {
            v_[a] -= net_.theta_fixed;
            s_[a] = 1;
            spike_list_.push_back(static_cast<std::uint32_t>(a));
        } else {
            s_[a] = 0;
        }
    }

    for (std::size_t i = 0; i < net_.n_mesh; ++i) x_fixed_[i] = asr(511 * x_fixed_[i], 9);
    for (std::uint32_t a : spike_list_)
        x_fixed_[a / net_.npm] += static_cast<std::int64_t>(gamma_fixed_[a]) << 3;

    ++step_;
}

FixedRunResult run_fixed(const FixedNetwork& net, const EpochConfig& cfg, std::uint64_t seed,
                         bool noise_enabled, std::size_t solution_window) {
    if (cfg.epoch_len < 1 || cfg.n_epochs < 1)
        throw DomainError("run_fixed: epoch config must be positive");
    if (solution_window > cfg.epoch_len) solution_window = cfg.epoch_len;

    FixedSimulator sim(net, seed, noise_enabled);
    FixedRunResult res;
    res.trace.n_mesh = net.n_mesh;
    res.trace.n_steps = cfg.epoch_len * cfg.n_epochs;
    res.trace.spike_counts.assign(net.n_neurons(), 0);

    for (std::size_t e = 0; e < cfg.n_epochs; ++e) {
        if (e > 0 && cfg.transient) sim.flip_bias_sign();
        EpochSummary summary;
        summary.epoch = e;
        summary.transient = cfg.transient;
        std::vector<double> sol_acc(net.n_mesh, 0.0);
        for (std::size_t k = 0; k < cfg.epoch_len; ++k) {
            sim.step();
            summary.spike_count += sim.spikes_this_step();
            if (k + solution_window >= cfg.epoch_len) {
                auto x = sim.readout();
                for (std::size_t i = 0; i < net.n_mesh; ++i) sol_acc[i] += x[i];
            }
        }
        for (double& v : sol_acc) v /= static_cast<double>(solution_window);
        // sign-correct so every epoch estimates the +b solution
        std::vector<double> sol = sol_acc;
        if (sim.bias_sign() < 0)
            for (double& v : sol) v = -v;
        std::vector<double> b_eff = net.system_b;
        if (sim.bias_sign() < 0)
            for (double& v : b_eff) v = -v;
        summary.mean_readout_residual = rel_residual(net.system_a, sol_acc, b_eff);
        res.epoch_solutions.push_back(std::move(sol));
        res.epochs.push_back(summary);
    }
    res.saturation_count = sim.saturation_count();
    return res;
}

std::vector<double> run_fixed_eval(const FixedNetwork& net, std::size_t n_steps,
                                   std::uint64_t seed, std::size_t window,
                                   bool noise_enabled) {
    if (window > n_steps) throw DomainError("run_fixed_eval: window exceeds n_steps");
    FixedSimulator sim(net, seed, noise_enabled);
    std::vector<double> acc(net.n_mesh, 0.0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        sim.step();
        if (k + window >= n_steps) {
            auto x = sim.readout();
            for (std::size_t i = 0; i < net.n_mesh; ++i) acc[i] += x[i];
        }
    }
    for (double& v : acc) v /= static_cast<double>(window);
    return acc;
}

FixedFloatDiff fixed_vs_float_diff(const SnnNetwork& net, std::size_t steps,
                                   std::uint64_t seed, bool noise_enabled) {
    FixedNetwork fx = quantize_network(net);

    // float twin of the quantizer's scaled system, fed the dequantized noise
    const double c = std::ldexp(1.0, fx.system_scale_exp);
    CsrMatrix a_scaled = net.system_a;
    for (double& v : a_scaled.values) v *= c;
    std::vector<double> b_scaled = net.system_b;
    for (double& v : b_scaled) v *= c;
    SnnNetwork twin = build_network(a_scaled, b_scaled, net.params);

    SimOptions opts;
    opts.record_residual = false;
    opts.noise = noise_enabled ? NoiseMode::DequantizedUniform : NoiseMode::Off;
    FloatSimulator fsim(twin, seed, opts);
    FixedSimulator xsim(fx, seed, noise_enabled);

    FixedFloatDiff diff;
    auto track = [&diff](const char* name, double value) {
        auto& slot = diff.max_deviation[name];
        slot = std::max(slot, std::abs(value));
    };
    const std::size_t n = twin.n_neurons();
    for (std::size_t k = 0; k < steps; ++k) {
        fsim.step();
        xsim.step();
        for (std::size_t a = 0; a < n; ++a) {
            // the float engine runs the negated system, so fixed u1 tracks -u1
            track("u1", -static_cast<double>(xsim.u1()[a]) / 65536.0 - fsim.u1()[a]);
            track("u2", static_cast<double>(xsim.u2()[a]) / 1048576.0 - fsim.u2()[a]);
            track("u_int", static_cast<double>(xsim.u_int()[a]) / 1048576.0 -
                               fsim.u_int()[a]);
            track("v", static_cast<double>(xsim.membrane()[a]) / 268435456.0 -
                           fsim.membrane()[a]);
        }
        const auto xr = xsim.readout();
        const auto& fr = fsim.readout();
        for (std::size_t i = 0; i < twin.n_mesh; ++i)
            diff.readout_deviation =
                std::max(diff.readout_deviation, std::abs(xr[i] - fr[i]));
    }
    diff.max_deviation["readout"] = diff.readout_deviation;
    return diff;
}

void export_epoch_summary_csv(const std::vector<EpochSummary>& epochs,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("export_epoch_summary_csv: cannot open " + path);
    out << std::setprecision(12) << "epoch,mode,spike_count,mean_readout_residual\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << (e.transient ? "transient" : "steady") << ','
            << e.spike_count << ',' << e.mean_readout_residual << '\n';
    }
}

}  // namespace neurofem
