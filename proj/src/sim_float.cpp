#include "sim_float.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "rng.hpp"

namespace neurofem {

FloatSimulator::FloatSimulator(const SnnNetwork& net, std::uint64_t seed,
                               const SimOptions& opts)
    : net_(net),
      slow_cols_(net.omega_slow.transposed()),
      fast_cols_(net.omega_fast.transposed()),
      opts_(opts),
      seed_(seed) {
    // The error-feedback loop is stable for positive definite system
    // matrices; A follows the weak form's sign convention (-A is SPD), so the
    // engine runs the network of (-A, -b), which has the same solution.
    for (double& v : slow_cols_.values) v = -v;
    const std::size_t n = net_.n_neurons();
    bias_eff_.resize(n);
    for (std::size_t a = 0; a < n; ++a) bias_eff_[a] = -net_.bias[a];
    u1_.assign(n, 0.0);
    u2_.assign(n, 0.0);
    u_int_.assign(n, 0.0);
    v_.assign(n, 0.0);
    da_slow_.assign(n, 0.0);
    da_fast_.assign(n, 0.0);
    s_.assign(n, 0);
    x_.assign(net_.n_mesh, 0.0);
}

void FloatSimulator::set_rhs(const std::vector<double>& b_new) {
    set_bias(net_, b_new);
    for (std::size_t a = 0; a < net_.n_neurons(); ++a) bias_eff_[a] = -net_.bias[a];
}

double FloatSimulator::residual() const {
    return rel_residual(net_.system_a, x_, net_.system_b);
}

double FloatSimulator::residual_vs(const std::vector<double>& b_other) const {
    return rel_residual(net_.system_a, x_, b_other);
}

void FloatSimulator::step() {
    const SnnParams& p = net_.params;
    const std::size_t n = net_.n_neurons();
    const double decay_d = 1.0 - p.lambda_d * p.dt;
    const double decay_v = 1.0 - p.lambda_v * p.dt;
    const double k_i = opts_.p_only ? 0.0 : p.k_i;

    // synaptic drive from the previous step's spikes
    std::fill(da_slow_.begin(), da_slow_.end(), 0.0);
    std::fill(da_fast_.begin(), da_fast_.end(), 0.0);
    for (std::uint32_t beta : spike_list_) {
        for (std::size_t k = slow_cols_.row_ptr[beta]; k < slow_cols_.row_ptr[beta + 1]; ++k)
            da_slow_[slow_cols_.col_idx[k]] += slow_cols_.values[k];
        for (std::size_t k = fast_cols_.row_ptr[beta]; k < fast_cols_.row_ptr[beta + 1]; ++k)
            da_fast_[fast_cols_.col_idx[k]] += fast_cols_.values[k];
    }

    for (std::size_t a = 0; a < n; ++a) {
        double u_err = -u1_[a] + bias_eff_[a];
        double noise = 0.0;
        switch (opts_.noise) {
            case NoiseMode::Gaussian:
                // sigma_v is stated at the hardware membrane scale, which is
                // pinned to gamma=2^-6 (theta_fixed constant); the membrane's
                // natural scale tracks theta ~ gamma^2, so scale accordingly
                noise = p.sigma_v * (p.gamma_mag * p.gamma_mag * 4096.0) *
                        gaussian_noise(seed_, a, step_);
                break;
            case NoiseMode::DequantizedUniform:
                noise = static_cast<double>(asr(uniform24_noise(seed_, a, step_), 3)) /
                        268435456.0;  // 2^28, membrane scale
                break;
            case NoiseMode::Off:
                break;
        }
        // v update reads this step's u_err and the pre-update u_int and u2
        v_[a] = decay_v * v_[a] +
                p.dt * (p.k_p * u_err + k_i * u_int_[a] + u2_[a]) - da_fast_[a] + noise;
        u1_[a] = decay_d * u1_[a] + da_slow_[a];
        u2_[a] = decay_d * u2_[a] + p.lambda_d * da_fast_[a];
        if (!opts_.p_only) u_int_[a] += p.dt * u_err;
        if (!std::isfinite(v_[a]) || !std::isfinite(u1_[a]))
            throw DivergenceError("non-finite state at step " + std::to_string(step_) +
                                  ", neuron " + std::to_string(a));
    }

    spike_list_.clear();
    for (std::size_t a = 0; a < n; ++a) {
        if (v_[a] >= net_.theta) {
            v_[a] -= net_.theta;  // reset by threshold subtraction
            s_[a] = 1;
            spike_list_.push_back(static_cast<std::uint32_t>(a));
        } else {
            s_[a] = 0;
        }
    }

    const double decay_x = 1.0 - p.lambda_d * p.dt;
    const std::size_t half = p.npm / 2;
    for (std::size_t i = 0; i < net_.n_mesh; ++i) x_[i] *= decay_x;
    for (std::uint32_t a : spike_list_) {
        std::size_t node = a / p.npm;
        x_[node] += (a % p.npm) < half ? p.gamma_mag : -p.gamma_mag;
    }
    ++step_;
}

void FloatSimulator::run(std::size_t n_steps, SimTrace* trace) {
    if (n_steps < 1) throw DomainError("run: n_steps must be >= 1");
    if (trace) {
        trace->n_steps = n_steps;
        trace->n_mesh = net_.n_mesh;
        trace->spike_counts.assign(net_.n_neurons(), 0);
        for (std::size_t w : opts_.estimate_windows) {
            if (w > n_steps) throw DomainError("run: estimate window exceeds n_steps");
            trace->window_estimates[w].assign(net_.n_mesh, 0.0);
        }
    }
    std::vector<double> fluct_sum, fluct_sumsq;
    if (trace && opts_.fluctuation_window > 0) {
        fluct_sum.assign(net_.n_mesh, 0.0);
        fluct_sumsq.assign(net_.n_mesh, 0.0);
    }
    const std::size_t start = step_;
    for (std::size_t k = 0; k < n_steps; ++k) {
        step();
        if (!trace) continue;
        if (opts_.record_spikes) {
            for (std::uint32_t a : spike_list_) trace->spike_raster.emplace_back(step_ - 1, a);
        }
        for (std::uint32_t a : spike_list_) ++trace->spike_counts[a];
        if (opts_.record_readout) trace->readout_history.push_back(x_);
        if (opts_.record_residual) trace->residual_history.push_back(residual());
        for (auto& [w, acc] : trace->window_estimates) {
            if (k + w >= n_steps) {
                for (std::size_t i = 0; i < net_.n_mesh; ++i) acc[i] += x_[i];
            }
        }
        if (opts_.fluctuation_window > 0 && k + opts_.fluctuation_window >= n_steps) {
            for (std::size_t i = 0; i < net_.n_mesh; ++i) {
                fluct_sum[i] += x_[i];
                fluct_sumsq[i] += x_[i] * x_[i];
            }
        }
    }
    (void)start;
    if (trace) {
        for (auto& [w, acc] : trace->window_estimates) {
            for (double& v : acc) v /= static_cast<double>(w);
        }
        if (opts_.fluctuation_window > 0) {
            double w = static_cast<double>(opts_.fluctuation_window);
            trace->readout_std.resize(net_.n_mesh);
            for (std::size_t i = 0; i < net_.n_mesh; ++i) {
                double mean = fluct_sum[i] / w;
                double var = std::max(0.0, fluct_sumsq[i] / w - mean * mean);
                trace->readout_std[i] = std::sqrt(var);
            }
        }
    }
}

SimTrace run(const SnnNetwork& net, std::size_t n_steps, std::uint64_t seed,
             const SimOptions& opts) {
    FloatSimulator sim(net, seed, opts);
    SimTrace trace;
    sim.run(n_steps, &trace);
    return trace;
}

SimTrace run_p_only(const SnnNetwork& net, std::size_t n_steps, std::uint64_t seed,
                    SimOptions opts) {
    opts.p_only = true;
    FloatSimulator sim(net, seed, opts);
    SimTrace trace;
    sim.run(n_steps, &trace);
    return trace;
}

std::vector<double> estimate_solution(const SimTrace& trace, std::size_t window) {
    if (window == 0 || window > trace.n_steps)
        throw DomainError("estimate_solution: window exceeds recorded steps");
    auto it = trace.window_estimates.find(window);
    if (it != trace.window_estimates.end()) return it->second;
    if (trace.readout_history.size() != trace.n_steps)
        throw DomainError("estimate_solution: readout history was not recorded");
    std::vector<double> est(trace.n_mesh, 0.0);
    for (std::size_t k = trace.n_steps - window; k < trace.n_steps; ++k) {
        for (std::size_t i = 0; i < trace.n_mesh; ++i) est[i] += trace.readout_history[k][i];
    }
    for (double& v : est) v /= static_cast<double>(window);
    return est;
}

void export_trace_csv(const SimTrace& trace, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto path = [&dir](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    {
        std::ofstream out(path("spikes.csv"));
        out << "step,neuron\n";
        for (const auto& [step, neuron] : trace.spike_raster)
            out << step << ',' << neuron << '\n';
    }
    if (!trace.residual_history.empty()) {
        std::ofstream out(path("residual.csv"));
        out << std::setprecision(12) << "step,rel_residual\n";
        for (std::size_t k = 0; k < trace.residual_history.size(); ++k)
            out << k << ',' << trace.residual_history[k] << '\n';
    }
    if (!trace.readout_history.empty()) {
        std::ofstream out(path("readout.csv"));
        out << std::setprecision(12) << "step";
        for (std::size_t i = 0; i < trace.n_mesh; ++i) out << ",x" << i;
        out << '\n';
        for (std::size_t k = 0; k < trace.readout_history.size(); ++k) {
            out << k;
            for (double v : trace.readout_history[k]) out << ',' << v;
            out << '\n';
        }
    }
}

}  // namespace neurofem
