#ifndef NEUROFEM_SIM_FLOAT_HPP
#define NEUROFEM_SIM_FLOAT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "network.hpp"

namespace neurofem {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NoiseMode { Gaussian, DequantizedUniform, Off };

struct SimOptions {
    bool record_spikes = false;
    bool record_readout = false;
    bool record_residual = true;
    bool p_only = false;                 // k_i forced to 0, u_int frozen
    NoiseMode noise = NoiseMode::Gaussian;
    std::vector<std::size_t> estimate_windows;  // trailing-window readout means
    std::size_t fluctuation_window = 0;         // per-node readout std over final steps
};

struct SimTrace {
    std::size_t n_steps = 0;
    std::size_t n_mesh = 0;
    std::vector<std::pair<std::size_t, std::size_t>> spike_raster;  // (step, neuron)
    std::vector<std::vector<double>> readout_history;
    std::vector<double> residual_history;
    std::vector<std::uint64_t> spike_counts;  // per neuron
    std::map<std::size_t, std::vector<double>> window_estimates;
    std::vector<double> readout_std;  // per node, over the fluctuation window
};

// Forward-Euler simulation with the delta-spike convention: spike-driven
// terms enter unscaled by dt, continuous terms carry dt.
class FloatSimulator {
  public:
    FloatSimulator(const SnnNetwork& net, std::uint64_t seed, const SimOptions& opts = {});

    void step();
    void run(std::size_t n_steps, SimTrace* trace = nullptr);

    // Bias replacement mid-run; the simulation continues from its state.
    void set_rhs(const std::vector<double>& b_new);

    const std::vector<double>& readout() const { return x_; }
    const std::vector<double>& membrane() const { return v_; }
    const std::vector<double>& u1() const { return u1_; }
    const std::vector<double>& u2() const { return u2_; }
    const std::vector<double>& u_int() const { return u_int_; }
    const std::vector<std::uint8_t>& spikes() const { return s_; }
    std::size_t current_step() const { return step_; }
    double residual() const;
    double residual_vs(const std::vector<double>& b_other) const;

  private:
    SnnNetwork net_;  // owned copy; bias is mutable through set_rhs
    CsrMatrix slow_cols_;  // transpose of omega_slow for spike-column scatter
    CsrMatrix fast_cols_;
    SimOptions opts_;
    std::uint64_t seed_;
    std::size_t step_ = 0;

    std::vector<double> bias_eff_;  // -bias: engine runs the SPD-oriented twin
    std::vector<double> u1_, u2_, u_int_, v_, x_;
    std::vector<double> da_slow_, da_fast_;
    std::vector<std::uint8_t> s_;
    std::vector<std::uint32_t> spike_list_;
};

SimTrace run(const SnnNetwork& net, std::size_t n_steps, std::uint64_t seed,
             const SimOptions& opts = {});

SimTrace run_p_only(const SnnNetwork& net, std::size_t n_steps, std::uint64_t seed,
                    SimOptions opts = {});

// Per-component mean of the readout over the final window.
std::vector<double> estimate_solution(const SimTrace& trace, std::size_t window);

void export_trace_csv(const SimTrace& trace, const std::string& dir);

}  // namespace neurofem

#endif
