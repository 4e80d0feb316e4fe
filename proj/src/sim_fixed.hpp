#ifndef NEUROFEM_SIM_FIXED_HPP
#define NEUROFEM_SIM_FIXED_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "network.hpp"
#include "sim_float.hpp"

namespace neurofem {

struct EpochConfig {
    std::size_t epoch_len = 4096;
    std::size_t n_epochs = 32;
    bool transient = false;  // flip bias sign at every epoch boundary
};

struct EpochSummary {
    std::size_t epoch = 0;
    bool transient = false;
    std::uint64_t spike_count = 0;
    double mean_readout_residual = 0.0;  // vs the epoch's effective rhs
};

struct FixedRunResult {
    SimTrace trace;
    std::vector<EpochSummary> epochs;
    std::uint64_t saturation_count = 0;
    // per-epoch solution estimate (readout averaged over the final steps of
    // the epoch, sign-corrected in transient mode)
    std::vector<std::vector<double>> epoch_solutions;
};

// Bit-exact emulation of the 24-bit integer neuron updates with 8-bit
// weights, arithmetic shifts, and uniform 24-bit noise.
class FixedSimulator {
  public:
    FixedSimulator(const FixedNetwork& net, std::uint64_t seed, bool noise_enabled = true);

    void step();
    void flip_bias_sign();

    std::vector<double> readout() const;  // x at float scale
    const std::vector<std::int32_t>& u1() const { return u1_; }
    const std::vector<std::int32_t>& u2() const { return u2_; }
    const std::vector<std::int32_t>& u_err() const { return u_err_; }
    const std::vector<std::int32_t>& u_int() const { return u_int_; }
    const std::vector<std::int32_t>& membrane() const { return v_; }
    const std::vector<std::uint8_t>& spikes() const { return s_; }
    std::size_t current_step() const { return step_; }
    std::uint64_t saturation_count() const { return saturations_; }
    std::size_t spikes_this_step() const { return spike_list_.size(); }
    int bias_sign() const { return bias_sign_; }

  private:
    FixedNetwork net_;  // owned copy
    CsrMatrix slow_cols_;
    CsrMatrix fast_cols_;
    std::vector<std::int32_t> gamma_fixed_;  // per neuron, scale 2^13
    std::uint64_t seed_;
    bool noise_enabled_;
    int bias_sign_ = 1;
    std::size_t step_ = 0;
    std::uint64_t saturations_ = 0;

    std::vector<std::int32_t> u1_, u2_, u_err_, u_int_, v_;
    std::vector<std::int64_t> x_fixed_;  // readout, scale 2^16
    std::vector<std::int64_t> da_slow_, da_fast_;
    std::vector<std::uint8_t> s_;
    std::vector<std::uint32_t> spike_list_;

    std::int32_t saturate24(std::int64_t v);
};

FixedRunResult run_fixed(const FixedNetwork& net, const EpochConfig& cfg, std::uint64_t seed,
                         bool noise_enabled = true, std::size_t solution_window = 1000);

// Plain evaluation run: average readout over the final window.
std::vector<double> run_fixed_eval(const FixedNetwork& net, std::size_t n_steps,
                                   std::uint64_t seed, std::size_t window = 1000,
                                   bool noise_enabled = true);

struct FixedFloatDiff {
    std::map<std::string, double> max_deviation;  // float units per variable
    double readout_deviation = 0.0;
};

// Paired run of both engines with matched noise realizations; deviations are
// reported in float units of the quantizer's scaled system.
FixedFloatDiff fixed_vs_float_diff(const SnnNetwork& net, std::size_t steps,
                                   std::uint64_t seed, bool noise_enabled = true);

void export_epoch_summary_csv(const std::vector<EpochSummary>& epochs,
                              const std::string& path);

}  // namespace neurofem

#endif
