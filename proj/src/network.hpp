#ifndef NEUROFEM_NETWORK_HPP
#define NEUROFEM_NETWORK_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace neurofem {

struct SnnParams {
    std::size_t npm = 8;        // neurons per mesh node, even
    double gamma_mag = 0.015625;  // |Gamma| = 2^-6
    double lambda_d = 8.0;      // 2^3
    double lambda_v = 16.0;     // 2^4
    double k_p = 4.0;           // 2^2
    double k_i = 16.0;          // 2^4
    double sigma_v = 0.00225;
    double dt = 0.000244140625;  // 2^-12

    void validate() const;
};

// Spiking PI-controller network for a sparse linear system A x = b.
// A neuron alpha belongs to mesh node alpha / npm; the first npm/2 neurons of
// each node project with +|Gamma|, the rest with -|Gamma|.
struct SnnNetwork {
    std::size_t n_mesh = 0;
    CsrMatrix gamma;       // n_mesh x (n_mesh * npm)
    CsrMatrix omega_slow;  // Gamma^T A Gamma
    CsrMatrix omega_fast;  // Gamma^T Gamma, block diagonal
    std::vector<double> bias;  // Gamma^T b
    double theta = 0.0;        // |Gamma|^2 / 2
    SnnParams params;
    CsrMatrix system_a;        // the solved system, kept for residual traces
    std::vector<double> system_b;

    std::size_t n_neurons() const { return n_mesh * params.npm; }
};

struct FixedNetwork {
    std::size_t n_mesh = 0;
    std::size_t npm = 0;
    // 8-bit weight integers stored in CSR structure; bias_fixed holds the
    // negated bias so the hardware u_err update (+u1) realizes the
    // float model's -u1 term.
    CsrMatrix weights_slow;
    CsrMatrix weights_fast;
    std::vector<std::int32_t> bias_fixed;  // scale 2^17
    std::int32_t theta_fixed = 0;          // membrane scale 2^28
    std::map<std::string, int> scale_table;
    std::map<std::string, int> shift_plan;
    int system_scale_exp = 0;  // A and b were scaled by 2^system_scale_exp
    double max_weight_quant_error = 0.0;
    SnnParams params;
    CsrMatrix system_a;  // unscaled system for residual evaluation
    std::vector<double> system_b;

    std::size_t n_neurons() const { return n_mesh * npm; }
};

CsrMatrix build_readout(std::size_t n_mesh, const SnnParams& params);

SnnNetwork build_network(const CsrMatrix& a, const std::vector<double>& b,
                         const SnnParams& params);

// Replace the right-hand side: bias = Gamma^T b_new, weights unchanged.
void set_bias(SnnNetwork& net, const std::vector<double>& b_new);

struct QuantizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

FixedNetwork quantize_network(const SnnNetwork& net);

// Directory bundle: Matrix Market for Gamma/Omega, CSV for bias, JSON for params.
void export_network(const SnnNetwork& net, const std::string& dir);
SnnNetwork import_network(const std::string& dir);

}  // namespace neurofem

#endif
