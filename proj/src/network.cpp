#include "network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "json.hpp"

namespace neurofem {

void SnnParams::validate() const {
    if (npm < 2 || npm % 2 != 0) throw DomainError("SnnParams: npm must be even and >= 2");
    if (!(gamma_mag > 0.0)) throw DomainError("SnnParams: gamma_mag must be positive");
    if (!(dt > 0.0)) throw DomainError("SnnParams: dt must be positive");
}

CsrMatrix build_readout(std::size_t n_mesh, const SnnParams& params) {
    params.validate();
    if (n_mesh < 1) throw DomainError("build_readout: n_mesh must be >= 1");
    const std::size_t npm = params.npm;
    CsrMatrix g;
    g.n_rows = n_mesh;
    g.n_cols = n_mesh * npm;
    g.row_ptr.resize(n_mesh + 1);
    g.col_idx.resize(n_mesh * npm);
    g.values.resize(n_mesh * npm);
    for (std::size_t i = 0; i < n_mesh; ++i) {
        g.row_ptr[i] = i * npm;
        for (std::size_t a = 0; a < npm; ++a) {
            g.col_idx[i * npm + a] = i * npm + a;
            g.values[i * npm + a] = a < npm / 2 ? params.gamma_mag : -params.gamma_mag;
        }
    }
    g.row_ptr[n_mesh] = n_mesh * npm;
    return g;
}

namespace {

double neuron_sign(std::size_t alpha, std::size_t npm) {
    return (alpha % npm) < npm / 2 ? 1.0 : -1.0;
}

// Gamma^T M Gamma for a sparse M, built row-by-row in sorted column order.
// Block (i,j) is M_ij * |Gamma|^2 * sign(alpha) * sign(beta).
CsrMatrix expand_blocks(const CsrMatrix& m, std::size_t npm, double gamma_mag) {
    CsrMatrix w;
    w.n_rows = w.n_cols = m.n_rows * npm;
    w.row_ptr.resize(w.n_rows + 1);
    w.col_idx.resize(m.nnz() * npm * npm);
    w.values.resize(m.nnz() * npm * npm);
    const double g2 = gamma_mag * gamma_mag;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m.n_rows; ++i) {
        std::size_t row_nnz = m.row_ptr[i + 1] - m.row_ptr[i];
        for (std::size_t a = 0; a < npm; ++a) {
            std::size_t alpha = i * npm + a;
            w.row_ptr[alpha] = pos;
            double sa = neuron_sign(alpha, npm);
            for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
                std::size_t j = m.col_idx[k];
                double base = m.values[k] * g2 * sa;
                for (std::size_t b = 0; b < npm; ++b) {
                    std::size_t beta = j * npm + b;
                    w.col_idx[pos] = beta;
                    w.values[pos] = base * neuron_sign(beta, npm);
                    ++pos;
                }
            }
            (void)row_nnz;
        }
    }
    w.row_ptr[w.n_rows] = pos;
    return w;
}

}  // namespace

SnnNetwork build_network(const CsrMatrix& a, const std::vector<double>& b,
                         const SnnParams& params) {
    params.validate();
    if (a.n_rows != a.n_cols || a.n_rows != b.size())
        throw StructuralError("build_network: system dimensions disagree");
    if (a.n_rows < 1) throw DomainError("build_network: system dimension must be >= 1");

    SnnNetwork net;
    net.n_mesh = a.n_rows;
    net.params = params;
    net.gamma = build_readout(net.n_mesh, params);
    net.omega_slow = expand_blocks(a, params.npm, params.gamma_mag);
    net.omega_fast = expand_blocks(csr_identity(net.n_mesh), params.npm, params.gamma_mag);
    net.theta = params.gamma_mag * params.gamma_mag / 2.0;
    net.system_a = a;
    net.system_b = b;
    net.bias.resize(net.n_neurons());
    for (std::size_t alpha = 0; alpha < net.n_neurons(); ++alpha)
        net.bias[alpha] = neuron_sign(alpha, params.npm) * params.gamma_mag * b[alpha / params.npm];
    return net;
}

void set_bias(SnnNetwork& net, const std::vector<double>& b_new) {
    if (b_new.size() != net.n_mesh) throw StructuralError("set_bias: dimension mismatch");
    net.system_b = b_new;
    for (std::size_t alpha = 0; alpha < net.n_neurons(); ++alpha)
        net.bias[alpha] = neuron_sign(alpha, net.params.npm) * net.params.gamma_mag *
                          b_new[alpha / net.params.npm];
}

namespace {

CsrMatrix quantize_weights(const CsrMatrix& w, double scale, double& max_err,
                           const char* what) {
    CsrMatrix q = w;
    for (std::size_t k = 0; k < q.nnz(); ++k) {
        double scaled = w.values[k] * scale;
        double rounded = std::nearbyint(scaled);
        if (rounded > 127.0) rounded = 127.0;  // +128 clamps to the 8-bit range
        if (rounded < -128.0)
            throw QuantizationError(std::string(what) + ": weight underflow at entry " +
                                    std::to_string(k));
        max_err = std::max(max_err, std::abs(scaled - rounded) / scale);
        q.values[k] = rounded;
    }
    return q;
}

}  // namespace

FixedNetwork quantize_network(const SnnNetwork& net) {
    FixedNetwork fx;
    fx.n_mesh = net.n_mesh;
    fx.npm = net.params.npm;
    fx.params = net.params;
    fx.system_a = net.system_a;
    fx.system_b = net.system_b;

    fx.scale_table = {{"omega_slow", 6}, {"omega_fast", 19}, {"gamma", 13}, {"v", 28},
                      {"bias", 17},      {"u1", 16},         {"u2", 20},    {"u_err", 16},
                      {"u_int", 20},     {"readout", 16}};
    // per-update shift amounts realizing the scale conversions
    fx.shift_plan = {{"u1_decay_mul", 511}, {"u1_decay_shift", 9}, {"da_slow_shift", 10},
                     {"da_fast_u2_shift", -5}, {"bias_pre_shift", -8}, {"bias_shift", 7},
                     {"u_err_int_shift", -8}, {"v_decay_mul", 255}, {"v_decay_shift", 8},
                     {"u_err_v_shift", 2}, {"u2_v_shift", -4}, {"da_fast_v_shift", 9},
                     {"noise_shift", -3}, {"readout_decay_mul", 511},
                     {"readout_decay_shift", 9}, {"gamma_readout_shift", 3}};

    // Global power-of-two scaling of A and b placing max|omega_slow| * 2^6
    // in (64, 128]. The same scalar applies to the bias, so the solution is
    // unchanged.
    double max_slow = 0.0;
    for (double v : net.omega_slow.values) max_slow = std::max(max_slow, std::abs(v));
    if (max_slow == 0.0) max_slow = net.params.gamma_mag * net.params.gamma_mag;
    double m = max_slow * 64.0;  // 2^6
    int p = static_cast<int>(std::floor(7.0 - std::log2(m)));
    while (m * std::ldexp(1.0, p) > 128.0) --p;
    while (m * std::ldexp(1.0, p) <= 64.0) ++p;
    fx.system_scale_exp = p;
    const double c = std::ldexp(1.0, p);

    fx.max_weight_quant_error = 0.0;
    CsrMatrix slow_scaled = net.omega_slow;
    for (double& v : slow_scaled.values) v *= c;
    fx.weights_slow =
        quantize_weights(slow_scaled, 64.0, fx.max_weight_quant_error, "weights_slow");
    fx.weights_fast = quantize_weights(net.omega_fast, std::ldexp(1.0, 19),
                                       fx.max_weight_quant_error, "weights_fast");

    // bias negated: the hardware error update adds +u1, which is stable for
    // the weak form's negative definite A; flipping b keeps the same solution.
    fx.bias_fixed.resize(net.n_neurons());
    for (std::size_t alpha = 0; alpha < net.n_neurons(); ++alpha) {
        double scaled = -net.bias[alpha] * c * std::ldexp(1.0, 17);
        double rounded = std::nearbyint(scaled);
        if (std::abs(rounded) >= std::ldexp(1.0, 31))
            throw QuantizationError("bias overflow at neuron " + std::to_string(alpha));
        fx.bias_fixed[alpha] = static_cast<std::int32_t>(rounded);
    }
    fx.theta_fixed = static_cast<std::int32_t>(
        std::nearbyint(net.theta * std::ldexp(1.0, 28)));
    return fx;
}

namespace {

void write_vector_csv(const std::vector<double>& v, const std::string& path,
                      const char* header) {
    std::ofstream out(path);
    if (!out) throw ParseError("export_network: cannot open " + path);
    out << std::setprecision(17) << header << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) out << i << ',' << v[i] << '\n';
}

std::vector<double> read_vector_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("import_network: cannot open " + path);
    std::vector<double> v;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;
        }
        auto comma = line.find(',');
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return v;
}

}  // namespace

void export_network(const SnnNetwork& net, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto in_dir = [&dir](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    mm_write_file(net.gamma, in_dir("gamma.mtx"));
    mm_write_file(net.omega_slow, in_dir("omega_slow.mtx"));
    mm_write_file(net.omega_fast, in_dir("omega_fast.mtx"));
    mm_write_file(net.system_a, in_dir("system_a.mtx"));
    write_vector_csv(net.bias, in_dir("bias.csv"), "neuron,bias");
    write_vector_csv(net.system_b, in_dir("system_b.csv"), "index,b");
    nlohmann::json j;
    j["n_mesh"] = net.n_mesh;
    j["theta"] = net.theta;
    j["params"] = {{"npm", net.params.npm},         {"gamma_mag", net.params.gamma_mag},
                   {"lambda_d", net.params.lambda_d}, {"lambda_v", net.params.lambda_v},
                   {"k_p", net.params.k_p},         {"k_i", net.params.k_i},
                   {"sigma_v", net.params.sigma_v}, {"dt", net.params.dt}};
    std::ofstream out(in_dir("params.json"));
    out << j.dump(2) << '\n';
}

SnnNetwork import_network(const std::string& dir) {
    auto in_dir = [&dir](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    std::ifstream pin(in_dir("params.json"));
    if (!pin) throw ParseError("import_network: cannot open params.json in " + dir);
    nlohmann::json j = nlohmann::json::parse(pin);
    SnnParams p;
    p.npm = j.at("params").at("npm").get<std::size_t>();
    p.gamma_mag = j.at("params").at("gamma_mag").get<double>();
    p.lambda_d = j.at("params").at("lambda_d").get<double>();
    p.lambda_v = j.at("params").at("lambda_v").get<double>();
    p.k_p = j.at("params").at("k_p").get<double>();
    p.k_i = j.at("params").at("k_i").get<double>();
    p.sigma_v = j.at("params").at("sigma_v").get<double>();
    p.dt = j.at("params").at("dt").get<double>();

    SnnNetwork net;
    net.params = p;
    net.n_mesh = j.at("n_mesh").get<std::size_t>();
    net.theta = j.at("theta").get<double>();
    net.gamma = mm_read_file(in_dir("gamma.mtx"));
    net.omega_slow = mm_read_file(in_dir("omega_slow.mtx"));
    net.omega_fast = mm_read_file(in_dir("omega_fast.mtx"));
    net.system_a = mm_read_file(in_dir("system_a.mtx"));
    net.bias = read_vector_csv(in_dir("bias.csv"));
    net.system_b = read_vector_csv(in_dir("system_b.csv"));
    return net;
}

}  // namespace neurofem
