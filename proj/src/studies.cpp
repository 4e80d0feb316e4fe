#include "studies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fem.hpp"
#include "mesh.hpp"
#include "rng.hpp"
#include "sim_fixed.hpp"
#include "sim_float.hpp"
#include "sparse.hpp"

namespace neurofem {

void StudyConfig::validate() const {
    if (max_areas.empty()) throw DomainError("study config: need at least one resolution");
    if (seeds.empty()) throw DomainError("study config: need at least one seed");
    for (double a : max_areas)
        if (!(a > 0.0)) throw DomainError("study config: max_area must be positive");
}

std::string StudyConfig::describe() const {
    std::ostringstream os;
    os << std::setprecision(10) << "max_areas=";
    for (std::size_t i = 0; i < max_areas.size(); ++i)
        os << (i ? "," : "") << max_areas[i];
    os << " npm=";
    for (std::size_t i = 0; i < npm_list.size(); ++i) os << (i ? "," : "") << npm_list[i];
    os << " gamma=";
    for (std::size_t i = 0; i < gamma_list.size(); ++i) os << (i ? "," : "") << gamma_list[i];
    os << " steps=" << steps << " window=" << window << " seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << " epoch_len=" << epoch_len << " n_epochs=" << n_epochs
       << " switch_step=" << switch_step << " mode=" << mode << " jitter=" << jitter;
    return os.str();
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y, double* r2) {
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("linear_slope: need >= 2 matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw DomainError("linear_slope: degenerate abscissae");
    double slope = (n * sxy - sx * sy) / denom;
    if (r2) {
        double ss_tot = syy - sy * sy / n;
        double intercept = (sy - slope * sx) / n;
        double ss_res = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double e = y[i] - (slope * x[i] + intercept);
            ss_res += e * e;
        }
        *r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
    return slope;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double* r2) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw DomainError("loglog_slope: values must be positive");
        lx[i] = std::log10(x[i]);
        ly[i] = std::log10(y[i]);
    }
    return linear_slope(lx, ly, r2);
}

namespace {

struct Cell {
    Mesh mesh;
    FemSystem sys;
    std::vector<double> conventional;  // tightly converged CG
    std::vector<double> analytic;
    double xmax = 0.0;
    std::size_t n_nodes = 0;
    std::size_t n_interior = 0;
};

Cell build_cell(double max_area, double jitter, const ScalarField& f) {
    Cell c;
    c.mesh = gen_disk_mesh(max_area, jitter);
    auto bc = classify_boundary(c.mesh, {1});
    c.sys = assemble(c.mesh, f, bc);
    CsrMatrix na = c.sys.a;
    for (double& v : na.values) v = -v;
    std::vector<double> nb = c.sys.b;
    for (double& v : nb) v = -v;
    auto cg = cg_solve(na, nb, 1e-12, 10 * c.sys.n() + 100);
    if (!cg.converged) throw NumericalError("study cell: CG reference did not converge");
    c.conventional = std::move(cg.x);
    c.analytic = analytic_on_system(c.mesh, c.sys);
    for (double v : c.conventional) c.xmax = std::max(c.xmax, std::abs(v));
    c.n_nodes = c.mesh.n_nodes();
    c.n_interior = c.sys.n();
    return c;
}

double residual_per_node(const Cell& c, const std::vector<double>& est) {
    return rel_residual(c.sys.a, est, c.sys.b) / static_cast<double>(c.n_interior);
}

std::string render_csv(const StudyResult& res, const std::string& config_line) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "# study=" << res.name << ' ' << config_line << '\n';
    for (std::size_t i = 0; i < res.columns.size(); ++i)
        os << (i ? "," : "") << res.columns[i];
    os << '\n';
    for (const auto& row : res.rows) {
        for (std::size_t i = 0; i < res.columns.size(); ++i) {
            auto it = row.find(res.columns[i]);
            os << (i ? "," : "");
            if (it != row.end()) os << it->second;
        }
        os << '\n';
    }
    return os.str();
}

int gamma_tag(double gamma) { return static_cast<int>(std::lround(-std::log2(gamma))); }

}  // namespace

StudyResult study_convergence(const StudyConfig& cfg) {
    cfg.validate();
    if (cfg.max_areas.size() < 4)
        throw DomainError("study_convergence: need >= 4 resolutions");
    StudyResult res;
    res.name = "convergence";
    res.columns = {"n_nodes", "n_interior", "max_area", "npm", "gamma", "seed",
                   "rel_err_analytic", "rel_err_conventional", "residual_per_node",
                   "diverged"};

    // per combination: x = sqrt(n_interior) (inverse element size), y = rel err
    std::map<std::pair<std::size_t, int>, std::pair<std::vector<double>, std::vector<double>>>
        series;
    std::vector<double> conv_x, conv_y;

    for (double area : cfg.max_areas) {
        Cell c = build_cell(area, cfg.jitter, forcing_f1);
        double inv_h = std::sqrt(static_cast<double>(c.n_interior));
        double conv_err = rel_error(c.conventional, c.analytic);
        conv_x.push_back(inv_h);
        conv_y.push_back(conv_err);
        res.rows.push_back({{"n_nodes", static_cast<double>(c.n_nodes)},
                            {"n_interior", static_cast<double>(c.n_interior)},
                            {"max_area", area},
                            {"npm", 0.0},
                            {"gamma", 0.0},
                            {"seed", 0.0},
                            {"rel_err_analytic", conv_err},
                            {"rel_err_conventional", 0.0},
                            {"residual_per_node", residual_per_node(c, c.conventional)},
                            {"diverged", 0.0}});

        for (std::size_t npm : cfg.npm_list) {
            for (double gamma : cfg.gamma_list) {
                SnnParams p;
                p.npm = npm;
                p.gamma_mag = gamma;
                auto net = build_network(c.sys.a, c.sys.b, p);
                for (std::uint64_t seed : cfg.seeds) {
                    SimOptions opts;
                    opts.estimate_windows = {cfg.window};
                    double e_an = -1.0, e_conv = -1.0, rpn = -1.0, diverged = 0.0;
                    try {
                        auto trace = run(net, cfg.steps, seed, opts);
                        const auto& est = trace.window_estimates.at(cfg.window);
                        e_an = rel_error(est, c.analytic);
                        e_conv = rel_error(est, c.conventional);
                        rpn = residual_per_node(c, est);
                        auto& s = series[{npm, gamma_tag(gamma)}];
                        s.first.push_back(inv_h);
                        s.second.push_back(e_an);
                    } catch (const DivergenceError&) {
                        diverged = 1.0;
                    }
                    res.rows.push_back({{"n_nodes", static_cast<double>(c.n_nodes)},
                                        {"n_interior", static_cast<double>(c.n_interior)},
                                        {"max_area", area},
                                        {"npm", static_cast<double>(npm)},
                                        {"gamma", gamma},
                                        {"seed", static_cast<double>(seed)},
                                        {"rel_err_analytic", e_an},
                                        {"rel_err_conventional", e_conv},
                                        {"residual_per_node", rpn},
                                        {"diverged", diverged}});
                }
            }
        }
    }

    res.metrics["slope_conventional"] = loglog_slope(conv_x, conv_y);
    bool mono = true;
    for (std::size_t i = 1; i < conv_y.size(); ++i)
        if (conv_y[i] >= conv_y[i - 1]) mono = false;
    res.metrics["conventional_monotonic"] = mono ? 1.0 : 0.0;
    for (const auto& kv : series) {
        std::ostringstream key;
        key << "slope_npm" << kv.first.first << "_g" << kv.first.second;
        if (kv.second.first.size() >= 2)
            res.metrics[key.str()] = loglog_slope(kv.second.first, kv.second.second);
    }
    res.csv = render_csv(res, cfg.describe());
    return res;
}

StudyResult study_residual_scaling(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.name = "residual";
    res.columns = {"n_nodes", "n_interior", "max_area", "npm", "gamma", "seed",
                   "residual_per_node", "rel_err_conventional"};

    // combo -> (n_interior, mean residual_per_node over seeds)
    std::map<std::pair<std::size_t, int>, std::pair<std::vector<double>, std::vector<double>>>
        series;
    // (mesh index, npm, gamma_tag) -> mean residual for the improvement checks
    std::map<std::tuple<std::size_t, std::size_t, int>, double> mean_rpn;

    for (std::size_t mi = 0; mi < cfg.max_areas.size(); ++mi) {
        Cell c = build_cell(cfg.max_areas[mi], cfg.jitter, forcing_f1);
        for (std::size_t npm : cfg.npm_list) {
            for (double gamma : cfg.gamma_list) {
                SnnParams p;
                p.npm = npm;
                p.gamma_mag = gamma;
                auto net = build_network(c.sys.a, c.sys.b, p);
                double acc = 0.0;
                for (std::uint64_t seed : cfg.seeds) {
                    SimOptions opts;
                    opts.estimate_windows = {cfg.window};
                    auto trace = run(net, cfg.steps, seed, opts);
                    const auto& est = trace.window_estimates.at(cfg.window);
                    double rpn = residual_per_node(c, est);
                    acc += rpn;
                    res.rows.push_back({{"n_nodes", static_cast<double>(c.n_nodes)},
                                        {"n_interior", static_cast<double>(c.n_interior)},
                                        {"max_area", cfg.max_areas[mi]},
                                        {"npm", static_cast<double>(npm)},
                                        {"gamma", gamma},
                                        {"seed", static_cast<double>(seed)},
                                        {"residual_per_node", rpn},
                                        {"rel_err_conventional",
                                         rel_error(est, c.conventional)}});
                }
                double mean = acc / static_cast<double>(cfg.seeds.size());
                auto& s = series[{npm, gamma_tag(gamma)}];
                s.first.push_back(static_cast<double>(c.n_interior));
                s.second.push_back(mean);
                mean_rpn[{mi, npm, gamma_tag(gamma)}] = mean;
            }
        }
    }

    for (const auto& kv : series) {
        std::ostringstream key;
        key << "resslope_npm" << kv.first.first << "_g" << kv.first.second;
        if (kv.second.first.size() >= 2)
            res.metrics[key.str()] = loglog_slope(kv.second.first, kv.second.second);
    }

    // pairwise improvement directions at every resolution
    bool npm_improves = true, gamma_improves = true;
    std::vector<std::size_t> npms = cfg.npm_list;
    std::sort(npms.begin(), npms.end());
    std::vector<int> gtags;
    for (double g : cfg.gamma_list) gtags.push_back(gamma_tag(g));
    std::sort(gtags.begin(), gtags.end());  // larger tag = smaller gamma
    for (std::size_t mi = 0; mi < cfg.max_areas.size(); ++mi) {
        for (int gt : gtags)
            for (std::size_t i = 1; i < npms.size(); ++i)
                if (mean_rpn.count({mi, npms[i], gt}) && mean_rpn.count({mi, npms[i - 1], gt}))
                    if (mean_rpn[{mi, npms[i], gt}] >= mean_rpn[{mi, npms[i - 1], gt}])
                        npm_improves = false;
        for (std::size_t npm : npms)
            for (std::size_t i = 1; i < gtags.size(); ++i)
                if (mean_rpn.count({mi, npm, gtags[i]}) && mean_rpn.count({mi, npm, gtags[i - 1]}))
                    if (mean_rpn[{mi, npm, gtags[i]}] >= mean_rpn[{mi, npm, gtags[i - 1]}])
                        gamma_improves = false;
    }
    res.metrics["npm_improves"] = npm_improves ? 1.0 : 0.0;
    res.metrics["gamma_improves"] = gamma_improves ? 1.0 : 0.0;
    res.csv = render_csv(res, cfg.describe());
    return res;
}

StudyResult study_averaging(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.name = "averaging";
    res.columns = {"window", "residual_per_node_neurofem", "residual_per_node_noisy_conv"};

    Cell c = build_cell(cfg.max_areas[0], cfg.jitter, forcing_f1);
    SnnParams p;
    p.npm = cfg.npm_list[0];
    p.gamma_mag = cfg.gamma_list[0];
    auto net = build_network(c.sys.a, c.sys.b, p);

    std::vector<std::size_t> windows;
    for (std::size_t w = 1; w * 4 <= cfg.steps; w *= 4) windows.push_back(w);
    if (windows.size() < 3)
        throw DomainError("study_averaging: steps too small for a window grid");

    SimOptions opts;
    opts.estimate_windows = windows;
    opts.fluctuation_window = windows.back();
    auto trace = run(net, cfg.steps, cfg.seeds[0], opts);

    double sigma = 0.0;
    for (double s : trace.readout_std) sigma += s;
    sigma /= static_cast<double>(trace.readout_std.size());

    std::vector<double> ws, inv_nf, inv_conv;
    for (std::size_t w : windows) {
        double r_nf = residual_per_node(c, trace.window_estimates.at(w));

        // conventional solution + per-step Gaussian noise, averaged over w steps
        std::vector<double> noisy(c.n_interior, 0.0);
        for (std::size_t s = 0; s < w; ++s)
            for (std::size_t i = 0; i < c.n_interior; ++i)
                noisy[i] += c.conventional[i] +
                            sigma * gaussian_noise(cfg.seeds[0] + 0x9e37, i, s + 131 * w);
        for (double& v : noisy) v /= static_cast<double>(w);
        double r_conv = residual_per_node(c, noisy);

        res.rows.push_back({{"window", static_cast<double>(w)},
                            {"residual_per_node_neurofem", r_nf},
                            {"residual_per_node_noisy_conv", r_conv}});
        ws.push_back(static_cast<double>(w));
        inv_nf.push_back(1.0 / r_nf);
        inv_conv.push_back(1.0 / r_conv);
    }

    // The readout is low-pass filtered with time constant 1/(lambda_d*dt), so
    // samples inside that span are correlated and averaging has no effect;
    // the 1/W regime starts beyond it. Conventional noise is white, so its
    // fit uses every window.
    const double w_min = 2.0 / (p.lambda_d * p.dt);
    std::vector<double> ws_tail, inv_nf_tail;
    for (std::size_t i = 0; i < ws.size(); ++i)
        if (ws[i] >= w_min) {
            ws_tail.push_back(ws[i]);
            inv_nf_tail.push_back(inv_nf[i]);
        }
    if (ws_tail.size() < 2)
        throw DomainError("study_averaging: steps too small to reach the averaging regime");
    res.metrics["exponent_neurofem"] = loglog_slope(ws_tail, inv_nf_tail);
    res.metrics["exponent_noisy_conventional"] = loglog_slope(ws, inv_conv);
    res.csv = render_csv(res, cfg.describe());
    return res;
}

StudyResult study_switch_rhs(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.name = "switch";
    res.columns = {"step", "residual_f1", "residual_f2", "phase"};

    Cell c = build_cell(cfg.max_areas[0], cfg.jitter, forcing_f1);
    auto bc = classify_boundary(c.mesh, {1});
    auto sys_f2 = assemble(c.mesh, forcing_f2, bc);
    CsrMatrix na = sys_f2.a;
    for (double& v : na.values) v = -v;
    std::vector<double> nb = sys_f2.b;
    for (double& v : nb) v = -v;
    auto cg2 = cg_solve(na, nb, 1e-12, 10 * sys_f2.n() + 100);

    SnnParams p;
    p.npm = cfg.npm_list[0];
    p.gamma_mag = cfg.gamma_list[0];

    const std::size_t avg_w = 256;
    const std::size_t total = cfg.switch_step + cfg.steps;
    auto trailing_run = [&](const std::vector<double>& b_start, bool do_switch) {
        auto net = build_network(c.sys.a, b_start, p);
        FloatSimulator sim(net, cfg.seeds[0]);
        std::vector<std::vector<double>> ring(avg_w, std::vector<double>(c.n_interior, 0.0));
        std::vector<double> mean(c.n_interior, 0.0);
        std::vector<std::array<double, 2>> samples;  // (r_f1, r_f2) every 64 steps
        for (std::size_t s = 0; s < total; ++s) {
            if (do_switch && s == cfg.switch_step) sim.set_rhs(sys_f2.b);
            sim.step();
            auto& slot = ring[s % avg_w];
            const auto& x = sim.readout();
            double scale = 1.0 / static_cast<double>(avg_w);
            for (std::size_t i = 0; i < c.n_interior; ++i) {
                mean[i] += (x[i] - slot[i]) * scale;
                slot[i] = x[i];
            }
            if (s % 64 == 63 && s + 1 >= avg_w) {
                double r1 = rel_residual(c.sys.a, mean, c.sys.b) /
                            static_cast<double>(c.n_interior);
                double r2 = rel_residual(sys_f2.a, mean, sys_f2.b) /
                            static_cast<double>(c.n_interior);
                samples.push_back({r1, r2});
                if (do_switch)
                    res.rows.push_back({{"step", static_cast<double>(s + 1)},
                                        {"residual_f1", r1},
                                        {"residual_f2", r2},
                                        {"phase", s + 1 > cfg.switch_step ? 1.0 : 0.0}});
            }
        }
        return std::make_pair(samples, mean);
    };

    auto [fresh_samples, fresh_mean] = trailing_run(sys_f2.b, false);
    auto [switch_samples, switch_mean] = trailing_run(c.sys.b, true);

    // fresh-run plateau: mean residual_f2 over the final quarter
    double plateau = 0.0;
    std::size_t q = fresh_samples.size() / 4;
    for (std::size_t i = fresh_samples.size() - q; i < fresh_samples.size(); ++i)
        plateau += fresh_samples[i][1];
    plateau /= static_cast<double>(q);

    // residual vs f2 one epoch after the switch
    std::size_t idx_epoch = (cfg.switch_step + cfg.epoch_len) / 64;
    idx_epoch = std::min(idx_epoch, switch_samples.size() - 1);
    double r_f2_epoch = switch_samples[idx_epoch][1];

    // pre-switch plateau vs f1 and the post-switch rise
    std::size_t idx_pre = cfg.switch_step / 64 - 1;
    double r_f1_pre = switch_samples[idx_pre][0];
    double r_f1_end = switch_samples.back()[0];
    double r_f2_pre = switch_samples[idx_pre][1];

    res.metrics["plateau_fresh_f2"] = plateau;
    res.metrics["residual_f2_after_epoch"] = r_f2_epoch;
    res.metrics["epoch_ratio"] = r_f2_epoch / plateau;
    res.metrics["f1_pre_plateau"] = r_f1_pre;
    res.metrics["f1_post_over_pre"] = r_f1_end / r_f1_pre;
    res.metrics["f1_rises_after_switch"] = r_f1_end > r_f1_pre ? 1.0 : 0.0;
    res.metrics["f2_falls_after_switch"] = switch_samples.back()[1] < r_f2_pre ? 1.0 : 0.0;
    res.metrics["final_match_vs_fresh"] = rel_error(switch_mean, fresh_mean);
    res.metrics["final_err_vs_conventional_f2"] = rel_error(switch_mean, cg2.x);
    res.metrics["fresh_err_vs_conventional_f2"] = rel_error(fresh_mean, cg2.x);
    res.csv = render_csv(res, cfg.describe());
    return res;
}

StudyResult study_p_vs_pi(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.name = "p_vs_pi";
    res.columns = {"seed", "rel_err_pi", "rel_err_p_only"};

    Cell c = build_cell(cfg.max_areas[0], cfg.jitter, forcing_f1);
    SnnParams p;
    p.npm = cfg.npm_list[0];
    p.gamma_mag = cfg.gamma_list[0];
    auto net = build_network(c.sys.a, c.sys.b, p);

    double ratio_acc = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        SimOptions opts;
        opts.estimate_windows = {cfg.window};
        auto pi_trace = run(net, cfg.steps, seed, opts);
        auto p_trace = run_p_only(net, cfg.steps, seed, opts);
        double e_pi = rel_error(pi_trace.window_estimates.at(cfg.window), c.conventional);
        double e_p = rel_error(p_trace.window_estimates.at(cfg.window), c.conventional);
        ratio_acc += e_p / e_pi;
        res.rows.push_back({{"seed", static_cast<double>(seed)},
                            {"rel_err_pi", e_pi},
                            {"rel_err_p_only", e_p}});
    }
    res.metrics["ratio_p_over_pi"] = ratio_acc / static_cast<double>(cfg.seeds.size());
    res.csv = render_csv(res, cfg.describe());
    return res;
}

StudyResult study_fixed_point(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.name = "fixedpoint";
    res.columns = {"n_nodes", "n_interior", "npm", "seed", "n_seeds", "mode",
                   "rel_err_analytic", "rel_err_conventional", "mean_dev", "max_dev",
                   "converged", "spikes_steady", "spikes_transient", "spike_diff",
                   "saturations"};

    const bool do_eval = cfg.mode == "eval" || cfg.mode == "both";
    const bool do_epoch = cfg.mode == "epoch" || cfg.mode == "both";
    if (!do_eval && !do_epoch)
        throw DomainError("study_fixed_point: mode must be eval, epoch, or both");

    std::vector<double> diff_x, diff_y;
    double worst_meandev = 0.0;

    for (double area : cfg.max_areas) {
        Cell c = build_cell(area, cfg.jitter, forcing_f1);
        for (std::size_t npm : cfg.npm_list) {
            SnnParams p;
            p.npm = npm;
            p.gamma_mag = cfg.gamma_list[0];
            auto net = build_network(c.sys.a, c.sys.b, p);
            auto fx = quantize_network(net);

            if (do_eval) {
                double meandev_acc = 0.0;
                std::size_t n_ok = 0;
                for (std::uint64_t seed : cfg.seeds) {
                    auto est = run_fixed_eval(fx, cfg.steps, seed, cfg.window);
                    double e_conv = rel_error(est, c.conventional);
                    double mean_dev = 0.0, max_dev = 0.0;
                    for (std::size_t i = 0; i < c.n_interior; ++i) {
                        double d = std::abs(est[i] - c.conventional[i]) / c.xmax;
                        mean_dev += d;
                        max_dev = std::max(max_dev, d);
                    }
                    mean_dev /= static_cast<double>(c.n_interior);
                    bool converged = e_conv <= 0.5;
                    if (converged) {
                        meandev_acc += mean_dev;
                        ++n_ok;
                    }
                    res.rows.push_back({{"n_nodes", static_cast<double>(c.n_nodes)},
                                        {"n_interior", static_cast<double>(c.n_interior)},
                                        {"npm", static_cast<double>(npm)},
                                        {"seed", static_cast<double>(seed)},
                                        {"mode", 0.0},
                                        {"rel_err_analytic", rel_error(est, c.analytic)},
                                        {"rel_err_conventional", e_conv},
                                        {"mean_dev", mean_dev},
                                        {"max_dev", max_dev},
                                        {"converged", converged ? 1.0 : 0.0}});
                }
                std::ostringstream key;
                key << "meandev_npm" << npm << "_n" << c.n_interior;
                double meandev = n_ok ? meandev_acc / static_cast<double>(n_ok) : -1.0;
                res.metrics[key.str()] = meandev;
                std::ostringstream ck;
                ck << "converged_npm" << npm << "_n" << c.n_interior;
                res.metrics[ck.str()] =
                    static_cast<double>(n_ok) / static_cast<double>(cfg.seeds.size());
                if (c.n_interior >= 200 && n_ok)
                    worst_meandev = std::max(worst_meandev, meandev);
            }

            if (do_epoch) {
                EpochConfig ec;
                ec.epoch_len = cfg.epoch_len;
                ec.n_epochs = cfg.n_epochs;
                // the transient-steady gap is small relative to per-seed
                // fluctuation, so average the per-epoch means over all seeds
                double s_mean = 0.0, t_mean = 0.0, sats = 0.0;
                for (std::uint64_t seed : cfg.seeds) {
                    ec.transient = false;
                    auto steady = run_fixed(fx, ec, seed);
                    ec.transient = true;
                    auto trans = run_fixed(fx, ec, seed);
                    // epoch 0 is a cold start in both modes; exclude it
                    for (std::size_t e = 1; e < ec.n_epochs; ++e) {
                        s_mean += static_cast<double>(steady.epochs[e].spike_count);
                        t_mean += static_cast<double>(trans.epochs[e].spike_count);
                    }
                    sats += static_cast<double>(trans.saturation_count);
                }
                double denom = static_cast<double>((ec.n_epochs - 1) * cfg.seeds.size());
                s_mean /= denom;
                t_mean /= denom;
                double diff = t_mean - s_mean;
                res.rows.push_back({{"n_nodes", static_cast<double>(c.n_nodes)},
                                    {"n_interior", static_cast<double>(c.n_interior)},
                                    {"npm", static_cast<double>(npm)},
                                    {"n_seeds", static_cast<double>(cfg.seeds.size())},
                                    {"mode", 1.0},
                                    {"spikes_steady", s_mean},
                                    {"spikes_transient", t_mean},
                                    {"spike_diff", diff},
                                    {"saturations", sats}});
                if (npm == cfg.npm_list[0]) {
                    diff_x.push_back(static_cast<double>(c.n_interior));
                    diff_y.push_back(diff);
                }
            }
        }
    }

    if (do_eval) res.metrics["worst_meandev"] = worst_meandev;
    if (do_epoch && diff_x.size() >= 2) {
        double r2 = 0.0;
        res.metrics["epoch_diff_slope"] = linear_slope(diff_x, diff_y, &r2);
        res.metrics["epoch_diff_r2"] = r2;
        bool all_pos = true;
        for (double d : diff_y)
            if (d <= 0.0) all_pos = false;
        res.metrics["epoch_diff_all_positive"] = all_pos ? 1.0 : 0.0;
    }
    res.csv = render_csv(res, cfg.describe());
    return res;
}

IngestResult solve_ingested(const std::string& mtx_path, const std::string& b_csv_path,
                            const SnnParams& params, std::size_t steps, std::size_t window,
                            std::uint64_t seed) {
    CsrMatrix a = mm_read_file(mtx_path);
    std::vector<double> b = read_rhs_csv(b_csv_path);
    if (a.n_rows != a.n_cols)
        throw StructuralError("solve_ingested: system matrix must be square");
    if (b.size() != a.n_rows)
        throw StructuralError("solve_ingested: rhs length does not match matrix");

    // Orient to the negative-definite convention the network expects; the
    // solution of (-A)x = -b is unchanged.
    double diag_sum = 0.0;
    for (std::size_t i = 0; i < a.n_rows; ++i) diag_sum += a.at(i, i);
    CsrMatrix a_net = a;
    std::vector<double> b_net = b;
    if (diag_sum > 0.0) {
        for (double& v : a_net.values) v = -v;
        for (double& v : b_net) v = -v;
    }

    IngestResult res;
    auto net = build_network(a_net, b_net, params);
    SimOptions opts;
    opts.estimate_windows = {window};
    auto trace = run(net, steps, seed, opts);
    res.solution = trace.window_estimates.at(window);
    res.rel_residual = rel_residual(a, res.solution, b);

    res.cg_baseline = a.is_symmetric(1e-12);
    if (res.cg_baseline) {
        CsrMatrix a_pd = a;
        std::vector<double> b_pd = b;
        if (diag_sum <= 0.0) {
            for (double& v : a_pd.values) v = -v;
            for (double& v : b_pd) v = -v;
        }
        auto cg = cg_solve(a_pd, b_pd, 1e-12, 10 * a.n_rows + 100);
        if (cg.converged) res.deviation_from_cg = rel_error(res.solution, cg.x);
    }

    std::ostringstream os;
    os << std::setprecision(10);
    os << "# solve_ingested rel_residual=" << res.rel_residual
       << " deviation_from_cg=" << res.deviation_from_cg
       << " cg_baseline=" << (res.cg_baseline ? 1 : 0) << " steps=" << steps
       << " window=" << window << " seed=" << seed << '\n';
    os << "index,x\n";
    for (std::size_t i = 0; i < res.solution.size(); ++i)
        os << i << ',' << res.solution[i] << '\n';
    res.csv = os.str();
    return res;
}

void write_study_csv(const StudyResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("write_study_csv: cannot open " + path);
    out << res.csv;
}

}  // namespace neurofem
