#ifndef NEUROFEM_STUDIES_HPP
#define NEUROFEM_STUDIES_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "network.hpp"

namespace neurofem {

struct StudyConfig {
    std::vector<double> max_areas;
    std::vector<std::size_t> npm_list{8, 16};
    std::vector<double> gamma_list{1.0 / 64, 1.0 / 256};
    std::size_t steps = 50000;
    std::size_t window = 10000;
    std::vector<std::uint64_t> seeds{1};
    std::size_t epoch_len = 4096;
    std::size_t n_epochs = 8;
    std::size_t switch_step = 25000;
    std::string mode = "both";  // fixed-point study: eval | epoch | both
    double jitter = 0.0;

    void validate() const;
    std::string describe() const;  // one-line config record for CSV comments
};

// Rows carry numeric columns only; the CSV adds a method/mode label column
// where applicable plus a leading comment line with the full config.
struct StudyResult {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::map<std::string, double>> rows;
    std::map<std::string, double> metrics;
    std::string csv;
};

StudyResult study_convergence(const StudyConfig& cfg);
StudyResult study_residual_scaling(const StudyConfig& cfg);
StudyResult study_averaging(const StudyConfig& cfg);
StudyResult study_switch_rhs(const StudyConfig& cfg);
StudyResult study_fixed_point(const StudyConfig& cfg);
StudyResult study_p_vs_pi(const StudyConfig& cfg);

struct IngestResult {
    std::vector<double> solution;
    double rel_residual = 0.0;
    double deviation_from_cg = -1.0;  // -1 when no CG baseline (non-symmetric)
    bool cg_baseline = false;
    std::string csv;
};

// Build and run NeuroFEM on an arbitrary ingested system (Matrix Market
// matrix + CSV right-hand side). Systems with a predominantly positive
// diagonal are treated as conventionally oriented and negated into the
// negative-definite orientation the network expects; the solution is
// unchanged.
IngestResult solve_ingested(const std::string& mtx_path, const std::string& b_csv_path,
                            const SnnParams& params, std::size_t steps, std::size_t window,
                            std::uint64_t seed);

// Least-squares slope of log10(y) against log10(x); r2 optional out.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double* r2 = nullptr);
// Plain least-squares slope with R².
double linear_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double* r2 = nullptr);

void write_study_csv(const StudyResult& res, const std::string& path);

}  // namespace neurofem

#endif
