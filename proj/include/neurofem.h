#ifndef NEUROFEM_H
#define NEUROFEM_H

/* C interface to the NeuroFEM toolkit: disk meshing, P1 Poisson assembly,
 * spiking-network solvers (float and fixed-point), mesh partitioning, and
 * the benchmark studies.
 *
 * Conventions:
 *   - Every fallible call returns 0 (NF_OK) or a negative NF_ERR_* code;
 *     nf_last_error() describes the most recent failure on this thread.
 *   - Objects are opaque handles created through nf_*_  constructors and
 *     released with the matching nf_*_free (free functions accept NULL).
 *   - Strings returned through char** are heap copies; release them with
 *     nf_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    NF_OK = 0,
    NF_ERR_DOMAIN = -1,     /* invalid argument or parameter range */
    NF_ERR_STRUCTURE = -2,  /* inconsistent matrix/mesh structure */
    NF_ERR_NUMERIC = -3,    /* solver breakdown or non-convergence */
    NF_ERR_PARSE = -4,      /* file or format error */
    NF_ERR_CAPACITY = -5,   /* size exceeds a hardware-style limit */
    NF_ERR_QUANTIZE = -6,   /* fixed-point conversion failure */
    NF_ERR_DIVERGE = -7,    /* simulation state left the finite range */
    NF_ERR_UNKNOWN = -8
};

const char* nf_version(void);
const char* nf_last_error(void);
void nf_string_free(char* s);

/* ---- mesh ---------------------------------------------------------- */

typedef struct nf_mesh nf_mesh;

/* Concentric-ring triangulation of the unit disk; every triangle area is
 * bounded by max_area. jitter in [0, 0.5) displaces interior nodes
 * deterministically to break the ring regularity. */
int nf_mesh_gen_disk(double max_area, double jitter, nf_mesh** out);
int nf_mesh_read_msh(const char* path, nf_mesh** out);
int nf_mesh_write_msh(const nf_mesh* mesh, const char* path);
int nf_mesh_read_json(const char* path, nf_mesh** out);
int nf_mesh_write_json(const nf_mesh* mesh, const char* path);
/* JSON object: n_nodes, n_interior, n_elements, max_element_size. */
int nf_mesh_stats_json(const nf_mesh* mesh, char** out_json);
size_t nf_mesh_n_nodes(const nf_mesh* mesh);
size_t nf_mesh_n_elements(const nf_mesh* mesh);
void nf_mesh_free(nf_mesh* mesh);

/* ---- assembly ------------------------------------------------------ */

typedef struct nf_system nf_system;

/* forcing: 1 or 2 selects the built-in benchmark forcing functions.
 * dirichlet_tags lists boundary markers clamped to zero; boundary facets
 * with other markers contribute Neumann flux terms given per marker. */
int nf_assemble(const nf_mesh* mesh, int forcing, const int* dirichlet_tags,
                size_t n_dirichlet, const int* neumann_tags, const double* neumann_flux,
                size_t n_neumann, nf_system** out);
size_t nf_system_n(const nf_system* sys);
/* Matrix Market for A; CSV (system_index, mesh_node, x, y, b_value) for b. */
int nf_system_export(const nf_system* sys, const nf_mesh* mesh, const char* matrix_path,
                     const char* vector_path);
void nf_system_free(nf_system* sys);

/* ---- results ------------------------------------------------------- */

/* A solve or study outcome: an optional solution vector, named scalar
 * metrics, and a CSV rendering of the tabular data. */
typedef struct nf_result nf_result;

size_t nf_result_size(const nf_result* res);
int nf_result_values(const nf_result* res, double* buf, size_t cap);
size_t nf_result_metric_count(const nf_result* res);
int nf_result_metric_name(const nf_result* res, size_t index, char** out_name);
int nf_result_metric(const nf_result* res, const char* name, double* out);
/* Returns a pointer owned by the result; valid until nf_result_free. */
const char* nf_result_csv(const nf_result* res);
void nf_result_free(nf_result* res);

/* ---- solvers ------------------------------------------------------- */

typedef struct {
    size_t npm;       /* neurons per mesh node, even */
    double gamma_mag; /* readout weight magnitude */
    double lambda_d;
    double lambda_v;
    double k_p;
    double k_i;
    double sigma_v;
    double dt;
} nf_params;

void nf_params_default(nf_params* p);

/* Conjugate gradients on the assembled system (applied to the positive
 * definite orientation). Metrics: iterations, rel_residual, converged. */
int nf_solve_cg(const nf_system* sys, double tol, size_t max_iter, nf_result** out);

typedef struct nf_network nf_network;
typedef struct nf_fixed_network nf_fixed_network;

int nf_network_build(const nf_system* sys, const nf_params* params, nf_network** out);
int nf_network_export(const nf_network* net, const char* dir);
int nf_network_import(const char* dir, nf_network** out);
int nf_network_quantize(const nf_network* net, nf_fixed_network** out);
size_t nf_network_n_neurons(const nf_network* net);
void nf_network_free(nf_network* net);
void nf_fixed_network_free(nf_fixed_network* net);

/* Floating-point simulation; the solution is the trailing-window readout
 * mean. Metrics: rel_residual, spike_rate. p_only disables the integral
 * path. */
int nf_solve_float(const nf_network* net, size_t steps, size_t window, uint64_t seed,
                   int p_only, nf_result** out);

/* Fixed-point simulation. Metrics: rel_residual, saturations. */
int nf_solve_fixed(const nf_fixed_network* net, size_t steps, size_t window,
                   uint64_t seed, nf_result** out);

/* Repeated solution epochs with optional bias sign flips between epochs.
 * CSV rows: epoch, transient, spike_count, mean_readout_residual.
 * Metrics: saturations, spikes_total. */
int nf_run_fixed_epochs(const nf_fixed_network* net, size_t epoch_len, size_t n_epochs,
                        int transient, uint64_t seed, nf_result** out);

/* Solve an externally assembled system (Matrix Market A, one-value-per-line
 * CSV b). Metrics: rel_residual, deviation_from_cg, cg_baseline. CSV rows:
 * index, x. */
int nf_solve_ingested(const char* matrix_path, const char* rhs_path,
                      const nf_params* params, size_t steps, size_t window,
                      uint64_t seed, nf_result** out);

/* ||a - b|| / ||b|| for two equal-length vectors. */
int nf_rel_error(const double* a, const double* b, size_t n, double* out);

/* ---- partitioning -------------------------------------------------- */

/* Greedy centroid partition of mesh nodes onto n_chips chips, plus the
 * per-chip core assignment for npm neurons per node. sys may be NULL; if
 * given, edge-cut metrics are computed against its sparsity pattern.
 * out_csv may be NULL. Metrics: edge_cut (when sys given), load_std,
 * max_load_ratio, iterations. Values: node -> chip assignment. */
int nf_partition(const nf_mesh* mesh, const nf_system* sys, size_t n_chips, size_t npm,
                 size_t iterations, uint64_t seed, const char* out_csv, nf_result** out);

/* ---- studies ------------------------------------------------------- */

/* name: convergence | residual | averaging | switch | fixedpoint | p-vs-pi.
 * config_json keys (all optional): max_areas[], npm[], gamma[], steps,
 * window, seeds[], epoch_len, n_epochs, switch_step, mode, jitter. */
int nf_study_run(const char* name, const char* config_json, nf_result** out);

#ifdef __cplusplus
}
#endif

#endif /* NEUROFEM_H */
