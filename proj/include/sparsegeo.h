/* C API for the sparsegeo shared library: effective-resistance spectral
 * sparsification, distortion measurement, and the experiment pipelines.
 * All functions return SG_OK (0) or a nonzero error code; the message for
 * the most recent failure on the calling thread is available via
 * sg_last_error(). Handles are opaque and must be released with the
 * matching *_free function. */

#ifndef SPARSEGEO_H
#define SPARSEGEO_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Nonzero codes match the CLI exit codes. */
enum {
  SG_OK = 0,
  SG_ERR_UNKNOWN = 1,
  SG_ERR_CONFIG = 2,
  SG_ERR_GENERATION = 3,
  SG_ERR_CERTIFICATE = 4,
  SG_ERR_DIVERGENCE = 5,
  SG_ERR_IO = 6,
  SG_ERR_INVALID = 7,
  SG_ERR_NUMERIC = 8
};

const char* sg_version(void);

/* Message for the most recent failing call on this thread; empty string if
 * no failure has occurred. The pointer stays valid until the next failing
 * call on the same thread. */
const char* sg_last_error(void);

typedef struct sg_graph sg_graph;
typedef struct sg_resistances sg_resistances;

/* --- graphs --------------------------------------------------------- */

int sg_graph_generate_sbm(const int* block_sizes, int num_blocks, double p_in,
                          double p_out, double weight_low, double weight_high,
                          uint64_t seed, sg_graph** out);

/* Gaussian-cluster k-NN graph; the generated features stay internal, use the
 * pipeline commands when features are needed. */
int sg_graph_generate_geometric(int n_per_class, int num_classes, int feat_dim,
                                int k, uint64_t seed, sg_graph** out);

int sg_graph_read(const char* path, sg_graph** out);
int sg_graph_write(const sg_graph* g, const char* path);
void sg_graph_free(sg_graph* g);

int sg_graph_node_count(const sg_graph* g);
int sg_graph_edge_count(const sg_graph* g);
int sg_graph_edge(const sg_graph* g, int index, int* u, int* v, double* w);

/* --- effective resistances and sparsification ----------------------- */

/* mode 0 = exact, 1 = truncated eigenspace of the given rank. */
int sg_resistances_compute(const sg_graph* g, int mode, int rank,
                           sg_resistances** out);
int sg_resistances_get(const sg_resistances* r, int index, double* value);
void sg_resistances_free(sg_resistances* r);

/* q = floor(c * n * ln n). */
int sg_budget_from_multiplier(double c, int n, int* out_q);

/* Samples q edges with replacement proportionally to leverage scores and
 * reweights them. out_retained_fraction may be NULL. */
int sg_sparsify(const sg_graph* g, const sg_resistances* r, int q, uint64_t seed,
                sg_graph** out_sparse, double* out_retained_fraction);

/* Empirical spectral distortion of (sparse, dense) on the nonconstant
 * subspace. num_probes <= 0 computes the exact envelope; positive values use
 * that many random probe vectors. */
int sg_empirical_distortion(const sg_graph* dense, const sg_graph* sparse,
                            int num_probes, uint64_t seed, double* out_eps);

/* --- experiment pipelines ------------------------------------------- */

/* config_path NULL or empty loads the documented defaults; seed, when
 * non-NULL, overrides run.master_seed. With strict nonzero, stability and
 * geometry return SG_ERR_CERTIFICATE when any bound certificate fails
 * (artifacts are still written). */
int sg_run_generate(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int strict);
int sg_run_stability(const char* config_path, const char* out_dir,
                     const uint64_t* seed, int strict);
int sg_run_training(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int strict);
int sg_run_geometry(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int strict);

#ifdef __cplusplus
}
#endif

#endif /* SPARSEGEO_H */
