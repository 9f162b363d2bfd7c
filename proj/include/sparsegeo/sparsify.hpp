#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsegeo/graph.hpp"

namespace sparsegeo {

enum class ResistanceMode { exact, truncated };

// Per-edge effective resistances, aligned with the owning graph's edge order.
struct ResistanceTable {
  std::vector<double> values;
  ResistanceMode mode = ResistanceMode::exact;
  int rank = 0;  // truncation rank when mode == truncated
};

// One leverage-score sampling draw: the reweighted sparse graph plus the
// sampling metadata needed to reproduce and report it.
struct SparsifierDraw {
  WeightedGraph sparse;
  int q = 0;             // sampling budget (edge samples with replacement)
  double c = 0.0;        // budget multiplier, q = floor(c n log n)
  std::uint64_t seed = 0;
  std::optional<double> eps_emp;    // unset until measured
  double retained_fraction = 0.0;   // distinct retained / dense edge count
  int draw_index = 0;
};

// R_e = (e_u - e_v)^T L^+ (e_u - e_v) from the combinatorial Laplacian
// pseudoinverse. Requires a connected graph.
ResistanceTable effective_resistances_exact(const WeightedGraph& g);

// Truncated-eigenspace estimate over the `rank` smallest nonzero Laplacian
// eigenpairs; underestimates the exact values.
ResistanceTable effective_resistances_approx(const WeightedGraph& g, int rank);

// q = floor(c * n * ln n).
int budget_from_multiplier(double c, int n);

// Samples q edges i.i.d. with replacement with p_e proportional to w_e R_e;
// each sample contributes w_e / (q p_e), duplicates accumulate.
SparsifierDraw er_sparsify(const WeightedGraph& g, const ResistanceTable& r,
                           int q, std::uint64_t seed);

// eps_emp = max(1 - lambda_min, lambda_max - 1) from the generalized
// eigenvalue envelope of (L_sparse, L_dense) on the nonconstant subspace.
double empirical_distortion_exact(const GraphOperator& L_dense,
                                  const GraphOperator& L_sparse);

// Probe-based lower envelope: max over random x perp 1 of |x'Lsx / x'Ldx - 1|.
double empirical_distortion_probe(const GraphOperator& L_dense,
                                  const GraphOperator& L_sparse, int num_probes,
                                  std::uint64_t seed);

struct TargetLevel {
  double target = 0.0;
  double selected_c = 0.0;
  int q = 0;
  std::vector<SparsifierDraw> draws;  // eps_emp and retained_fraction populated
};

// For each c in the grid draws one probe sparsifier and records its realized
// distortion, then produces draws_per_target fresh draws at the c whose
// realized distortion is closest to each target. All seeds derived from
// `seed`, independent of execution order.
std::vector<TargetLevel> select_by_target_distortion(
    const WeightedGraph& g, const std::vector<double>& targets,
    const std::vector<double>& c_grid, int draws_per_target,
    ResistanceMode resistance_mode, int resistance_rank, std::uint64_t seed);

// Sparse graph in the edge-list format plus a sidecar "<path>.meta" flat
// key-value block (fields: q, c, seed, eps_emp, retained_fraction, mode, rank).
void write_draw(const SparsifierDraw& draw, ResistanceMode mode, int rank,
                const std::string& path);
SparsifierDraw read_draw(const std::string& path);

}  // namespace sparsegeo
