#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "diabolo/berry.hpp"
#include "diabolo/spectral.hpp"
#include "diabolo/spin.hpp"

namespace diabolo {

// Raised when a sum-rule audit (completeness certificate, index totals)
// fails after escalation.
struct AuditError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchConfig {
    // Ball radius of the seeded region. 0 selects the spectral bound
    // 1.05 * (max - min eigenvalue of H0) outside which adjacent levels
    // cannot cross.
    double region_radius = 0.0;
    int grid_per_axis = 21;    // 3-D seed grid
    int plane_grid = 81;       // seeds per axis on each coordinate plane
    int line_samples = 201;    // seeds per axis / diagonal ray
    double eps_deg = 1e-9;     // degeneracy tolerance, relative to spectral width
    double eps_pos_rel = 1e-6; // coincidence tolerance, relative to region radius
    int max_polish_iterations = 400;
    bool deterministic_seed_order = true;
    // When set, only the gap between ranks (pair_rank, pair_rank + 1) is
    // searched; other level pairs are ignored.
    std::optional<int> pair_rank;
    bool with_charges = true;
    SphereGrid chern_grid{64, 64};
    double sphere_radius_cap_rel = 0.25;  // cap on cluster spheres, x region radius
    // Run the completeness certificate (found charges must total 2 mu per
    // level). Automatically skipped when the region was restricted below the
    // spectral bound or charges are off.
    bool certify = true;
};

// One located degeneracy: a maximal run of g consecutive degenerate levels
// at an isolated field point. Coincident runs at one location share a
// cluster id and a cluster-level charge vector.
struct DiabolicalPointRecord {
    FieldVector position;
    HalfInt mu_top;
    HalfInt mu_bottom;
    int order_g = 2;
    ChargeVector charges;          // cluster-level; empty when charges are off
    DiabolicityMultiplet indices;  // this record's span; empty when charges are off
    int cluster_id = -1;
    double residual_gap = 0.0;     // absolute energy
    bool suspect = false;          // converged near-but-not-at degeneracy

    int top_rank(SpinQuantum spin) const { return rank_of_label(spin, mu_top); }
};

// Radius of a sphere guaranteed to enclose every diabolical point:
// 4 * operator norm of H0 (1 when H0 vanishes). A failed global sum rule
// downstream triggers one automatic doubling.
double bound_region(const HamiltonianModel& model);

// Maximal runs of consecutive levels whose adjacent gaps are all within
// eps_deg * spectral_width. Disjoint runs (coincident points in different
// pairs) are all reported.
std::vector<DegenerateSpan> classify_degeneracy(const SpectrumResult& s, double eps_deg);

// Locates the diabolical points of the model inside the search region by
// multistart minimization of the squared minimal adjacent gap. The output is
// deduplicated, closed under field inversion, sorted lexicographically by
// position, clustered, and (when charges are on) annotated with charge
// vectors and diabolicity multiplets. Throws AuditError if the completeness
// certificate fails after one escalation.
std::vector<DiabolicalPointRecord> find_diabolical_points(const HamiltonianModel& model,
                                                          const SearchConfig& cfg = {});

// Groups records whose positions agree within eps_pos under shared cluster
// ids (re-testing against the centroid when chained proximity is ambiguous)
// and returns the records sorted by cluster. Multiplicity of a cluster is
// its number of records.
std::vector<DiabolicalPointRecord> cluster_points(std::vector<DiabolicalPointRecord> records,
                                                  double eps_pos);

// Per-pair index totals (J + mu)(J - mu + 1) and the grand total
// 2J(J+1)(2J+1)/3, evaluated over all non-suspect records.
std::vector<SumRuleReport> verify_index_sum_rules(const std::vector<DiabolicalPointRecord>& points,
                                                  SpinQuantum spin);

// Computes cluster charge vectors and per-record multiplets in place.
// Records must already carry cluster ids. Sphere radii are half the distance
// to the nearest other cluster, capped by cfg.sphere_radius_cap_rel times
// the region radius; a surface degeneracy shrinks the radius and retries.
void attach_charges(const HamiltonianModel& model, std::vector<DiabolicalPointRecord>& records,
                    const SearchConfig& cfg);

// Newton refinement of a candidate degeneracy of one adjacent pair from a
// nearby start. Returns the refined position and the absolute gap there.
struct PolishResult {
    FieldVector position;
    double gap = 0.0;
    double spectral_width = 0.0;
    bool converged = false;
};
PolishResult polish_degeneracy(const HamiltonianEvaluator& eval, const FieldVector& start,
                               std::optional<int> pair_rank = std::nullopt,
                               int max_iterations = 60);

// Search-region radius actually used for a config (the spectral bound when
// cfg.region_radius is 0).
double search_region_radius(const HamiltonianModel& model, const SearchConfig& cfg);

}  // namespace diabolo
