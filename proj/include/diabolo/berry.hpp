#pragma once

#include <string>
#include <vector>

#include "diabolo/spectral.hpp"
#include "diabolo/spin.hpp"

namespace diabolo {

// Berry curvature of one level at one field point, units 1/energy^2.
struct CurvatureSample {
    FieldVector field;
    HalfInt mu;
    Eigen::Vector3d b;
};

// Integer topological charges of every level for one closed surface,
// indexed by rank (rank 0 is the level labeled +J).
struct ChargeVector {
    int twice_j = 1;
    std::vector<int> q;

    int by_rank(int rank) const { return q.at(static_cast<std::size_t>(rank)); }
    int by_label(HalfInt mu) const {
        return q.at(static_cast<std::size_t>((twice_j - mu.twice()) / 2));
    }
    int total() const;
};

// Contiguous run of degenerate levels: ranks [top_rank, top_rank + g - 1].
struct DegenerateSpan {
    int top_rank = 0;  // rank of the lowest-energy member (largest mu)
    int g = 2;

    HalfInt mu_top(SpinQuantum spin) const { return label_of_rank(spin, top_rank); }
    HalfInt mu_bottom(SpinQuantum spin) const { return label_of_rank(spin, top_rank + g - 1); }
};

// Partial charge sums for the adjacent pairs inside one degenerate span:
// indices[k] = sum of charges of all levels with label >= mu_top - k, the
// index of the pair (mu_top - k, mu_top - k - 1). Length g - 1.
struct DiabolicityMultiplet {
    HalfInt mu_top;
    HalfInt mu_bottom;
    std::vector<int> indices;
};

struct SumRuleReport {
    std::string rule;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    bool pass = false;
    bool integer_rule = true;
};

struct SphereGrid {
    int n_theta = 64;
    int n_phi = 64;
};

// Charges of every level plus the raw (pre-rounding) flux sums; the raw
// values are what the integrality checks inspect.
struct SphereChargeResult {
    ChargeVector charges;
    std::vector<double> raw;
    double max_integer_defect = 0.0;
};

// Kubo-formula Berry curvature of the level labeled mu. Refuses (throws)
// when an adjacent gap at the field point is below
// eps_guard_rel * spectral_width, where 1/gap^2 is numerically meaningless.
CurvatureSample berry_curvature(const HamiltonianModel& model, const FieldVector& field,
                                HalfInt mu, double eps_guard_rel = 1e-8);
CurvatureSample berry_curvature(const HamiltonianEvaluator& eval, const FieldVector& field,
                                HalfInt mu, double eps_guard_rel = 1e-8);

// Gauge-invariant plaquette flux of every level over a latitude-longitude
// sphere. Throws if any sampled surface point has an adjacent gap below the
// guard (advising a radius change) or if a flux sum is farther than 1e-3
// from an integer (advising grid refinement).
SphereChargeResult sphere_charges(const HamiltonianEvaluator& eval, const FieldVector& center,
                                  double radius, SphereGrid grid = {},
                                  double eps_guard_rel = 1e-8);

// Chern number of one level over the sphere. Orientation is calibrated so
// the Zeeman ground level of a spin 1/2 carries +1.
int chern_on_sphere(const HamiltonianModel& model, const FieldVector& center, double radius,
                    HalfInt mu, SphereGrid grid = {});

// Full charge vector around one coincident cluster. The sphere must enclose
// exactly one cluster (caller geometry); levels outside every degenerate
// span come out 0.
ChargeVector charges_for_cluster(const HamiltonianModel& model, const FieldVector& center,
                                 double radius, SphereGrid grid = {});

// Partial sums of the charge vector over the pairs inside a span. Throws if
// the total charge is nonzero.
DiabolicityMultiplet diabolicity_from_charges(const ChargeVector& q, const DegenerateSpan& span);

// Sum of all level charges around one point must vanish.
SumRuleReport verify_point_sum_rule(const ChargeVector& q);

// Chern number at a radius enclosing every degeneracy equals 2 mu for each
// level. Retries once at twice the radius if the surface hits a degeneracy.
std::vector<SumRuleReport> verify_global_sum_rule(const HamiltonianModel& model,
                                                  double enclosing_radius, SphereGrid grid = {});

// Codimension of the submanifold where points of the given orders coincide:
// sum of (g^2 - 1).
int codimension(const std::vector<int>& orders);

}  // namespace diabolo
