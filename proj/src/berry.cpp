#include "diabolo/berry.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "diabolo/parallel.hpp"

namespace diabolo {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Flux sign such that the Zeeman ground level of a spin 1/2 carries charge
// +1 on a sphere with outward normal.
constexpr double kChernSign = -1.0;

FieldVector sphere_point(const FieldVector& center, double radius, double theta, double phi) {
    return {center.hx + radius * std::sin(theta) * std::cos(phi),
            center.hy + radius * std::sin(theta) * std::sin(phi),
            center.hz + radius * std::cos(theta)};
}

}  // namespace

int ChargeVector::total() const { return std::accumulate(q.begin(), q.end(), 0); }

CurvatureSample berry_curvature(const HamiltonianModel& model, const FieldVector& field,
                                HalfInt mu, double eps_guard_rel) {
    return berry_curvature(HamiltonianEvaluator(model), field, mu, eps_guard_rel);
}

CurvatureSample berry_curvature(const HamiltonianEvaluator& eval, const FieldVector& field,
                                HalfInt mu, double eps_guard_rel) {
    const SpectrumResult s = eigensystem(eval.at(field));
    const GapProfile gp = gap_profile(s);
    const int r = rank_of_label(eval.spin(), mu);
    const int dim = s.dim();

    const double guard = eps_guard_rel * gp.spectral_width;
    for (int side : {r - 1, r}) {
        if (side < 0 || side >= dim - 1) continue;
        if (gp.gaps[side] <= guard) {
            std::ostringstream os;
            os << "berry_curvature: adjacent gap " << gp.gaps[side] << " at level pair ("
               << side << "," << side + 1 << ") is within the degeneracy guard "
               << guard << "; the curvature diverges at a diabolical point";
            throw std::runtime_error(os.str());
        }
    }

    const StateVector psi = s.states.col(r);
    const StateVector jxp = eval.ops().jx * psi;
    const StateVector jyp = eval.ops().jy * psi;
    const StateVector jzp = eval.ops().jz * psi;

    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (int rp = 0; rp < dim; ++rp) {
        if (rp == r) continue;
        const StateVector phi_rp = s.states.col(rp);
        // v_a = <mu| J_a |mu'>; the conjugate closes the matrix element.
        const Complex vx = phi_rp.dot(jxp), vy = phi_rp.dot(jyp), vz = phi_rp.dot(jzp);
        const double de = s.energies[r] - s.energies[rp];
        const double w = 1.0 / (de * de);
        b[0] -= std::imag(vy * std::conj(vz) - vz * std::conj(vy)) * w;
        b[1] -= std::imag(vz * std::conj(vx) - vx * std::conj(vz)) * w;
        b[2] -= std::imag(vx * std::conj(vy) - vy * std::conj(vx)) * w;
    }
    return {field, mu, b};
}

SphereChargeResult sphere_charges(const HamiltonianEvaluator& eval, const FieldVector& center,
                                  double radius, SphereGrid grid, double eps_guard_rel) {
    if (!(radius > 0.0)) throw std::invalid_argument("sphere_charges: radius must be positive");
    if (grid.n_theta < 4 || grid.n_phi < 4)
        throw std::invalid_argument("sphere_charges: grid must be at least 4x4");

    const int nt = grid.n_theta;
    const int np = grid.n_phi;
    const int dim = eval.spin().dim();

    // Rows i = 0..nt, columns j = 0..np-1. Both polar rows share a single
    // sample so the surface closes exactly.
    std::vector<Matrix> states(static_cast<std::size_t>(nt + 1) * np);
    std::vector<double> min_rel_gap(static_cast<std::size_t>(nt + 1) * np, 1.0);
    auto slot = [np](int i, int j) { return static_cast<std::size_t>(i) * np + j; };

    struct Job {
        int i, j;
    };
    std::vector<Job> jobs;
    jobs.reserve(static_cast<std::size_t>(nt - 1) * np + 2);
    jobs.push_back({0, 0});
    for (int i = 1; i < nt; ++i)
        for (int j = 0; j < np; ++j) jobs.push_back({i, j});
    jobs.push_back({nt, 0});

    parallel_for(jobs.size(), [&](std::size_t k) {
        const auto [i, j] = jobs[k];
        const double theta = M_PI * i / nt;
        const double phi = kTwoPi * j / np;
        const SpectrumResult s = eigensystem(eval.at(sphere_point(center, radius, theta, phi)));
        const GapProfile gp = gap_profile(s);
        const double rel =
            gp.spectral_width > 0.0 ? gp.min_gap / gp.spectral_width : 0.0;
        states[slot(i, j)] = s.states;
        min_rel_gap[slot(i, j)] = rel;
    });

    for (int j = 1; j < np; ++j) {
        states[slot(0, j)] = states[slot(0, 0)];
        min_rel_gap[slot(0, j)] = min_rel_gap[slot(0, 0)];
        states[slot(nt, j)] = states[slot(nt, 0)];
        min_rel_gap[slot(nt, j)] = min_rel_gap[slot(nt, 0)];
    }

    double worst = 1.0;
    for (double g : min_rel_gap) worst = std::min(worst, g);
    if (worst <= eps_guard_rel) {
        std::ostringstream os;
        os << "sphere_charges: a sampled surface point has relative adjacent gap " << worst
           << " within the degeneracy guard " << eps_guard_rel
           << "; a degeneracy lies on (or too near) the sphere - change the radius";
        throw std::runtime_error(os.str());
    }

    SphereChargeResult out;
    out.charges.twice_j = eval.spin().twice_j;
    out.charges.q.resize(dim, 0);
    out.raw.resize(dim, 0.0);

    for (int r = 0; r < dim; ++r) {
        double total = 0.0;
        for (int i = 0; i < nt; ++i) {
            for (int j = 0; j < np; ++j) {
                const int jn = (j + 1) % np;
                const auto& a = states[slot(i, j)].col(r);
                const auto& b = states[slot(i + 1, j)].col(r);
                const auto& c = states[slot(i + 1, jn)].col(r);
                const auto& d = states[slot(i, jn)].col(r);
                // Plaquette a -> b -> c -> d -> a.
                const Complex u1 = a.dot(b);
                const Complex u2 = b.dot(c);
                const Complex u3 = c.dot(d);
                const Complex u4 = d.dot(a);
                const Complex prod = u1 * u2 * u3 * u4;
                if (std::abs(u1) < 1e-12 || std::abs(u2) < 1e-12 || std::abs(u3) < 1e-12 ||
                    std::abs(u4) < 1e-12 || std::abs(prod) == 0.0)
                    throw std::runtime_error(
                        "sphere_charges: vanishing link overlap between neighboring surface "
                        "samples; refine the sphere grid");
                total += std::arg(prod);
            }
        }
        const double raw = kChernSign * total / kTwoPi;
        const double rounded = std::round(raw);
        out.raw[r] = raw;
        out.max_integer_defect = std::max(out.max_integer_defect, std::abs(raw - rounded));
        out.charges.q[r] = static_cast<int>(rounded);
    }

    if (out.max_integer_defect > 1e-3) {
        std::ostringstream os;
        os << "sphere_charges: flux sum deviates from an integer by " << out.max_integer_defect
           << "; refine the sphere grid";
        throw std::runtime_error(os.str());
    }
    return out;
}

int chern_on_sphere(const HamiltonianModel& model, const FieldVector& center, double radius,
                    HalfInt mu, SphereGrid grid) {
    const HamiltonianEvaluator eval(model);
    const SphereChargeResult r = sphere_charges(eval, center, radius, grid);
    return r.charges.by_label(mu);
}

ChargeVector charges_for_cluster(const HamiltonianModel& model, const FieldVector& center,
                                 double radius, SphereGrid grid) {
    const HamiltonianEvaluator eval(model);
    return sphere_charges(eval, center, radius, grid).charges;
}

DiabolicityMultiplet diabolicity_from_charges(const ChargeVector& q, const DegenerateSpan& span) {
    if (q.total() != 0)
        throw std::invalid_argument(
            "diabolicity_from_charges: charges do not sum to zero, violating the per-point rule");

    const SpinQuantum spin(q.twice_j);
    DiabolicityMultiplet m;
    m.mu_top = span.mu_top(spin);
    m.mu_bottom = span.mu_bottom(spin);
    m.indices.reserve(static_cast<std::size_t>(span.g - 1));

    int prefix = 0;
    for (int r = 0; r < span.top_rank; ++r) prefix += q.by_rank(r);
    for (int k = 0; k < span.g - 1; ++k) {
        prefix += q.by_rank(span.top_rank + k);
        m.indices.push_back(prefix);
    }
    return m;
}

SumRuleReport verify_point_sum_rule(const ChargeVector& q) {
    SumRuleReport r;
    r.rule = "point: sum of level charges = 0";
    r.lhs = q.total();
    r.rhs = 0.0;
    r.residual = std::abs(r.lhs - r.rhs);
    r.pass = (q.total() == 0);
    return r;
}

std::vector<SumRuleReport> verify_global_sum_rule(const HamiltonianModel& model,
                                                  double enclosing_radius, SphereGrid grid) {
    const HamiltonianEvaluator eval(model);
    SphereChargeResult res;
    try {
        res = sphere_charges(eval, {0, 0, 0}, enclosing_radius, grid);
    } catch (const std::runtime_error&) {
        // One retry at twice the radius if the surface touched a degeneracy.
        res = sphere_charges(eval, {0, 0, 0}, 2.0 * enclosing_radius, grid);
    }

    std::vector<SumRuleReport> out;
    const int dim = model.spin.dim();
    for (int r = 0; r < dim; ++r) {
        const HalfInt mu = label_of_rank(model.spin, r);
        SumRuleReport rep;
        rep.rule = "global: enclosing-sphere charge of level " + mu.str() + " = 2 mu";
        rep.lhs = res.charges.by_rank(r);
        rep.rhs = mu.value() * 2.0;
        rep.residual = std::abs(rep.lhs - rep.rhs);
        rep.pass = (res.charges.by_rank(r) == mu.twice());
        out.push_back(rep);
    }
    return out;
}

int codimension(const std::vector<int>& orders) {
    int d = 0;
    for (int g : orders) {
        if (g < 2) throw std::invalid_argument("codimension: every order must be >= 2");
        d += g * g - 1;
    }
    return d;
}

}  // namespace diabolo
