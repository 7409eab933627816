#include "diabolo/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "diabolo/parallel.hpp"

namespace diabolo {

namespace {

using Eigen::Vector3d;

// ---------------------------------------------------------------------------
// Objective: squared adjacent gap, minimal over pairs or for one fixed pair.

struct GapProbe {
    double gap = 0.0;       // absolute
    double width = 0.0;     // spectral width at the point
    int pair_rank = 0;      // lower rank of the probed pair
    double rel() const { return width > 0.0 ? gap / width : 0.0; }
};

class GapObjective {
  public:
    GapObjective(const HamiltonianEvaluator& eval, std::optional<int> pair)
        : eval_(eval), pair_(pair) {}

    GapProbe probe(const Vector3d& h) const {
        const Eigen::VectorXd e = eigenvalues_only(eval_.at(FieldVector::from_vec(h)));
        const int n = static_cast<int>(e.size());
        GapProbe p;
        p.width = e[n - 1] - e[0];
        if (pair_) {
            p.pair_rank = *pair_;
            p.gap = e[*pair_ + 1] - e[*pair_];
        } else {
            p.gap = std::numeric_limits<double>::infinity();
            for (int k = 0; k + 1 < n; ++k) {
                const double g = e[k + 1] - e[k];
                if (g < p.gap) {
                    p.gap = g;
                    p.pair_rank = k;
                }
            }
        }
        return p;
    }

    // Squared gap of a fixed pair; the smooth quantity Newton refines.
    double value(const Vector3d& h, int pair_rank) const {
        const Eigen::VectorXd e = eigenvalues_only(eval_.at(FieldVector::from_vec(h)));
        const double g = e[pair_rank + 1] - e[pair_rank];
        return g * g;
    }

    double value_min(const Vector3d& h) const {
        const GapProbe p = probe(h);
        return p.gap * p.gap;
    }

  private:
    const HamiltonianEvaluator& eval_;
    std::optional<int> pair_;
};

// ---------------------------------------------------------------------------
// Nelder-Mead on the squared minimal gap.

struct NmResult {
    Vector3d x;
    double f;
};

NmResult nelder_mead(const GapObjective& obj, const Vector3d& x0, double step, double min_size,
                     int max_iter) {
    constexpr int n = 3;
    std::array<Vector3d, n + 1> xs;
    std::array<double, n + 1> fs;
    xs[0] = x0;
    for (int i = 0; i < n; ++i) {
        xs[i + 1] = x0;
        xs[i + 1][i] += step;
    }
    for (int i = 0; i <= n; ++i) fs[i] = obj.value_min(xs[i]);

    auto order = [&] {
        std::array<int, n + 1> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::array<Vector3d, n + 1> x2;
        std::array<double, n + 1> f2;
        for (int i = 0; i <= n; ++i) {
            x2[i] = xs[idx[i]];
            f2[i] = fs[idx[i]];
        }
        xs = x2;
        fs = f2;
    };

    order();
    for (int it = 0; it < max_iter; ++it) {
        double size = 0.0;
        for (int i = 1; i <= n; ++i) size = std::max(size, (xs[i] - xs[0]).norm());
        if (size < min_size) break;

        const Vector3d centroid = (xs[0] + xs[1] + xs[2]) / 3.0;
        const Vector3d xr = centroid + (centroid - xs[n]);
        const double fr = obj.value_min(xr);

        if (fr < fs[0]) {
            const Vector3d xe = centroid + 2.0 * (centroid - xs[n]);
            const double fe = obj.value_min(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            const Vector3d xc = centroid + 0.5 * ((fr < fs[n] ? xr : xs[n]) - centroid);
            const double fc = obj.value_min(xc);
            if (fc < std::min(fr, fs[n])) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = obj.value_min(xs[i]);
                }
            }
        }
        order();
    }
    return {xs[0], fs[0]};
}

}  // namespace

// ---------------------------------------------------------------------------
// Newton polish of one candidate.

PolishResult polish_degeneracy(const HamiltonianEvaluator& eval, const FieldVector& start,
                               std::optional<int> pair_rank, int max_iterations) {
    const GapObjective obj(eval, pair_rank);
    const double scale = std::max(start.norm(), 1.0);
    Vector3d x = start.vec();
    {
        double h = 1e-3 * scale;
        const double h_min = 1e-9 * scale;

        GapProbe probe = obj.probe(x);
        for (int it = 0; it < max_iterations; ++it) {
            const int pr = probe.pair_rank;
            const double f0 = probe.gap * probe.gap;
            if (probe.rel() < 1e-13) break;

            Vector3d g;
            Eigen::Matrix3d hess;
            std::array<double, 3> fp, fm;
            for (int i = 0; i < 3; ++i) {
                Vector3d xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                fp[i] = obj.value(xp, pr);
                fm[i] = obj.value(xm, pr);
                g[i] = (fp[i] - fm[i]) / (2.0 * h);
                hess(i, i) = (fp[i] - 2.0 * f0 + fm[i]) / (h * h);
            }
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j) {
                    Vector3d xpp = x, xpm = x, xmp = x, xmm = x;
                    xpp[i] += h; xpp[j] += h;
                    xpm[i] += h; xpm[j] -= h;
                    xmp[i] -= h; xmp[j] += h;
                    xmm[i] -= h; xmm[j] -= h;
                    const double v = (obj.value(xpp, pr) - obj.value(xpm, pr) -
                                      obj.value(xmp, pr) + obj.value(xmm, pr)) /
                                     (4.0 * h * h);
                    hess(i, j) = v;
                    hess(j, i) = v;
                }

            Vector3d delta;
            const Eigen::LDLT<Eigen::Matrix3d> ldlt(hess);
            bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
            if (newton_ok) {
                delta = ldlt.solve(-g);
                newton_ok = delta.allFinite();
            }
            if (!newton_ok) {
                const double gn = g.norm();
                if (gn == 0.0) break;
                delta = -(h / gn) * g;
            }

            const double trust = std::max(100.0 * h, 0.05 * scale);
            if (delta.norm() > trust) delta *= trust / delta.norm();

            // Accept only descent; halve on failure, shrink stencil when stuck.
            bool moved = false;
            for (int back = 0; back < 6; ++back) {
                const Vector3d xn = x + delta;
                const GapProbe pn = obj.probe(xn);
                const double fn =
                    pair_rank ? pn.gap * pn.gap : obj.value(xn, pr);
                if (fn < f0) {
                    x = xn;
                    probe = pn;
                    moved = true;
                    break;
                }
                delta *= 0.5;
            }
            if (!moved) {
                h *= 0.1;
                if (h < h_min) break;
                continue;
            }

            h = std::clamp(0.3 * delta.norm(), h_min, 1e-3 * scale);
            if (delta.norm() < 1e-12 * scale) break;
        }
    }

    PolishResult r;
    r.position = FieldVector::from_vec(x);
    const GapProbe final_probe = obj.probe(x);
    r.gap = final_probe.gap;
    r.spectral_width = final_probe.width;
    r.converged = true;
    return r;
}

// ---------------------------------------------------------------------------

double bound_region(const HamiltonianModel& model) {
    const Matrix h0 = zero_field_matrix(model);
    const Eigen::VectorXd e = eigenvalues_only(h0);
    const double op_norm = std::max(std::abs(e[0]), std::abs(e[e.size() - 1]));
    return op_norm > 0.0 ? 4.0 * op_norm : 1.0;
}

namespace {

double spectral_spread(const HamiltonianModel& model) {
    const Eigen::VectorXd e = eigenvalues_only(zero_field_matrix(model));
    return e[e.size() - 1] - e[0];
}

}  // namespace

double search_region_radius(const HamiltonianModel& model, const SearchConfig& cfg) {
    if (cfg.region_radius > 0.0) return cfg.region_radius;
    const double spread = spectral_spread(model);
    // Adjacent levels cannot cross once |H| exceeds the spread of H0.
    return spread > 0.0 ? 1.05 * spread : 1.0;
}

std::vector<DegenerateSpan> classify_degeneracy(const SpectrumResult& s, double eps_deg) {
    const GapProfile gp = gap_profile(s);
    const double tol = eps_deg * gp.spectral_width;
    std::vector<DegenerateSpan> spans;
    int run_start = -1;
    for (int k = 0; k < s.dim() - 1; ++k) {
        if (gp.gaps[k] <= tol) {
            if (run_start < 0) run_start = k;
        } else if (run_start >= 0) {
            spans.push_back({run_start, k - run_start + 1});
            run_start = -1;
        }
    }
    if (run_start >= 0) spans.push_back({run_start, s.dim() - run_start});
    return spans;
}

namespace {

// ---------------------------------------------------------------------------
// Proximity grouping: ids such that points within `radius` chain together.

std::vector<int> proximity_groups(const std::vector<Vector3d>& pts, double radius) {
    const std::size_t n = pts.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return pts[a][0] < pts[b][0]; });

    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (pts[idx[b]][0] - pts[idx[a]][0] > radius) break;
            if ((pts[idx[a]] - pts[idx[b]]).norm() <= radius)
                unite(static_cast<int>(idx[a]), static_cast<int>(idx[b]));
        }
    }

    std::vector<int> group(n);
    for (std::size_t i = 0; i < n; ++i) group[i] = find(static_cast<int>(i));
    return group;
}

std::vector<Vector3d> make_seeds(double r, const SearchConfig& cfg) {
    std::vector<Vector3d> seeds;

    const int gn = std::max(2, cfg.grid_per_axis);
    for (int i = 0; i < gn; ++i)
        for (int j = 0; j < gn; ++j)
            for (int k = 0; k < gn; ++k) {
                const Vector3d v(-r + 2.0 * r * i / (gn - 1), -r + 2.0 * r * j / (gn - 1),
                                 -r + 2.0 * r * k / (gn - 1));
                if (v.norm() <= r) seeds.push_back(v);
            }

    const int pn = std::max(2, cfg.plane_grid);
    for (int plane = 0; plane < 3; ++plane)
        for (int i = 0; i < pn; ++i)
            for (int j = 0; j < pn; ++j) {
                const double a = -r + 2.0 * r * i / (pn - 1);
                const double b = -r + 2.0 * r * j / (pn - 1);
                Vector3d v = Vector3d::Zero();
                if (plane == 0) v = {a, b, 0.0};
                else if (plane == 1) v = {a, 0.0, b};
                else v = {0.0, a, b};
                if (v.norm() <= r) seeds.push_back(v);
            }

    static const std::array<Vector3d, 13> dirs = [] {
        std::array<Vector3d, 13> d{Vector3d{1, 0, 0}, Vector3d{0, 1, 0}, Vector3d{0, 0, 1},
                                   Vector3d{1, 1, 0}, Vector3d{1, -1, 0}, Vector3d{1, 0, 1},
                                   Vector3d{1, 0, -1}, Vector3d{0, 1, 1}, Vector3d{0, 1, -1},
                                   Vector3d{1, 1, 1}, Vector3d{1, 1, -1}, Vector3d{1, -1, 1},
                                   Vector3d{1, -1, -1}};
        for (auto& v : d) v.normalize();
        return d;
    }();
    const int ln = std::max(2, cfg.line_samples);
    for (const auto& dir : dirs)
        for (int i = 0; i < ln; ++i) seeds.push_back((-r + 2.0 * r * i / (ln - 1)) * dir);

    return seeds;
}

struct Candidate {
    Vector3d x;
    double gap_rel;
};

struct SearchContext {
    const HamiltonianModel& model;
    const HamiltonianEvaluator& eval;
    const SearchConfig& cfg;
    double region;
    double eps_pos;
};

// Polished candidates expanded into per-span records (no charges yet).
std::vector<DiabolicalPointRecord> build_records(const SearchContext& ctx,
                                                 const std::vector<Vector3d>& positions) {
    const SpinQuantum spin = ctx.model.spin;
    std::vector<DiabolicalPointRecord> records;

    for (const auto& x : positions) {
        const FieldVector pos = FieldVector::from_vec(x);
        const SpectrumResult s = eigensystem(ctx.eval.at(pos));
        const GapProfile gp = gap_profile(s);
        std::vector<DegenerateSpan> spans = classify_degeneracy(s, ctx.cfg.eps_deg);

        if (ctx.cfg.pair_rank) {
            const int pr = *ctx.cfg.pair_rank;
            std::erase_if(spans, [pr](const DegenerateSpan& sp) {
                return !(sp.top_rank <= pr && pr + 1 <= sp.top_rank + sp.g - 1);
            });
        }

        if (spans.empty()) {
            // Converged but not degenerate: keep as suspect when the gap sits
            // within a decade of the tolerance, so avoided crossings that
            // mimic true points are reported rather than dropped.
            const int pr = ctx.cfg.pair_rank ? *ctx.cfg.pair_rank : gp.min_gap_index;
            const double gap = gp.gaps[pr];
            const double rel = gp.spectral_width > 0.0 ? gap / gp.spectral_width : 0.0;
            if (rel > ctx.cfg.eps_deg && rel <= 10.0 * ctx.cfg.eps_deg) {
                DiabolicalPointRecord rec;
                rec.position = pos;
                rec.mu_top = label_of_rank(spin, pr);
                rec.mu_bottom = label_of_rank(spin, pr + 1);
                rec.order_g = 2;
                rec.residual_gap = gap;
                rec.suspect = true;
                records.push_back(rec);
            }
            continue;
        }

        for (const auto& span : spans) {
            DiabolicalPointRecord rec;
            rec.position = pos;
            rec.mu_top = span.mu_top(spin);
            rec.mu_bottom = span.mu_bottom(spin);
            rec.order_g = span.g;
            double worst = 0.0;
            for (int k = span.top_rank; k < span.top_rank + span.g - 1; ++k)
                worst = std::max(worst, gp.gaps[k]);
            rec.residual_gap = worst;
            rec.suspect = false;
            records.push_back(rec);
        }
    }
    return records;
}

bool record_order(const DiabolicalPointRecord& a, const DiabolicalPointRecord& b) {
    if (a.position.hx != b.position.hx) return a.position.hx < b.position.hx;
    if (a.position.hy != b.position.hy) return a.position.hy < b.position.hy;
    if (a.position.hz != b.position.hz) return a.position.hz < b.position.hz;
    if (a.mu_top.twice() != b.mu_top.twice()) return a.mu_top.twice() > b.mu_top.twice();
    return a.order_g > b.order_g;
}

// Same-span duplicates within eps_pos collapse onto the best-converged
// representative.
std::vector<DiabolicalPointRecord> dedup_records(std::vector<DiabolicalPointRecord> records,
                                                 double eps_pos) {
    std::sort(records.begin(), records.end(), record_order);
    std::vector<DiabolicalPointRecord> out;

    // Partition by span first, then group positions.
    std::map<std::pair<int, int>, std::vector<DiabolicalPointRecord>> by_span;
    for (auto& r : records)
        by_span[{r.mu_top.twice(), r.order_g}].push_back(r);

    for (auto& [key, group] : by_span) {
        std::vector<Vector3d> pts;
        pts.reserve(group.size());
        for (const auto& r : group) pts.push_back(r.position.vec());
        const std::vector<int> gid = proximity_groups(pts, eps_pos);

        std::map<int, std::size_t> best;
        for (std::size_t i = 0; i < group.size(); ++i) {
            auto it = best.find(gid[i]);
            if (it == best.end() || group[i].residual_gap < group[it->first].residual_gap)
                best[gid[i]] = i;
        }
        for (const auto& [g, i] : best) out.push_back(group[i]);
    }
    std::sort(out.begin(), out.end(), record_order);
    return out;
}

// Adds the field-inversion image of every record that lacks one, re-polishing
// and re-classifying at the mirrored position.
void complete_inversion(const SearchContext& ctx, std::vector<DiabolicalPointRecord>& records) {
    std::vector<FieldVector> to_check;
    for (const auto& r : records) {
        const FieldVector mirror = -r.position;
        bool present = false;
        for (const auto& o : records) {
            if (o.mu_top == r.mu_top && o.order_g == r.order_g &&
                distance(o.position, mirror) <= ctx.eps_pos) {
                present = true;
                break;
            }
        }
        if (!present) to_check.push_back(mirror);
    }
    if (to_check.empty()) return;

    std::vector<Vector3d> refined(to_check.size());
    parallel_for(to_check.size(), [&](std::size_t i) {
        refined[i] = polish_degeneracy(ctx.eval, to_check[i], ctx.cfg.pair_rank,
                                       ctx.cfg.max_polish_iterations)
                         .position.vec();
    });
    auto extra = build_records(ctx, refined);
    records.insert(records.end(), extra.begin(), extra.end());
}

}  // namespace

std::vector<DiabolicalPointRecord> cluster_points(std::vector<DiabolicalPointRecord> records,
                                                  double eps_pos) {
    std::sort(records.begin(), records.end(), record_order);
    std::vector<Vector3d> pts;
    pts.reserve(records.size());
    for (const auto& r : records) pts.push_back(r.position.vec());
    const std::vector<int> gid = proximity_groups(pts, eps_pos);

    // Renumber groups in order of first appearance and re-test every member
    // against its cluster centroid to resolve chained proximity.
    std::map<int, int> renumber;
    std::map<int, Vector3d> centroid;
    std::map<int, int> count;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!renumber.count(gid[i]))
            renumber[gid[i]] = static_cast<int>(renumber.size());
        centroid[gid[i]] += pts[i];
        count[gid[i]] += 1;
    }
    for (auto& [g, c] : centroid) c /= count[g];
    for (std::size_t i = 0; i < records.size(); ++i) {
        if ((pts[i] - centroid[gid[i]]).norm() > eps_pos) {
            std::ostringstream os;
            os << "cluster_points: chained grouping is ambiguous at position (" << pts[i][0]
               << "," << pts[i][1] << "," << pts[i][2] << "); use a smaller eps_pos";
            throw std::runtime_error(os.str());
        }
        records[i].cluster_id = renumber[gid[i]];
    }
    return records;
}

void attach_charges(const HamiltonianModel& model, std::vector<DiabolicalPointRecord>& records,
                    const SearchConfig& cfg) {
    const HamiltonianEvaluator eval(model);
    const double region = search_region_radius(model, cfg);

    // Cluster centroids, suspects included as geometry obstacles.
    std::map<int, Vector3d> centroid;
    std::map<int, int> count;
    std::map<int, bool> any_true;
    for (const auto& r : records) {
        if (r.cluster_id < 0)
            throw std::invalid_argument("attach_charges: records must be clustered first");
        centroid[r.cluster_id] += r.position.vec();
        count[r.cluster_id] += 1;
        if (!r.suspect) any_true[r.cluster_id] = true;
    }
    for (auto& [c, v] : centroid) v /= count[c];

    std::vector<int> ids;
    for (const auto& [c, v] : centroid)
        if (any_true[c]) ids.push_back(c);

    const double cap = cfg.sphere_radius_cap_rel * region;
    std::map<int, ChargeVector> charge_of;
    for (int c : ids) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& [o, v] : centroid)
            if (o != c) nearest = std::min(nearest, (v - centroid[c]).norm());
        double radius = std::min(cap, std::isfinite(nearest) ? 0.5 * nearest : cap);

        SphereChargeResult res;
        bool done = false;
        std::string last_error;
        for (int attempt = 0; attempt < 4 && !done; ++attempt) {
            try {
                res = sphere_charges(eval, FieldVector::from_vec(centroid[c]), radius,
                                     cfg.chern_grid);
                done = true;
            } catch (const std::runtime_error& e) {
                last_error = e.what();
                radius *= 0.6;
            }
        }
        if (!done)
            throw std::runtime_error("attach_charges: no valid sphere around cluster " +
                                     std::to_string(c) + ": " + last_error);
        charge_of[c] = res.charges;
    }

    const SpinQuantum spin = model.spin;
    for (auto& r : records) {
        if (r.suspect || !charge_of.count(r.cluster_id)) continue;
        const ChargeVector& q = charge_of[r.cluster_id];
        r.charges = q;
        r.indices = diabolicity_from_charges(q, {r.top_rank(spin), r.order_g});
    }
}

std::vector<SumRuleReport> verify_index_sum_rules(const std::vector<DiabolicalPointRecord>& points,
                                                  SpinQuantum spin) {
    const int tj = spin.twice_j;
    std::vector<long long> totals(tj, 0);
    for (const auto& r : points) {
        if (r.suspect || r.indices.indices.empty()) continue;
        const int top = r.top_rank(spin);
        for (std::size_t k = 0; k < r.indices.indices.size(); ++k)
            totals[top + static_cast<int>(k)] += r.indices.indices[k];
    }

    std::vector<SumRuleReport> out;
    long long grand_lhs = 0, grand_rhs = 0;
    for (int p = 0; p < tj; ++p) {
        const HalfInt mu = label_of_rank(spin, p);
        const long long rhs =
            static_cast<long long>((tj + mu.twice()) / 2) * ((tj - mu.twice() + 2) / 2);
        SumRuleReport rep;
        rep.rule = "pair (" + mu.str() + "," + (mu - HalfInt::from_twice(2)).str() +
                   "): index total = (J+mu)(J-mu+1)";
        rep.lhs = static_cast<double>(totals[p]);
        rep.rhs = static_cast<double>(rhs);
        rep.residual = std::abs(rep.lhs - rep.rhs);
        rep.pass = totals[p] == rhs;
        out.push_back(rep);
        grand_lhs += totals[p];
        grand_rhs += rhs;
    }

    SumRuleReport grand;
    grand.rule = "grand total: sum of all indices = 2J(J+1)(2J+1)/3";
    grand.lhs = static_cast<double>(grand_lhs);
    grand.rhs = static_cast<double>(static_cast<long long>(tj) * (tj + 1) * (tj + 2) / 6);
    grand.residual = std::abs(grand.lhs - grand.rhs);
    grand.pass = grand.lhs == grand.rhs;
    out.push_back(grand);
    return out;
}

namespace {

std::vector<DiabolicalPointRecord> run_search_once(const HamiltonianModel& model,
                                                   const SearchConfig& cfg) {
    if (!parity_check(model))
        throw std::invalid_argument(
            "find_diabolical_points: the zero-field Hamiltonian has odd terms; topological "
            "statements require an even model");

    const HamiltonianEvaluator eval(model);
    const double region = search_region_radius(model, cfg);
    const double eps_pos = cfg.eps_pos_rel * region;
    const SearchContext ctx{model, eval, cfg, region, eps_pos};
    const GapObjective obj(eval, cfg.pair_rank);

    const std::vector<Vector3d> seeds = make_seeds(region, cfg);

    // Phase 1: coarse Nelder-Mead from every seed; keep small-gap landings.
    constexpr double kKeepRel = 1e-3;
    std::vector<std::optional<Candidate>> landed(seeds.size());
    const double nm_step = 0.05 * region;
    const double nm_floor = 1e-5 * region;
    parallel_for(seeds.size(), [&](std::size_t i) {
        const NmResult r = nelder_mead(obj, seeds[i], nm_step, nm_floor, 200);
        const GapProbe p = obj.probe(r.x);
        if (p.rel() <= kKeepRel) landed[i] = Candidate{r.x, p.rel()};
    });

    std::vector<Candidate> candidates;
    for (const auto& c : landed)
        if (c) candidates.push_back(*c);

    // Group coarse landings per basin before the expensive polish.
    std::vector<Vector3d> pts;
    pts.reserve(candidates.size());
    for (const auto& c : candidates) pts.push_back(c.x);
    const std::vector<int> gid = proximity_groups(pts, 3e-3 * region);
    std::map<int, std::size_t> rep;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto it = rep.find(gid[i]);
        if (it == rep.end() || candidates[i].gap_rel < candidates[it->first].gap_rel)
            rep[gid[i]] = i;
    }
    std::vector<Vector3d> starts;
    starts.reserve(rep.size());
    for (const auto& [g, i] : rep) starts.push_back(candidates[i].x);

    // Phase 2: Newton refinement to machine-precision positions.
    std::vector<Vector3d> refined(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) {
        refined[i] =
            polish_degeneracy(eval, FieldVector::from_vec(starts[i]), cfg.pair_rank,
                              cfg.max_polish_iterations)
                .position.vec();
    });

    auto records = build_records(ctx, refined);
    records = dedup_records(std::move(records), eps_pos);
    complete_inversion(ctx, records);
    records = dedup_records(std::move(records), eps_pos);
    records = cluster_points(std::move(records), eps_pos);

    if (cfg.with_charges) attach_charges(model, records, cfg);
    return records;
}

bool certificate_applicable(const HamiltonianModel& model, const SearchConfig& cfg) {
    if (!cfg.certify || !cfg.with_charges || cfg.pair_rank) return false;
    if (cfg.region_radius <= 0.0) return true;
    SearchConfig full = cfg;
    full.region_radius = 0.0;
    return cfg.region_radius >= 0.999 * search_region_radius(model, full);
}

bool certificate_passes(const HamiltonianModel& model,
                        const std::vector<DiabolicalPointRecord>& records) {
    const int dim = model.spin.dim();
    std::vector<long long> sums(dim, 0);
    std::set<int> seen;
    for (const auto& r : records) {
        if (r.suspect || r.charges.q.empty() || seen.count(r.cluster_id)) continue;
        seen.insert(r.cluster_id);
        for (int k = 0; k < dim; ++k) sums[k] += r.charges.q[k];
    }
    for (int k = 0; k < dim; ++k)
        if (sums[k] != label_of_rank(model.spin, k).twice()) return false;
    return true;
}

}  // namespace

std::vector<DiabolicalPointRecord> find_diabolical_points(const HamiltonianModel& model,
                                                          const SearchConfig& cfg) {
    auto records = run_search_once(model, cfg);
    if (!certificate_applicable(model, cfg) || certificate_passes(model, records))
        return records;

    // Some charge is unaccounted for: points were missed. Escalate once with
    // denser seeding over a larger region, then give up loudly.
    SearchConfig harder = cfg;
    harder.region_radius = 2.0 * search_region_radius(model, cfg);
    harder.grid_per_axis = cfg.grid_per_axis + cfg.grid_per_axis / 2;
    harder.plane_grid = cfg.plane_grid + cfg.plane_grid / 2;
    harder.line_samples = 2 * cfg.line_samples;
    records = run_search_once(model, harder);
    if (!certificate_passes(model, records))
        throw AuditError(
            "find_diabolical_points: completeness certificate failed after escalation; the "
            "located charges do not account for the full Chern number 2 mu of every level");
    return records;
}

}  // namespace diabolo
