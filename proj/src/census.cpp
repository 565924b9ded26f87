#include "critpt/census.hpp"

#include "critpt/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>

namespace critpt {

CensusScales census_scales(const SpectralModel& model, const CensusOptions& opts) {
    const int d = model.dim;
    CensusScales s;
    s.corr_length = correlation_length(model);
    double grad2 = 0.0; // E |grad X|^2 = trace Var X'
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
        a[i] = 2;
        grad2 += spectral_moment(model, a);
    }
    double hess_var = 0.0; // max Var X''_ij
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
            a[i] += 2;
            a[j] += 2;
            hess_var = std::max(hess_var, spectral_moment(model, a));
        }
    s.eps_res = opts.eps_res_rel * std::sqrt(grad2);
    s.eps_eig = opts.eps_eig_rel * std::sqrt(hess_var);
    s.rho_dedup = opts.dedup_rel * s.corr_length;
    return s;
}

int classify(const Eigen::MatrixXd& hess, double eps_eig) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
    int index = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()[i];
        if (std::abs(ev) <= eps_eig)
            throw DegenerateHessianError("Hessian eigenvalue " + std::to_string(ev) +
                                         " inside the non-degeneracy window");
        if (ev < -eps_eig) ++index;
    }
    return index;
}

namespace {

// Newton with Armijo backtracking on |grad|^2 over the coordinates listed
// in `free_coords`; the other coordinates of x stay fixed. Returns true on
// convergence. The face machinery reuses this with a coordinate subset.
bool newton_refine(FieldEvaluator& ev, Eigen::VectorXd& x, const std::vector<int>& free_coords,
                   double eps_res, double escape_bound, int max_iter, FieldJet* final_jet) {
    const int m = static_cast<int>(free_coords.size());
    Eigen::VectorXd g(m);
    Eigen::MatrixXd h(m, m);
    FieldJet cur = ev.jet(x);
    double gn2_init = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        for (int a = 0; a < m; ++a) {
            g[a] = cur.grad[free_coords[a]];
            for (int b = 0; b < m; ++b) h(a, b) = cur.hess(free_coords[a], free_coords[b]);
        }
        double gn2 = g.squaredNorm();
        if (iter == 0) gn2_init = gn2;
        if (std::sqrt(gn2) <= eps_res) {
            if (final_jet) *final_jet = cur;
            return true;
        }
        if (x.cwiseAbs().maxCoeff() > escape_bound) return false;
        // stalled seeds belong to basins another grid point covers
        if (iter >= 12 && gn2 > 0.5 * gn2_init) return false;

        Eigen::VectorXd delta = h.fullPivLu().solve(-g);
        if (!delta.allFinite() || delta.norm() > 1e6)
            delta = -g; // singular Hessian: gradient descent step

        // Armijo on |grad|^2: always a descent direction for the Newton step
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 18; ++ls) {
            Eigen::VectorXd xt = x;
            for (int a = 0; a < m; ++a) xt[free_coords[a]] += t * delta[a];
            const FieldJet& jt = ev.jet(xt);
            double gn2_new = 0.0;
            for (int a = 0; a < m; ++a)
                gn2_new += jt.grad[free_coords[a]] * jt.grad[free_coords[a]];
            if (gn2_new <= (1.0 - 2e-4 * t) * gn2) {
                x = xt;
                cur = jt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) return false;
    }
    return false;
}

std::vector<double> seed_positions(double T, double seeds_per_unit) {
    int n = std::max(1, static_cast<int>(std::ceil(2.0 * T * seeds_per_unit)));
    std::vector<double> pos(n);
    for (int i = 0; i < n; ++i) pos[i] = -T + (i + 0.5) * (2.0 * T / n);
    return pos;
}

struct FacePoint {
    Eigen::VectorXd location;
    double value;
    int restricted_index;
};

// critical points of the field restricted to the coordinates in
// free_coords, all other coordinates of base fixed
std::vector<FacePoint> face_critical_points(const FieldRealization& field, const Box& box,
                                            const Eigen::VectorXd& base,
                                            const std::vector<int>& free_coords,
                                            double seeds_per_unit, const CensusScales& sc,
                                            const CensusOptions& opts) {
    const int m = static_cast<int>(free_coords.size());
    FieldEvaluator ev(field);
    std::vector<double> pos = seed_positions(box.half_width, seeds_per_unit);
    std::vector<FacePoint> found;

    std::vector<int> counter(m, 0);
    const double escape = box.half_width + 2.0 * sc.corr_length;
    while (true) {
        Eigen::VectorXd x = base;
        for (int a = 0; a < m; ++a) x[free_coords[a]] = pos[counter[a]];
        FieldJet jet;
        if (newton_refine(ev, x, free_coords, sc.eps_res, escape, opts.max_newton_iter, &jet)) {
            bool inside = true;
            for (int a = 0; a < m; ++a)
                if (std::abs(x[free_coords[a]]) > box.half_width) inside = false;
            if (inside) {
                bool dup = false;
                for (const FacePoint& p : found)
                    if ((p.location - x).norm() <= sc.rho_dedup) dup = true;
                if (!dup) {
                    Eigen::MatrixXd h(m, m);
                    for (int a = 0; a < m; ++a)
                        for (int b = 0; b < m; ++b)
                            h(a, b) = jet.hess(free_coords[a], free_coords[b]);
                    found.push_back({x, jet.value, classify(h, sc.eps_eig)});
                }
            }
        }
        int pos_axis = 0;
        while (pos_axis < m && ++counter[pos_axis] == static_cast<int>(pos.size())) {
            counter[pos_axis] = 0;
            ++pos_axis;
        }
        if (pos_axis == m) break;
    }
    return found;
}

} // namespace

std::vector<CriticalPoint> find_critical_points(const FieldRealization& field, const Box& box,
                                                double seeds_per_unit, const CensusOptions& opts,
                                                bool* near_degenerate_warning) {
    const int d = field.dim();
    CensusScales sc = census_scales(field.model, opts);
    double spu = seeds_per_unit > 0 ? seeds_per_unit : 4.0 / sc.corr_length;
    std::vector<int> all_coords(d);
    for (int i = 0; i < d; ++i) all_coords[i] = i;

    std::vector<FacePoint> raw = face_critical_points(field, box, Eigen::VectorXd::Zero(d),
                                                      all_coords, spu, sc, opts);
    FieldEvaluator ev(field);
    std::vector<CriticalPoint> out;
    int near_window = 0;
    for (const FacePoint& p : raw) {
        const FieldJet& jet = ev.jet(p.location);
        CriticalPoint cp;
        cp.location = p.location;
        cp.value = jet.value;
        cp.grad_residual = jet.grad.norm();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jet.hess, Eigen::EigenvaluesOnly);
        cp.hess_eigs = es.eigenvalues();
        cp.index = p.restricted_index;
        if (cp.hess_eigs.cwiseAbs().minCoeff() <= 2.0 * sc.eps_eig) ++near_window;
        out.push_back(std::move(cp));
    }
    // deterministic output order
    std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return std::lexicographical_compare(a.location.data(), a.location.data() + a.location.size(),
                                            b.location.data(), b.location.data() + b.location.size());
    });
    if (near_degenerate_warning)
        *near_degenerate_warning =
            !out.empty() &&
            static_cast<double>(near_window) > opts.near_degenerate_frac * out.size();
    return out;
}

Eigen::VectorXi census_counts(const std::vector<CriticalPoint>& points, const Level& u, int dim) {
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(dim + 1);
    for (const CriticalPoint& p : points)
        if (u.above(p.value)) counts[p.index]++;
    return counts;
}

namespace {

BoundaryMu boundary_census_impl(const FieldRealization& field, const Box& box, const Level& u,
                                const CensusOptions& opts, bool include_interior) {
    const int d = field.dim();
    if (d > 3) throw CapabilityError("boundary census supports d <= 3");
    CensusScales sc = census_scales(field.model, opts);
    double spu = opts.seeds_per_unit > 0 ? opts.seeds_per_unit : 4.0 / sc.corr_length;
    FieldEvaluator ev(field);

    BoundaryMu mu;
    const int full = (1 << d) - 1;
    for (int mask = 0; mask < (1 << d); ++mask) {
        if (mask == full && !include_interior) continue;
        std::vector<int> free_coords, fixed_coords;
        for (int i = 0; i < d; ++i)
            (mask & (1 << i) ? free_coords : fixed_coords).push_back(i);
        const int ell = static_cast<int>(free_coords.size());
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(ell + 1);

        for (int corner = 0; corner < (1 << fixed_coords.size()); ++corner) {
            Eigen::VectorXd base = Eigen::VectorXd::Zero(d);
            for (std::size_t a = 0; a < fixed_coords.size(); ++a)
                base[fixed_coords[a]] = (corner & (1 << a)) ? box.half_width : -box.half_width;

            auto outward_ok = [&](const FieldJet& jet, const Eigen::VectorXd& loc) {
                for (int fc : fixed_coords) {
                    double outward = (loc[fc] > 0 ? 1.0 : -1.0) * jet.grad[fc];
                    if (std::abs(outward) <= sc.eps_res)
                        throw BoundaryDegeneracyError(
                            "outward derivative indistinguishable from zero on a face");
                    if (outward <= 0) return false;
                }
                return true;
            };

            if (ell == 0) {
                const FieldJet& jet = ev.jet(base);
                if (u.above(jet.value) && outward_ok(jet, base)) counts[0]++;
                continue;
            }
            for (const FacePoint& p :
                 face_critical_points(field, box, base, free_coords, spu, sc, opts)) {
                const FieldJet& jet = ev.jet(p.location);
                if (!u.above(jet.value)) continue;
                if (!outward_ok(jet, p.location)) continue;
                counts[ell - p.restricted_index]++;
            }
        }
        mu[mask] = counts;
    }
    return mu;
}

} // namespace

BoundaryMu boundary_census(const FieldRealization& field, const Box& box, const Level& u,
                           const CensusOptions& opts) {
    return boundary_census_impl(field, box, u, opts, true);
}

long chi_from_mu(const BoundaryMu& mu) {
    long chi = 0;
    for (const auto& [mask, counts] : mu)
        for (int k = 0; k < counts.size(); ++k) chi += (k % 2 == 0 ? 1L : -1L) * counts[k];
    return chi;
}

long euler_characteristic(const FieldRealization& field, const Box& box,
                          const CensusOptions& opts) {
    long chi = run_census(field, box, {}, opts).chi;
    if (chi != 1) throw CensusIntegrityError(chi, field.seed);
    return chi;
}

long excursion_euler_grid(const FieldRealization& field, const Box& box, double u,
                          int resolution) {
    if (field.dim() != 2) throw CapabilityError("excursion_euler_grid supports d = 2 only");
    const int n = resolution;
    const double T = box.half_width;
    const int M = field.M();

    // X over the grid via the angle-addition factorization: per-atom
    // cos/sin tables along each axis, combined one grid column at a time.
    Eigen::ArrayXd xs(n + 1), ys(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = -T + 2.0 * T * i / n;
    ys = xs;
    Eigen::MatrixXd ca(M, n + 1), sa(M, n + 1);
    for (int i = 0; i <= n; ++i) {
        Eigen::ArrayXd ph = field.freqs.col(0).array() * xs[i];
        ca.col(i) = ph.cos();
        sa.col(i) = ph.sin();
    }
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> above(n + 1, n + 1);
    Eigen::VectorXd wc(M), ws(M), col(n + 1);
    for (int j = 0; j <= n; ++j) {
        Eigen::ArrayXd ph = field.freqs.col(1).array() * ys[j];
        Eigen::ArrayXd cb = ph.cos(), sb = ph.sin();
        wc = (field.xi * cb + field.eta * sb).matrix();
        ws = (field.eta * cb - field.xi * sb).matrix();
        col = field.amplitude * (ca.transpose() * wc + sa.transpose() * ws);
        for (int i = 0; i <= n; ++i) above(i, j) = col[i] > u;
    }

    long V = 0, E = 0, F = 0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            if (!above(i, j)) continue;
            ++V;
            if (i < n && above(i + 1, j)) ++E;
            if (j < n && above(i, j + 1)) ++E;
            if (i < n && j < n && above(i + 1, j) && above(i, j + 1) && above(i + 1, j + 1)) ++F;
        }
    return V - E + F;
}

CensusResult run_census(const FieldRealization& field, const Box& box,
                        const std::vector<Level>& levels, const CensusOptions& opts) {
    CensusResult res;
    res.seed = field.seed;
    res.T = box.half_width;
    res.dim = field.dim();
    res.levels = levels;

    CensusScales sc = census_scales(field.model, opts);
    double spu_base = opts.seeds_per_unit > 0 ? opts.seeds_per_unit : 4.0 / sc.corr_length;

    // The chi = 1 identity is an a-posteriori completeness proof for the
    // enumeration. A nearly-merged critical pair can have a basin narrower
    // than the seed spacing; on chi != 1 the whole census is redone at
    // doubled density rather than re-drawn, which would bias the counts.
    for (int attempt = 0;; ++attempt) {
        double spu = spu_base * static_cast<double>(1 << attempt);
        CensusOptions level_opts = opts;
        level_opts.seeds_per_unit = spu;

        std::vector<CriticalPoint> points =
            find_critical_points(field, box, spu, opts, &res.near_degenerate_warning);
        res.n_points = static_cast<int>(points.size());

        res.counts_by_level.clear();
        res.phi_by_level.clear();
        for (const Level& u : levels) {
            Eigen::VectorXi counts = census_counts(points, u, res.dim);
            long phi = 0;
            for (int k = 0; k <= res.dim; ++k)
                phi += ((res.dim - k) % 2 == 0 ? 1L : -1L) * counts[k];
            res.counts_by_level.push_back(counts);
            res.phi_by_level.push_back(phi);
        }

        // faces only here: the interior entry mu_k({1..d}) = Crt_{-inf}^{d-k}
        // is filled from the enumeration already done above
        res.boundary_mu = boundary_census_impl(field, box, Level::minus_inf(), level_opts, false);
        Eigen::VectorXi interior = census_counts(points, Level::minus_inf(), res.dim);
        Eigen::VectorXi full(res.dim + 1);
        for (int k = 0; k <= res.dim; ++k) full[k] = interior[res.dim - k];
        res.boundary_mu[(1 << res.dim) - 1] = full;
        res.chi = chi_from_mu(res.boundary_mu);
        res.refinement_level = attempt;
        if (res.chi == 1 || attempt == 3) break;
    }
    return res;
}

} // namespace critpt
