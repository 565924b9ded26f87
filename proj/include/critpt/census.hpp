#pragma once

#include "critpt/field.hpp"

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace critpt {

// the domain [-T, T]^d
struct Box {
    double half_width = 1.0;
    int dim = 1;
};

// A level u in R or the explicit -inf sentinel (never a large negative
// float: at -inf the level indicator is dropped entirely).
struct Level {
    bool neg_inf = false;
    double u = 0.0;

    static Level minus_inf() { return {true, 0.0}; }
    static Level at(double u) { return {false, u}; }
    bool above(double value) const { return neg_inf || value > u; }
    std::string str() const { return neg_inf ? "-inf" : std::to_string(u); }
};

struct CriticalPoint {
    Eigen::VectorXd location;
    double value = 0.0;
    double grad_residual = 0.0;
    Eigen::VectorXd hess_eigs; // sorted ascending
    int index = 0;             // # eigenvalues < -eps_eig
};

struct CensusOptions {
    double seeds_per_unit = 0.0; // 0: auto, 4 per correlation length
    double eps_res_rel = 1e-9;   // x sqrt(E|grad X|^2)
    double eps_eig_rel = 1e-7;   // x sqrt(max Var X''_ij)
    double dedup_rel = 1e-4;     // x correlation length
    int max_newton_iter = 40;
    double near_degenerate_frac = 0.01;
};

struct CensusScales {
    double corr_length = 1.0;
    double eps_res = 0.0;
    double eps_eig = 0.0;
    double rho_dedup = 0.0;
};

CensusScales census_scales(const SpectralModel& model, const CensusOptions& opts = {});

// Damped-Newton enumeration of all zeros of grad X inside the box from a
// uniform seed grid. Throws DegenerateHessianError when a converged point
// has a Hessian eigenvalue inside the non-degeneracy window (an a.s.-null
// event for Morse paths; callers re-draw the realization).
std::vector<CriticalPoint> find_critical_points(const FieldRealization& field, const Box& box,
                                                double seeds_per_unit,
                                                const CensusOptions& opts = {},
                                                bool* near_degenerate_warning = nullptr);

// Morse index: # eigenvalues < -eps_eig. Throws DegenerateHessianError if
// any eigenvalue lies in [-eps_eig, eps_eig].
int classify(const Eigen::MatrixXd& hess, double eps_eig);

// counts[k] = #{p : p.value > u, p.index = k}
Eigen::VectorXi census_counts(const std::vector<CriticalPoint>& points, const Level& u, int dim);

// Face censuses mu_k(L) for every subset L of free coordinates, including
// L = {1..d} (the interior). Key: bitmask of free coordinates. Entry k of
// mu(L) counts points on the L-faces whose restricted Hessian has index
// ell - k and whose d - ell outward derivatives are all strictly positive,
// at field level above u.
using BoundaryMu = std::map<int, Eigen::VectorXi>;

BoundaryMu boundary_census(const FieldRealization& field, const Box& box,
                           const Level& u = Level::minus_inf(), const CensusOptions& opts = {});

long chi_from_mu(const BoundaryMu& mu);

// chi = sum_L sum_k (-1)^k mu_k(L); must equal 1 for the full box, anything
// else raises CensusIntegrityError.
long euler_characteristic(const FieldRealization& field, const Box& box,
                          const CensusOptions& opts = {});

// Euler characteristic of the excursion set {X > u} by cubical counting
// (V - E + F on the thresholded vertex grid); d = 2 only. resolution =
// number of grid cells per axis.
long excursion_euler_grid(const FieldRealization& field, const Box& box, double u, int resolution);

struct CensusResult {
    std::uint64_t seed = 0;
    double T = 0.0;
    int dim = 0;
    std::vector<Level> levels;
    std::vector<Eigen::VectorXi> counts_by_level; // (d+1)-vector each
    BoundaryMu boundary_mu;                       // at u = -inf
    long chi = 0;
    std::vector<long> phi_by_level; // sum_k (-1)^(d-k) counts[k]
    bool near_degenerate_warning = false;
    int n_points = 0;
    int refinement_level = 0; // density doublings needed to reach chi = 1
};

CensusResult run_census(const FieldRealization& field, const Box& box,
                        const std::vector<Level>& levels, const CensusOptions& opts = {});

} // namespace critpt
