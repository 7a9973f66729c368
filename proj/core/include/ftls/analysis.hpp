#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ftls/model.hpp"
#include "ftls/profile.hpp"
#include "ftls/sim.hpp"

namespace ftls {

/// t_p(x) = integral over [x, L(x)] of 1 / v*(z; chain from z) dz.
double period_integral(const Profile& P, const ModelParams& params, double x, std::size_t cells = 256);

/// max over samples of |t_p(x) fbar / ell - 1|.
double period_check(const Profile& P, const ModelParams& params, double fbar, const std::vector<double>& x_samples);

/// n equally spaced points on [-4h, 4h].
std::vector<double> period_samples(const ModelParams& params, std::size_t n = 50);

struct Ordering {
    bool non_crossing;
    int sign;                   ///< +1 if P1 > P2 outside the dead band, -1 if below, 0 if never separated
    std::size_t dead_band_nodes;  ///< nodes with |P1 - P2| <= dead band
    double min_separation;      ///< smallest |P1 - P2| over nodes outside the dead band
};

/// Sign of P1 - P2 must be constant over all nodes outside the dead band.
/// Throws std::invalid_argument when the grids differ.
Ordering ordering_check(const Profile& P1, const Profile& P2, double dead_band = 1e-12);

struct StabilityTrace {
    std::vector<double> t;
    std::vector<double> d;    ///< sup |P(z_i) - rho_i| over |z_i| <= window
    std::vector<double> osc;  ///< max - min of rho_i over 0 < z_i <= window
};

StabilityTrace stability_trace(const Trajectory& traj, const Profile& P, double window);

/// sup |P(z_i) - rho_i| over tracked cars with |z_i| <= window.
double profile_distance(const ParticleState& s, const Profile& P, double window);

struct BestFit {
    Profile profile;
    double anchor;
    double distance;
};

/// Golden-section search over anchors in (anchor_floor, family_anchor_sup] for the profile
/// closest to `s` in the sup distance. Empirical selection: the limit profile
/// is not determined by a formula.
BestFit best_fit_profile(const SubcaseReport& report, const ParticleState& s, const Grid& grid, double window,
                         std::size_t iterations = 24);

struct RegionD {
    Profile lower;  ///< equals the low root of V^+ f = fbar on x >= 0
    Profile upper;  ///< anchored at family_anchor_sup; equals rho^+ on x >= 0 in 1B
};

/// Envelopes of the infinite family of a 1B or 2B report.
RegionD region_D(const SubcaseReport& report, const Grid& grid);

/// P_lower(z_i) < rho_i <= P_upper(z_i) for every tracked car, both edges
/// taken with the ordering_check dead band. In the far tails the envelopes and
/// any profile between them agree to rounding, and the slack also absorbs the
/// rounding of ell / (z_{i+1} - z_i).
std::vector<bool> region_D_membership(const RegionD& D, const ParticleState& s, double dead_band = 1e-12);

/// Distribution generated by P: z_{i+1} = L^P(z_i) forward and followers
/// backward, starting at z0. The ghost chain continues at rho^+.
ParticleState generate_distribution(const Profile& P, const ModelParams& params, double z0, std::size_t n_back,
                                    std::size_t n_fwd);

/// Cars on x >= c0 as in riemann_init, and on x < c0 the followers of the
/// midline of D, so every car starts strictly inside D (or on its upper edge).
ParticleState lifted_riemann_init(const RegionD& D, const ModelParams& params, double c0, std::size_t n_left,
                                  std::size_t n_right);

struct TailFit {
    double slope;
    double r2;
    std::size_t points;
};

/// Least-squares fit of log|P - rho| against x over nodes on the chosen side
/// (x < 0 toward rho^-, x > 0 toward rho^+) where |P - rho| lies in [lo, hi].
TailFit tail_fit(const Profile& P, bool left_side, double lo = 1e-10, double hi = 1e-3);

/// Local maxima of P at nodes with x < x_hi, ordered from right to left.
std::vector<double> local_maxima(const Profile& P, double x_hi);

struct CheckReport {
    std::string name;
    std::string inputs_digest;
    double metric;
    double threshold;
    bool pass;
};

}  // namespace ftls
