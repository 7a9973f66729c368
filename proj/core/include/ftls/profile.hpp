#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ftls/model.hpp"
#include "ftls/sim.hpp"

namespace ftls {

struct ProfileMeta {
    std::string subcase;
    double anchor = 0.0;
    double fbar = 0.0;
    double ell = 0.0;
    double h = 0.0;
    double tail_gap_left = 0.0;
    double tail_gap_right = 0.0;
    double tail_tol = 1e-4;
    std::vector<std::string> warnings;
};

/// Grid function on nodes x_j = j dz, j = j_min .. j_max (so x = 0 is always a
/// node when j_min <= 0 <= j_max). Linear interpolation inside the grid and
/// constant extrapolation by rho^- / rho^+ outside it.
class Profile {
public:
    Profile(double dz, long j_min, std::vector<double> values, double rho_minus, double rho_plus);

    double operator()(double x) const;
    double x(std::size_t k) const { return static_cast<double>(j_min_ + static_cast<long>(k)) * dz_; }
    double x_min() const { return static_cast<double>(j_min_) * dz_; }
    double x_max() const { return static_cast<double>(j_max()) * dz_; }
    double dz() const { return dz_; }
    long j_min() const { return j_min_; }
    long j_max() const { return j_min_ + static_cast<long>(values_.size()) - 1; }
    std::size_t size() const { return values_.size(); }
    double rho_minus() const { return rho_minus_; }
    double rho_plus() const { return rho_plus_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    /// Index of the node closest to x (clamped to the grid).
    std::size_t nearest(double x) const;

    ProfileMeta meta;

private:
    double dz_;
    long j_min_;
    std::vector<double> values_;
    double rho_minus_;
    double rho_plus_;
};

struct Grid {
    double x_min = -20.0;
    double x_max = 20.0;
    double dz = 0.0002;

    /// X_min = -40h, X_max = 40h, dz = 0.0002.
    static Grid standard(double h);
};

/// Forward chain x, L(x), L^2(x), ... with the profile values at each node.
struct CarChain {
    std::vector<double> nodes;
    std::vector<double> values;
};

/// L^P(x) = x + ell / P(x).
double leader(const Profile& P, double ell, double x);

/// Unique y with L^P(y) = x, by bisection.
double follower(const Profile& P, double ell, double x);

/// Chain from x until it covers L^P(x) + h.
CarChain sample_chain(const Profile& P, const ModelParams& params, double x);

/// v*(x_eval) against the step function of `chain`. Throws std::invalid_argument
/// when the chain does not cover [x_eval, x_eval + h].
double profile_v_star(const ModelParams& params, double x_eval, const CarChain& chain);

/// Right side of the stationary profile equation at x.
double profile_rhs(const Profile& P, const ModelParams& params, double x);

/// March the profile equation backward from x = 0 to X_min with RK4 in x.
/// `seed` supplies P on [0, X_max]; its grid fixes dz and X_max.
Profile solve_backward(const Profile& seed, const ModelParams& params, double x_min, double tail_tol = 1e-4);

/// Uniform-road profile (speed V everywhere) rising from the low to the high
/// root of V f = fbar, shifted so that P(0) = anchor_value.
Profile uniform_profile_W(double v, double fbar, const ModelParams& params, double anchor_value, const Grid& grid);

/// Full stationary profile for a classified pair of asymptotes.
Profile build_profile(const SubcaseReport& report, double anchor_value, const Grid& grid);

/// Largest anchor in (floor, rho^+] for which `build(anchor, grid)` returns
/// without a NumericalError, to within `tol`. rho^+ itself when it builds.
/// The bisection runs on the part of `grid` within [-20h, 4h] and the result
/// is confirmed on the full grid, stepping down by `tol` if needed. Unique
/// subcases return rho^+ without calling `build`.
double admissible_anchor_sup(const SubcaseReport& report, const Grid& grid,
                             const std::function<void(double, const Grid&)>& build, double tol = 1e-6);

/// admissible_anchor_sup for build_profile. Below rho^+ only in subcase 2B,
/// where the family ends at a profile that stays near the upper root of the
/// left road before decaying.
double family_anchor_sup(const SubcaseReport& report, const Grid& grid, double tol = 1e-6);

/// Profiles for zero flux: 0, 1 or the unit step.
Profile trivial_profile(const SubcaseReport& report, const Grid& grid);

/// Solves L^P(z) = -h.
double z_flat(const Profile& P, const ModelParams& params);

/// Negative growth rate lambda of rho_bar - eps e^{lambda x} (rho_bar > rho_hat)
/// or positive rate of rho_bar + eps e^{lambda x} (rho_bar < rho_hat) for the
/// linearized uniform-road equation. `local` selects the follow-the-leader limit.
double tail_rate(const ModelParams& params, double v, double rho_bar, bool local);

/// |centered-difference P' - profile_rhs| at interior nodes (0 at the two ends).
std::vector<double> equation_residual(const Profile& P, const ModelParams& params);

/// Positions where P' has a kink: 0 and the followers of 0 down to z_flat.
std::vector<double> kink_points(const Profile& P, const ModelParams& params);

/// Largest residual over nodes farther than `guard` from every kink point.
double smooth_residual(const Profile& P, const ModelParams& params, const std::vector<double>& kinks, double guard);

/// Number of nodes where profile_rhs >= P^2 / ell.
std::size_t slope_bound_violations(const Profile& P, const ModelParams& params);

}  // namespace ftls
