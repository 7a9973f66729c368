#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ftls/model.hpp"
#include "ftls/profile.hpp"

namespace ftls {

/// Stationary profile of the nonlocal conservation law: Q(x) A(x; V, Q) = fbar.
struct LimitProfileQ {
    Profile profile;
    std::vector<double> residual_history;  ///< sup |Q A - fbar| before each sweep and after the last
    std::size_t sweeps = 0;
    double residual = 0.0;
};

/// Stationary profile of the local follow-the-leader model.
struct LimitProfileU {
    Profile profile;
    double event_x = 0.0;  ///< where x + ell / U(x) = 0 (NaN if never reached)
};

/// A(x) = integral over [x, x+h] of V(y) phi(g(y)) w(y-x) dy with g piecewise
/// linear on its grid (constant extension outside).
double averaging_A(double x, const ModelParams& params, const Profile& g);

/// sup over nodes of |Q A(Q) - fbar|.
double q_residual(const Profile& Q, const ModelParams& params, double fbar);

struct QOptions {
    double theta = 0.5;
    double tol_rel = 1e-9;
    std::size_t max_sweeps = 10000;
};

/// The branch on x >= 0 is the uniform-road solution through the anchor. The
/// part x < 0 is produced by marching the integral equation node by node
/// from 0 down to X_min and then polished by damped fixed-point sweeps
/// Q <- (1 - theta) Q + theta fbar / A(Q) on x < 0 until the relative
/// residual drops below tol_rel.
LimitProfileQ solve_Q(const SubcaseReport& report, double anchor_value, const Grid& grid, const QOptions& opts = {});

/// Backward RK4 for the delay equation of the local model, with the step that
/// crosses the leader event x + ell / U(x) = 0 split at the event.
LimitProfileU solve_U(const SubcaseReport& report, double anchor_value, const Grid& grid);

/// Right side of the local delay equation, using left limits of V (the march
/// runs toward decreasing x).
double u_rhs(const Profile& U, const ModelParams& params, double x);

/// Centered-difference residual of U away from its kink points.
double u_smooth_residual(const LimitProfileU& U, const ModelParams& params, double guard);

struct StudyRow {
    double parameter;
    double sup_error;
    double residual;
    std::size_t iterations;
    double tail_gap;
};

struct StudyTable {
    std::string parameter_name;
    std::vector<StudyRow> rows;
    bool strictly_decreasing() const;
};

/// e(ell) = sup over |x| <= 10h of |P^ell - Q| for each ell (decreasing).
StudyTable convergence_study_micro_macro(const SubcaseReport& report, double anchor_value,
                                         const std::vector<double>& ell_sequence, const Grid& grid);

/// e(h) = sup over |x| <= 10 max h of |P^h - U| with the linear kernel
/// rescaled for every h and ell fixed.
StudyTable convergence_study_nonlocal_local(const SubcaseReport& report, double anchor_value,
                                            const std::vector<double>& h_sequence, const Grid& grid);

}  // namespace ftls
