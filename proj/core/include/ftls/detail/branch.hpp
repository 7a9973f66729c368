#pragma once

#include <vector>

#include "ftls/model.hpp"

namespace ftls::detail {

enum class Flow { Nonlocal, Local, Conservation };

/// Decay rate of the linearized tail mode at rho_bar (negative above rho_hat,
/// positive below) for the given stationary equation.
double tail_rate_flow(const ModelParams& params, double rho_bar, Flow flow);

/// Values on j = j_lo .. j_hi (x_j = j dz) of the uniform-road profile with
/// speed v connecting the two roots of v f = fbar and passing through
/// anchor at x = 0. Built from the linearized tail mode at the high root and
/// marched backward, then shifted by two passes plus a secant correction.
std::vector<double> uniform_branch(const ModelParams& params, double v, double fbar, double anchor, double dz, long j_lo,
                                   long j_hi, Flow flow);

/// Slope of the local (follow-the-leader) stationary equation on a road
/// with speeds v_here at x and v_lead at the leader position.
inline double local_rhs(const ModelParams& p, double u, double u_lead, double v_here, double v_lead) {
    const double a = v_here * p.law.phi(u);
    return u * u / (p.ell * a) * (a - v_lead * p.law.phi(u_lead));
}

}  // namespace ftls::detail
