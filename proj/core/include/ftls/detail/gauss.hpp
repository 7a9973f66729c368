#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftls/model.hpp"

namespace ftls::detail {

/// Integral over [a, b] of V(y) phi(g(y)) w(y - x) dy for g linear between
/// multiples of dz. Cells are cut at grid nodes, at 0 and at kernel
/// breakpoints, and each piece uses 2-point Gauss (exact for linear w, phi).
template <class G>
double gauss_cells(const ModelParams& p, double x, double a, double b, double dz, G&& g) {
    if (!(b > a)) return 0.0;
    static const double r3 = 1.0 / std::sqrt(3.0);
    const auto& bps = p.kernel.breakpoints();
    double acc = 0.0;
    auto piece = [&](double u, double v) {
        if (!(v > u)) return;
        const double m = 0.5 * (u + v);
        const double r = 0.5 * (v - u);
        const double vel = m < 0.0 ? p.road.v_minus : p.road.v_plus;
        const double y1 = m - r * r3;
        const double y2 = m + r * r3;
        acc += vel * r * (p.law.phi(g(y1)) * p.kernel(y1 - x) + p.law.phi(g(y2)) * p.kernel(y2 - x));
    };
    auto cell = [&](double u, double v) {
        double cuts[2];
        int nc = 0;
        if (u < 0.0 && 0.0 < v) cuts[nc++] = 0.0;
        if (bps.empty()) {
            double s = u;
            for (int c = 0; c < nc; ++c) {
                piece(s, cuts[c]);
                s = cuts[c];
            }
            piece(s, v);
            return;
        }
        double s = u;
        auto it = std::upper_bound(bps.begin(), bps.end(), u - x);
        int c = 0;
        for (;;) {
            const double nb = it != bps.end() && x + *it < v ? x + *it : v;
            const double nz = c < nc ? cuts[c] : v;
            const double next = std::min(nb, nz);
            if (next >= v) break;
            piece(s, next);
            s = next;
            if (next == nz) ++c;
            if (next == nb) ++it;
        }
        piece(s, v);
    };
    long k = static_cast<long>(std::floor(a / dz));
    double u = a;
    for (;;) {
        double v = static_cast<double>(k + 1) * dz;
        if (v <= u) {
            ++k;
            continue;
        }
        v = std::min(v, b);
        cell(u, v);
        if (v >= b) break;
        u = v;
        ++k;
    }
    return acc;
}

/// Solves q * (rest + first(q)) = fbar at node x_j for the stationary
/// conservation-law profile, where first(q) integrates over the first cell
/// with g linear from q to `next` (the known value at x_{j+1}). Returns NaN
/// when Newton ends away from a root, e.g. when the flux cannot be carried.
template <class Look>
double conservation_node(const ModelParams& p, double xj, double dz, double next, double fbar, Look&& look) {
    const double h = p.kernel.h();
    const double x1 = std::min(xj + dz, xj + h);
    const double rest = gauss_cells(p, xj, x1, xj + h, dz, look);
    auto first = [&](double q, double* dfirst) {
        auto lin = [&](double y) { return q + (next - q) * (y - xj) / dz; };
        const double val = gauss_cells(p, xj, xj, x1, dz, lin);
        const double e = 1e-7;
        auto linp = [&](double y) { return q + e + (next - q - e) * (y - xj) / dz; };
        *dfirst = (gauss_cells(p, xj, xj, x1, dz, linp) - val) / e;
        return val;
    };
    double q = next;
    double F = 0.0;
    for (int it = 0; it < 60; ++it) {
        double d1 = 0.0;
        const double A = rest + first(q, &d1);
        F = q * A - fbar;
        const double dF = A + q * d1;
        double step = F / dF;
        double qn = q - step;
        while (!(qn > 0.0 && qn < 1.0)) {
            step *= 0.5;
            qn = q - step;
        }
        if (std::abs(qn - q) < 1e-15 && std::abs(F) <= 1e-9 * fbar + 1e-300) return qn;
        q = qn;
    }
    return std::abs(F) <= 1e-9 * fbar + 1e-300 ? q : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace ftls::detail
