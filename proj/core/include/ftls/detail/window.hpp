#pragma once

#include <algorithm>
#include <cstddef>

#include "ftls/model.hpp"

namespace ftls::detail {

/// Integral over [x, x+h] of V(y) g(s(y)) w(y-x), where s is the right-open
/// step function equal to vals[k] on [nodes[k], nodes[k+1]) and to vals[n-1]
/// beyond the last node. The caller guarantees nodes[k0] <= x. With
/// use_road == false the factor V(y) is dropped. Exact for any kernel whose
/// cumulative is exact, since s is constant on every piece.
template <class G>
double window_integral(const ModelParams& p, double x, const double* nodes, const double* vals, std::size_t n,
                       std::size_t k0, G&& g, bool use_road) {
    const Kernel& w = p.kernel;
    const double end = x + w.h();
    double acc = 0.0;
    for (std::size_t k = k0; k < n; ++k) {
        const double a = std::max(nodes[k], x);
        const double b = k + 1 < n ? std::min(nodes[k + 1], end) : end;
        if (b > a) {
            const double gv = g(vals[k]);
            if (!use_road) {
                acc += gv * w.mass(a - x, b - x);
            } else if (b <= 0.0) {
                acc += p.road.v_minus * gv * w.mass(a - x, b - x);
            } else if (a >= 0.0) {
                acc += p.road.v_plus * gv * w.mass(a - x, b - x);
            } else {
                acc += gv * (p.road.v_minus * w.mass(a - x, -x) + p.road.v_plus * w.mass(-x, b - x));
            }
        }
        if (k + 1 < n && nodes[k + 1] >= end) break;
    }
    return acc;
}

}  // namespace ftls::detail
