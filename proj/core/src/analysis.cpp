#include "ftls/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ftls/errors.hpp"

namespace ftls {

double period_integral(const Profile& P, const ModelParams& params, double x, std::size_t cells) {
    const double b = leader(P, params.ell, x);
    const double dc = (b - x) / static_cast<double>(cells);
    const double r3 = 1.0 / std::sqrt(3.0);
    double acc = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        const double mid = x + (static_cast<double>(c) + 0.5) * dc;
        for (double s : {-r3, r3}) {
            const double z = mid + 0.5 * dc * s;
            acc += 0.5 * dc / profile_v_star(params, z, sample_chain(P, params, z));
        }
    }
    return acc;
}

double period_check(const Profile& P, const ModelParams& params, double fbar, const std::vector<double>& x_samples) {
    double worst = 0.0;
    for (double x : x_samples) worst = std::max(worst, std::abs(period_integral(P, params, x) * fbar / params.ell - 1.0));
    return worst;
}

std::vector<double> period_samples(const ModelParams& params, std::size_t n) {
    std::vector<double> xs(n);
    const double a = -4.0 * params.h();
    const double b = 4.0 * params.h();
    for (std::size_t k = 0; k < n; ++k) xs[k] = n == 1 ? 0.0 : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    return xs;
}

Ordering ordering_check(const Profile& P1, const Profile& P2, double dead_band) {
    if (P1.j_min() != P2.j_min() || P1.size() != P2.size() || P1.dz() != P2.dz()) {
        throw std::invalid_argument("ordering_check: profiles live on different grids");
    }
    Ordering o{true, 0, 0, INFINITY};
    for (std::size_t k = 0; k < P1.size(); ++k) {
        const double d = P1.values()[k] - P2.values()[k];
        if (std::abs(d) <= dead_band) {
            ++o.dead_band_nodes;
            continue;
        }
        const int s = d > 0.0 ? 1 : -1;
        if (o.sign == 0) o.sign = s;
        else if (s != o.sign) o.non_crossing = false;
        o.min_separation = std::min(o.min_separation, std::abs(d));
    }
    return o;
}

double profile_distance(const ParticleState& s, const Profile& P, double window) {
    double worst = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (std::abs(s.z[k]) > window) continue;
        worst = std::max(worst, std::abs(P(s.z[k]) - discrete_density(s, k)));
    }
    return worst;
}

StabilityTrace stability_trace(const Trajectory& traj, const Profile& P, double window) {
    StabilityTrace tr;
    for (const ParticleState& s : traj.samples) {
        tr.t.push_back(s.t);
        tr.d.push_back(profile_distance(s, P, window));
        double hi = -INFINITY;
        double lo = INFINITY;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (s.z[k] > 0.0 && s.z[k] <= window) {
                const double r = discrete_density(s, k);
                hi = std::max(hi, r);
                lo = std::min(lo, r);
            }
        }
        tr.osc.push_back(hi >= lo ? hi - lo : 0.0);
    }
    return tr;
}

BestFit best_fit_profile(const SubcaseReport& report, const ParticleState& s, const Grid& grid, double window,
                         std::size_t iterations) {
    if (report.verdict != Verdict::InfinitelyManyProfiles) {
        Profile P = build_profile(report, report.rho_plus, grid);
        const double d = profile_distance(s, P, window);
        return BestFit{std::move(P), report.rho_plus, d};
    }
    const double lo0 = report.anchor_floor();
    const double hi0 = family_anchor_sup(report, grid);
    const double span = hi0 - lo0;
    double a = lo0 + 1e-3 * span;
    double b = hi0;
    auto eval = [&](double anchor) { return profile_distance(s, build_profile(report, anchor, grid), window); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (std::size_t it = 0; it < iterations; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    // Also consider the closed upper end, which the open bracket cannot reach.
    double best = fc < fd ? c : d;
    double fbest = std::min(fc, fd);
    const double fend = eval(hi0);
    if (fend < fbest) {
        best = hi0;
        fbest = fend;
    }
    Profile P = build_profile(report, best, grid);
    return BestFit{std::move(P), best, fbest};
}

RegionD region_D(const SubcaseReport& report, const Grid& grid) {
    if (report.subcase != Subcase::S1B && report.subcase != Subcase::S2B) {
        throw std::invalid_argument("region_D: defined for subcases 1B and 2B");
    }
    const double floor_v = report.anchor_floor();
    const SubcaseReport low = classify(report.params, report.rho_minus, floor_v);
    return RegionD{build_profile(low, floor_v, grid), build_profile(report, family_anchor_sup(report, grid), grid)};
}

std::vector<bool> region_D_membership(const RegionD& D, const ParticleState& s, double dead_band) {
    std::vector<bool> in(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double r = discrete_density(s, k);
        in[k] = D.lower(s.z[k]) - dead_band < r && r <= D.upper(s.z[k]) + dead_band;
    }
    return in;
}

namespace {

template <class F>
double follower_of(F&& P, double ell, double x, double pmin) {
    double a = x - ell / pmin - ell;
    double b = x - ell;
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(x)); ++it) {
        const double m = 0.5 * (a + b);
        if (m + ell / P(m) < x) a = m;
        else b = m;
    }
    return 0.5 * (a + b);
}

}  // namespace

ParticleState generate_distribution(const Profile& P, const ModelParams& params, double z0, std::size_t n_back,
                                    std::size_t n_fwd) {
    if (z0 < P.x_min() || z0 > P.x_max()) throw std::out_of_range("generate_distribution: z0 outside the grid");
    std::vector<double> fwd{z0};
    for (std::size_t k = 0; k < n_fwd; ++k) {
        fwd.push_back(leader(P, params.ell, fwd.back()));
        if (fwd.back() > P.x_max()) throw std::out_of_range("generate_distribution: too many cars for the grid (forward)");
    }
    std::vector<double> back;
    double y = z0;
    for (std::size_t k = 0; k < n_back; ++k) {
        y = follower(P, params.ell, y);
        if (y < P.x_min()) throw std::out_of_range("generate_distribution: too many cars for the grid (backward)");
        back.push_back(y);
    }
    ParticleState s;
    s.ell = params.ell;
    s.rho_right = P.rho_plus();
    s.first_index = -static_cast<long>(n_back);
    s.z.assign(back.rbegin(), back.rend());
    s.z.insert(s.z.end(), fwd.begin(), fwd.end() - 1);
    s.ghost = fwd.back();
    return s;
}

ParticleState lifted_riemann_init(const RegionD& D, const ModelParams& params, double c0, std::size_t n_left,
                                  std::size_t n_right) {
    const double rp = D.upper.rho_plus();
    const double gap = params.ell / rp;
    const long i0 = static_cast<long>(std::ceil(-c0 / gap - 1e-12));
    std::vector<double> right;
    for (long i = i0; i < static_cast<long>(n_right); ++i) right.push_back(static_cast<double>(i) * gap + c0);
    if (right.empty()) throw std::invalid_argument("lifted_riemann_init: no cars on x >= 0");
    auto mid = [&](double y) { return 0.5 * (D.lower(y) + D.upper(y)); };
    double pmin = 1.0;
    for (std::size_t k = 0; k < D.lower.size(); ++k) pmin = std::min(pmin, D.lower.values()[k]);
    pmin = std::min({pmin, D.lower.rho_minus(), D.lower.rho_plus()});
    std::vector<double> left;
    double y = right.front();
    for (std::size_t k = 0; k < n_left; ++k) {
        y = follower_of(mid, params.ell, y, pmin);
        left.push_back(y);
    }
    ParticleState s;
    s.ell = params.ell;
    s.rho_right = rp;
    s.first_index = i0 - static_cast<long>(n_left);
    s.z.assign(left.rbegin(), left.rend());
    s.z.insert(s.z.end(), right.begin(), right.end());
    s.ghost = static_cast<double>(n_right) * gap + c0;
    return s;
}

TailFit tail_fit(const Profile& P, bool left_side, double lo, double hi) {
    const double rho = left_side ? P.rho_minus() : P.rho_plus();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < P.size(); ++k) {
        const double x = P.x(k);
        if (left_side ? x >= 0.0 : x <= 0.0) continue;
        const double dev = std::abs(P.values()[k] - rho);
        if (dev < lo || dev > hi) continue;
        const double yv = std::log(dev);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        syy += yv * yv;
        ++n;
    }
    if (n < 3) return TailFit{0.0, 0.0, n};
    const double N = static_cast<double>(n);
    const double cxx = sxx - sx * sx / N;
    const double cxy = sxy - sx * sy / N;
    const double cyy = syy - sy * sy / N;
    const double slope = cxy / cxx;
    const double r2 = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
    return TailFit{slope, r2, n};
}

std::vector<double> local_maxima(const Profile& P, double x_hi) {
    std::vector<double> out;
    const auto& v = P.values();
    for (std::size_t k = v.size() - 2; k >= 1; --k) {
        if (P.x(k) < x_hi && v[k] > v[k - 1] && v[k] >= v[k + 1]) out.push_back(v[k]);
        if (k == 1) break;
    }
    return out;
}

}  // namespace ftls
