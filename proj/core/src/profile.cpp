#include "ftls/profile.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ftls/detail/branch.hpp"
#include "ftls/detail/gauss.hpp"
#include "ftls/detail/march.hpp"
#include "ftls/detail/window.hpp"
#include "ftls/errors.hpp"

namespace ftls {

namespace {

constexpr double kEpsFactor = 1e-6;
constexpr double kLeftTailEps = 1e-6;

struct ChainBuf {
    std::vector<double> nodes;
    std::vector<double> vals;
};

/// Builds the chain from (x, px) using `look` for every later node.
template <class Look>
void build_chain(const ModelParams& p, double x, double px, Look&& look, ChainBuf& b) {
    b.nodes.clear();
    b.vals.clear();
    b.nodes.push_back(x);
    b.vals.push_back(px);
    const double lead = x + p.ell / px;
    const double end = lead + p.h();
    double c = lead;
    for (;;) {
        const double v = look(c);
        if (!(v > 0.0 && v <= 1.0)) throw BlowUpError("profile: value " + std::to_string(v) + " outside (0,1]");
        b.nodes.push_back(c);
        b.vals.push_back(v);
        if (c >= end) break;
        c += p.ell / v;
    }
}

template <class Look>
double eq_rhs(const ModelParams& p, double x, double px, Look&& look, ChainBuf& b) {
    if (!(px > 0.0 && px < 1.0)) throw BlowUpError("profile: P = " + std::to_string(px) + " left (0,1) at x = " + std::to_string(x));
    build_chain(p, x, px, look, b);
    const auto phi = [&](double r) { return p.law.phi(r); };
    const std::size_t n = b.nodes.size();
    const double v1 = detail::window_integral(p, x, b.nodes.data(), b.vals.data(), n, 0, phi, true);
    const double v2 = detail::window_integral(p, b.nodes[1], b.nodes.data(), b.vals.data(), n, 1, phi, true);
    return px * px / (p.ell * v1) * (v1 - v2);
}

void check_grid(const ModelParams& params, double dz) {
    if (!(dz > 0.0)) throw std::invalid_argument("profile: dz must be positive");
    if (!(params.ell > dz)) throw std::invalid_argument("profile: the backward march needs ell > dz");
}

double profile_min(const Profile& P) {
    double m = std::min(P.rho_minus(), P.rho_plus());
    for (double v : P.values()) m = std::min(m, v);
    return m;
}

void record_tails(Profile& P) {
    P.meta.tail_gap_left = std::abs(P.values().front() - P.rho_minus());
    P.meta.tail_gap_right = std::abs(P.values().back() - P.rho_plus());
    if (P.meta.tail_gap_left > P.meta.tail_tol) {
        P.meta.warnings.push_back("left tail gap " + std::to_string(P.meta.tail_gap_left) +
                                  " exceeds tolerance; consider a smaller X_min");
    }
    if (P.meta.tail_gap_right > P.meta.tail_tol) {
        P.meta.warnings.push_back("right tail gap " + std::to_string(P.meta.tail_gap_right) + " exceeds tolerance");
    }
}

}  // namespace

// ---------------------------------------------------------------- Profile

Profile::Profile(double dz, long j_min, std::vector<double> values, double rho_minus, double rho_plus)
    : dz_(dz), j_min_(j_min), values_(std::move(values)), rho_minus_(rho_minus), rho_plus_(rho_plus) {
    if (!(dz > 0.0)) throw std::invalid_argument("Profile: dz must be positive");
    if (values_.empty()) throw std::invalid_argument("Profile: no values");
}

double Profile::operator()(double xq) const {
    const double s = xq / dz_ - static_cast<double>(j_min_);
    if (s < 0.0) return rho_minus_;
    const double last = static_cast<double>(values_.size() - 1);
    if (s > last) return rho_plus_;
    const auto k = std::min(static_cast<std::size_t>(s), values_.size() - 1);
    if (k + 1 >= values_.size()) return values_.back();
    const double t = s - static_cast<double>(k);
    return (1.0 - t) * values_[k] + t * values_[k + 1];
}

std::size_t Profile::nearest(double xq) const {
    const double s = std::round(xq / dz_ - static_cast<double>(j_min_));
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(values_.size() - 1)));
}

Grid Grid::standard(double h) { return Grid{-40.0 * h, 40.0 * h, 0.0002}; }

// ---------------------------------------------------------------- leader / chains

double leader(const Profile& P, double ell, double x) { return x + ell / P(x); }

double follower(const Profile& P, double ell, double x) {
    const double pmin = profile_min(P);
    if (!(pmin > 0.0)) throw std::domain_error("follower: profile must be positive");
    double a = x - ell / pmin - ell;
    double b = x - ell;
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(x)); ++it) {
        const double m = 0.5 * (a + b);
        if (leader(P, ell, m) < x) a = m;
        else b = m;
    }
    return 0.5 * (a + b);
}

CarChain sample_chain(const Profile& P, const ModelParams& params, double x) {
    ChainBuf b;
    build_chain(params, x, P(x), [&](double y) { return P(y); }, b);
    return CarChain{std::move(b.nodes), std::move(b.vals)};
}

double profile_v_star(const ModelParams& params, double x_eval, const CarChain& chain) {
    if (chain.nodes.empty() || chain.nodes.front() > x_eval || chain.nodes.back() < x_eval + params.h()) {
        throw std::invalid_argument("profile_v_star: chain does not cover [x, x+h]");
    }
    const auto it = std::upper_bound(chain.nodes.begin(), chain.nodes.end(), x_eval);
    const auto k0 = static_cast<std::size_t>(it - chain.nodes.begin()) - 1;
    return detail::window_integral(
        params, x_eval, chain.nodes.data(), chain.values.data(), chain.nodes.size(), k0,
        [&](double r) { return params.law.phi(r); }, true);
}

double profile_rhs(const Profile& P, const ModelParams& params, double x) {
    ChainBuf b;
    return eq_rhs(params, x, P(x), [&](double y) { return P(y); }, b);
}

// ---------------------------------------------------------------- tail rate

double tail_rate(const ModelParams& params, double v, double rho_bar, bool local) {
    (void)v;  // the rate does not depend on the (uniform) speed level
    return detail::tail_rate_flow(params, rho_bar, local ? detail::Flow::Local : detail::Flow::Nonlocal);
}

namespace detail {

double tail_rate_flow(const ModelParams& params, double rho_bar, Flow flow) {
    const double rh = critical_rho_hat(params.law);
    if (std::abs(rho_bar - rh) < 1e-12) throw std::domain_error("tail_rate: rho_bar equals rho_hat");
    const double phi = params.law.phi(rho_bar);
    const double dphi = params.law.phi_prime(rho_bar);
    std::function<double(double)> g;
    std::vector<double> m;
    if (flow == Flow::Conservation) {
        // 1 = gain * integral of e^{lam s} w(s) ds, written so that g > 0 near 0
        // on the side where the root lies.
        const double gain = -rho_bar * dphi / phi;
        const double h = params.h();
        g = [&, gain, h](double lam) {
            constexpr int cells = 256;
            const double r3 = 1.0 / std::sqrt(3.0);
            const double ds = h / cells;
            double I = 0.0;
            for (int c = 0; c < cells; ++c) {
                const double mid = (c + 0.5) * ds;
                for (double sg : {-r3, r3}) {
                    const double s = mid + 0.5 * ds * sg;
                    I += 0.5 * ds * std::exp(lam * s) * params.kernel(s);
                }
            }
            return (lam < 0.0 ? 1.0 : -1.0) * (gain * I - 1.0);
        };
    } else {
        const double kappa = rho_bar * rho_bar * dphi / (params.ell * phi);
        const double d = params.ell / rho_bar;
        if (flow == Flow::Local) {
            m.push_back(1.0);
        } else {
            for (std::size_t j = 0; static_cast<double>(j) * d < params.h(); ++j) {
                m.push_back(params.kernel.mass(static_cast<double>(j) * d, static_cast<double>(j + 1) * d));
            }
        }
        g = [&, kappa, d](double lam) {
            const double q = std::exp(lam * d);
            double M = 0.0;
            double qj = 1.0;
            for (double mj : m) {
                M += mj * qj;
                qj *= q;
            }
            return lam - kappa * (1.0 - q) * M;
        };
    }
    const double side = rho_bar > rh ? -1.0 : 1.0;
    double lo = 1e-6;
    double hi = 1.0;
    while (g(side * hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) throw NonConvergenceError("tail_rate: no root found", {});
    }
    if (!(g(side * lo) > 0.0)) throw NonConvergenceError("tail_rate: bracket failed", {});
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(side * mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return side * 0.5 * (lo + hi);
}

}  // namespace detail

// ---------------------------------------------------------------- uniform branch

namespace detail {

std::vector<double> uniform_branch(const ModelParams& params, double v, double fbar, double anchor, double dz, long j_lo,
                                   long j_hi, Flow flow) {
    check_grid(params, dz);
    const RootPair roots = asymptotic_roots(fbar, v, params.law);
    if (!(anchor > roots.low && anchor <= roots.high + 1e-14)) {
        throw AnchorOutOfRangeError("anchor " + std::to_string(anchor) + " outside (" + std::to_string(roots.low) + ", " +
                                    std::to_string(roots.high) + "]");
    }
    anchor = std::min(anchor, roots.high);
    const ModelParams up = params.with_road(RoadCondition(v, v));
    const double hi = roots.high;
    const double eps = kEpsFactor * (roots.high - roots.low);
    const double lam = tail_rate_flow(up, hi, flow);

    ChainBuf buf;
    auto run = [&](double s, long lo_run, long hi_run, double stop_below) {
        auto seed = [=](double y) { return hi - eps * std::exp(lam * (y - s)); };
        const long j_top = std::max(lo_run, static_cast<long>(std::ceil(s / dz)));
        Track tr(dz, lo_run, std::max(hi_run, j_top), seed);
        for (long j = tr.hi(); j >= j_top; --j) tr.push(j, seed(tr.x(j)));
        auto f = [&](double x, double p) {
            if (flow == Flow::Nonlocal) return eq_rhs(up, x, p, tr, buf);
            if (!(p > 0.0 && p < 1.0)) throw BlowUpError("uniform branch: value left (0,1)");
            return local_rhs(up, p, tr(x + up.ell / p), v, v);
        };
        for (long j = j_top; j > lo_run; --j) {
            const double next = flow == Flow::Conservation
                                    ? conservation_node(up, tr.x(j - 1), dz, tr.value(j), fbar, tr)
                                    : rk4_down(f, tr.x(j), tr.value(j), dz);
            if (!(next > 0.0 && next < 1.0)) throw BlowUpError("uniform branch: value left (0,1)");
            tr.push(j - 1, next);
            if (next < stop_below) break;
        }
        return tr;
    };

    if (anchor >= hi - eps) {
        const double s = anchor >= hi ? -std::numeric_limits<double>::infinity() : -std::log((hi - anchor) / eps) / lam;
        if (std::isinf(s)) return std::vector<double>(static_cast<std::size_t>(j_hi - j_lo + 1), hi);
        return run(s, j_lo, j_hi, -1.0).take(j_lo, j_hi);
    }

    // Pass 1: tail mode centred at 0, march until the anchor level is crossed.
    const long span = static_cast<long>(std::ceil(400.0 * params.h() / dz));
    const Track first = run(0.0, -span, 0, anchor);
    long jc = first.cur();
    if (first.value(jc) >= anchor) throw NonConvergenceError("uniform branch: anchor level never reached", {});
    const double p0 = first.value(jc);
    const double p1 = first.value(jc + 1);
    const double xstar = first.x(jc) + dz * (anchor - p0) / (p1 - p0);

    // Pass 2 on the final grid; the shift is corrected by a few secant updates.
    double s = -xstar;
    const long lo_run = std::min(j_lo, -1L);
    const long hi_run = std::max(j_hi, 1L);
    // The map s -> P(0) is only smooth down to about 1e-11 (the seed is exact
    // to second order in eps), so keep the best of a few secant steps.
    std::vector<double> best;
    double best_gap = INFINITY;
    for (int it = 0; it < 5; ++it) {
        const Track tr = run(s, lo_run, hi_run, -1.0);
        const double delta = tr.value(0) - anchor;
        if (std::abs(delta) < best_gap) {
            best_gap = std::abs(delta);
            best = tr.take(j_lo, j_hi);
        }
        const double slope = (tr.value(1) - tr.value(-1)) / (2.0 * dz);
        if (best_gap < 1e-13 || !(slope > 0.0)) break;
        s += delta / slope;
    }
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------- solvers

Profile solve_backward(const Profile& seed, const ModelParams& params, double x_min, double tail_tol) {
    const double dz = seed.dz();
    check_grid(params, dz);
    if (seed.j_min() > 0 || seed.j_max() < 0) throw std::invalid_argument("solve_backward: seed must contain x = 0");
    if (!(x_min < 0.0)) throw std::invalid_argument("solve_backward: X_min must be negative");
    const long j_lo = static_cast<long>(std::floor(x_min / dz + 1e-9));
    const long j_hi = seed.j_max();
    const double rp = seed.rho_plus();
    detail::Track tr(dz, j_lo, j_hi, [rp](double) { return rp; });
    for (long j = j_hi; j >= 0; --j) tr.push(j, seed.values()[static_cast<std::size_t>(j - seed.j_min())]);

    // Left of -h the equation is the uniform-road one. Once the march is within
    // kLeftTailEps of rho^- and still closing in, it continues as the decaying
    // eigenmode: RK4 would otherwise settle on a nearby constant whose flux is
    // off by O(dz^2), and that offset depends on the anchor.
    const double rm = seed.rho_minus();
    double lam = 0.0;
    if (rm < critical_rho_hat(params.law) - 1e-12) lam = detail::tail_rate_flow(params, rm, detail::Flow::Nonlocal);
    bool on_tail = false;
    double x0 = 0.0;
    double d0 = 0.0;

    ChainBuf buf;
    auto f = [&](double x, double p) { return eq_rhs(params, x, p, tr, buf); };
    for (long j = 0; j > j_lo; --j) {
        const double x1 = tr.x(j - 1);
        if (on_tail) {
            tr.push(j - 1, rm + d0 * std::exp(lam * (x1 - x0)));
            continue;
        }
        const double next = detail::rk4_down(f, tr.x(j), tr.value(j), dz);
        if (!(next > 0.0 && next < 1.0)) {
            throw BlowUpError("solve_backward: P = " + std::to_string(next) + " left (0,1) at x = " + std::to_string(x1));
        }
        tr.push(j - 1, next);
        const double d = next - rm;
        const double d_prev = tr.value(j) - rm;
        if (lam > 0.0 && x1 < -params.h() && std::abs(d) <= kLeftTailEps && d * d_prev > 0.0 &&
            std::abs(d) < std::abs(d_prev)) {
            on_tail = true;
            x0 = x1;
            d0 = d;
        }
    }
    Profile out(dz, j_lo, tr.take(j_lo, j_hi), seed.rho_minus(), seed.rho_plus());
    out.meta = seed.meta;
    out.meta.ell = params.ell;
    out.meta.h = params.h();
    out.meta.tail_tol = tail_tol;
    record_tails(out);
    return out;
}

Profile uniform_profile_W(double v, double fbar, const ModelParams& params, double anchor_value, const Grid& grid) {
    const long j_lo = static_cast<long>(std::floor(grid.x_min / grid.dz + 1e-9));
    const long j_hi = static_cast<long>(std::ceil(grid.x_max / grid.dz - 1e-9));
    const RootPair roots = asymptotic_roots(fbar, v, params.law);
    Profile P(grid.dz, j_lo, detail::uniform_branch(params, v, fbar, anchor_value, grid.dz, j_lo, j_hi, detail::Flow::Nonlocal),
              roots.low, roots.high);
    P.meta.subcase = "uniform-road";
    P.meta.anchor = anchor_value;
    P.meta.fbar = fbar;
    P.meta.ell = params.ell;
    P.meta.h = params.h();
    record_tails(P);
    return P;
}

Profile trivial_profile(const SubcaseReport& report, const Grid& grid) {
    const long j_lo = static_cast<long>(std::floor(grid.x_min / grid.dz + 1e-9));
    const long j_hi = static_cast<long>(std::ceil(grid.x_max / grid.dz - 1e-9));
    std::vector<double> v(static_cast<std::size_t>(j_hi - j_lo + 1));
    for (long j = j_lo; j <= j_hi; ++j) v[static_cast<std::size_t>(j - j_lo)] = j < 0 ? report.rho_minus : report.rho_plus;
    Profile P(grid.dz, j_lo, std::move(v), report.rho_minus, report.rho_plus);
    P.meta.subcase = std::string(to_string(report.subcase));
    P.meta.anchor = report.rho_plus;
    P.meta.ell = report.params.ell;
    P.meta.h = report.params.h();
    P.meta.warnings.emplace_back("zero-flux profile: the leader map is undefined where P = 0");
    return P;
}

Profile build_profile(const SubcaseReport& report, double anchor_value, const Grid& grid) {
    const ModelParams& params = report.params;
    if (report.verdict == Verdict::NoProfile) {
        throw NoProfileError("subcase " + std::string(to_string(report.subcase)) + " (rho^- = " +
                             std::to_string(report.rho_minus) + ", rho^+ = " + std::to_string(report.rho_plus) +
                             "): no stationary profile exists");
    }
    if (report.subcase == Subcase::TrivialZeroFlux) return trivial_profile(report, grid);
    check_grid(params, grid.dz);
    if (!(grid.x_min < 0.0 && grid.x_max > 0.0)) throw std::invalid_argument("build_profile: grid must straddle 0");

    const long j_hi = static_cast<long>(std::ceil(grid.x_max / grid.dz - 1e-9));
    const double rp = report.rho_plus;
    std::vector<double> seed_vals;

    if (report.verdict == Verdict::UniqueProfile) {
        if (std::abs(anchor_value - rp) > 1e-12) {
            throw AnchorOutOfRangeError("unique subcase " + std::string(to_string(report.subcase)) +
                                        ": the anchor must equal rho^+ = " + std::to_string(rp));
        }
        seed_vals.assign(static_cast<std::size_t>(j_hi + 1), rp);
    } else {
        const double floor_v = report.anchor_floor();
        if (!(anchor_value > floor_v && anchor_value <= rp + 1e-12)) {
            throw AnchorOutOfRangeError("anchor " + std::to_string(anchor_value) + " outside (" + std::to_string(floor_v) +
                                        ", " + std::to_string(rp) + "]");
        }
        if (report.subcase == Subcase::Uniform) {
            Profile W = uniform_profile_W(params.road.v_plus, report.fbar, params, anchor_value, grid);
            W.meta.tail_tol = 1e-4;
            return W;
        }
        seed_vals = detail::uniform_branch(params, params.road.v_plus, report.fbar, std::min(anchor_value, rp), grid.dz, 0,
                                           j_hi, detail::Flow::Nonlocal);
    }

    Profile seed(grid.dz, 0, std::move(seed_vals), report.rho_minus, rp);
    seed.meta.subcase = std::string(to_string(report.subcase));
    seed.meta.anchor = anchor_value;
    seed.meta.fbar = report.fbar;
    return solve_backward(seed, params, grid.x_min);
}

double admissible_anchor_sup(const SubcaseReport& report, const Grid& grid,
                             const std::function<void(double, const Grid&)>& build, double tol) {
    const double hi0 = report.rho_plus;
    if (report.verdict != Verdict::InfinitelyManyProfiles) return hi0;
    if (!(tol > 0.0)) throw std::invalid_argument("admissible_anchor_sup: tol must be positive");
    const double h = report.params.h();
    const Grid probe{std::max(grid.x_min, -20.0 * h), std::min(grid.x_max, 4.0 * h), grid.dz};
    auto ok = [&](double a, const Grid& g) {
        try {
            build(a, g);
            return true;
        } catch (const NumericalError&) {
            return false;
        }
    };
    const double floor_v = report.anchor_floor();
    if (ok(hi0, grid)) return hi0;
    double lo = floor_v + 0.5 * (hi0 - floor_v);
    double hi = hi0;
    while (!ok(lo, probe)) {
        hi = lo;
        lo = floor_v + 0.5 * (lo - floor_v);
        if (lo - floor_v < tol) throw NonConvergenceError("admissible_anchor_sup: no anchor above the floor builds", {});
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid, probe) ? lo : hi) = mid;
    }
    while (!ok(lo, grid)) {
        lo -= tol;
        if (!(lo > floor_v)) throw NonConvergenceError("admissible_anchor_sup: no anchor above the floor builds", {});
    }
    return lo;
}

double family_anchor_sup(const SubcaseReport& report, const Grid& grid, double tol) {
    return admissible_anchor_sup(
        report, grid, [&](double a, const Grid& g) { (void)build_profile(report, a, g); }, tol);
}

double z_flat(const Profile& P, const ModelParams& params) {
    const double target = -params.h();
    const double pmin = profile_min(P);
    double a = target - params.ell / pmin - params.ell;
    double b = target - params.ell;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        if (leader(P, params.ell, m) < target) a = m;
        else b = m;
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------------------- diagnostics

std::vector<double> equation_residual(const Profile& P, const ModelParams& params) {
    const auto& v = P.values();
    std::vector<double> r(v.size(), 0.0);
    ChainBuf buf;
    auto look = [&](double y) { return P(y); };
    const double dz = P.dz();
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const double d = (v[k + 1] - v[k - 1]) / (2.0 * dz);
        r[k] = std::abs(d - eq_rhs(params, P.x(k), v[k], look, buf));
    }
    return r;
}

std::vector<double> kink_points(const Profile& P, const ModelParams& params) {
    std::vector<double> k{0.0};
    const double zf = z_flat(P, params);
    double y = 0.0;
    for (int it = 0; it < 100000; ++it) {
        y = follower(P, params.ell, y);
        if (y < zf - params.ell) break;
        k.push_back(y);
    }
    k.push_back(-params.h());
    return k;
}

double smooth_residual(const Profile& P, const ModelParams& params, const std::vector<double>& kinks, double guard) {
    const std::vector<double> r = equation_residual(P, params);
    std::vector<double> sorted(kinks);
    std::sort(sorted.begin(), sorted.end());
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < r.size(); ++k) {
        const double x = P.x(k);
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
        bool near = false;
        if (it != sorted.end() && *it - x <= guard) near = true;
        if (it != sorted.begin() && x - *(it - 1) <= guard) near = true;
        if (!near) worst = std::max(worst, r[k]);
    }
    return worst;
}

std::size_t slope_bound_violations(const Profile& P, const ModelParams& params) {
    const auto& v = P.values();
    ChainBuf buf;
    auto look = [&](double y) { return P(y); };
    std::size_t bad = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double s = eq_rhs(params, P.x(k), v[k], look, buf);
        if (!(s < v[k] * v[k] / params.ell)) ++bad;
    }
    return bad;
}

}  // namespace ftls
