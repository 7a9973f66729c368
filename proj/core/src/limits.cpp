#include "ftls/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ftls/detail/branch.hpp"
#include "ftls/detail/gauss.hpp"
#include "ftls/detail/march.hpp"
#include "ftls/errors.hpp"

namespace ftls {

namespace {

long lo_index(const Grid& g) { return static_cast<long>(std::floor(g.x_min / g.dz + 1e-9)); }
long hi_index(const Grid& g) { return static_cast<long>(std::ceil(g.x_max / g.dz - 1e-9)); }

void require_profile(const SubcaseReport& report) {
    if (report.verdict == Verdict::NoProfile) {
        throw NoProfileError("subcase " + std::string(to_string(report.subcase)) + ": no stationary profile exists");
    }
    if (report.subcase == Subcase::TrivialZeroFlux) {
        throw std::invalid_argument("limit profiles need a positive flux");
    }
}

/// Values on j = 0 .. j_hi of the branch through the anchor on x >= 0, or
/// on the whole grid for a uniform road.
std::vector<double> right_branch(const SubcaseReport& report, double anchor, const Grid& grid, long j_from,
                                 detail::Flow flow) {
    const long j_hi = hi_index(grid);
    const std::size_t n = static_cast<std::size_t>(j_hi - j_from + 1);
    if (report.verdict == Verdict::UniqueProfile) {
        if (std::abs(anchor - report.rho_plus) > 1e-12) {
            throw AnchorOutOfRangeError("unique subcase: the anchor must equal rho^+ = " + std::to_string(report.rho_plus));
        }
        return std::vector<double>(n, report.rho_plus);
    }
    const double floor_v = report.anchor_floor();
    if (!(anchor > floor_v && anchor <= report.rho_plus + 1e-12)) {
        throw AnchorOutOfRangeError("anchor " + std::to_string(anchor) + " outside (" + std::to_string(floor_v) + ", " +
                                    std::to_string(report.rho_plus) + "]");
    }
    return detail::uniform_branch(report.params, report.params.road.v_plus, report.fbar, std::min(anchor, report.rho_plus),
                                  grid.dz, j_from, j_hi, flow);
}

}  // namespace

double averaging_A(double x, const ModelParams& params, const Profile& g) {
    return detail::gauss_cells(params, x, x, x + params.h(), g.dz(), [&](double y) { return g(y); });
}

double q_residual(const Profile& Q, const ModelParams& params, double fbar) {
    double worst = 0.0;
    for (std::size_t k = 0; k < Q.size(); ++k) {
        worst = std::max(worst, std::abs(Q.values()[k] * averaging_A(Q.x(k), params, Q) - fbar));
    }
    return worst;
}

LimitProfileQ solve_Q(const SubcaseReport& report, double anchor_value, const Grid& grid, const QOptions& opts) {
    require_profile(report);
    const ModelParams& params = report.params;
    const long j_lo = lo_index(grid);
    const long j_hi = hi_index(grid);
    const double dz = grid.dz;
    const double fbar = report.fbar;

    std::vector<double> vals;
    if (report.subcase == Subcase::Uniform) {
        vals = report.verdict == Verdict::UniqueProfile
                   ? std::vector<double>(static_cast<std::size_t>(j_hi - j_lo + 1), report.rho_plus)
                   : right_branch(report, anchor_value, grid, j_lo, detail::Flow::Conservation);
    } else {
        const std::vector<double> right = right_branch(report, anchor_value, grid, 0, detail::Flow::Conservation);
        const double rp = report.rho_plus;
        detail::Track tr(dz, j_lo, j_hi, [rp](double) { return rp; });
        for (long j = j_hi; j >= 0; --j) tr.push(j, right[static_cast<std::size_t>(j)]);
        for (long j = 0; j > j_lo; --j) {
            const double q = detail::conservation_node(params, tr.x(j - 1), dz, tr.value(j), fbar, tr);
            if (!(q > 0.0 && q < 1.0)) throw BlowUpError("solve_Q: Q left (0,1) at x = " + std::to_string(tr.x(j - 1)));
            tr.push(j - 1, q);
        }
        vals = tr.take(j_lo, j_hi);
    }

    LimitProfileQ out{Profile(dz, j_lo, std::move(vals), report.rho_minus, report.rho_plus), {}, 0, 0.0};
    Profile& Q = out.profile;
    Q.meta.subcase = std::string(to_string(report.subcase));
    Q.meta.anchor = anchor_value;
    Q.meta.fbar = fbar;
    Q.meta.ell = 0.0;
    Q.meta.h = params.h();

    const double tol = opts.tol_rel * fbar;
    double res = q_residual(Q, params, fbar);
    out.residual_history.push_back(res);
    const std::size_t k0 = static_cast<std::size_t>(-j_lo);
    std::vector<double> next;
    while (res >= tol) {
        if (out.sweeps >= opts.max_sweeps) {
            throw NonConvergenceError("solve_Q: residual " + std::to_string(res) + " after " +
                                          std::to_string(out.sweeps) + " sweeps",
                                      out.residual_history);
        }
        next = Q.values();
        for (std::size_t k = 0; k < k0; ++k) {
            next[k] = (1.0 - opts.theta) * Q.values()[k] + opts.theta * fbar / averaging_A(Q.x(k), params, Q);
        }
        Q.mutable_values() = next;
        ++out.sweeps;
        res = q_residual(Q, params, fbar);
        out.residual_history.push_back(res);
        if (!std::isfinite(res)) throw NonConvergenceError("solve_Q: residual is not finite", out.residual_history);
    }
    out.residual = res;
    Q.meta.tail_gap_left = std::abs(Q.values().front() - Q.rho_minus());
    Q.meta.tail_gap_right = std::abs(Q.values().back() - Q.rho_plus());
    return out;
}

double u_rhs(const Profile& U, const ModelParams& params, double x) {
    const double u = U(x);
    const double lead = x + params.ell / u;
    const double v_here = x <= 0.0 ? params.road.v_minus : params.road.v_plus;
    return detail::local_rhs(params, u, U(lead), v_here, params.road.at(lead));
}

LimitProfileU solve_U(const SubcaseReport& report, double anchor_value, const Grid& grid) {
    require_profile(report);
    const ModelParams& params = report.params;
    const long j_lo = lo_index(grid);
    const long j_hi = hi_index(grid);
    const double dz = grid.dz;
    if (!(params.ell > dz)) throw std::invalid_argument("solve_U: needs ell > dz");

    double event_x = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> vals;
    if (report.subcase == Subcase::Uniform) {
        vals = report.verdict == Verdict::UniqueProfile
                   ? std::vector<double>(static_cast<std::size_t>(j_hi - j_lo + 1), report.rho_plus)
                   : right_branch(report, anchor_value, grid, j_lo, detail::Flow::Local);
    } else {
        const std::vector<double> right = right_branch(report, anchor_value, grid, 0, detail::Flow::Local);
        const double rp = report.rho_plus;
        detail::Track tr(dz, j_lo, j_hi, [rp](double) { return rp; });
        for (long j = j_hi; j >= 0; --j) tr.push(j, right[static_cast<std::size_t>(j)]);

        const double vm = params.road.v_minus;
        const double vp = params.road.v_plus;
        auto make = [&](double v_lead) {
            return [&, v_lead](double x, double u) {
                if (!(u > 0.0 && u < 1.0)) throw BlowUpError("solve_U: U left (0,1) at x = " + std::to_string(x));
                const double v_here = x <= 0.0 ? vm : vp;
                return detail::local_rhs(params, u, tr(x + params.ell / u), v_here, v_lead);
            };
        };
        const auto f_plus = make(vp);
        const auto f_minus = make(vm);
        bool passed = false;
        for (long j = 0; j > j_lo; --j) {
            const double x = tr.x(j);
            const double u = tr.value(j);
            double next;
            if (passed) {
                next = detail::rk4_down(f_minus, x, u, dz);
            } else {
                next = detail::rk4_down(f_plus, x, u, dz);
                if (x - dz + params.ell / next < 0.0) {
                    auto L = [&](double eta) {
                        return x - eta + params.ell / detail::rk4_down(f_plus, x, u, eta);
                    };
                    double a = 0.0;
                    double b = dz;
                    if (L(0.0) < 0.0) b = 0.0;
                    for (int it = 0; it < 100 && b - a > 1e-16; ++it) {
                        const double m = 0.5 * (a + b);
                        if (L(m) >= 0.0) a = m;
                        else b = m;
                    }
                    const double eta = 0.5 * (a + b);
                    const double ue = eta > 0.0 ? detail::rk4_down(f_plus, x, u, eta) : u;
                    event_x = x - eta;
                    next = dz - eta > 0.0 ? detail::rk4_down(f_minus, x - eta, ue, dz - eta) : ue;
                    passed = true;
                }
            }
            if (!(next > 0.0 && next < 1.0)) throw BlowUpError("solve_U: U left (0,1) at x = " + std::to_string(x - dz));
            tr.push(j - 1, next);
        }
        vals = tr.take(j_lo, j_hi);
    }
    LimitProfileU out{Profile(dz, j_lo, std::move(vals), report.rho_minus, report.rho_plus), event_x};
    Profile& U = out.profile;
    U.meta.subcase = std::string(to_string(report.subcase));
    U.meta.anchor = anchor_value;
    U.meta.fbar = report.fbar;
    U.meta.ell = params.ell;
    U.meta.h = 0.0;
    U.meta.tail_gap_left = std::abs(U.values().front() - U.rho_minus());
    U.meta.tail_gap_right = std::abs(U.values().back() - U.rho_plus());
    return out;
}

double u_smooth_residual(const LimitProfileU& LU, const ModelParams& params, double guard) {
    const Profile& U = LU.profile;
    std::vector<double> kinks{0.0};
    if (std::isfinite(LU.event_x)) {
        double y = LU.event_x;
        kinks.push_back(y);
        for (int k = 0; k < 2; ++k) {
            y = follower(U, params.ell, y);
            kinks.push_back(y);
        }
    }
    const auto& v = U.values();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const double x = U.x(k);
        bool near = false;
        for (double kx : kinks) near = near || std::abs(x - kx) <= guard;
        if (near) continue;
        const double d = (v[k + 1] - v[k - 1]) / (2.0 * U.dz());
        worst = std::max(worst, std::abs(d - u_rhs(U, params, x)));
    }
    return worst;
}

bool StudyTable::strictly_decreasing() const {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (!(rows[k].sup_error < rows[k - 1].sup_error)) return false;
    }
    return true;
}

namespace {

double sup_diff(const Profile& a, const Profile& b, double window) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = a.x(k);
        if (std::abs(x) > window) continue;
        worst = std::max(worst, std::abs(a.values()[k] - b(x)));
    }
    return worst;
}

void require_decreasing(const std::vector<double>& seq, const char* what) {
    if (seq.empty()) throw std::invalid_argument(std::string(what) + ": empty sequence");
    for (std::size_t k = 1; k < seq.size(); ++k) {
        if (!(seq[k] < seq[k - 1])) throw std::invalid_argument(std::string(what) + ": sequence must strictly decrease");
    }
}

}  // namespace

StudyTable convergence_study_micro_macro(const SubcaseReport& report, double anchor_value,
                                         const std::vector<double>& ell_sequence, const Grid& grid) {
    require_decreasing(ell_sequence, "convergence_study_micro_macro");
    const LimitProfileQ Q = solve_Q(report, anchor_value, grid);
    const double window = 10.0 * report.params.h();
    StudyTable t{"ell", {}};
    for (double ell : ell_sequence) {
        SubcaseReport r = report;
        r.params = report.params.with_ell(ell);
        const Profile P = build_profile(r, anchor_value, grid);
        t.rows.push_back({ell, sup_diff(P, Q.profile, window), Q.residual, Q.sweeps, P.meta.tail_gap_left});
    }
    return t;
}

StudyTable convergence_study_nonlocal_local(const SubcaseReport& report, double anchor_value,
                                            const std::vector<double>& h_sequence, const Grid& grid) {
    require_decreasing(h_sequence, "convergence_study_nonlocal_local");
    const LimitProfileU U = solve_U(report, anchor_value, grid);
    const double window = 10.0 * h_sequence.front();
    const double ures = u_smooth_residual(U, report.params, 2.0 * grid.dz);
    StudyTable t{"h", {}};
    for (double h : h_sequence) {
        SubcaseReport r = report;
        r.params = report.params.with_h(h);
        const Profile P = build_profile(r, anchor_value, grid);
        t.rows.push_back({h, sup_diff(P, U.profile, window), ures, 0, P.meta.tail_gap_left});
    }
    return t;
}

}  // namespace ftls
