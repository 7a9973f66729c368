#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ftls/errors.hpp"
#include "ftls/limits.hpp"
#include "generators.hpp"

using namespace ftls;

namespace {

constexpr double kFbar = 3.0 / 16.0;
const Grid kCoarse{-10.0, 10.0, 0.001};

SubcaseReport report_1b() {
    const auto p = ModelParams::standard();
    const auto [rm, rp] = subcase_asymptotes(p, kFbar, 'B');
    return classify(p, rm, rp);
}

Profile flat(double rho, const Grid& g) {
    const long lo = static_cast<long>(std::floor(g.x_min / g.dz + 1e-9));
    const long hi = static_cast<long>(std::ceil(g.x_max / g.dz - 1e-9));
    return Profile(g.dz, lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), rho), rho, rho);
}

const ModelParams kUniform1 = ModelParams::standard().with_road(RoadCondition(1.0, 1.0));

}  // namespace

TEST(AveragingA, ConstantDensityAcrossJump) {
    const auto p = ModelParams::standard();
    const auto g = flat(0.25, kCoarse);
    EXPECT_NEAR(averaging_A(-0.25, p, g), 1.3125, 1e-13);
    EXPECT_NEAR(averaging_A(-2.0, p, g), 1.5, 1e-13);
    EXPECT_NEAR(averaging_A(1.0, p, g), 0.75, 1e-13);
}

TEST(AveragingA, ConstantDensityProperty) {
    gen::Gen g("AveragingAConstantDensityProperty");
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = g.params();
        const double rho = g.uniform(0.05, 0.95);
        const auto prof = flat(rho, Grid{-5.0, 5.0, 0.01});
        const double x = g.uniform(-p.h(), 0.0);
        const double K = p.kernel.cumulative(-x);
        const double want = (1.0 - rho) * (p.road.v_minus * K + p.road.v_plus * (1.0 - K));
        EXPECT_NEAR(averaging_A(x, p, prof), want, 1e-12);
    }
}

TEST(SolveQ, UniformRoadTopIsConstant) {
    const auto roots = asymptotic_roots(kFbar, 1.0, kUniform1.law);
    const auto r = classify(kUniform1, roots.low, roots.high);
    const auto Q = solve_Q(r, roots.high, kCoarse);
    for (double v : Q.profile.values()) EXPECT_NEAR(v, 0.75, 1e-12);
    EXPECT_LT(q_residual(Q.profile, kUniform1, kFbar), 1e-12);
}

TEST(SolveQ, ResidualAndTails1B) {
    const auto r = report_1b();
    const auto Q = solve_Q(r, 0.5, kCoarse);
    EXPECT_LT(Q.residual, 1e-9 * kFbar);
    EXPECT_LT(q_residual(Q.profile, r.params, kFbar), 1e-9 * kFbar);
    EXPECT_NEAR(Q.profile(0.0), 0.5, 1e-10);
    EXPECT_LT(std::abs(Q.profile.values().front() - r.rho_minus), 1e-4);
    EXPECT_LT(std::abs(Q.profile.values().back() - r.rho_plus), 1e-4);
    for (double v : Q.profile.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    ASSERT_FALSE(Q.residual_history.empty());
    EXPECT_DOUBLE_EQ(Q.residual_history.back(), Q.residual);
}

TEST(SolveQ, RefusesNoProfileAndBadAnchor) {
    const auto p = ModelParams::standard();
    const auto [rm, rp] = subcase_asymptotes(p, kFbar, 'C');
    const auto c = classify(p, rm, rp);
    EXPECT_THROW(solve_Q(c, rp, kCoarse), NoProfileError);
    EXPECT_THROW(solve_U(c, rp, kCoarse), NoProfileError);
    EXPECT_THROW(solve_Q(report_1b(), 0.1, kCoarse), AnchorOutOfRangeError);
}

TEST(SolveU, StructureAndEvent1B) {
    const auto r = report_1b();
    const auto U = solve_U(r, 0.5, kCoarse);
    EXPECT_NEAR(U.profile(0.0), 0.5, 1e-10);
    ASSERT_TRUE(std::isfinite(U.event_x));
    EXPECT_LT(U.event_x, 0.0);
    // U' jumps at the event, so extrapolate a quadratic through the three
    // nodes on its right.
    const Profile& P = U.profile;
    const std::size_t k = P.nearest(U.event_x) + (P.x(P.nearest(U.event_x)) < U.event_x ? 1 : 0);
    const double t = (U.event_x - P.x(k)) / P.dz();
    const auto& v = P.values();
    const double ue = v[k] + t * (v[k + 1] - v[k]) + 0.5 * t * (t - 1.0) * (v[k + 2] - 2.0 * v[k + 1] + v[k]);
    EXPECT_NEAR(U.event_x + r.params.ell / ue, 0.0, 1e-6);
    EXPECT_LT(std::abs(U.profile.values().front() - r.rho_minus), 1e-4);
    for (double v : U.profile.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(SolveU, ResidualIsSecondOrder) {
    const auto r = report_1b();
    auto resid = [&](double dz) {
        const auto U = solve_U(r, 0.5, Grid{-5.0, 5.0, dz});
        return u_smooth_residual(U, r.params, 3.0 * dz);
    };
    const double coarse = resid(0.002), fine = resid(0.001);
    EXPECT_GT(coarse / fine, 3.0);
    EXPECT_LT(coarse / fine, 5.5);
}

TEST(Studies, ConstantDataGiveZeroError) {
    const auto roots = asymptotic_roots(kFbar, 1.0, kUniform1.law);
    const auto r = classify(kUniform1, roots.low, roots.high);
    const auto mm = convergence_study_micro_macro(r, roots.high, {0.05, 0.025}, kCoarse);
    for (const auto& row : mm.rows) EXPECT_LT(row.sup_error, 1e-12);
    const auto nl = convergence_study_nonlocal_local(r, roots.high, {0.5, 0.25}, kCoarse);
    for (const auto& row : nl.rows) EXPECT_LT(row.sup_error, 1e-12);
}

TEST(Studies, RejectIncreasingSequence) {
    EXPECT_THROW(convergence_study_micro_macro(report_1b(), 0.5, {0.025, 0.05}, kCoarse), std::invalid_argument);
    EXPECT_THROW(convergence_study_nonlocal_local(report_1b(), 0.5, {}, kCoarse), std::invalid_argument);
}

TEST(Studies, RichardsonAgreesWithQOnUniformRoad) {
    const auto roots = asymptotic_roots(kFbar, 1.0, kUniform1.law);
    const double anchor = 0.5;
    const auto r = classify(kUniform1, roots.low, roots.high);
    const Grid g{-10.0, 10.0, 0.0005};
    const auto Q = solve_Q(r, anchor, g);
    SubcaseReport r1 = r, r2 = r;
    r1.params = r.params.with_ell(0.025);
    r2.params = r.params.with_ell(0.0125);
    const auto P1 = build_profile(r1, anchor, g);
    const auto P2 = build_profile(r2, anchor, g);
    const double window = 5.0;
    double e_min = 0.0, rich = 0.0;
    for (std::size_t k = 0; k < P2.size(); ++k) {
        const double x = P2.x(k);
        if (std::abs(x) > window) continue;
        const double q = Q.profile(x);
        e_min = std::max(e_min, std::abs(P2.values()[k] - q));
        rich = std::max(rich, std::abs(2.0 * P2.values()[k] - P1(x) - q));
    }
    EXPECT_GT(e_min, 0.0);
    EXPECT_LT(rich, 0.5 * e_min);
}

TEST(Studies, MicroMacroDecreasesOnCoarseGrid) {
    const auto t = convergence_study_micro_macro(report_1b(), 0.5, {0.05, 0.025, 0.0125}, Grid{-10.0, 10.0, 0.0005});
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_TRUE(t.strictly_decreasing());
    EXPECT_EQ(t.parameter_name, "ell");
}
