// Acceptance run: one PASS/FAIL line per criterion at the pinned tolerances
// and reference parameters, plus an optional JSON report. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ftls/analysis.hpp"
#include "ftls/errors.hpp"
#include "ftls/io/table.hpp"
#include "ftls/limits.hpp"
#include "ftls/profile.hpp"
#include "ftls/sim.hpp"

using namespace ftls;
using nlohmann::json;

namespace {

constexpr double kFbar = 3.0 / 16.0;

struct Outcome {
    double metric;
    double threshold;
    bool pass;
    std::string detail;
};

struct Criterion {
    std::string name;
    json inputs;
    double budget_seconds;  ///< runtime limit; part of the criterion
    std::function<Outcome()> body;
};

ModelParams case_params(int which) {
    const auto p = ModelParams::standard();
    return which == 1 ? p : p.with_road(RoadCondition(1.0, 2.0));
}

SubcaseReport report_for(int which, char letter) {
    const ModelParams p = case_params(which);
    const auto [rm, rp] = subcase_asymptotes(p, kFbar, letter);
    return classify(p, rm, rp);
}

Grid standard_grid() { return Grid::standard(0.5); }

json reference_inputs() {
    return {{"ell", 0.05}, {"h", 0.5}, {"fbar", kFbar}, {"phi", "1-rho"}, {"kernel", "linear"}, {"dz", 0.0002}};
}

// ------------------------------------------------------------------ criteria

Outcome critical_densities_check() {
    const double r1 = (1.0 - std::sqrt(5.0 / 8.0)) / 2.0;
    const double r4 = (1.0 + std::sqrt(5.0 / 8.0)) / 2.0;
    const auto c = critical_densities(case_params(1), kFbar);
    const double err = std::max({std::abs(c.rho_hat - 0.5), std::abs(c.rho1 - r1), std::abs(c.rho2 - 0.25),
                                 std::abs(c.rho3 - 0.75), std::abs(c.rho4 - r4)});
    return {err, 1e-10, err < 1e-10,
            fmt::format("rho1={} rho2={} rho3={} rho4={}", c.rho1, c.rho2, c.rho3, c.rho4)};
}

Outcome constant_profile_check() {
    const ModelParams p = ModelParams::standard().with_road(RoadCondition(1.0, 1.0));
    const auto roots = asymptotic_roots(kFbar, 1.0, p.law);
    const auto r = classify(p, roots.high, roots.high);
    const Profile P = build_profile(r, roots.high, standard_grid());
    double worst = 0.0;
    for (double x : equation_residual(P, p)) worst = std::max(worst, x);
    double spread = 0.0;
    for (double v : P.values()) spread = std::max(spread, std::abs(v - roots.high));
    return {worst, 1e-12, worst < 1e-12 && spread == 0.0, fmt::format("max |P - rho| = {}", spread)};
}

// Profiles shared by the periodicity, slope and ordering criteria.
struct ProfileSet {
    std::vector<std::pair<std::string, Profile>> items;
    std::vector<SubcaseReport> reports;
};

const ProfileSet& constructed() {
    static const ProfileSet set = [] {
        ProfileSet s;
        for (auto [which, letter] : std::vector<std::pair<int, char>>{{1, 'A'}, {1, 'B'}, {2, 'A'}, {2, 'B'}}) {
            const auto r = report_for(which, letter);
            std::vector<double> anchors{r.rho_plus};
            if (r.verdict == Verdict::InfinitelyManyProfiles) {
                // The 2B family ends below rho^+; its last member is included.
                const double lo = r.anchor_floor();
                const double hi = family_anchor_sup(r, standard_grid());
                anchors = {lo + 0.25 * (hi - lo), lo + 0.5 * (hi - lo), lo + 0.75 * (hi - lo), hi};
            }
            for (double a : anchors) {
                s.items.emplace_back(fmt::format("{}{}@{:.4f}", which, letter, a), build_profile(r, a, standard_grid()));
                s.reports.push_back(r);
            }
        }
        return s;
    }();
    return set;
}

Outcome periodicity_check() {
    const auto& set = constructed();
    double worst = 0.0;
    std::string detail;
    for (std::size_t k = 0; k < set.items.size(); ++k) {
        const auto& r = set.reports[k];
        const double dev = period_check(set.items[k].second, r.params, kFbar, period_samples(r.params, 50));
        worst = std::max(worst, dev);
    }
    // Negative control: the detector must see a bump of 0.01.
    const auto r1a = report_for(1, 'A');
    Profile bumped = set.items.front().second;
    for (std::size_t k = 0; k < bumped.size(); ++k) {
        if (bumped.x(k) > -1.0 && bumped.x(k) < -0.5) bumped.mutable_values()[k] += 0.01;
    }
    const double control = period_check(bumped, r1a.params, kFbar, period_samples(r1a.params, 50));
    detail = fmt::format("{} profiles; corrupted control deviation {}", set.items.size(), control);
    return {worst, 1e-4, worst < 1e-4 && control > 1e-3, detail};
}

Outcome slope_bound_check() {
    const auto& set = constructed();
    std::size_t bad = 0, nodes = 0;
    for (std::size_t k = 0; k < set.items.size(); ++k) {
        bad += slope_bound_violations(set.items[k].second, set.reports[k].params);
        nodes += set.items[k].second.size();
    }
    return {static_cast<double>(bad), 0.0, bad == 0, fmt::format("{} violations over {} nodes", bad, nodes)};
}

Outcome non_crossing_check() {
    const auto& set = constructed();
    std::size_t pairs = 0, crossing = 0, dead = 0;
    double min_sep = INFINITY;
    for (std::size_t a = 0; a < set.items.size(); ++a) {
        for (std::size_t b = a + 1; b < set.items.size(); ++b) {
            const auto& ra = set.reports[a];
            const auto& rb = set.reports[b];
            if (ra.subcase != rb.subcase || ra.verdict != Verdict::InfinitelyManyProfiles) continue;
            const auto o = ordering_check(set.items[a].second, set.items[b].second);
            ++pairs;
            if (!o.non_crossing || o.sign == 0) ++crossing;
            dead = std::max(dead, o.dead_band_nodes);
            min_sep = std::min(min_sep, o.min_separation);
        }
    }
    return {static_cast<double>(crossing), 0.0, crossing == 0 && pairs > 0,
            fmt::format("{} pairs, smallest separation {}, at most {} tail nodes within the 1e-12 dead band", pairs,
                        min_sep, dead)};
}

Outcome periodic_evolution_check() {
    const auto r = report_for(1, 'B');
    const ModelParams& p = r.params;
    const Profile P = build_profile(r, 0.5, standard_grid());
    const ParticleState s = generate_distribution(P, p, 0.0, 35, 250);
    const double tp = p.ell / kFbar;
    IntegrateOptions o;
    o.T = tp;
    o.dt = tp / std::ceil(tp / (0.1 * p.ell / p.road.max_speed()));
    const ParticleState end = integrate(s, p, o).samples.back();
    const double W = 10.0 * p.h();
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (std::abs(s.z[k]) > W) continue;
        worst = std::max(worst, std::abs(end.z[k] - s.z[k + 1]));
    }
    return {worst, 1e-4 * p.ell, worst < 1e-4 * p.ell, fmt::format("t_p = {}, dt = {}", tp, o.dt)};
}

Outcome stability_check() {
    const auto r = report_for(1, 'B');
    const ModelParams& p = r.params;
    const double W = 10.0 * p.h();
    const std::size_t n = default_window_cars(p);
    const RegionD D = region_D(r, standard_grid());
    double worst_ratio = 0.0;
    std::size_t outside = 0;
    std::string detail;
    for (double gamma : {-0.1, 0.1, 0.5, 1.0}) {
        const double c0 = gamma * p.ell / r.rho_minus;
        IntegrateOptions o;
        o.T = 4.0;
        o.sample_stride = 20;
        const Trajectory tr = integrate(riemann_init(p, r.rho_minus, r.rho_plus, c0, n, n), p, o);
        const BestFit fit = best_fit_profile(r, tr.samples.back(), standard_grid(), W);
        const StabilityTrace st = stability_trace(tr, fit.profile, W);
        const double ratio = st.d.back() / st.d.front();
        worst_ratio = std::max(worst_ratio, ratio);

        // Forward invariance of D, started from data inside D.
        IntegrateOptions oi = o;
        std::size_t bad = 0;
        oi.observer = [&](const ParticleState& s) {
            const auto in = region_D_membership(D, s);
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (std::abs(s.z[k]) <= W && !in[k]) ++bad;
            }
        };
        integrate(lifted_riemann_init(D, p, c0, n, n), p, oi);
        outside += bad;
        detail += fmt::format("gamma={}: d(0)={:.3e} d(T)={:.3e} anchor={:.4f} outside_D={}; ", gamma, st.d.front(),
                              st.d.back(), fit.anchor, bad);
    }
    return {worst_ratio, 0.1, worst_ratio < 0.1 && outside == 0, detail};
}

Outcome instability_check() {
    double worst = INFINITY;
    std::string detail;
    for (auto [which, label] : std::vector<std::pair<int, const char*>>{{1, "1A"}, {2, "2A"}}) {
        const auto r = report_for(which, 'A');
        const ModelParams& p = r.params;
        const std::size_t n = default_window_cars(p);
        IntegrateOptions o;
        o.T = 4.0;
        o.sample_stride = 5;
        const Trajectory tr = integrate(riemann_init(p, r.rho_minus, r.rho_plus, 0.0, n, n), p, o);
        const Profile P = build_profile(r, r.rho_plus, standard_grid());
        const StabilityTrace st = stability_trace(tr, P, 10.0 * p.h());
        const double mx = *std::max_element(st.osc.begin(), st.osc.end());
        const double ratio = st.osc.back() / mx;
        worst = std::min(worst, ratio);
        detail += fmt::format("{}: osc(T)={:.3e} max osc={:.3e} ratio={:.3f}; ", label, st.osc.back(), mx, ratio);
    }
    return {worst, 0.5, worst > 0.5, detail};
}

Outcome no_profile_check() {
    std::size_t refused = 0, total = 0;
    for (auto [which, letter] : std::vector<std::pair<int, char>>{{1, 'C'}, {1, 'D'}, {2, 'C'}, {2, 'D'}}) {
        ++total;
        const auto r = report_for(which, letter);
        bool threw = false;
        try {
            build_profile(r, r.rho_plus, standard_grid());
        } catch (const NoProfileError&) {
            threw = true;
        }
        if (r.verdict == Verdict::NoProfile && threw) ++refused;
    }
    ++total;
    try {
        classify(ModelParams::standard(), 0.3, 0.5);
    } catch (const IncompatibleAsymptotesError&) {
        ++refused;
    }
    return {static_cast<double>(total - refused), 0.0, refused == total, fmt::format("{}/{} refused", refused, total)};
}

Outcome micro_macro_check() {
    const auto t = convergence_study_micro_macro(report_for(1, 'B'), 0.5, {0.05, 0.025, 0.0125, 0.00625}, standard_grid());
    std::string detail = "e(ell):";
    for (const auto& row : t.rows) detail += fmt::format(" {}->{:.4e}", row.parameter, row.sup_error);
    detail += fmt::format("; Q residual {:.2e}", t.rows.front().residual);
    const double ratio = t.rows.back().sup_error / t.rows.front().sup_error;
    return {ratio, 1.0 / 3.0, t.strictly_decreasing() && ratio < 1.0 / 3.0, detail};
}

Outcome nonlocal_local_check() {
    const auto t = convergence_study_nonlocal_local(report_for(1, 'B'), 0.5, {0.5, 0.25, 0.125}, standard_grid());
    std::string detail = "e(h):";
    for (const auto& row : t.rows) detail += fmt::format(" {}->{:.4e}", row.parameter, row.sup_error);
    const double ratio = t.rows.back().sup_error / t.rows.front().sup_error;
    return {ratio, 1.0, t.strictly_decreasing(), detail};
}

double max_rho(const Trajectory& tr) {
    double m = 0.0;
    for (const auto& s : tr.samples) {
        const auto r = discrete_densities(s);
        m = std::max(m, *std::max_element(r.begin(), r.end()));
    }
    for (const auto& c : tr.crashes) m = std::max(m, c.rho);
    return m;
}

Outcome crash_check() {
    const ModelParams p = ModelParams::standard();
    const std::size_t n = default_window_cars(p);
    double alt_min = INFINITY, main_max = 0.0;
    std::string detail;
    for (double rr : {0.75, 0.25}) {
        const ParticleState s = riemann_init(p, 0.9, rr, 0.0, n, n);
        IntegrateOptions o;
        o.T = 1.0;
        o.model = Model::Alternative;
        const double alt = max_rho(integrate(s, p, o));
        o.model = Model::Main;
        const double main = max_rho(integrate(s, p, o));
        alt_min = std::min(alt_min, alt);
        main_max = std::max(main_max, main);
        detail += fmt::format("(0.9|{}): alternative {:.4f}, main {:.6f}; ", rr, alt, main);
    }
    return {alt_min, 1.0, alt_min > 1.0 && main_max <= 1.0 + 1e-9, detail};
}

Outcome rk4_order_check() {
    const ModelParams p = ModelParams::standard().with_road(RoadCondition(1.0, 1.0));
    ParticleState s;
    s.ell = p.ell;
    s.rho_right = 0.35;
    s.first_index = -100;
    const double d = p.ell / 0.35;
    for (int i = -100; i < 100; ++i) {
        s.z.push_back(i * d + 0.2 * d * std::sin(2.0 * std::numbers::pi * i / 7.0) * std::exp(-std::pow(i / 30.0, 2)));
    }
    s.ghost = 100 * d;
    auto run = [&](double dt) {
        IntegrateOptions o;
        o.dt = dt;
        o.T = 1.0;
        o.sample_stride = 1u << 30;
        return integrate(s, p, o).samples.back();
    };
    const auto ref = run(0.005 / 8), a = run(0.01), b = run(0.005);
    double ea = 0.0, eb = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        ea = std::max(ea, std::abs(a.z[k] - ref.z[k]));
        eb = std::max(eb, std::abs(b.z[k] - ref.z[k]));
    }
    const double factor = ea / eb;
    return {factor, 16.0, factor >= 10.0 && factor <= 22.0, fmt::format("e(0.01)={:.3e} e(0.005)={:.3e}", ea, eb)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria at the reference parameters"};
    std::string json_path;
    std::vector<std::string> only;
    app.add_option("--json", json_path, "write the check reports to this file");
    app.add_option("--only", only, "run only the named criteria");
    CLI11_PARSE(app, argc, argv);

    const json base = reference_inputs();
    auto with = [&](json extra) {
        json j = base;
        j.update(extra);
        return j;
    };
    const std::vector<Criterion> criteria = {
        {"critical-densities", with({{"V", {2, 1}}}), 1.0, critical_densities_check},
        {"constant-profile-exact", with({{"V", {1, 1}}, {"anchor", "rho3"}}), 1.0, constant_profile_check},
        {"periodicity-identity", with({{"subcases", {"1A", "1B", "2A", "2B"}}, {"samples", 50}}), 4 * 60.0,
         periodicity_check},
        {"slope-bound", with({{"subcases", {"1A", "1B", "2A", "2B"}}}), 1e9, slope_bound_check},
        {"non-crossing", with({{"subcases", {"1B", "2B"}}, {"anchors_per_family", 4}}), 1e9, non_crossing_check},
        {"periodic-evolution", with({{"subcase", "1B"}, {"anchor", 0.5}}), 120.0, periodic_evolution_check},
        {"stability-1B", with({{"gamma", {-0.1, 0.1, 0.5, 1.0}}, {"T", 4}}), 4 * 300.0, stability_check},
        {"instability-1A-2A", with({{"subcases", {"1A", "2A"}}, {"T", 4}}), 1e9, instability_check},
        {"no-profile-refusal", with({{"subcases", {"1C", "1D", "2C", "2D"}}, {"incompatible", {0.3, 0.5}}}), 1e9,
         no_profile_check},
        {"micro-macro-convergence", with({{"subcase", "1B"}, {"anchor", 0.5}, {"ell", {0.05, 0.025, 0.0125, 0.00625}}}),
         900.0, micro_macro_check},
        {"nonlocal-local-convergence", with({{"subcase", "1B"}, {"anchor", 0.5}, {"h", {0.5, 0.25, 0.125}}}), 900.0,
         nonlocal_local_check},
        {"crash-reproduction", with({{"V", {2, 1}}, {"rho", {{0.9, 0.75}, {0.9, 0.25}}}, {"T", 1}}), 300.0, crash_check},
        {"rk4-order", json{{"ell", 0.05}, {"V", 1}, {"rho", 0.35}, {"cars", 200}, {"T", 1}, {"dt", {0.01, 0.005}}}, 1e9,
         rk4_order_check},
    };

    json reports = json::array();
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.body();
        } catch (const std::exception& e) {
            out = {NAN, NAN, false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = out.pass && in_time;
        if (!pass) ++failures;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << c.name << "  metric=" << out.metric
                  << " threshold=" << out.threshold << "  " << fmt::format("{:.1f}s", secs)
                  << (in_time ? "" : " (over time budget)") << "  " << out.detail << std::endl;
        const CheckReport rep{c.name, io::sha256_hex(c.inputs.dump()), out.metric, out.threshold, pass};
        reports.push_back({{"name", rep.name},
                           {"inputs_digest", rep.inputs_digest},
                           {"inputs", c.inputs},
                           {"metric", std::isfinite(rep.metric) ? json(rep.metric) : json(nullptr)},
                           {"threshold", std::isfinite(rep.threshold) ? json(rep.threshold) : json(nullptr)},
                           {"pass", rep.pass},
                           {"seconds", secs},
                           {"detail", out.detail}});
    }
    if (!json_path.empty()) io::write_json(json_path, reports);
    std::cout << (failures == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failures)) << std::endl;
    return failures == 0 ? 0 : 1;
}
