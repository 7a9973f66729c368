#include "ftls/io/reproduce.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "artifacts.hpp"
#include "ftls/analysis.hpp"
#include "ftls/limits.hpp"

namespace ftls::io {

namespace {

using nlohmann::json;
using detail::Sink;

constexpr std::size_t kProfileStride = 5;

const std::vector<FigureTarget> kTargets = {
    {"fig-flux", "flux curves V f(rho) for both speed limits and the critical densities", {}},
    {"fig-1a", "subcase 1A: the unique profile (left) and a Riemann run (right)", {"left", "right"}},
    {"fig-1b", "subcase 1B: sample profiles (left) and Riemann runs for four shifts (right)", {"left", "right"}},
    {"fig-1c1d", "subcases 1C (left) and 1D (right): Riemann runs, no profile exists", {"left", "right"}},
    {"fig-2a", "subcase 2A: the unique profile (left) and a Riemann run (right)", {"left", "right"}},
    {"fig-2b", "subcase 2B: sample profiles (left) and Riemann runs for four shifts (right)", {"left", "right"}},
    {"fig-2c2d", "subcases 2C (left) and 2D (right): Riemann runs, no profile exists", {"left", "right"}},
    {"fig-q", "conservation-law profiles Q for 1B (left) and 2B (right)", {"left", "right"}},
    {"fig-u", "local-model profiles U for 1B (left) and 2B (right)", {"left", "right"}},
    {"fig-crashes", "alternative model at t = 1 from (0.9 | 0.75) (left) and (0.9 | 0.25) (right)", {"left", "right"}},
};

struct Resolved {
    const FigureTarget* target = nullptr;
    std::string panel;  // empty: all panels
};

Resolved resolve(std::string_view name) {
    for (const auto& t : kTargets) {
        if (t.name == name) return {&t, ""};
        for (const auto& p : t.panels) {
            if (t.name + "-" + p == name) return {&t, p};
        }
    }
    return {};
}

ModelParams case_params(const ModelParams& base, int which) {
    const double hi = std::max(base.road.v_minus, base.road.v_plus);
    const double lo = std::min(base.road.v_minus, base.road.v_plus);
    if (hi == lo) throw std::invalid_argument("reproduce: the figure targets need two distinct speed limits");
    return base.with_road(which == 1 ? RoadCondition(hi, lo) : RoadCondition(lo, hi));
}

struct Context {
    const ExperimentSpec& spec;
    const Sink& out;
    double fbar;

    OutputSpec profile_out() const {
        OutputSpec o = spec.output;
        o.stride = std::max(o.stride, kProfileStride);
        return o;
    }
    OutputSpec band_out(const ModelParams& p) const {
        OutputSpec o = spec.output;
        if (o.x_lo < -1e299) o.x_lo = -10.0 * p.h();
        if (o.x_hi > 1e299) o.x_hi = 10.0 * p.h();
        return o;
    }
    bool wants(const Resolved& r, const std::string& panel) const { return r.panel.empty() || r.panel == panel; }
};

SubcaseReport report_for(const ModelParams& p, double fbar, char letter) {
    const auto [rm, rp] = subcase_asymptotes(p, fbar, letter);
    return classify(p, rm, rp);
}

std::string tag(const SubcaseReport& r) {
    std::string s(to_string(r.subcase));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void profiles_panel(const Context& cx, const SubcaseReport& r) {
    const auto anchors = detail::default_anchors(r, family_anchor_sup(r, cx.spec.grid));
    auto res = detail::parallel_map(anchors.size(), [&](std::size_t k) {
        Profile P = build_profile(r, anchors[k], cx.spec.grid);
        json d = detail::profile_diagnostics(P, r.params, r.fbar);
        return std::pair{std::move(P), std::move(d)};
    });
    ResultTable t({"anchor", "x", "P"});
    json diag = json::array();
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        detail::append_profile(t, anchors[k], res[k].first, cx.profile_out());
        diag.push_back(res[k].second);
    }
    const std::string base = "profiles_" + tag(r);
    cx.out.csv(base + ".csv", t);
    cx.out.manifest.summary[base] = {{"classification", detail::report_json(r)}, {"profiles", diag}};
}

// Riemann runs with the band t in [T_f - tau_p, T_f] written out.
void riemann_panel(const Context& cx, const SubcaseReport& r, const std::vector<double>& gammas) {
    const ModelParams& p = r.params;
    const double T = cx.spec.simulation.T;
    const double tau_p = p.ell / r.fbar;
    const std::size_t n = default_window_cars(p);
    const double W = 10.0 * p.h();

    auto runs = detail::parallel_map(gammas.size(), [&](std::size_t k) {
        const double c0 = gammas[k] * p.ell / r.rho_minus;
        IntegrateOptions o;
        o.T = T;
        o.dt = cx.spec.simulation.dt;
        Trajectory tr = integrate(riemann_init(p, r.rho_minus, r.rho_plus, c0, n, n), p, o);
        json sj = detail::trajectory_summary(tr);
        sj["gamma"] = gammas[k];
        sj["c0"] = c0;
        if (r.verdict != Verdict::NoProfile) {
            Profile fit = r.verdict == Verdict::InfinitelyManyProfiles
                              ? best_fit_profile(r, tr.samples.back(), cx.spec.grid, W).profile
                              : build_profile(r, r.rho_plus, cx.spec.grid);
            const StabilityTrace st = stability_trace(tr, fit, W);
            sj["fit_anchor"] = fit.meta.anchor;
            sj["d_initial"] = st.d.front();
            sj["d_final"] = st.d.back();
            sj["osc_final"] = st.osc.back();
            sj["osc_max"] = *std::max_element(st.osc.begin(), st.osc.end());
        }
        return std::pair{std::move(tr), std::move(sj)};
    });

    ResultTable band({"run", "t", "i", "z", "rho"});
    json summary = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        detail::append_trajectory(band, static_cast<double>(k), runs[k].first, T - tau_p, cx.band_out(p));
        summary.push_back(runs[k].second);
    }
    const std::string base = "band_" + tag(r);
    cx.out.csv(base + ".csv", band);
    cx.out.manifest.summary[base] = {{"classification", detail::report_json(r)}, {"tau_p", tau_p}, {"runs", summary}};
}

void flux_target(const Context& cx) {
    const ModelParams p1 = case_params(cx.spec.params, 1);
    const auto& law = p1.law;
    ResultTable t({"rho", "f_minus", "f_plus"});
    for (int k = 0; k <= 1000; ++k) {
        const double rho = k / 1000.0;
        t.add_row({rho, p1.road.v_minus * flux(rho, law), p1.road.v_plus * flux(rho, law)});
    }
    cx.out.csv("flux.csv", t);
    const auto c1 = critical_densities(p1, cx.fbar);
    const auto c2 = critical_densities(case_params(cx.spec.params, 2), cx.fbar);
    auto js = [](const CriticalDensities& c) {
        return json{{"rho_hat", c.rho_hat}, {"rho1", c.rho1}, {"rho2", c.rho2}, {"rho3", c.rho3}, {"rho4", c.rho4}};
    };
    const json j = {{"fbar", cx.fbar}, {"case1", js(c1)}, {"case2", js(c2)}};
    cx.out.json("critical_densities.json", j);
    cx.out.manifest.summary["critical_densities"] = j;
}

void limit_profiles(const Context& cx, const Resolved& rs, bool q) {
    for (int which : {1, 2}) {
        if (!cx.wants(rs, which == 1 ? "left" : "right")) continue;
        const SubcaseReport r = report_for(case_params(cx.spec.params, which), cx.fbar, 'B');
        const double sup = admissible_anchor_sup(
            r, cx.spec.grid,
            [&](double a, const Grid& g) {
                if (q) {
                    (void)solve_Q(r, a, g);
                } else {
                    (void)solve_U(r, a, g);
                }
            },
            1e-4);
        const auto anchors = detail::default_anchors(r, sup);
        auto res = detail::parallel_map(anchors.size(), [&](std::size_t k) {
            if (q) {
                LimitProfileQ Q = solve_Q(r, anchors[k], cx.spec.grid);
                json d = {{"anchor", anchors[k]}, {"residual", Q.residual}, {"sweeps", Q.sweeps}};
                return std::pair{std::move(Q.profile), std::move(d)};
            }
            LimitProfileU U = solve_U(r, anchors[k], cx.spec.grid);
            json d = {{"anchor", anchors[k]}, {"event_x", U.event_x}};
            return std::pair{std::move(U.profile), std::move(d)};
        });
        ResultTable t({"anchor", "x", q ? "Q" : "U"});
        json diag = json::array();
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            detail::append_profile(t, anchors[k], res[k].first, cx.profile_out());
            diag.push_back(res[k].second);
        }
        const std::string base = std::string(q ? "q_" : "u_") + tag(r);
        cx.out.csv(base + ".csv", t);
        cx.out.manifest.summary[base] = diag;
    }
}

void crash_target(const Context& cx, const Resolved& rs) {
    const ModelParams p = case_params(cx.spec.params, 1);
    const std::size_t n = default_window_cars(p);
    const std::vector<std::pair<std::string, double>> panels = {{"left", 0.75}, {"right", 0.25}};
    for (const auto& [panel, rho_r] : panels) {
        if (!cx.wants(rs, panel)) continue;
        const ParticleState s0 = riemann_init(p, 0.9, rho_r, 0.0, n, n);
        auto runs = detail::parallel_map(2, [&](std::size_t k) {
            IntegrateOptions o;
            o.T = 1.0;
            o.dt = cx.spec.simulation.dt;
            o.model = k == 0 ? Model::Alternative : Model::Main;
            return integrate(s0, p, o);
        });
        ResultTable snap({"run", "t", "i", "z", "rho"});
        ResultTable crashes({"run", "t", "i", "rho"});
        for (std::size_t k = 0; k < 2; ++k) {
            detail::append_trajectory(snap, static_cast<double>(k), runs[k], 1.0, cx.band_out(p));
            detail::append_crashes(crashes, static_cast<double>(k), runs[k]);
        }
        const std::string base = "crash_" + panel;
        cx.out.csv(base + "_snapshot.csv", snap);
        cx.out.csv(base + "_events.csv", crashes);
        cx.out.manifest.summary[base] = {{"rho_left", 0.9},
                                         {"rho_right", rho_r},
                                         {"alternative", detail::trajectory_summary(runs[0])},
                                         {"main", detail::trajectory_summary(runs[1])}};
    }
}

}  // namespace

const std::vector<FigureTarget>& figure_targets() { return kTargets; }

bool is_figure_target(std::string_view name) { return resolve(name).target != nullptr; }

void reproduce_figure(const ExperimentSpec& spec, std::string_view target, const std::filesystem::path& dir,
                      Manifest& manifest) {
    const Resolved rs = resolve(target);
    if (!rs.target) throw std::invalid_argument("unknown reproduce target '" + std::string(target) + "'");
    const Sink out{dir, manifest};
    const Context cx{spec, out, resolve_fbar(spec)};
    manifest.summary["target"] = std::string(target);
    const std::string& name = rs.target->name;
    const std::vector<double> gammas = {-0.1, 0.1, 0.5, 1.0};

    if (name == "fig-flux") return flux_target(cx);
    if (name == "fig-q") return limit_profiles(cx, rs, true);
    if (name == "fig-u") return limit_profiles(cx, rs, false);
    if (name == "fig-crashes") return crash_target(cx, rs);

    const int which = name[4] == '1' ? 1 : 2;
    const ModelParams p = case_params(spec.params, which);
    if (name == "fig-1c1d" || name == "fig-2c2d") {
        if (cx.wants(rs, "left")) riemann_panel(cx, report_for(p, cx.fbar, 'C'), {0.0});
        if (cx.wants(rs, "right")) riemann_panel(cx, report_for(p, cx.fbar, 'D'), {0.0});
        return;
    }
    const char letter = name[5] == 'a' ? 'A' : 'B';
    const SubcaseReport r = report_for(p, cx.fbar, letter);
    if (cx.wants(rs, "left")) profiles_panel(cx, r);
    if (cx.wants(rs, "right")) riemann_panel(cx, r, letter == 'A' ? std::vector<double>{0.0} : gammas);
}

}  // namespace ftls::io
