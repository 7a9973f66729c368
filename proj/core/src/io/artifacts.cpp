#include "artifacts.hpp"

#include <algorithm>
#include <cmath>

#include "ftls/analysis.hpp"

namespace ftls::io::detail {

void Sink::csv(const std::string& name, const ResultTable& t) const {
    t.write_csv(dir / name);
    manifest.artifacts.push_back(name);
}

void Sink::json(const std::string& name, const nlohmann::json& j) const {
    write_json(dir / name, j);
    manifest.artifacts.push_back(name);
}

void append_profile(ResultTable& t, double tag, const Profile& P, const OutputSpec& out) {
    for (std::size_t k = 0; k < P.size(); k += out.stride) {
        const double x = P.x(k);
        if (x < out.x_lo || x > out.x_hi) continue;
        t.add_row({tag, x, P.values()[k]});
    }
}

nlohmann::json report_json(const SubcaseReport& r) {
    const auto& c = r.crit;
    return {{"subcase", to_string(r.subcase)},
            {"verdict", to_string(r.verdict)},
            {"stability", to_string(r.stability)},
            {"jump", to_string(c.jump)},
            {"rho_minus", r.rho_minus},
            {"rho_plus", r.rho_plus},
            {"fbar", r.fbar},
            {"v_minus", r.params.road.v_minus},
            {"v_plus", r.params.road.v_plus},
            {"critical", {{"rho_hat", c.rho_hat}, {"rho1", c.rho1}, {"rho2", c.rho2}, {"rho3", c.rho3}, {"rho4", c.rho4}}}};
}

nlohmann::json profile_diagnostics(const Profile& P, const ModelParams& params, double fbar) {
    nlohmann::json j = {{"anchor", P.meta.anchor},
                        {"P0", P(0.0)},
                        {"tail_gap_left", P.meta.tail_gap_left},
                        {"tail_gap_right", P.meta.tail_gap_right},
                        {"warnings", P.meta.warnings}};
    if (fbar <= 0.0) return j;
    j["slope_bound_violations"] = slope_bound_violations(P, params);
    j["smooth_residual"] = smooth_residual(P, params, kink_points(P, params), 2.5 * P.dz());
    j["period_deviation"] = period_check(P, params, fbar, period_samples(params));
    j["z_flat"] = z_flat(P, params);
    return j;
}

std::vector<double> default_anchors(const SubcaseReport& r, double sup) {
    if (r.verdict != Verdict::InfinitelyManyProfiles) return {r.rho_plus};
    const double lo = r.anchor_floor();
    const double hi = std::min(sup, r.rho_plus);
    std::vector<double> a;
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
        if (f == 1.0 && r.subcase == Subcase::Uniform) continue;
        a.push_back(f == 1.0 ? hi : lo + f * (hi - lo));
    }
    return a;
}

void append_trajectory(ResultTable& t, double run, const Trajectory& traj, double t_from, const OutputSpec& out) {
    for (const auto& s : traj.samples) {
        if (s.t < t_from - 1e-12) continue;
        const auto rho = discrete_densities(s);
        for (std::size_t k = 0; k < s.size(); k += out.stride) {
            if (s.z[k] < out.x_lo || s.z[k] > out.x_hi) continue;
            t.add_row({run, s.t, static_cast<double>(s.index(k)), s.z[k], rho[k]});
        }
    }
}

void append_crashes(ResultTable& t, double run, const Trajectory& traj) {
    for (const auto& c : traj.crashes) t.add_row({run, c.t, static_cast<double>(c.i), c.rho});
}

double max_density(const Trajectory& traj) {
    double m = 0.0;
    for (const auto& s : traj.samples) {
        const auto rho = discrete_densities(s);
        if (!rho.empty()) m = std::max(m, *std::max_element(rho.begin(), rho.end()));
    }
    for (const auto& c : traj.crashes) m = std::max(m, c.rho);
    return m;
}

nlohmann::json trajectory_summary(const Trajectory& traj) {
    nlohmann::json j = {{"dt", traj.dt},
                        {"steps", traj.steps},
                        {"samples", traj.samples.size()},
                        {"t_final", traj.samples.empty() ? 0.0 : traj.samples.back().t},
                        {"max_rho", max_density(traj)},
                        {"crash_events", traj.crashes.size()}};
    if (!traj.crashes.empty()) j["first_crash_t"] = traj.crashes.front().t;
    return j;
}

}  // namespace ftls::io::detail
