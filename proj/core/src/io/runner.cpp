#include "ftls/io/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "artifacts.hpp"
#include "ftls/analysis.hpp"
#include "ftls/errors.hpp"
#include "ftls/io/reproduce.hpp"
#include "ftls/limits.hpp"

namespace ftls::io {

namespace {

using nlohmann::json;
using detail::Sink;

int run_classify(const ExperimentSpec& spec, const Sink& out) {
    const auto [rm, rp] = resolve_asymptotes(spec);
    json j;
    int code = kExitOk;
    try {
        const SubcaseReport r = classify(spec.params, rm, rp);
        j = detail::report_json(r);
        if (r.verdict == Verdict::NoProfile) code = kExitNoProfile;
    } catch (const IncompatibleAsymptotesError& e) {
        j = {{"verdict", to_string(Verdict::NoProfile)},
             {"reason", "flux-incompatible"},
             {"detail", e.what()},
             {"rho_minus", rm},
             {"rho_plus", rp},
             {"flux_minus", spec.params.road.v_minus * flux(rm, spec.params.law)},
             {"flux_plus", spec.params.road.v_plus * flux(rp, spec.params.law)}};
        code = kExitNoProfile;
    }
    out.json("classification.json", j);
    out.manifest.summary["verdict"] = j["verdict"];
    return code;
}

SubcaseReport checked_report(const ExperimentSpec& spec, const Sink& out) {
    const auto [rm, rp] = resolve_asymptotes(spec);
    const SubcaseReport r = classify(spec.params, rm, rp);
    out.json("classification.json", detail::report_json(r));
    out.manifest.summary["verdict"] = to_string(r.verdict);
    if (r.verdict == Verdict::NoProfile) {
        throw NoProfileError("subcase " + std::string(to_string(r.subcase)) + " admits no stationary profile");
    }
    return r;
}

int run_profile(const ExperimentSpec& spec, const Sink& out) {
    const SubcaseReport r = checked_report(spec, out);
    const auto anchors = spec.anchors.empty() ? detail::default_anchors(r, family_anchor_sup(r, spec.grid)) : spec.anchors;
    auto results = detail::parallel_map(anchors.size(), [&](std::size_t k) {
        Profile P = build_profile(r, anchors[k], spec.grid);
        json d = detail::profile_diagnostics(P, r.params, r.fbar);
        return std::pair{std::move(P), std::move(d)};
    });
    ResultTable t({"anchor", "x", "P"});
    json diag = json::array();
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        detail::append_profile(t, anchors[k], results[k].first, spec.output);
        diag.push_back(results[k].second);
    }
    out.csv("profiles.csv", t);
    out.json("profile_summary.json", diag);
    out.manifest.summary["profiles"] = diag;
    return kExitOk;
}

int run_simulate(const ExperimentSpec& spec, const Sink& out) {
    const auto& sim = spec.simulation;
    std::optional<SubcaseReport> report;
    double rho_l = 0.0, rho_r = 0.0;
    if (spec.rho_minus || spec.subcase) {
        const auto [rm, rp] = resolve_asymptotes(spec);
        rho_l = rm;
        rho_r = rp;
        if (sim.init != InitKind::Riemann || sim.fit_profile) report = checked_report(spec, out);
    }
    rho_l = sim.rho_left.value_or(rho_l);
    rho_r = sim.rho_right.value_or(rho_r);
    if (!(rho_l > 0.0 && rho_r > 0.0)) throw std::invalid_argument("simulate: initial densities must be positive");

    const ModelParams& p = spec.params;
    const std::size_t nd = default_window_cars(p);
    const std::size_t nl = sim.n_left ? sim.n_left : nd;
    const std::size_t nr = sim.n_right ? sim.n_right : nd;

    std::optional<RegionD> D;
    std::optional<Profile> P0;
    if (sim.init == InitKind::Lifted) D = region_D(*report, spec.grid);
    if (sim.init == InitKind::Profile) {
        P0 = build_profile(*report, spec.anchors.empty() ? report->rho_plus : spec.anchors.front(), spec.grid);
    }

    IntegrateOptions o;
    o.model = sim.model;
    o.dt = sim.dt;
    o.T = sim.T;
    o.sample_stride = sim.sample_stride;

    const double W = 10.0 * p.h();
    auto runs = detail::parallel_map(sim.shifts.size(), [&](std::size_t k) {
        const double c0 = sim.shifts[k] * (sim.shift_in_headways ? p.ell / rho_l : 1.0);
        ParticleState s0;
        switch (sim.init) {
            case InitKind::Riemann: s0 = riemann_init(p, rho_l, rho_r, c0, nl, nr); break;
            case InitKind::Lifted: s0 = lifted_riemann_init(*D, p, c0, nl, nr); break;
            case InitKind::Profile: {
                // Followers must stay on the profile grid.
                const auto& v = P0->values();
                const double pmin = *std::min_element(v.begin(), v.end());
                const double room = (c0 - P0->x_min() - p.h()) * pmin / p.ell;
                const std::size_t cap = room > 1.0 ? static_cast<std::size_t>(room) - 1 : 0;
                s0 = generate_distribution(*P0, p, c0, std::min(nl, cap), nr);
                break;
            }
        }
        Trajectory tr = integrate(s0, p, o);
        json sj = detail::trajectory_summary(tr);
        sj["c0"] = c0;
        if (sim.fit_profile && report && sim.model == Model::Main) {
            Profile fit = report->verdict == Verdict::InfinitelyManyProfiles
                              ? best_fit_profile(*report, tr.samples.back(), spec.grid, W).profile
                              : build_profile(*report, report->rho_plus, spec.grid);
            const StabilityTrace st = stability_trace(tr, fit, W);
            sj["fit_anchor"] = fit.meta.anchor;
            sj["d_initial"] = st.d.front();
            sj["d_final"] = st.d.back();
            sj["osc_final"] = st.osc.back();
            sj["osc_max"] = *std::max_element(st.osc.begin(), st.osc.end());
        }
        return std::pair{std::move(tr), std::move(sj)};
    });

    ResultTable traj({"run", "t", "i", "z", "rho"});
    ResultTable crashes({"run", "t", "i", "rho"});
    json summary = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        detail::append_trajectory(traj, static_cast<double>(k), runs[k].first, 0.0, spec.output);
        detail::append_crashes(crashes, static_cast<double>(k), runs[k].first);
        summary.push_back(runs[k].second);
    }
    out.csv("trajectory.csv", traj);
    out.csv("crashes.csv", crashes);
    out.json("simulation_summary.json", summary);
    out.manifest.summary["runs"] = summary;
    return kExitOk;
}

int run_limits(const ExperimentSpec& spec, const Sink& out) {
    const SubcaseReport r = checked_report(spec, out);
    const double anchor = spec.anchors.empty() ? detail::default_anchors(r, family_anchor_sup(r, spec.grid)).front()
                                              : spec.anchors.front();
    const bool micro = spec.kind == Kind::LimitsMicroMacro;
    const StudyTable st = micro ? convergence_study_micro_macro(r, anchor, spec.sequence, spec.grid)
                                : convergence_study_nonlocal_local(r, anchor, spec.sequence, spec.grid);
    ResultTable t({st.parameter_name, "sup_error", "residual", "iterations", "tail_gap"});
    for (const auto& row : st.rows) {
        t.add_row({row.parameter, row.sup_error, row.residual, static_cast<double>(row.iterations), row.tail_gap});
    }
    out.csv("study.csv", t);
    const double first = st.rows.front().sup_error, last = st.rows.back().sup_error;
    json s = {{"parameter", st.parameter_name},
              {"anchor", anchor},
              {"strictly_decreasing", st.strictly_decreasing()},
              {"first_error", first},
              {"last_error", last},
              {"reduction", first / last}};
    out.json("study_summary.json", s);
    out.manifest.summary["study"] = s;
    return kExitOk;
}

}  // namespace

RunResult run(const ExperimentSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    Manifest& m = res.manifest;
    m.name = spec.name;
    m.kind = std::string(to_string(spec.kind));
    m.spec_digest = sha256_hex(spec.source.dump());
    const Sink out{spec.output.dir, m};

    try {
        std::filesystem::create_directories(spec.output.dir);
        switch (spec.kind) {
            case Kind::Classify: res.exit_code = run_classify(spec, out); break;
            case Kind::Profile: res.exit_code = run_profile(spec, out); break;
            case Kind::Simulate: res.exit_code = run_simulate(spec, out); break;
            case Kind::LimitsMicroMacro:
            case Kind::LimitsNonlocalLocal: res.exit_code = run_limits(spec, out); break;
            case Kind::ReproduceFigure:
                reproduce_figure(spec, spec.figure, spec.output.dir, m);
                res.exit_code = kExitOk;
                break;
        }
    } catch (const NoProfileError& e) {
        res.exit_code = kExitNoProfile;
        res.message = e.what();
    } catch (const IncompatibleAsymptotesError& e) {
        res.exit_code = kExitNoProfile;
        res.message = e.what();
    } catch (const NonConvergenceError& e) {
        res.exit_code = kExitNumerical;
        res.message = e.what();
        m.summary["residual_history"] = e.residual_history;
    } catch (const NumericalError& e) {
        res.exit_code = kExitNumerical;
        res.message = e.what();
    } catch (const std::invalid_argument& e) {
        res.exit_code = kExitSpec;
        res.message = e.what();
    } catch (const std::out_of_range& e) {
        res.exit_code = kExitSpec;
        res.message = e.what();
    } catch (const std::domain_error& e) {
        res.exit_code = kExitSpec;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.exit_code = kExitNumerical;
        res.message = e.what();
    }

    if (!res.message.empty()) m.summary["error"] = res.message;
    m.exit_code = res.exit_code;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        m.write(spec.output.dir / "manifest.json");
    } catch (const std::exception& e) {
        if (res.exit_code == kExitOk) res.exit_code = kExitNumerical;
        res.message += std::string(res.message.empty() ? "" : "; ") + e.what();
    }
    return res;
}

std::vector<RunResult> run_all(const std::vector<ExperimentSpec>& specs, std::size_t jobs) {
    std::vector<RunResult> out(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < specs.size(); k = next++) out[k] = run(specs[k]);
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(jobs, specs.size()));
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

int combined_exit(const std::vector<RunResult>& results) {
    int code = kExitOk;
    for (const auto& r : results) code = std::max(code, r.exit_code);
    return code;
}

}  // namespace ftls::io
