#pragma once

// Helpers shared by the runner and the reproduce targets.

#include <filesystem>
#include <future>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftls/io/spec.hpp"
#include "ftls/io/table.hpp"
#include "ftls/model.hpp"
#include "ftls/profile.hpp"
#include "ftls/sim.hpp"

namespace ftls::io::detail {

/// Writes artifacts under one directory and lists them in the manifest.
struct Sink {
    std::filesystem::path dir;
    Manifest& manifest;

    void csv(const std::string& name, const ResultTable& t) const;
    void json(const std::string& name, const nlohmann::json& j) const;
};

/// Long format: one row per (tag, x) with columns tag_name, "x", value_name.
void append_profile(ResultTable& t, double tag, const Profile& P, const OutputSpec& out);

nlohmann::json report_json(const SubcaseReport& r);

/// Period deviation, slope-bound count, smooth residual and tail gaps.
nlohmann::json profile_diagnostics(const Profile& P, const ModelParams& params, double fbar);

/// (0.25, 0.5, 0.75, 1) of the way from the anchor floor to min(sup, rho^+)
/// for a family (the last one dropped on a uniform road); rho^+ for unique
/// cases. `sup` is the admissible anchor bound of the solver in use.
std::vector<double> default_anchors(const SubcaseReport& r, double sup);

/// Rows (run, t, i, z, rho) for samples with t >= t_from and z inside the
/// output window; ordered by run, then t, then i.
void append_trajectory(ResultTable& t, double run, const Trajectory& traj, double t_from, const OutputSpec& out);

/// Rows (run, t, i, rho) for every crash event.
void append_crashes(ResultTable& t, double run, const Trajectory& traj);

nlohmann::json trajectory_summary(const Trajectory& traj);

/// Largest discrete density over all samples.
double max_density(const Trajectory& traj);

/// Evaluates f(0..n-1) concurrently and returns the results in index order.
template <class F>
auto parallel_map(std::size_t n, F&& f) {
    using R = decltype(f(std::size_t{0}));
    std::vector<std::future<R>> futs;
    futs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) futs.push_back(std::async(std::launch::async, f, k));
    std::vector<R> out;
    out.reserve(n);
    for (auto& fu : futs) out.push_back(fu.get());
    return out;
}

}  // namespace ftls::io::detail
