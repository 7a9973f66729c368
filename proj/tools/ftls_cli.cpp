// ftls: command-line front end. Every subcommand builds a JSON experiment
// spec (from a file, flags, or both) and hands it to the runner, so flags and
// spec files go through the same validation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftls/io/reproduce.hpp"
#include "ftls/io/runner.hpp"
#include "ftls/io/spec.hpp"

namespace {

using nlohmann::json;
using namespace ftls::io;

json reference_defaults() {
    return {{"model", {{"ell", "0.05"}, {"h", "0.5"}, {"v_minus", "2"}, {"v_plus", "1"}}}};
}

json load_base(const std::string& path) {
    if (path.empty()) return reference_defaults();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError({{"(file)", "cannot open " + path}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

// Flag values are kept as strings so decimals reach the spec parser verbatim.
struct Overrides {
    std::string spec_path, out;
    std::string ell, h, v_minus, v_plus;
    std::string rho_minus, rho_plus, fbar, subcase;
    std::string dz, x_min, x_max;
    std::vector<std::string> anchors;
    std::size_t stride = 0;

    void model_flags(CLI::App* app) {
        app->add_option("--ell", ell, "car length");
        app->add_option("--horizon", h, "look-ahead horizon h");
        app->add_option("--v-minus", v_minus, "speed limit for x < 0");
        app->add_option("--v-plus", v_plus, "speed limit for x >= 0");
    }
    void asymptote_flags(CLI::App* app) {
        app->add_option("--rho-minus", rho_minus, "left asymptote");
        app->add_option("--rho-plus", rho_plus, "right asymptote");
        app->add_option("--fbar", fbar, "flux level (decimal or a/b)");
        app->add_option("--subcase", subcase, "subcase label, 1A..2D");
    }
    void grid_flags(CLI::App* app) {
        app->add_option("--dz", dz, "grid step");
        app->add_option("--x-min", x_min, "left end of the grid");
        app->add_option("--x-max", x_max, "right end of the grid");
        app->add_option("--anchor", anchors, "anchor value P(0); repeatable");
    }
    void common(CLI::App* app) {
        app->add_option("spec", spec_path, "JSON experiment spec used as the base")->check(CLI::ExistingFile);
        app->add_option("-o,--out", out, "output directory");
        app->add_option("--stride", stride, "write every n-th node or car");
    }

    json apply(json doc) const {
        auto set = [&](const char* sec, const char* key, const std::string& v) {
            if (!v.empty()) doc[sec][key] = v;
        };
        set("model", "ell", ell);
        set("model", "h", h);
        set("model", "v_minus", v_minus);
        set("model", "v_plus", v_plus);
        if (!rho_minus.empty() || !rho_plus.empty() || !fbar.empty() || !subcase.empty()) {
            // Asymptote flags replace the spec's asymptotes as a whole.
            doc.erase("asymptotes");
            set("asymptotes", "rho_minus", rho_minus);
            set("asymptotes", "rho_plus", rho_plus);
            set("asymptotes", "fbar", fbar);
            set("asymptotes", "subcase", subcase);
        }
        set("grid", "dz", dz);
        set("grid", "x_min", x_min);
        set("grid", "x_max", x_max);
        if (!anchors.empty()) doc["anchors"] = anchors;
        set("output", "dir", out);
        if (stride) doc["output"]["stride"] = stride;
        return doc;
    }
};

int report(const std::vector<RunResult>& results, const std::vector<ExperimentSpec>& specs) {
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& r = results[k];
        std::cout << specs[k].name << ": exit " << r.exit_code << ", artifacts in " << specs[k].output.dir.string()
                  << '\n';
        if (!r.message.empty()) std::cerr << specs[k].name << ": " << r.message << '\n';
    }
    return combined_exit(results);
}

int run_one(json doc, std::string_view kind) {
    doc["kind"] = std::string(kind);
    const ExperimentSpec spec = spec_from_json(doc);
    const RunResult r = run(spec);
    if (spec.kind == Kind::Classify) {
        std::ifstream in(spec.output.dir / "classification.json");
        std::cout << in.rdbuf();
    }
    return report({r}, {spec});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Follow-the-leaders traffic model: profiles, simulations and limit studies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    std::vector<std::string> run_specs;
    std::size_t jobs = 1;
    auto* run_cmd = app.add_subcommand("run", "run one or more spec files");
    run_cmd->add_option("specs", run_specs, "spec files")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-j,--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a spec file and print the issues");
    validate_cmd->add_option("spec", validate_path)->required()->check(CLI::ExistingFile);

    Overrides cls, prof, simo, lim, rep;
    auto* classify_cmd = app.add_subcommand("classify", "subcase, verdict and critical densities");
    cls.common(classify_cmd);
    cls.model_flags(classify_cmd);
    cls.asymptote_flags(classify_cmd);

    auto* profile_cmd = app.add_subcommand("profile", "build stationary profiles");
    prof.common(profile_cmd);
    prof.model_flags(profile_cmd);
    prof.asymptote_flags(profile_cmd);
    prof.grid_flags(profile_cmd);

    std::string T, dt, model, init, rho_left, rho_right, shift_unit;
    std::vector<std::string> shifts;
    bool fit = false;
    auto* sim_cmd = app.add_subcommand("simulate", "integrate the particle model");
    simo.common(sim_cmd);
    simo.model_flags(sim_cmd);
    simo.asymptote_flags(sim_cmd);
    simo.grid_flags(sim_cmd);
    sim_cmd->add_option("--T", T, "final time");
    sim_cmd->add_option("--dt", dt, "time step (default 0.1 ell / max V)");
    sim_cmd->add_option("--model", model, "main or alternative");
    sim_cmd->add_option("--init", init, "riemann, lifted or profile");
    sim_cmd->add_option("--rho-left", rho_left, "initial density behind the jump");
    sim_cmd->add_option("--rho-right", rho_right, "initial density ahead of the jump");
    sim_cmd->add_option("--shift", shifts, "jump location c0; repeatable");
    sim_cmd->add_option("--shift-unit", shift_unit, "absolute or headway");
    sim_cmd->add_flag("--fit", fit, "fit the closest stationary profile to the final state");

    std::string study = "micro-macro";
    std::vector<std::string> sequence;
    auto* lim_cmd = app.add_subcommand("limits", "convergence study against a limit profile");
    lim.common(lim_cmd);
    lim.model_flags(lim_cmd);
    lim.asymptote_flags(lim_cmd);
    lim.grid_flags(lim_cmd);
    lim_cmd->add_option("--study", study, "micro-macro or nonlocal-local")
        ->check(CLI::IsMember({"micro-macro", "nonlocal-local"}));
    lim_cmd->add_option("--sequence", sequence, "ell (micro-macro) or h (nonlocal-local) values; repeatable");

    std::string target;
    bool list = false;
    auto* rep_cmd = app.add_subcommand("reproduce", "write the data behind a figure");
    rep_cmd->add_option("target", target, "target name, e.g. fig-1b or fig-1b-left");
    rep_cmd->add_flag("--list", list, "list the targets");
    rep_cmd->add_option("--spec", rep.spec_path, "base spec (model, fbar, grid)")->check(CLI::ExistingFile);
    rep_cmd->add_option("-o,--out", rep.out, "output directory");
    rep.model_flags(rep_cmd);
    rep_cmd->add_option("--fbar", rep.fbar, "flux level");
    rep_cmd->add_option("--dz", rep.dz, "grid step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSpec;
    }

    try {
        if (*run_cmd) {
            std::vector<ExperimentSpec> specs;
            for (const auto& p : run_specs) specs.push_back(parse_spec(p));
            return report(run_all(specs, jobs), specs);
        }
        if (*validate_cmd) {
            const ExperimentSpec s = parse_spec(validate_path);
            std::cout << s.name << ": ok (" << to_string(s.kind) << ")\n";
            return kExitOk;
        }
        if (*classify_cmd) return run_one(cls.apply(load_base(cls.spec_path)), "classify");
        if (*profile_cmd) return run_one(prof.apply(load_base(prof.spec_path)), "profile");
        if (*sim_cmd) {
            json doc = simo.apply(load_base(simo.spec_path));
            auto set = [&](const char* key, const std::string& v) {
                if (!v.empty()) doc["simulation"][key] = v;
            };
            set("T", T);
            set("dt", dt);
            set("model", model);
            set("init", init);
            set("rho_left", rho_left);
            set("rho_right", rho_right);
            set("shift_unit", shift_unit);
            if (!shifts.empty()) doc["simulation"]["shifts"] = shifts;
            if (fit) doc["simulation"]["fit_profile"] = true;
            return run_one(doc, "simulate");
        }
        if (*lim_cmd) {
            json doc = lim.apply(load_base(lim.spec_path));
            if (!sequence.empty()) doc["limits"]["sequence"] = sequence;
            return run_one(doc, study == "micro-macro" ? "limits-micro-macro" : "limits-nonlocal-local");
        }
        if (*rep_cmd) {
            if (list || target.empty()) {
                for (const auto& t : figure_targets()) {
                    std::cout << t.name << "  " << t.description << '\n';
                    for (const auto& p : t.panels) std::cout << "  " << t.name << '-' << p << '\n';
                }
                return list ? kExitOk : kExitSpec;
            }
            json doc = rep.apply(load_base(rep.spec_path));
            if (!rep.fbar.empty()) doc["asymptotes"] = {{"fbar", rep.fbar}};
            doc["figure"] = target;
            if (rep.out.empty() && !doc.contains("output")) doc["output"]["dir"] = "out/" + target;
            return run_one(doc, "reproduce-figure");
        }
    } catch (const SpecSyntaxError& e) {
        std::cerr << e.what() << '\n';
        return kExitSpec;
    } catch (const SpecError& e) {
        std::cerr << e.what() << '\n';
        return kExitSpec;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSpec;
    }
    return kExitSpec;
}
