#include "ftls/io/spec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ftls/io/reproduce.hpp"

namespace ftls::io {

using nlohmann::json;

std::string_view to_string(Kind k) {
    switch (k) {
        case Kind::Simulate: return "simulate";
        case Kind::Profile: return "profile";
        case Kind::LimitsMicroMacro: return "limits-micro-macro";
        case Kind::LimitsNonlocalLocal: return "limits-nonlocal-local";
        case Kind::Classify: return "classify";
        case Kind::ReproduceFigure: return "reproduce-figure";
    }
    return "?";
}

std::optional<Kind> kind_from_string(std::string_view s) {
    for (Kind k : {Kind::Simulate, Kind::Profile, Kind::LimitsMicroMacro, Kind::LimitsNonlocalLocal, Kind::Classify,
                   Kind::ReproduceFigure}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

namespace {

std::string join_issues(const std::vector<SpecIssue>& issues) {
    std::string out = "invalid experiment spec:";
    for (const auto& i : issues) out += "\n  " + i.key + ": " + i.message;
    return out;
}

std::optional<double> decimal(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool near_road_root(double a, double b) { return std::abs(a - b) <= 1e-9; }

// Collects issues while walking the document.
class Checker {
public:
    std::vector<SpecIssue> issues;

    void add(std::string key, std::string msg) { issues.push_back({std::move(key), std::move(msg)}); }

    const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
        auto it = parent.find(key);
        if (it == parent.end()) {
            if (required) add(path, "missing required key");
            return nullptr;
        }
        if (!it->is_object()) {
            add(path, "must be an object");
            return nullptr;
        }
        return &*it;
    }

    void unknown_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!ok.contains(it.key())) add(prefix + it.key(), "unknown key");
        }
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& path, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) add(path, "missing required key");
            return std::nullopt;
        }
        auto v = parse_number(*it);
        if (!v) add(path, "expected a number, a decimal string or a rational \"a/b\"");
        return v;
    }

    std::optional<std::size_t> count(const json& obj, const std::string& key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end()) return std::nullopt;
        auto v = parse_number(*it);
        if (!v || *v < 0.0 || *v != std::floor(*v) || *v > 1e9) {
            add(path, "expected a nonnegative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    }

    std::optional<std::string> string(const json& obj, const std::string& key, const std::string& path,
                                      bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) add(path, "missing required key");
            return std::nullopt;
        }
        if (!it->is_string()) {
            add(path, "must be a string");
            return std::nullopt;
        }
        return it->get<std::string>();
    }

    std::vector<double> numbers(const json& obj, const std::string& key, const std::string& path) {
        std::vector<double> out;
        auto it = obj.find(key);
        if (it == obj.end()) return out;
        if (!it->is_array()) {
            add(path, "must be an array");
            return out;
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            auto v = parse_number((*it)[i]);
            if (!v) {
                add(path + "[" + std::to_string(i) + "]", "expected a number");
                continue;
            }
            out.push_back(*v);
        }
        return out;
    }
};

Kernel parse_kernel(Checker& c, const json& model, double h) {
    auto it = model.find("kernel");
    if (it == model.end() || (it->is_string() && *it == "linear")) return Kernel::linear(h);
    if (it->is_object() && it->contains("tabulated")) {
        std::vector<double> vals = c.numbers(*it, "tabulated", "model.kernel.tabulated");
        try {
            return Kernel::tabulated(h, vals);
        } catch (const std::invalid_argument& e) {
            c.add("model.kernel", e.what());
        }
    } else {
        c.add("model.kernel", "expected \"linear\" or {\"tabulated\": [...]}");
    }
    return Kernel::linear(h);
}

VelocityLaw parse_law(Checker& c, const json& model) {
    auto it = model.find("law");
    if (it == model.end() || (it->is_string() && *it == "linear")) return VelocityLaw::linear();
    if (it->is_object() && it->contains("tabulated")) {
        std::vector<double> vals = c.numbers(*it, "tabulated", "model.law.tabulated");
        try {
            return VelocityLaw::tabulated(vals);
        } catch (const std::invalid_argument& e) {
            c.add("model.law", e.what());
        }
    } else {
        c.add("model.law", "expected \"linear\" or {\"tabulated\": [...]}");
    }
    return VelocityLaw::linear();
}

bool in_unit(double r) { return r >= 0.0 && r <= 1.0; }

}  // namespace

SpecError::SpecError(std::vector<SpecIssue> issues) : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

SpecSyntaxError::SpecSyntaxError(std::string origin, std::size_t l, std::size_t col, const std::string& detail)
    : std::runtime_error(origin + ":" + std::to_string(l) + ":" + std::to_string(col) + ": " + detail),
      line(l),
      column(col) {}

std::optional<double> parse_number(const json& v) {
    if (v.is_number()) {
        const double d = v.get<double>();
        return std::isfinite(d) ? std::optional<double>(d) : std::nullopt;
    }
    if (!v.is_string()) return std::nullopt;
    const std::string& s = v.get_ref<const std::string&>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return decimal(s);
    auto num = decimal(std::string_view(s).substr(0, slash));
    auto den = decimal(std::string_view(s).substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
}

json parse_json_text(std::string_view text, const std::string& origin) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // e.byte is the 1-based offset of the offending character.
        const std::size_t off = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < off; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string detail = e.what();
        if (auto p = detail.find("syntax error"); p != std::string::npos) detail = detail.substr(p);
        throw SpecSyntaxError(origin, line, col, detail);
    }
}

ExperimentSpec spec_from_json(const json& doc) {
    Checker c;
    ExperimentSpec spec;
    spec.source = doc;
    if (!doc.is_object()) {
        c.add("(root)", "spec must be a JSON object");
        throw SpecError(c.issues);
    }
    c.unknown_keys(doc, "", {"name", "kind", "model", "asymptotes", "anchors", "grid", "simulation", "limits",
                             "figure", "output", "$schema", "description"});

    spec.name = c.string(doc, "name", "name", false).value_or("experiment");
    if (auto k = c.string(doc, "kind", "kind", true)) {
        if (auto kk = kind_from_string(*k)) {
            spec.kind = *kk;
        } else {
            c.add("kind", "unknown kind '" + *k +
                              "' (expected simulate, profile, limits-micro-macro, limits-nonlocal-local, classify "
                              "or reproduce-figure)");
        }
    }

    // model
    bool model_ok = false;
    if (const json* m = c.object(doc, "model", "model", true)) {
        c.unknown_keys(*m, "model.", {"ell", "h", "v_minus", "v_plus", "kernel", "law"});
        const auto n0 = c.issues.size();
        auto ell = c.number(*m, "ell", "model.ell", true);
        auto h = c.number(*m, "h", "model.h", true);
        auto vm = c.number(*m, "v_minus", "model.v_minus", true);
        auto vp = c.number(*m, "v_plus", "model.v_plus", true);
        if (ell && !(*ell > 0.0)) c.add("model.ell", "must be positive");
        if (h && !(*h > 0.0)) c.add("model.h", "must be positive");
        if (vm && !(*vm > 0.0)) c.add("model.v_minus", "must be positive");
        if (vp && !(*vp > 0.0)) c.add("model.v_plus", "must be positive");
        if (c.issues.size() == n0) {
            Kernel k = parse_kernel(c, *m, *h);
            VelocityLaw law = parse_law(c, *m);
            if (c.issues.size() == n0) {
                try {
                    spec.params = ModelParams(*ell, k, RoadCondition(*vm, *vp), law);
                    model_ok = true;
                } catch (const std::exception& e) {
                    c.add("model", e.what());
                }
            }
        }
    }

    // asymptotes
    if (const json* a = c.object(doc, "asymptotes", "asymptotes", false)) {
        c.unknown_keys(*a, "asymptotes.", {"fbar", "rho_minus", "rho_plus", "subcase"});
        spec.fbar = c.number(*a, "fbar", "asymptotes.fbar", false);
        spec.rho_minus = c.number(*a, "rho_minus", "asymptotes.rho_minus", false);
        spec.rho_plus = c.number(*a, "rho_plus", "asymptotes.rho_plus", false);
        spec.subcase = c.string(*a, "subcase", "asymptotes.subcase", false);
        if (spec.rho_minus && !in_unit(*spec.rho_minus)) c.add("asymptotes.rho_minus", "must lie in [0, 1]");
        if (spec.rho_plus && !in_unit(*spec.rho_plus)) c.add("asymptotes.rho_plus", "must lie in [0, 1]");
        if (spec.fbar && *spec.fbar < 0.0) c.add("asymptotes.fbar", "must be nonnegative");
        if (spec.subcase) {
            const std::string& s = *spec.subcase;
            if (s.size() != 2 || (s[0] != '1' && s[0] != '2') || s[1] < 'A' || s[1] > 'D') {
                c.add("asymptotes.subcase", "expected one of 1A..1D, 2A..2D");
                spec.subcase.reset();
            }
        }
        const bool both = spec.rho_minus && spec.rho_plus;
        const bool fbar_only = spec.kind == Kind::ReproduceFigure && spec.fbar && !spec.rho_minus && !spec.rho_plus;
        if (!both && !spec.subcase && !fbar_only) {
            c.add("asymptotes", "give rho_minus and rho_plus, or fbar and subcase, or rho_minus and subcase");
        }
        if (both && spec.subcase) c.add("asymptotes.subcase", "cannot be combined with rho_minus and rho_plus");
        if (spec.subcase && !spec.fbar && !spec.rho_minus) c.add("asymptotes.fbar", "required with subcase");
        if (spec.subcase && spec.rho_plus) c.add("asymptotes.rho_plus", "cannot be combined with subcase");
        if (spec.subcase && spec.fbar && spec.rho_minus) {
            c.add("asymptotes", "give either fbar or rho_minus together with subcase");
        }
        if (model_ok) {
            const double fmax = flux(critical_rho_hat(spec.params.law), spec.params.law);
            const double vlo = std::min(spec.params.road.v_minus, spec.params.road.v_plus);
            if (spec.fbar && *spec.fbar > vlo * fmax * (1.0 + 1e-14)) {
                c.add("asymptotes.fbar",
                      fmt::format("value {} exceeds the bound min(V^-, V^+) f(rho_hat) = {}", *spec.fbar, vlo * fmax));
            }
            if (spec.subcase && spec.params.road.uniform()) {
                c.add("asymptotes.subcase", "subcases need v_minus != v_plus");
            } else if (spec.subcase) {
                const bool case1 = spec.params.road.v_minus > spec.params.road.v_plus;
                if (((*spec.subcase)[0] == '1') != case1) {
                    c.add("asymptotes.subcase", "subcase " + *spec.subcase + " needs " +
                                                    (case1 ? "v_minus < v_plus" : "v_minus > v_plus"));
                }
            }
            if (spec.subcase && spec.rho_minus && !spec.fbar) {
                const double f = spec.params.road.v_minus * flux(*spec.rho_minus, spec.params.law);
                if (f > vlo * fmax * (1.0 + 1e-14)) {
                    c.add("asymptotes.rho_minus", "implied flux V^- f(rho_minus) exceeds min(V^-, V^+) f(rho_hat)");
                }
            }
        }
    } else if (spec.kind != Kind::ReproduceFigure && spec.kind != Kind::Simulate) {
        c.add("asymptotes", "missing required key");
    }

    for (double a : spec.anchors = c.numbers(doc, "anchors", "anchors")) {
        if (!(a > 0.0 && a <= 1.0)) c.add("anchors", "anchors must lie in (0, 1]");
    }

    // grid
    if (model_ok) spec.grid = Grid::standard(spec.params.h());
    if (const json* g = c.object(doc, "grid", "grid", false)) {
        c.unknown_keys(*g, "grid.", {"dz", "x_min", "x_max"});
        if (auto v = c.number(*g, "dz", "grid.dz", false)) spec.grid.dz = *v;
        if (auto v = c.number(*g, "x_min", "grid.x_min", false)) spec.grid.x_min = *v;
        if (auto v = c.number(*g, "x_max", "grid.x_max", false)) spec.grid.x_max = *v;
    }
    if (!(spec.grid.dz > 0.0)) {
        c.add("grid.dz", "must be positive");
    } else {
        if (!(spec.grid.x_min < 0.0 && spec.grid.x_max > 0.0)) c.add("grid", "need x_min < 0 < x_max");
        if ((spec.grid.x_max - spec.grid.x_min) / spec.grid.dz > 5e7) c.add("grid.dz", "grid has more than 5e7 nodes");
        if (model_ok && !(spec.grid.dz < spec.params.ell)) c.add("grid.dz", "must be smaller than model.ell");
        if (model_ok && spec.grid.x_max < 2.0 * spec.params.h()) c.add("grid.x_max", "must be at least 2h");
    }

    // simulation
    if (const json* s = c.object(doc, "simulation", "simulation", false)) {
        c.unknown_keys(*s, "simulation.", {"model", "init", "T", "dt", "sample_stride", "n_left", "n_right", "rho_left",
                                           "rho_right", "shifts", "shift_unit", "fit_profile"});
        auto& sim = spec.simulation;
        if (auto v = c.string(*s, "model", "simulation.model", false)) {
            if (*v == "main") sim.model = Model::Main;
            else if (*v == "alternative") sim.model = Model::Alternative;
            else c.add("simulation.model", "expected \"main\" or \"alternative\"");
        }
        if (auto v = c.string(*s, "init", "simulation.init", false)) {
            if (*v == "riemann") sim.init = InitKind::Riemann;
            else if (*v == "lifted") sim.init = InitKind::Lifted;
            else if (*v == "profile") sim.init = InitKind::Profile;
            else c.add("simulation.init", "expected \"riemann\", \"lifted\" or \"profile\"");
        }
        if (auto v = c.number(*s, "T", "simulation.T", false)) {
            if (!(*v > 0.0)) c.add("simulation.T", "must be positive");
            sim.T = *v;
        }
        if (auto v = c.number(*s, "dt", "simulation.dt", false)) {
            if (!(*v >= 0.0)) c.add("simulation.dt", "must be nonnegative");
            if (model_ok && *v > 0.2 * spec.params.ell / spec.params.road.max_speed()) {
                c.add("simulation.dt", "exceeds the stability bound 0.2 ell / max V");
            }
            sim.dt = *v;
        }
        if (auto v = c.count(*s, "sample_stride", "simulation.sample_stride")) {
            if (*v == 0) c.add("simulation.sample_stride", "must be at least 1");
            sim.sample_stride = *v;
        }
        if (auto v = c.count(*s, "n_left", "simulation.n_left")) sim.n_left = *v;
        if (auto v = c.count(*s, "n_right", "simulation.n_right")) sim.n_right = *v;
        sim.rho_left = c.number(*s, "rho_left", "simulation.rho_left", false);
        sim.rho_right = c.number(*s, "rho_right", "simulation.rho_right", false);
        if (sim.rho_left && !(*sim.rho_left > 0.0 && *sim.rho_left <= 1.0)) {
            c.add("simulation.rho_left", "must lie in (0, 1]");
        }
        if (sim.rho_right && !(*sim.rho_right > 0.0 && *sim.rho_right <= 1.0)) {
            c.add("simulation.rho_right", "must lie in (0, 1]");
        }
        if (s->contains("shifts")) {
            sim.shifts = c.numbers(*s, "shifts", "simulation.shifts");
            if (sim.shifts.empty()) c.add("simulation.shifts", "must not be empty");
        }
        if (auto v = c.string(*s, "shift_unit", "simulation.shift_unit", false)) {
            if (*v == "absolute") sim.shift_in_headways = false;
            else if (*v == "headway") sim.shift_in_headways = true;
            else c.add("simulation.shift_unit", "expected \"absolute\" or \"headway\"");
        }
        if (auto it = s->find("fit_profile"); it != s->end()) {
            if (it->is_boolean()) sim.fit_profile = it->get<bool>();
            else c.add("simulation.fit_profile", "must be true or false");
        }
    }
    if (spec.kind == Kind::Simulate && !doc.contains("asymptotes") &&
        !(spec.simulation.rho_left && spec.simulation.rho_right)) {
        c.add("asymptotes", "simulate needs asymptotes or both simulation.rho_left and simulation.rho_right");
    }
    if (spec.kind == Kind::Simulate && spec.simulation.init != InitKind::Riemann && !doc.contains("asymptotes")) {
        c.add("simulation.init", "lifted and profile initial data need asymptotes");
    }

    // limits
    if (const json* l = c.object(doc, "limits", "limits", false)) {
        c.unknown_keys(*l, "limits.", {"sequence"});
        spec.sequence = c.numbers(*l, "sequence", "limits.sequence");
        for (double v : spec.sequence) {
            if (!(v > 0.0)) c.add("limits.sequence", "values must be positive");
        }
    }
    if (spec.sequence.empty()) {
        if (spec.kind == Kind::LimitsMicroMacro) spec.sequence = {0.05, 0.025, 0.0125, 0.00625};
        if (spec.kind == Kind::LimitsNonlocalLocal) spec.sequence = {0.5, 0.25, 0.125};
    }
    if (model_ok && spec.kind == Kind::LimitsMicroMacro) {
        for (double e : spec.sequence) {
            if (!(e > spec.grid.dz)) c.add("limits.sequence", "every ell must exceed grid.dz");
        }
    }

    // figure
    if (auto f = c.string(doc, "figure", "figure", spec.kind == Kind::ReproduceFigure)) {
        if (!is_figure_target(*f)) c.add("figure", "unknown reproduce target '" + *f + "'");
        spec.figure = *f;
    }

    // output
    if (const json* o = c.object(doc, "output", "output", false)) {
        c.unknown_keys(*o, "output.", {"dir", "stride", "x_range"});
        if (auto d = c.string(*o, "dir", "output.dir", false)) spec.output.dir = *d;
        if (auto v = c.count(*o, "stride", "output.stride")) {
            if (*v == 0) c.add("output.stride", "must be at least 1");
            spec.output.stride = *v;
        }
        if (o->contains("x_range")) {
            auto r = c.numbers(*o, "x_range", "output.x_range");
            if (r.size() != 2 || !(r[0] < r[1])) {
                c.add("output.x_range", "expected [lo, hi] with lo < hi");
            } else {
                spec.output.x_lo = r[0];
                spec.output.x_hi = r[1];
            }
        }
    }

    if (!c.issues.empty()) throw SpecError(c.issues);

    // Flux compatibility and anchor ranges need the resolved asymptotes.
    if (spec.subcase || (spec.rho_minus && spec.rho_plus)) {
        try {
            auto [rm, rp] = resolve_asymptotes(spec);
            if (spec.rho_minus && spec.rho_plus && spec.fbar) {
                const double f = spec.params.road.v_minus * flux(rm, spec.params.law);
                if (std::abs(f - *spec.fbar) > kFluxCompatTol) {
                    c.add("asymptotes.fbar", fmt::format("does not match V^- f(rho_minus) = {}", f));
                }
            }
            (void)rp;
        } catch (const std::exception& e) {
            c.add("asymptotes", e.what());
        }
    }
    if (!c.issues.empty()) throw SpecError(c.issues);
    return spec;
}

ExperimentSpec parse_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError({{"(file)", "cannot open " + path.string()}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return spec_from_json(parse_json_text(ss.str(), path.string()));
}

std::pair<double, double> resolve_asymptotes(const ExperimentSpec& spec) {
    if (spec.rho_minus && spec.rho_plus) return {*spec.rho_minus, *spec.rho_plus};
    if (!spec.subcase) throw std::invalid_argument("no asymptotes in spec");
    const char letter = (*spec.subcase)[1];
    const double fbar = resolve_fbar(spec);
    auto [rm, rp] = subcase_asymptotes(spec.params, fbar, letter);
    if (spec.rho_minus) {
        if (!near_road_root(rm, *spec.rho_minus)) {
            throw std::invalid_argument(fmt::format("rho_minus = {} is not on the side of rho_hat required by subcase {}",
                                                    *spec.rho_minus, *spec.subcase));
        }
        rm = *spec.rho_minus;
    }
    return {rm, rp};
}

double resolve_fbar(const ExperimentSpec& spec) {
    if (spec.fbar) return *spec.fbar;
    if (spec.rho_minus) return spec.params.road.v_minus * flux(*spec.rho_minus, spec.params.law);
    return 3.0 / 16.0;
}

}  // namespace ftls::io
