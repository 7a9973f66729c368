#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftls/model.hpp"
#include "ftls/profile.hpp"
#include "ftls/sim.hpp"

namespace ftls::io {

enum class Kind { Simulate, Profile, LimitsMicroMacro, LimitsNonlocalLocal, Classify, ReproduceFigure };

std::string_view to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);

/// Where the initial car distribution comes from.
enum class InitKind { Riemann, Lifted, Profile };

struct SimulationSpec {
    Model model = Model::Main;
    InitKind init = InitKind::Riemann;
    double T = 4.0;
    double dt = 0.0;  ///< 0 selects the integrator default
    std::size_t sample_stride = 1;
    std::size_t n_left = 0;   ///< 0 selects default_window_cars
    std::size_t n_right = 0;
    /// Initial densities; default to the asymptotes. Need not be flux compatible.
    std::optional<double> rho_left;
    std::optional<double> rho_right;
    /// Shifts c0 of the jump in the initial data, one run per entry. With
    /// shift_in_headways they are multiples of ell / rho_left.
    std::vector<double> shifts{0.0};
    bool shift_in_headways = false;
    /// Fit the closest stationary profile to the final state (families only).
    bool fit_profile = false;
};

struct OutputSpec {
    std::filesystem::path dir = "out";
    std::size_t stride = 1;     ///< keep every n-th grid node / car in CSVs
    double x_lo = -1e300;       ///< spatial window written to CSVs
    double x_hi = 1e300;
};

/// Declarative experiment. Every numeric field has passed model-core
/// validation once parse_spec returns.
struct ExperimentSpec {
    std::string name;
    Kind kind = Kind::Classify;
    ModelParams params = ModelParams::standard();

    std::optional<double> fbar;
    std::optional<double> rho_minus;
    std::optional<double> rho_plus;
    std::optional<std::string> subcase;  ///< "1A".."2D"

    std::vector<double> anchors;  ///< empty selects rho^+ (or a spread over the family)
    Grid grid = Grid::standard(0.5);
    SimulationSpec simulation;
    std::vector<double> sequence;  ///< ell or h values for convergence studies
    std::string figure;
    OutputSpec output;

    /// Canonical JSON the spec was built from; its SHA-256 is the spec digest.
    nlohmann::json source;
};

struct SpecIssue {
    std::string key;  ///< dotted path, e.g. "model.ell"
    std::string message;
};

/// All problems found in a spec. what() lists them one per line.
class SpecError : public std::runtime_error {
public:
    explicit SpecError(std::vector<SpecIssue> issues);
    const std::vector<SpecIssue>& issues() const { return issues_; }

private:
    std::vector<SpecIssue> issues_;
};

/// Malformed JSON text.
class SpecSyntaxError : public std::runtime_error {
public:
    SpecSyntaxError(std::string origin, std::size_t line, std::size_t column, const std::string& detail);
    std::size_t line;
    std::size_t column;
};

/// Reads a decimal string ("0.0002", "-1e-3"), a rational "a/b" or a JSON
/// number. Returns nullopt on anything else.
std::optional<double> parse_number(const nlohmann::json& v);

/// Parses JSON text; syntax errors carry 1-based line and column.
nlohmann::json parse_json_text(std::string_view text, const std::string& origin);

/// Validates a JSON document and collects every issue before throwing.
ExperimentSpec spec_from_json(const nlohmann::json& doc);

ExperimentSpec parse_spec(const std::filesystem::path& path);

/// Resolved (rho^-, rho^+), from explicit densities, fbar + subcase or
/// rho^- + subcase.
std::pair<double, double> resolve_asymptotes(const ExperimentSpec& spec);

/// Flux level implied by the spec (fbar, or V^- f(rho^-)).
double resolve_fbar(const ExperimentSpec& spec);

}  // namespace ftls::io
