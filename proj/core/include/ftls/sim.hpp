#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ftls/model.hpp"

namespace ftls {

/// Tracked cars z[0] < z[1] < ... with global indices first_index + k, led by
/// a rigid ghost chain that starts at `ghost` and has uniform density
/// rho_right (so the road beyond `ghost` is seen at density rho_right).
struct ParticleState {
    double t = 0.0;
    long first_index = 0;
    std::vector<double> z;
    double ghost = 0.0;
    double rho_right = 0.0;
    double ell = 0.0;

    std::size_t size() const { return z.size(); }
    long index(std::size_t k) const { return first_index + static_cast<long>(k); }
    /// Position of the leader of tracked car k.
    double leader(std::size_t k) const { return k + 1 < z.size() ? z[k + 1] : ghost; }
};

/// rho_k = ell / (leader(k) - z[k]) for a tracked car k. Throws
/// std::out_of_range beyond the window.
double discrete_density(const ParticleState& s, std::size_t k);
std::vector<double> discrete_densities(const ParticleState& s);

/// Right-open step function rho^ell(x). Nodes are car positions followed by
/// the first ghost; the last value extends to +infinity.
class StepDensity {
public:
    StepDensity(std::vector<double> nodes, std::vector<double> values);

    /// O(log N) lookup; left of the first car the first density is returned.
    double operator()(double x) const;
    /// Index of the piece containing x.
    std::size_t piece(double x) const;

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> nodes_;
    std::vector<double> values_;
};

StepDensity piecewise_density(const ParticleState& s);

/// v*(x) = integral over [x, x+h] of V(y) phi(rho(y)) w(y-x) dy.
double average_velocity(double x, const StepDensity& rho, const ModelParams& params);

/// rho*(x) = integral over [x, x+h] of rho(y) w(y-x) dy.
double averaged_density(double x, const StepDensity& rho, const ModelParams& params);

/// Speeds of the tracked cars; the ghost chain is not included.
std::vector<double> rhs_main(const ParticleState& s, const ModelParams& params);
std::vector<double> rhs_alternative(const ParticleState& s, const ModelParams& params);

enum class Model { Main, Alternative };
enum class LeftPolicy { None, Spawn };

struct CrashEvent {
    double t;
    long i;
    double rho;
};

struct IntegrateOptions {
    Model model = Model::Main;
    double dt = 0.0;  ///< 0 selects 0.1 ell / max V
    double T = 1.0;
    std::size_t sample_stride = 1;  ///< keep every n-th step (the final state is always kept)
    LeftPolicy left = LeftPolicy::None;
    double rho_left = 0.0;  ///< spawn density, required for LeftPolicy::Spawn
    std::function<void(const ParticleState&)> observer;
};

struct Trajectory {
    std::vector<ParticleState> samples;
    std::vector<CrashEvent> crashes;
    double dt = 0.0;
    std::size_t steps = 0;
};

/// Classical RK4 on the position vector plus the ghost. Requires
/// dt <= 0.2 ell / max V. Densities above 1 are recorded as crash events and
/// integration continues; NaNs or overtaking abort with NumericalError.
Trajectory integrate(ParticleState s, const ModelParams& params, const IntegrateOptions& opts);

/// Cars z_i = i ell/rho^+ + c0 for i >= 0 and i ell/rho^- + c0 for i < 0,
/// i = -n_left .. n_right-1, followed by the ghost chain at rho^+.
ParticleState riemann_init(const ModelParams& params, double rho_minus, double rho_plus, double c0, std::size_t n_left,
                           std::size_t n_right);

/// ceil(20 h / ell): the default car count on each side of the jump.
std::size_t default_window_cars(const ModelParams& params);

}  // namespace ftls
