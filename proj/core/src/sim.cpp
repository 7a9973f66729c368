#include "ftls/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ftls/detail/window.hpp"
#include "ftls/errors.hpp"

namespace ftls {

double discrete_density(const ParticleState& s, std::size_t k) {
    if (k >= s.z.size()) throw std::out_of_range("discrete_density: index beyond window");
    return s.ell / (s.leader(k) - s.z[k]);
}

std::vector<double> discrete_densities(const ParticleState& s) {
    std::vector<double> r(s.z.size());
    for (std::size_t k = 0; k < s.z.size(); ++k) r[k] = s.ell / (s.leader(k) - s.z[k]);
    return r;
}

StepDensity::StepDensity(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.empty() || nodes_.size() != values_.size()) throw std::invalid_argument("StepDensity: size mismatch");
}

std::size_t StepDensity::piece(double x) const {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.begin()) return 0;
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

double StepDensity::operator()(double x) const { return values_[piece(x)]; }

StepDensity piecewise_density(const ParticleState& s) {
    std::vector<double> nodes(s.z);
    nodes.push_back(s.ghost);
    std::vector<double> vals = discrete_densities(s);
    vals.push_back(s.rho_right);
    return StepDensity(std::move(nodes), std::move(vals));
}

double average_velocity(double x, const StepDensity& rho, const ModelParams& params) {
    const auto& n = rho.nodes();
    const auto& v = rho.values();
    const auto& law = params.law;
    return detail::window_integral(
        params, x, n.data(), v.data(), n.size(), rho.piece(x), [&](double r) { return law.phi(r); }, true);
}

double averaged_density(double x, const StepDensity& rho, const ModelParams& params) {
    const auto& n = rho.nodes();
    const auto& v = rho.values();
    return detail::window_integral(
        params, x, n.data(), v.data(), n.size(), rho.piece(x), [](double r) { return r; }, false);
}

namespace {

/// Fills nodes/vals from positions y[0..n) and ghost y[n]; returns false on overtaking.
bool fill_step(const std::vector<double>& y, double ell, double rho_right, std::vector<double>& vals) {
    const std::size_t n = y.size() - 1;
    vals.resize(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double gap = y[k + 1] - y[k];
        if (!(gap > 0.0)) return false;
        vals[k] = ell / gap;
    }
    vals[n] = rho_right;
    return true;
}

/// Speeds for positions y (tracked cars then ghost).
void eval_rhs(const std::vector<double>& y, const ModelParams& p, double rho_right, Model model,
              std::vector<double>& vals, std::vector<double>& out) {
    if (!fill_step(y, p.ell, rho_right, vals)) throw NumericalError("integrate: cars overtook each other");
    const std::size_t n = y.size() - 1;
    out.resize(n + 1);
    const auto& law = p.law;
    for (std::size_t k = 0; k < n; ++k) {
        if (model == Model::Main) {
            out[k] = detail::window_integral(
                p, y[k], y.data(), vals.data(), n + 1, k, [&](double r) { return law.phi(r); }, true);
        } else {
            const double rs = detail::window_integral(
                p, y[k], y.data(), vals.data(), n + 1, k, [](double r) { return r; }, false);
            out[k] = p.road.at(y[k]) * law.phi(rs);
        }
    }
    // The ghost chain is uniform at rho_right, so its own window sees a constant.
    const double rr = rho_right;
    out[n] = model == Model::Main
                 ? detail::window_integral(
                       p, y[n], &y[n], &vals[n], 1, 0, [&](double r) { return law.phi(r); }, true)
                 : p.road.at(y[n]) * law.phi(rr);
}

std::vector<double> state_vector(const ParticleState& s) {
    std::vector<double> y(s.z);
    y.push_back(s.ghost);
    return y;
}

}  // namespace

std::vector<double> rhs_main(const ParticleState& s, const ModelParams& params) {
    std::vector<double> vals, out;
    eval_rhs(state_vector(s), params, s.rho_right, Model::Main, vals, out);
    out.pop_back();
    return out;
}

std::vector<double> rhs_alternative(const ParticleState& s, const ModelParams& params) {
    std::vector<double> vals, out;
    eval_rhs(state_vector(s), params, s.rho_right, Model::Alternative, vals, out);
    out.pop_back();
    return out;
}

Trajectory integrate(ParticleState s, const ModelParams& params, const IntegrateOptions& opts) {
    const double bound = 0.2 * params.ell / params.road.max_speed();
    double dt = opts.dt > 0.0 ? opts.dt : 0.1 * params.ell / params.road.max_speed();
    if (dt > bound * (1.0 + 1e-12)) {
        throw std::invalid_argument("integrate: dt = " + std::to_string(dt) + " exceeds 0.2 ell / max V = " +
                                    std::to_string(bound));
    }
    if (!(opts.T >= 0.0)) throw std::invalid_argument("integrate: T must be nonnegative");
    if (opts.left == LeftPolicy::Spawn && !(opts.rho_left > 0.0 && opts.rho_left <= 1.0)) {
        throw std::invalid_argument("integrate: spawn policy needs rho_left in (0,1]");
    }
    if (s.z.empty()) throw std::invalid_argument("integrate: empty state");

    const std::size_t steps = opts.T > 0.0 ? static_cast<std::size_t>(std::ceil(opts.T / dt - 1e-9)) : 0;
    if (steps > 0) dt = opts.T / static_cast<double>(steps);

    Trajectory traj;
    traj.dt = dt;
    traj.steps = steps;
    const std::size_t stride = std::max<std::size_t>(1, opts.sample_stride);
    const double t0 = s.t;
    const double left_edge = s.z.front();

    std::vector<double> y = state_vector(s);
    std::vector<double> k1, k2, k3, k4, tmp, vals;

    auto emit = [&](std::size_t step) {
        s.z.assign(y.begin(), y.end() - 1);
        s.ghost = y.back();
        s.t = t0 + static_cast<double>(step) * dt;
        if (opts.observer) opts.observer(s);
        if (step % stride == 0 || step == steps) traj.samples.push_back(s);
    };
    emit(0);

    for (std::size_t step = 1; step <= steps; ++step) {
        const std::size_t n = y.size();
        tmp.resize(n);
        eval_rhs(y, params, s.rho_right, opts.model, vals, k1);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
        eval_rhs(tmp, params, s.rho_right, opts.model, vals, k2);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
        eval_rhs(tmp, params, s.rho_right, opts.model, vals, k3);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + dt * k3[j];
        eval_rhs(tmp, params, s.rho_right, opts.model, vals, k4);
        for (std::size_t j = 0; j < n; ++j) {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if (!std::isfinite(y[j])) {
                throw NumericalError("integrate: non-finite position at t = " + std::to_string(t0 + step * dt));
            }
        }
        if (opts.left == LeftPolicy::Spawn) {
            const double gap = params.ell / opts.rho_left;
            while (y.front() - gap >= left_edge) {
                y.insert(y.begin(), y.front() - gap);
                --s.first_index;
            }
        }
        const double t = t0 + static_cast<double>(step) * dt;
        for (std::size_t k = 0; k + 1 < y.size(); ++k) {
            const double gap = y[k + 1] - y[k];
            if (!(gap > 0.0)) throw NumericalError("integrate: cars overtook each other at t = " + std::to_string(t));
            const double rho = params.ell / gap;
            if (rho > 1.0) traj.crashes.push_back({t, s.first_index + static_cast<long>(k), rho});
        }
        emit(step);
    }
    return traj;
}

ParticleState riemann_init(const ModelParams& params, double rho_minus, double rho_plus, double c0, std::size_t n_left,
                           std::size_t n_right) {
    if (!(rho_minus > 0.0 && rho_minus <= 1.0) || !(rho_plus > 0.0 && rho_plus <= 1.0)) {
        throw std::invalid_argument("riemann_init: densities must lie in (0,1]");
    }
    const double L = 5.0 * params.h();
    const double reach_left = static_cast<double>(n_left) * params.ell / rho_minus;
    const double reach_right = static_cast<double>(n_right) * params.ell / rho_plus;
    if (reach_left + std::min(c0, 0.0) < L || reach_right + std::min(c0, 0.0) < L) {
        throw std::invalid_argument("riemann_init: window too small to cover [-5h, 5h]");
    }
    ParticleState s;
    s.ell = params.ell;
    s.rho_right = rho_plus;
    s.first_index = -static_cast<long>(n_left);
    s.z.reserve(n_left + n_right);
    for (long i = -static_cast<long>(n_left); i < static_cast<long>(n_right); ++i) {
        const double d = i < 0 ? params.ell / rho_minus : params.ell / rho_plus;
        s.z.push_back(static_cast<double>(i) * d + c0);
    }
    s.ghost = static_cast<double>(n_right) * params.ell / rho_plus + c0;
    return s;
}

std::size_t default_window_cars(const ModelParams& params) {
    return static_cast<std::size_t>(std::ceil(20.0 * params.h() / params.ell - 1e-9));
}

}  // namespace ftls
