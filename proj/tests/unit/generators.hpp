#pragma once

// Small deterministic generators for property tests. Each test owns a Gen
// seeded from its name so failures reproduce exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "ftls/model.hpp"
#include "ftls/sim.hpp"

namespace gen {

class Gen {
public:
    explicit Gen(std::string_view name) : rng_(seed_of(name)) {}

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    /// ell in [0.02, 0.1], h in [0.3, 1], distinct speed limits in [0.5, 3].
    ftls::ModelParams params() {
        const double ell = uniform(0.02, 0.1);
        const double h = uniform(0.3, 1.0);
        double vm = uniform(0.5, 3.0), vp = uniform(0.5, 3.0);
        while (std::abs(vm - vp) < 0.2) vp = uniform(0.5, 3.0);
        return {ell, ftls::Kernel::linear(h), ftls::RoadCondition(vm, vp), ftls::VelocityLaw::linear()};
    }

    /// Flux level strictly inside (0, min(V) f(rho_hat)).
    double fbar(const ftls::ModelParams& p) {
        const double vlo = std::min(p.road.v_minus, p.road.v_plus);
        return uniform(0.05, 0.95) * vlo * 0.25;
    }

    /// phi(rho) = (1 - rho)(1 + b rho) with b in [0, 0.9]: decreasing and concave.
    ftls::VelocityLaw concave_law() {
        const double b = uniform(0.0, 0.9);
        return ftls::VelocityLaw::custom([b](double r) { return (1.0 - r) * (1.0 + b * r); },
                                         [b](double r) { return b - 1.0 - 2.0 * b * r; });
    }

    /// Ordered cars with headways in [ell / rho_max, ell / rho_min].
    ftls::ParticleState state(const ftls::ModelParams& p, std::size_t n, double rho_min, double rho_max) {
        ftls::ParticleState s;
        s.ell = p.ell;
        s.first_index = -static_cast<long>(n / 2);
        double z = -static_cast<double>(n / 2) * p.ell / (0.5 * (rho_min + rho_max));
        for (std::size_t k = 0; k < n; ++k) {
            s.z.push_back(z);
            z += p.ell / uniform(rho_min, rho_max);
        }
        s.rho_right = uniform(rho_min, rho_max);
        s.ghost = z;
        return s;
    }

private:
    static std::uint64_t seed_of(std::string_view name) {
        std::uint64_t h = 1469598103934665603ull;
        for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
        return h;
    }
    std::mt19937_64 rng_;
};

}  // namespace gen
