#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ftls {

/// Nonnegative, strictly decreasing averaging kernel supported on [0, h]
/// with unit mass.
class Kernel {
public:
    enum class Kind { Linear, Tabulated };

    /// w(s) = 2/h - 2s/h^2.
    static Kernel linear(double h);

    /// Piecewise-linear kernel through `values` at n uniform nodes on [0, h].
    /// The last value must be 0 and the table must integrate to 1.
    static Kernel tabulated(double h, std::vector<double> values);

    double h() const { return h_; }
    Kind kind() const { return kind_; }

    double operator()(double s) const;

    /// K(s) = integral of w over [0, s], clamped to [0, 1].
    double cumulative(double s) const;

    /// Integral of w over [a, b] (zero outside the support).
    double mass(double a, double b) const { return cumulative(b) - cumulative(a); }

    /// Interior breakpoints of w (empty for the linear kernel).
    const std::vector<double>& breakpoints() const { return breaks_; }

private:
    Kernel() = default;

    Kind kind_ = Kind::Linear;
    double h_ = 0.0;
    std::vector<double> table_;
    std::vector<double> cum_;
    std::vector<double> breaks_;
};

/// Speed law phi on [0, 1] with phi(0)=1, phi(1)=0, decreasing and concave.
class VelocityLaw {
public:
    enum class Kind { Linear, Custom, Tabulated };
    using Fn = std::function<double(double)>;

    /// phi(rho) = 1 - rho.
    static VelocityLaw linear();

    /// User law; validated on a 10^3-node grid.
    static VelocityLaw custom(Fn phi, Fn phi_prime);

    /// Piecewise-linear law through `values` at uniform nodes on [0, 1].
    static VelocityLaw tabulated(std::vector<double> values);

    Kind kind() const { return kind_; }
    double phi(double rho) const;
    double phi_prime(double rho) const;

private:
    VelocityLaw() = default;
    void validate() const;

    Kind kind_ = Kind::Linear;
    Fn phi_;
    Fn dphi_;
    std::shared_ptr<const std::vector<double>> table_;
};

/// Speed limit V(x) = V^- for x < 0 and V^+ for x >= 0.
struct RoadCondition {
    double v_minus = 2.0;
    double v_plus = 1.0;

    RoadCondition() = default;
    RoadCondition(double vm, double vp);

    double at(double x) const { return x < 0.0 ? v_minus : v_plus; }
    double max_speed() const { return v_minus > v_plus ? v_minus : v_plus; }
    bool uniform() const { return v_minus == v_plus; }
};

struct ModelParams {
    double ell;
    Kernel kernel;
    RoadCondition road;
    VelocityLaw law;

    ModelParams(double ell, Kernel kernel, RoadCondition road, VelocityLaw law);

    /// ell = 0.05, h = 0.5, linear kernel, V^- = 2, V^+ = 1, phi = 1 - rho.
    static ModelParams standard();

    double h() const { return kernel.h(); }
    ModelParams with_road(RoadCondition r) const;
    ModelParams with_ell(double ell) const;
    ModelParams with_h(double h) const;

    /// Non-fatal diagnostics (currently: ell >= h).
    std::vector<std::string> warnings() const;
};

/// f(rho) = rho * phi(rho). Throws std::domain_error outside [0, 1].
double flux(double rho, const VelocityLaw& law);

/// Unique zero of f' in (0, 1), by bisection to 1e-12.
double critical_rho_hat(const VelocityLaw& law);

struct RootPair {
    double low;
    double high;
};

/// Both solutions of V f(rho) = fbar on either side of rho_hat.
/// Throws std::out_of_range when fbar > V f(rho_hat).
RootPair asymptotic_roots(double fbar, double v, const VelocityLaw& law);

enum class JumpCase { Case1, Case2, Uniform };

/// For Case1 (V^- > V^+): rho1, rho4 solve V^- f = fbar and rho2, rho3 solve
/// V^+ f = fbar. Case2 swaps the roles of V^- and V^+. Uniform has
/// rho1 = rho2 and rho3 = rho4.
struct CriticalDensities {
    double rho_hat;
    double fbar;
    double rho1, rho2, rho3, rho4;
    JumpCase jump;
};

CriticalDensities critical_densities(const ModelParams& params, double fbar);

enum class Subcase { S1A, S1B, S1C, S1D, S2A, S2B, S2C, S2D, Uniform, TrivialZeroFlux };
enum class Verdict { UniqueProfile, InfinitelyManyProfiles, NoProfile };
enum class Stability { Attracting, NonAttracting, NotApplicable };

std::string_view to_string(Subcase s);
std::string_view to_string(Verdict v);
std::string_view to_string(Stability s);
std::string_view to_string(JumpCase c);

struct SubcaseReport {
    ModelParams params;
    Subcase subcase;
    double rho_minus;
    double rho_plus;
    double fbar;
    CriticalDensities crit;
    Verdict verdict;
    Stability stability;

    /// Lower end of the admissible anchor interval for P(0): the low root of
    /// V^+ f = fbar. Profiles with anchor in (this, rho_plus] exist for the
    /// infinite families.
    double anchor_floor() const;
};

inline constexpr double kFluxCompatTol = 1e-8;

/// Throws IncompatibleAsymptotesError when |V^- f(rho^-) - V^+ f(rho^+)| > 1e-8.
SubcaseReport classify(const ModelParams& params, double rho_minus, double rho_plus);

/// Asymptotes for a named subcase letter ('A'..'D') at a given flux level.
std::pair<double, double> subcase_asymptotes(const ModelParams& params, double fbar, char letter);

}  // namespace ftls
