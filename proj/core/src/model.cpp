#include "ftls/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ftls/errors.hpp"

namespace ftls {

namespace {

constexpr int kBisectionCap = 200;
constexpr double kRootTol = 1e-12;
constexpr int kLawSamples = 1000;

template <class F>
double bisect(F&& f, double a, double b, double tol = kRootTol) {
    double fa = f(a);
    for (int it = 0; it < kBisectionCap && b - a > tol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

// ---------------------------------------------------------------- Kernel

Kernel Kernel::linear(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("kernel: h must be positive");
    Kernel k;
    k.kind_ = Kind::Linear;
    k.h_ = h;
    return k;
}

Kernel Kernel::tabulated(double h, std::vector<double> values) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("kernel: h must be positive");
    if (values.size() < 2) throw std::invalid_argument("kernel: table needs at least two nodes");
    if (values.back() != 0.0) throw std::invalid_argument("kernel: w(h) must be 0");
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        if (!(values[i] > values[i + 1])) throw std::invalid_argument("kernel: table must be strictly decreasing");
    }
    Kernel k;
    k.kind_ = Kind::Tabulated;
    k.h_ = h;
    const double ds = h / static_cast<double>(values.size() - 1);
    k.cum_.assign(values.size(), 0.0);
    for (std::size_t i = 1; i < values.size(); ++i) {
        k.cum_[i] = k.cum_[i - 1] + 0.5 * ds * (values[i - 1] + values[i]);
        if (i + 1 < values.size()) k.breaks_.push_back(ds * static_cast<double>(i));
    }
    if (std::abs(k.cum_.back() - 1.0) > 1e-10) {
        throw std::invalid_argument("kernel: table must integrate to 1 (got " + std::to_string(k.cum_.back()) + ")");
    }
    k.table_ = std::move(values);
    return k;
}

double Kernel::operator()(double s) const {
    if (s < 0.0 || s > h_) return 0.0;
    if (kind_ == Kind::Linear) return 2.0 / h_ - 2.0 * s / (h_ * h_);
    const double ds = h_ / static_cast<double>(table_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(s / ds), table_.size() - 2);
    const double t = (s - ds * static_cast<double>(i)) / ds;
    return (1.0 - t) * table_[i] + t * table_[i + 1];
}

double Kernel::cumulative(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= h_) return 1.0;
    if (kind_ == Kind::Linear) {
        const double r = s / h_;
        return r * (2.0 - r);
    }
    const double ds = h_ / static_cast<double>(table_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(s / ds), table_.size() - 2);
    const double u = s - ds * static_cast<double>(i);
    const double slope = (table_[i + 1] - table_[i]) / ds;
    return cum_[i] + table_[i] * u + 0.5 * slope * u * u;
}

// ---------------------------------------------------------------- VelocityLaw

VelocityLaw VelocityLaw::linear() {
    VelocityLaw l;
    l.kind_ = Kind::Linear;
    return l;
}

VelocityLaw VelocityLaw::custom(Fn phi, Fn phi_prime) {
    if (!phi || !phi_prime) throw std::invalid_argument("velocity law: phi and phi' are required");
    VelocityLaw l;
    l.kind_ = Kind::Custom;
    l.phi_ = std::move(phi);
    l.dphi_ = std::move(phi_prime);
    l.validate();
    return l;
}

VelocityLaw VelocityLaw::tabulated(std::vector<double> values) {
    if (values.size() < 2) throw std::invalid_argument("velocity law: table needs at least two nodes");
    VelocityLaw l;
    l.kind_ = Kind::Tabulated;
    l.table_ = std::make_shared<const std::vector<double>>(std::move(values));
    l.validate();
    return l;
}

double VelocityLaw::phi(double rho) const {
    switch (kind_) {
        case Kind::Linear:
            return 1.0 - rho;
        case Kind::Custom:
            return phi_(rho);
        case Kind::Tabulated: {
            const auto& t = *table_;
            const double x = std::clamp(rho, 0.0, 1.0) * static_cast<double>(t.size() - 1);
            const auto i = std::min(static_cast<std::size_t>(x), t.size() - 2);
            const double u = x - static_cast<double>(i);
            return (1.0 - u) * t[i] + u * t[i + 1];
        }
    }
    return 0.0;
}

double VelocityLaw::phi_prime(double rho) const {
    switch (kind_) {
        case Kind::Linear:
            return -1.0;
        case Kind::Custom:
            return dphi_(rho);
        case Kind::Tabulated: {
            const auto& t = *table_;
            const double n = static_cast<double>(t.size() - 1);
            const auto i = std::min(static_cast<std::size_t>(std::clamp(rho, 0.0, 1.0) * n), t.size() - 2);
            return (t[i + 1] - t[i]) * n;
        }
    }
    return 0.0;
}

void VelocityLaw::validate() const {
    if (std::abs(phi(0.0) - 1.0) > 1e-12) throw std::invalid_argument("velocity law: phi(0) must be 1");
    if (std::abs(phi(1.0)) > 1e-12) throw std::invalid_argument("velocity law: phi(1) must be 0");
    const double d = 1.0 / kLawSamples;
    for (int k = 0; k <= kLawSamples; ++k) {
        const double r = k * d;
        if (!(phi_prime(r) < 0.0)) throw std::invalid_argument("velocity law: phi' must be negative on [0,1]");
        if (k > 0 && k < kLawSamples) {
            const double second = phi(r - d) - 2.0 * phi(r) + phi(r + d);
            if (second > 1e-10) throw std::invalid_argument("velocity law: phi must be concave on [0,1]");
        }
    }
}

// ---------------------------------------------------------------- Road / params

RoadCondition::RoadCondition(double vm, double vp) : v_minus(vm), v_plus(vp) {
    if (!(vm > 0.0) || !(vp > 0.0) || !std::isfinite(vm) || !std::isfinite(vp)) {
        throw std::invalid_argument("road: V^- and V^+ must be positive");
    }
}

ModelParams::ModelParams(double ell_, Kernel kernel_, RoadCondition road_, VelocityLaw law_)
    : ell(ell_), kernel(std::move(kernel_)), road(road_), law(std::move(law_)) {
    if (!(ell > 0.0) || !std::isfinite(ell)) throw std::invalid_argument("params: ell must be positive");
}

ModelParams ModelParams::standard() {
    return ModelParams(0.05, Kernel::linear(0.5), RoadCondition(2.0, 1.0), VelocityLaw::linear());
}

ModelParams ModelParams::with_road(RoadCondition r) const {
    ModelParams p = *this;
    p.road = r;
    return p;
}

ModelParams ModelParams::with_ell(double e) const { return ModelParams(e, kernel, road, law); }

ModelParams ModelParams::with_h(double h) const {
    if (kernel.kind() != Kernel::Kind::Linear) throw std::invalid_argument("params: only the linear kernel rescales with h");
    return ModelParams(ell, Kernel::linear(h), road, law);
}

std::vector<std::string> ModelParams::warnings() const {
    std::vector<std::string> w;
    if (ell >= kernel.h()) w.emplace_back("car length ell >= kernel horizon h");
    return w;
}

// ---------------------------------------------------------------- flux algebra

double flux(double rho, const VelocityLaw& law) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("flux: density outside [0,1]");
    return rho * law.phi(rho);
}

double critical_rho_hat(const VelocityLaw& law) {
    auto fp = [&](double r) { return law.phi(r) + r * law.phi_prime(r); };
    if (!(fp(0.0) > 0.0) || !(fp(1.0) < 0.0)) throw std::domain_error("critical_rho_hat: f' has no root in (0,1)");
    return bisect(fp, 0.0, 1.0);
}

RootPair asymptotic_roots(double fbar, double v, const VelocityLaw& law) {
    if (fbar < 0.0) throw std::out_of_range("asymptotic_roots: fbar must be nonnegative");
    const double rh = critical_rho_hat(law);
    const double fmax = v * flux(rh, law);
    if (fbar > fmax * (1.0 + 1e-14)) {
        throw std::out_of_range("asymptotic_roots: fbar exceeds V f(rho_hat) = " + std::to_string(fmax));
    }
    if (fbar == 0.0) return {0.0, 1.0};
    auto g = [&](double r) { return v * flux(r, law) - fbar; };
    const double lo = g(rh) <= 0.0 ? rh : bisect(g, 0.0, rh);
    const double hi = g(rh) <= 0.0 ? rh : bisect([&](double r) { return -g(r); }, rh, 1.0);
    return {lo, hi};
}

CriticalDensities critical_densities(const ModelParams& params, double fbar) {
    const auto& road = params.road;
    CriticalDensities c{};
    c.rho_hat = critical_rho_hat(params.law);
    c.fbar = fbar;
    const RootPair rm = asymptotic_roots(fbar, road.v_minus, params.law);
    const RootPair rp = asymptotic_roots(fbar, road.v_plus, params.law);
    if (road.v_minus > road.v_plus) {
        c.jump = JumpCase::Case1;
        c.rho1 = rm.low;
        c.rho4 = rm.high;
        c.rho2 = rp.low;
        c.rho3 = rp.high;
    } else if (road.v_minus < road.v_plus) {
        c.jump = JumpCase::Case2;
        c.rho1 = rp.low;
        c.rho4 = rp.high;
        c.rho2 = rm.low;
        c.rho3 = rm.high;
    } else {
        c.jump = JumpCase::Uniform;
        c.rho1 = c.rho2 = rm.low;
        c.rho3 = c.rho4 = rm.high;
    }
    return c;
}

std::string_view to_string(Subcase s) {
    switch (s) {
        case Subcase::S1A: return "1A";
        case Subcase::S1B: return "1B";
        case Subcase::S1C: return "1C";
        case Subcase::S1D: return "1D";
        case Subcase::S2A: return "2A";
        case Subcase::S2B: return "2B";
        case Subcase::S2C: return "2C";
        case Subcase::S2D: return "2D";
        case Subcase::Uniform: return "uniform-road";
        case Subcase::TrivialZeroFlux: return "trivial-fbar-zero";
    }
    return "?";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::UniqueProfile: return "unique-profile";
        case Verdict::InfinitelyManyProfiles: return "infinitely-many-profiles";
        case Verdict::NoProfile: return "no-profile";
    }
    return "?";
}

std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::Attracting: return "attracting";
        case Stability::NonAttracting: return "non-attracting";
        case Stability::NotApplicable: return "n/a";
    }
    return "?";
}

std::string_view to_string(JumpCase c) {
    switch (c) {
        case JumpCase::Case1: return "case1";
        case JumpCase::Case2: return "case2";
        case JumpCase::Uniform: return "uniform";
    }
    return "?";
}

double SubcaseReport::anchor_floor() const {
    return asymptotic_roots(fbar, params.road.v_plus, params.law).low;
}

SubcaseReport classify(const ModelParams& params, double rho_minus, double rho_plus) {
    if (!(rho_minus >= 0.0 && rho_minus <= 1.0) || !(rho_plus >= 0.0 && rho_plus <= 1.0)) {
        throw std::domain_error("classify: densities must lie in [0,1]");
    }
    const double fm = params.road.v_minus * flux(rho_minus, params.law);
    const double fp = params.road.v_plus * flux(rho_plus, params.law);
    if (std::abs(fm - fp) > kFluxCompatTol) {
        throw IncompatibleAsymptotesError("classify: V^- f(rho^-) = " + std::to_string(fm) + " differs from V^+ f(rho^+) = " +
                                          std::to_string(fp) + "; no stationary profile can connect them");
    }
    const double fbar = 0.5 * (fm + fp);
    const double rh = critical_rho_hat(params.law);

    const bool minus_low = rho_minus <= rh;
    const bool plus_low = rho_plus <= rh;

    SubcaseReport r{params, Subcase::Uniform, rho_minus, rho_plus, fbar, {}, Verdict::NoProfile, Stability::NotApplicable};

    if (fbar <= kFluxCompatTol && (rho_minus == 0.0 || rho_minus == 1.0) && (rho_plus == 0.0 || rho_plus == 1.0)) {
        r.fbar = 0.0;
        r.crit = CriticalDensities{rh, 0.0, 0.0, 0.0, 1.0, 1.0,
                                   params.road.v_minus > params.road.v_plus   ? JumpCase::Case1
                                   : params.road.v_minus < params.road.v_plus ? JumpCase::Case2
                                                                               : JumpCase::Uniform};
        r.subcase = Subcase::TrivialZeroFlux;
        r.verdict = rho_minus <= rho_plus ? Verdict::UniqueProfile : Verdict::NoProfile;
        return r;
    }

    r.crit = critical_densities(params, fbar);
    const auto pick = [&](Subcase a, Subcase b, Subcase c, Subcase d) {
        if (minus_low && plus_low) return a;
        if (minus_low) return b;
        if (!plus_low) return c;
        return d;
    };

    switch (r.crit.jump) {
        case JumpCase::Case1:
            r.subcase = pick(Subcase::S1A, Subcase::S1B, Subcase::S1C, Subcase::S1D);
            break;
        case JumpCase::Case2:
            r.subcase = pick(Subcase::S2A, Subcase::S2B, Subcase::S2C, Subcase::S2D);
            break;
        case JumpCase::Uniform:
            r.subcase = Subcase::Uniform;
            if (std::abs(rho_minus - rho_plus) <= 1e-12) {
                r.verdict = Verdict::UniqueProfile;
            } else if (rho_minus < rho_plus) {
                r.verdict = Verdict::InfinitelyManyProfiles;
            } else {
                r.verdict = Verdict::NoProfile;
            }
            return r;
    }

    switch (r.subcase) {
        case Subcase::S1A:
        case Subcase::S2A:
            r.verdict = Verdict::UniqueProfile;
            r.stability = Stability::NonAttracting;
            break;
        case Subcase::S1B:
        case Subcase::S2B:
            r.verdict = Verdict::InfinitelyManyProfiles;
            r.stability = Stability::Attracting;
            break;
        default:
            r.verdict = Verdict::NoProfile;
            break;
    }
    return r;
}

std::pair<double, double> subcase_asymptotes(const ModelParams& params, double fbar, char letter) {
    const CriticalDensities c = critical_densities(params, fbar);
    if (c.jump == JumpCase::Uniform) throw std::invalid_argument("subcase letters need V^- != V^+");
    // Case 1 pairs (rho^-, rho^+); case 2 mirrors the roles of the roots.
    const bool one = c.jump == JumpCase::Case1;
    switch (letter) {
        case 'A': return one ? std::pair{c.rho1, c.rho2} : std::pair{c.rho2, c.rho1};
        case 'B': return one ? std::pair{c.rho1, c.rho3} : std::pair{c.rho2, c.rho4};
        case 'C': return one ? std::pair{c.rho4, c.rho3} : std::pair{c.rho3, c.rho4};
        case 'D': return one ? std::pair{c.rho4, c.rho2} : std::pair{c.rho3, c.rho1};
        default: throw std::invalid_argument(std::string("unknown subcase letter '") + letter + "'");
    }
}

}  // namespace ftls
