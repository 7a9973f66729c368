#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ftls::detail {

/// Grid values on j = j_lo .. j_hi, filled from the top down. Lookups at or
/// above the lowest filled node interpolate linearly; beyond x(j_hi) the tail
/// function answers.
class Track {
public:
    Track(double dz, long j_lo, long j_hi, std::function<double(double)> tail)
        : dz_(dz), j_lo_(j_lo), j_hi_(j_hi), j_cur_(j_hi + 1), v_(static_cast<std::size_t>(j_hi - j_lo + 1), 0.0),
          tail_(std::move(tail)) {}

    double x(long j) const { return static_cast<double>(j) * dz_; }
    double dz() const { return dz_; }
    long lo() const { return j_lo_; }
    long hi() const { return j_hi_; }
    long cur() const { return j_cur_; }

    double value(long j) const { return v_[static_cast<std::size_t>(j - j_lo_)]; }

    /// Sets node j; nodes must be filled in decreasing j order.
    void push(long j, double p) {
        v_[static_cast<std::size_t>(j - j_lo_)] = p;
        if (j < j_cur_) j_cur_ = j;
    }

    double operator()(double y) const {
        if (y >= x(j_hi_)) return y == x(j_hi_) && j_cur_ <= j_hi_ ? value(j_hi_) : tail_(y);
        long j = static_cast<long>(std::floor(y / dz_));
        if (j < j_cur_) {
            if (j == j_cur_ - 1 && y >= x(j_cur_) - 1e-9 * dz_) return value(j_cur_);
            throw std::logic_error("Track: lookup below the marched front");
        }
        if (j >= j_hi_) return value(j_hi_);
        const double t = y / dz_ - static_cast<double>(j);
        return (1.0 - t) * value(j) + t * value(j + 1);
    }

    std::vector<double> take(long from, long to) const {
        return {v_.begin() + (from - j_lo_), v_.begin() + (to - j_lo_) + 1};
    }

private:
    double dz_;
    long j_lo_, j_hi_, j_cur_;
    std::vector<double> v_;
    std::function<double(double)> tail_;
};

/// One classical RK4 step of size -eta from (x, p) for dp/dx = f(x, p).
template <class F>
double rk4_down(F&& f, double x, double p, double eta) {
    const double k1 = f(x, p);
    const double k2 = f(x - 0.5 * eta, p - 0.5 * eta * k1);
    const double k3 = f(x - 0.5 * eta, p - 0.5 * eta * k2);
    const double k4 = f(x - eta, p - eta * k3);
    return p - eta / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace ftls::detail
