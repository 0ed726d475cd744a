#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace multifractal {

/// Closed interval [lo, hi] used both for subsets of the line (cylinders)
/// and for two-sided numerical enclosures.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double x) { return {x, x}; }
    static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
    bool contains(const Interval& o, double tol = 0.0) const {
        return o.lo >= lo - tol && o.hi <= hi + tol;
    }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }

    Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
    Interval& operator+=(const Interval& o) {
        lo += o.lo;
        hi += o.hi;
        return *this;
    }
    Interval operator+(double c) const { return {lo + c, hi + c}; }
    Interval operator-(double c) const { return {lo - c, hi - c}; }

    friend Interval operator*(double c, const Interval& x) {
        return c >= 0.0 ? Interval{c * x.lo, c * x.hi} : Interval{c * x.hi, c * x.lo};
    }

    friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval join(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval meet(const Interval& a, const Interval& b) {
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace multifractal
