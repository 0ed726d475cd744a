#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "multifractal/interval.hpp"

namespace multifractal {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

    void merge(const CompensatedSum& o) {
        add(o.sum_);
        add(o.comp_);
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Streaming log(sum exp(x_i)). Keeps a running maximum and rescales the
/// compensated partial sum whenever the maximum moves, so no raw
/// exponential of a large argument is ever formed.
class LogSumExp {
public:
    void add(double x) {
        if (x == -kInf) return;
        if (x <= max_) {
            sum_.add(std::exp(x - max_));
            return;
        }
        if (max_ != -kInf) {
            const double scale = std::exp(max_ - x);
            const double old = sum_.value();
            sum_ = CompensatedSum{};
            sum_.add(old * scale);
        }
        max_ = x;
        sum_.add(1.0);
    }

    void merge(const LogSumExp& o) {
        if (o.max_ == -kInf) return;
        if (max_ == -kInf) {
            *this = o;
            return;
        }
        if (o.max_ <= max_) {
            sum_.add(o.sum_.value() * std::exp(o.max_ - max_));
        } else {
            const double old = sum_.value() * std::exp(max_ - o.max_);
            sum_ = o.sum_;
            sum_.add(old);
            max_ = o.max_;
        }
    }

    double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_.value()); }
    bool empty() const { return max_ == -kInf; }

private:
    double max_ = -kInf;
    CompensatedSum sum_;
};

double log_sum_exp(std::span<const double> xs);

/// Bisection for a predicate that is true on [lo, x*) and false on (x*, hi].
/// Returns the final [true-side, false-side] interval.
Interval bisect_predicate(const std::function<bool(double)>& below_root, double lo, double hi,
                          double tol, int max_iter = 200);

/// Sign-change bisection of a monotone function. `f(lo)` and `f(hi)` must
/// have opposite signs (zero counts as either).
double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                   int max_iter = 200);

/// Illinois regula falsi for a monotone function with f(lo) and f(hi) of
/// opposite signs. Returns the final bracket, at most tol wide.
Interval illinois_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                       int max_iter = 200);

/// Golden-section minimisation of a unimodal function on [lo, hi].
double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol, int max_iter = 200);

/// Ordinary least squares y = intercept + slope x; returns the max absolute residual too.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Thread count for parallel reductions: MFSPEC_THREADS if set, else hardware concurrency.
unsigned worker_threads();

/// Deterministic parallel map-reduce over chunk indices [0, count). Each chunk is
/// mapped independently; partial results are folded by a pairwise tree keyed on
/// chunk index, so the result does not depend on the number of threads.
template <typename T, typename MapFn, typename CombineFn>
T parallel_reduce(std::size_t count, T identity, MapFn map, CombineFn combine);

}  // namespace multifractal

#include "multifractal/parallel_reduce.ipp"
