#include "multifractal/numerics.hpp"

#include <cstdlib>
#include <string>
#include <thread>

#include "multifractal/error.hpp"

namespace multifractal {

std::string_view error_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MarkovViolation: return "MarkovViolation";
        case ErrorKind::ContractionViolation: return "ContractionViolation";
        case ErrorKind::NotTransitive: return "NotTransitive";
        case ErrorKind::UnitDerivativeOffOrbit: return "UnitDerivativeOffOrbit";
        case ErrorKind::OutOfImage: return "OutOfImage";
        case ErrorKind::FitUnstable: return "FitUnstable";
        case ErrorKind::LevelTooLarge: return "LevelTooLarge";
        case ErrorKind::PointOutsideCylinder: return "PointOutsideCylinder";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::NotStrictlyNegative: return "NotStrictlyNegative";
        case ErrorKind::NoParabolicOrbit: return "NoParabolicOrbit";
        case ErrorKind::DerivativeUnstable: return "DerivativeUnstable";
        case ErrorKind::NoConnector: return "NoConnector";
        case ErrorKind::InadmissibleSupport: return "InadmissibleSupport";
        case ErrorKind::ConstraintInfeasible: return "ConstraintInfeasible";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::DegenerateCylinder: return "DegenerateCylinder";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorKind::TailDominates: return "TailDominates";
        case ErrorKind::NotFullBranched: return "NotFullBranched";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

double log_sum_exp(std::span<const double> xs) {
    LogSumExp acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

Interval bisect_predicate(const std::function<bool(double)>& below_root, double lo, double hi,
                          double tol, int max_iter) {
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        if (below_root(m)) {
            lo = m;
        } else {
            hi = m;
        }
    }
    return {lo, hi};
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                   int max_iter) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    const double fhi = f(hi);
    if (fhi == 0.0) return hi;
    const bool increasing = fhi > flo;
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) == increasing) {
            lo = m;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

Interval illinois_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                       int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return Interval::point(lo);
    if (fhi == 0.0) return Interval::point(hi);
    int side = 0;
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        double m = (lo * fhi - hi * flo) / (fhi - flo);
        // keep the secant point off the ends so the bracket keeps shrinking
        const double guard = 0.25 * tol;
        if (!(m > lo + guard && m < hi - guard)) m = 0.5 * (lo + hi);
        const double fm = f(m);
        if (fm == 0.0) return Interval::point(m);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = m;
            flo = fm;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = m;
            fhi = fm;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
    }
    return {lo, hi};
}

double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol, int max_iter) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    CompensatedSum sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / static_cast<double>(n);
    const double my = sy.value() / static_cast<double>(n);
    CompensatedSum sxx, sxy;
    for (std::size_t i = 0; i < n; ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    LineFit fit;
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        fit.max_residual =
            std::max(fit.max_residual, std::abs(y[i] - (fit.intercept + fit.slope * x[i])));
    }
    return fit;
}

unsigned worker_threads() {
    if (const char* env = std::getenv("MFSPEC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace multifractal
