#pragma once

#include <optional>
#include <string>
#include <vector>

#include "multifractal/pressure.hpp"

namespace multifractal {

/// Enclosure of b(a), the root in b of P(a psi + b phi) = 0.
struct BBracket {
    double a = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
    int level = 0;

    double width() const { return upper - lower; }
    Interval interval() const { return {lower, upper}; }
};

/// Solves P(a psi + b phi) = 0 for b at one fixed level. The transfer graph
/// is built once and shared by all a; solve() is safe to call concurrently.
class BSolver {
public:
    BSolver(const MarkovMap& map, const Potential& phi, int level,
            const PressureOptions& options = {});

    /// Roots of the lower and upper pressure brackets, located to root_tol.
    BBracket solve(double a, double root_tol = 1e-12) const;

    int level() const { return graph_.level(); }
    /// Range of phi over the level cylinders; sup must be negative.
    Interval phi_range() const { return phi_range_; }
    const LeafGraph& graph() const { return graph_; }

private:
    const MarkovMap* map_;
    Potential psi_;
    Potential phi_;
    PressureOptions options_;
    LeafGraph graph_;
    Interval phi_range_;
};

/// Raises the level until the b bracket is at most tol wide.
BBracket b_of_a(const MarkovMap& map, const Potential& phi, double a, double tol,
                const PressureOptions& options = {});

struct AlphaEstimate {
    double alpha = 0.0;
    double derivative = 0.0;  // b'(a)
    double step = 0.0;
    bool one_sided = false;
};

/// alpha(a) = 1 / b'(a) by central differences at the solver's level; the
/// step starts at h and is halved until two successive estimates agree.
/// Throws DerivativeUnstable when they never do.
AlphaEstimate alpha_of_a(const BSolver& solver, double a, double h = 1e-4);

/// Same, choosing a level where b is resolved to 1e-6 first.
AlphaEstimate alpha_of_a(const MarkovMap& map, const Potential& phi, double a, double h = 1e-4,
                         const PressureOptions& options = {});

struct Endpoints {
    Interval alpha_min;
    Interval alpha_max;  // [inf, inf] when a parabolic orbit exists
    bool alpha_max_infinite = false;
    Word min_cycle;  // n-word cycle realising the bounds (as symbols)
    Word max_cycle;
    int level = 0;
};

/// Extreme ratios (-S phi)/(S psi) over cycles of the graph on (n-1)-words.
Endpoints endpoints(const MarkovMap& map, const Potential& phi, int n);

/// dim X_infinity = dim Lambda, the Bowen root; needs a parabolic orbit.
RootBracket dim_x_infinity(const MarkovMap& map, double tol = 1e-2,
                           const PressureOptions& options = {});

struct SpectrumSample {
    double a = 0.0;
    BBracket b;
    double alpha = 0.0;  // NaN where b' vanishes
    double f = 0.0;      // b(a) alpha - a
    bool one_sided = false;
    bool on_ray = false;  // b(a) = 0 ray of a phase transition
};

struct SpectrumPoint {
    double alpha = 0.0;
    double f = 0.0;
    double f_lower = 0.0;
    double f_upper = 0.0;
    double a_star = 0.0;
    BBracket b;  // at a_star
    bool empty = false;  // outside [alpha_min, alpha_max]: level set is empty
};

struct SpectrumCurve {
    std::vector<SpectrumSample> samples;
    std::vector<SpectrumPoint> points;
    /// f at alpha_min and at alpha_min + 1e-1 ... 1e-4, for the continuity check.
    std::vector<SpectrumPoint> endpoint_approach;
    Endpoints ends;
    double alpha_min = 0.0;
    double alpha_max = 0.0;  // +inf when parabolic
    RootBracket dim_lambda;
    std::optional<double> alpha_0;  // start of the constant tail
    std::optional<double> a_transition;
    int level = 0;
    bool converged = true;
    std::vector<std::string> notes;
};

struct SpectrumOptions {
    double tol = 1e-8;         // target b bracket width
    int a_samples = 41;
    double golden_tol = 1e-7;  // refinement of the minimising a per alpha
    double derivative_step = 1e-4;
    int endpoint_level = 3;
    double bowen_tol = 1e-2;
    PressureOptions pressure;
};

/// f(alpha) = inf_a { b(a) alpha - a } on alpha_grid, with b sampled on
/// [a_lo, a_hi] and the minimising a refined per alpha. All f values are
/// minima over one common family of affine functions, so the curve is
/// concave by construction.
SpectrumCurve legendre_spectrum(const MarkovMap& map, const Potential& phi,
                                const std::vector<double>& alpha_grid, double a_lo, double a_hi,
                                const SpectrumOptions& options = {});

struct CurveChecks {
    double max_second_difference = 0.0;  // concavity: should be <= 1e-6
    double min_b_second_difference = 0.0;  // convexity of b, relative to bracket widths
    bool b_nondecreasing = true;
    double max_excess_over_dim = 0.0;     // f - dim_lambda.upper
    double min_endpoint_f = 0.0;
    bool tail_nondecreasing = true;
    double endpoint_continuity = 0.0;  // |f(alpha_min + d) - f(alpha_min)| at the smallest d
    bool concave() const { return max_second_difference <= 1e-6; }
};

CurveChecks check_curve(const SpectrumCurve& curve);

}  // namespace multifractal
