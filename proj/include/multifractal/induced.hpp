#pragma once

#include <vector>

#include "multifractal/weak_gibbs.hpp"

namespace multifractal {

struct InducedBranch {
    int return_time = 0;
    Word word;        // base symbol followed by the excursion
    Interval domain;  // points of [word] that re-enter the base next
    Interval psi;     // S_r psi over the domain
    Interval phi;     // S_r phi over the domain
    double mass = 0.0;  // midpoint of the model mass of the domain
};

struct InducedSystem {
    const MarkovMap* map = nullptr;
    Potential phi;
    std::vector<Symbol> base;
    int truncation = 0;
    bool trivial = false;  // no parabolic orbit: the induced map is the map itself
    std::vector<InducedBranch> branches;
    double kept_mass = 0.0;  // kept branch mass over base mass
};

/// First-return branches of return time <= N into the base cylinders.
/// The default base is every first-level symbol off the parabolic orbits.
/// Throws TruncationTooSmall when the kept branches carry under half the base mass.
InducedSystem build_induced(const WeakGibbsModel& model, int N, std::vector<Symbol> base = {});

struct InducedPoint {
    double a = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
    double truncation_error = 0.0;  // shift of the upper root caused by the tail bound
    double width() const { return upper - lower; }
};

/// b(a) of the induced system: the root in b of the pressure of a Psi + b Phi
/// over the kept branches, bracketed by Collatz-Wielandt bounds on the
/// branch-pair transfer matrix. The dropped branches enter the upper bound
/// through a geometric extrapolation of the last kept return times. Throws
/// TailDominates when that extrapolation diverges or moves the root by more than tol.
std::vector<InducedPoint> induced_b_curve(const InducedSystem& isys, const std::vector<double>& a_grid,
                                          double tol = 0.05);

/// Hull of -Phi / Psi over the kept branches.
Interval induced_ratio_hull(const InducedSystem& isys);

}  // namespace multifractal
