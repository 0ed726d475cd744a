#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "multifractal/interval.hpp"

namespace multifractal {

using Symbol = int;
using Word = std::vector<Symbol>;

namespace family {

/// T(x) = slope * x + offset
struct Linear {
    double slope = 2.0;
    double offset = 0.0;
};

/// T(x) = x + x^(1+s) - shift
struct MannevillePomeau {
    double s = 0.5;
    double shift = 0.0;
};

/// T(x) = x / (1 - x)
struct FareyLeft {};

/// T(x) = (1 - x) / x
struct FareyRight {};

/// T(x) = x + c x^(1+s) - shift; Manneville-Pomeau with a tunable prefactor.
struct PowerInterpolated {
    double c = 1.0;
    double s = 0.5;
    double shift = 0.0;
};

}  // namespace family

using BranchFamily = std::variant<family::Linear, family::MannevillePomeau, family::FareyLeft,
                                  family::FareyRight, family::PowerInterpolated>;

std::string family_name(const BranchFamily& f);

/// One C^1 monotone branch T_i : J_i -> T_i(J_i). Every family shipped here has
/// |T_i'| monotone on its domain, which makes endpoint evaluation an exact
/// enclosure of log|T_i'| on any subinterval.
class Branch {
public:
    Branch(BranchFamily family, Interval domain);

    const BranchFamily& family() const { return family_; }
    const Interval& domain() const { return domain_; }
    const Interval& image() const { return image_; }
    bool increasing() const { return increasing_; }

    double operator()(double x) const;
    double derivative(double x) const;

    /// x in J_i with T_i(x) = y. Throws OutOfImage when y misses the image by more than 1e-12.
    double inverse(double y) const;
    /// T_i^{-1}(Y) for a subinterval Y of the image.
    Interval inverse(const Interval& y) const;

    /// Enclosure of log|T_i'| over a subinterval of the domain.
    Interval log_derivative(const Interval& x) const;

private:
    BranchFamily family_;
    Interval domain_;
    Interval image_;
    bool increasing_ = true;
};

struct ParabolicOrbit {
    std::vector<double> points;  // x, T(x), ..., T^{m-1}(x)
    Word symbols;                // branch visited at each point
    double beta = 0.0;           // fitted exponent of ||(T^m)'| - 1| ~ L |x - w|^beta
    double L = 0.0;

    std::size_t period() const { return symbols.size(); }
};

/// Transition matrix stored row-major as 0/1 bytes.
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(std::size_t p) : p_(p), a_(p * p, 0) {}

    std::size_t size() const { return p_; }
    bool operator()(std::size_t i, std::size_t j) const { return a_[i * p_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { a_[i * p_ + j] = v ? 1 : 0; }
    bool full() const;

    friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

private:
    std::size_t p_ = 0;
    std::vector<std::uint8_t> a_;
};

struct MapConfig {
    std::vector<Branch> branches;
    std::optional<TransitionMatrix> transition;  // derived from images when empty
    int period_bound = 3;
    int transitivity_bound = 64;
};

/// A validated Markov interval map (Lambda, T). Immutable after construction.
class MarkovMap {
public:
    std::size_t symbols() const { return branches_.size(); }
    const std::vector<Branch>& branches() const { return branches_; }
    const Branch& branch(Symbol i) const { return branches_[static_cast<std::size_t>(i)]; }
    const TransitionMatrix& transition() const { return transition_; }
    bool allowed(Symbol i, Symbol j) const {
        return transition_(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    /// k with A^{k+1} > 0 entrywise.
    int aperiodicity_power() const { return aperiodicity_power_; }
    const std::vector<ParabolicOrbit>& parabolic_orbits() const { return parabolic_; }
    bool parabolic() const { return !parabolic_.empty(); }

    /// span(Pi([i])): hull of the repeller inside the first-level cylinder.
    const Interval& core(Symbol i) const { return cores_[static_cast<std::size_t>(i)]; }

    /// Symbols that code some parabolic orbit point.
    std::vector<Symbol> parabolic_symbols() const;

    bool admissible(const Word& w) const;

private:
    friend MarkovMap build_map(const MapConfig& config);

    std::vector<Branch> branches_;
    TransitionMatrix transition_;
    int aperiodicity_power_ = 0;
    std::vector<ParabolicOrbit> parabolic_;
    std::vector<Interval> cores_;
};

MarkovMap build_map(const MapConfig& config);

/// x in J_i with T_i(x) = y.
double inverse_branch(const MarkovMap& map, Symbol i, double y);

struct ExponentFit {
    double beta = 0.0;
    double L = 0.0;
    double max_residual = 0.0;
    std::optional<double> analytic_beta;
    std::optional<double> analytic_L;
};

/// Fits log||(T^m)'(x)| - 1| against log|x - w| on one-sided offsets 2^-5 ... 2^-30.
ExponentFit parabolic_exponent(const MarkovMap& map, const ParabolicOrbit& orbit);

/// Composite derivative of T^m along the orbit word starting at x.
double orbit_derivative(const MarkovMap& map, const Word& symbols, double x);

namespace presets {

MapConfig doubling();
MapConfig golden_mean();
/// Two full linear branches with slopes 2 and 4 on [0, 1/2] and [1/2, 3/4].
MapConfig two_slope();
MapConfig manneville_pomeau(double s);
MapConfig farey();

/// Root of x + c x^(1+s) = 1 in (0, 1), the split point of the parabolic map.
double power_split_point(double c, double s);

}  // namespace presets

}  // namespace multifractal
