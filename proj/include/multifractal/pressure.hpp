#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multifractal/interval.hpp"
#include "multifractal/maps.hpp"
#include "multifractal/symbolic.hpp"

namespace multifractal {

struct PressureOptions {
    /// Parabolic chains are followed to depth chain_factor * n.
    int chain_factor = 256;
    /// Cap on leaf states of the transfer graph.
    std::size_t max_states = std::size_t{1} << 21;
    /// Highest level tried by the adaptive drivers.
    int max_level = 40;
    /// Stop power iteration once the Collatz-Wielandt gap (in log) is below this.
    double eigen_tol = 1e-14;
    int max_iterations = 20000;
};

struct PressureBracket {
    int level = 0;
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;  // midpoint
    std::string potential;

    double width() const { return upper - lower; }
    Interval interval() const { return {lower, upper}; }
};

/// Transfer graph on a Markov partition of Sigma_A by cylinders: all admissible
/// n-words, except that words following a parabolic cycle are refined along
/// the cycle up to a chain depth. Every edge carries, for each potential, an
/// enclosure of its value on the cylinder [i leaf].
class LeafGraph {
public:
    LeafGraph(const MarkovMap& map, std::span<const Potential* const> potentials, int n,
              const PressureOptions& options = {});

    int level() const { return level_; }
    int chain_length() const { return chain_length_; }
    std::size_t states() const { return offsets_.size() - 1; }
    std::size_t potentials() const { return potentials_; }

    enum class Side { Lower, Upper };

    /// Enclosure of P(sum_j c_j f_j) from Collatz-Wielandt bounds of the
    /// lower and upper weight matrices. `warm`, if given, points to two
    /// vectors carrying eigenvector guesses between calls with nearby
    /// coefficients.
    Interval pressure(std::span<const double> coefficients, std::vector<double>* warm = nullptr,
                      const PressureOptions& options = {}) const;

    /// One end of the enclosure above.
    double pressure_side(std::span<const double> coefficients, Side side,
                         std::vector<double>* warm = nullptr,
                         const PressureOptions& options = {}) const;

    /// Enclosure of f_j on each edge; for tests.
    Interval edge_site(std::size_t edge, std::size_t j) const { return sites_[edge * potentials_ + j]; }
    std::size_t edges() const { return targets_.size(); }

private:
    int level_ = 0;
    int chain_length_ = 0;
    std::size_t potentials_ = 0;
    std::size_t sweep_from_ = 0;  // first chain state
    std::vector<std::uint32_t> offsets_;
    std::vector<std::uint32_t> targets_;
    std::vector<Interval> sites_;
};

PressureBracket pressure_bracket(const MarkovMap& map, const Potential& f, int n,
                                 const PressureOptions& options = {});

/// Raises the level until the bracket width is at most tol. Throws
/// NotConverged carrying the best bracket when the state cap is hit first.
PressureBracket pressure(const MarkovMap& map, const Potential& f, double tol,
                         const PressureOptions& options = {});

struct RootBracket {
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
    int level = 0;

    double width() const { return upper - lower; }
    Interval interval() const { return {lower, upper}; }
};

/// s with P(-s psi) = 0, the first zero of the nonincreasing map t -> P(-t psi).
/// With parabolic orbits P(-t psi) >= 0 everywhere and vanishes for t >= s,
/// so only the lower end is certified by brackets; the upper end uses s <= 1.
RootBracket bowen_root(const MarkovMap& map, double tol, const PressureOptions& options = {});

/// phi_raw - P(phi_raw), with the shift recorded on the potential.
Potential normalize_potential(const MarkovMap& map, const Potential& phi_raw, double tol,
                              const PressureOptions& options = {});

/// Smallest level at which the graph refines parabolic chains correctly.
int minimal_level(const MarkovMap& map, const Potential& f);

}  // namespace multifractal
