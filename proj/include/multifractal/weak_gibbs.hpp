#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "multifractal/finite_measures.hpp"
#include "multifractal/interval.hpp"
#include "multifractal/maps.hpp"
#include "multifractal/symbolic.hpp"

namespace multifractal {

/// Sub-exponential error law of the weak Gibbs property: k_n = C / n^gamma,
/// or identically zero for true Gibbs measures.
struct KnLaw {
    bool exact = true;
    double C = 0.0;
    double gamma = 1.0;

    double operator()(int n) const { return exact ? 0.0 : C / std::pow(static_cast<double>(n), gamma); }
    static KnLaw declared(double C, double gamma) { return {false, C, gamma}; }
};

class WeakGibbsModel {
public:
    /// phi must already have zero pressure. Exact mode requires the masses
    /// exp(S_n phi) to be consistent (sum to one at every level); InvalidModel otherwise.
    WeakGibbsModel(const MarkovMap& map, Potential phi, KnLaw law = {});

    const MarkovMap& map() const { return *map_; }
    const Potential& phi() const { return phi_; }
    const KnLaw& law() const { return law_; }

private:
    const MarkovMap* map_;
    Potential phi_;
    KnLaw law_;
};

/// Enclosure of log nu[word].
Interval log_mass_bracket(const WeakGibbsModel& model, std::span<const Symbol> word);

/// [e^{-n k_n} e^{min S_n phi}, e^{n k_n} e^{max S_n phi}]
Interval cylinder_mass_bracket(const WeakGibbsModel& model, std::span<const Symbol> word);

struct LocalDimension {
    int depth = 0;
    /// -S_n phi / S_n psi enclosures for n = depth/2 ... depth.
    std::vector<Interval> ratios;
    double trend = 0.0;  // Cesaro mean of the ratio midpoints
    /// log nu(Delta_N) / log D_N
    Interval estimate;
    double boundary_ratio = 0.0;  // position of Delta_N inside Delta_{N/2}
    bool boundary_ok = false;
};

/// Symbolic local dimension along a word of depth N >= 4. The boundary check
/// asks that Delta_N sits at least `min_boundary_ratio` (relative) away from the
/// ends of Delta_{N/2}. Throws DegenerateCylinder when D_N underflows.
LocalDimension local_dimension(const WeakGibbsModel& model, const Word& word,
                               double min_boundary_ratio = 1e-3);

/// Words drawn symbol by symbol with probabilities proportional to the
/// midpoints of the child mass brackets. Sample i uses its own generator
/// seeded from (seed, i), so the list does not depend on the thread count.
std::vector<Word> sample_points(const WeakGibbsModel& model, std::size_t count, int depth,
                                std::uint64_t seed);

struct CoarsePoint {
    double alpha = 0.0;
    std::optional<SnBracket> s;  // empty when the window holds no cylinder
};

/// s_n over the windows (alpha - eps, alpha + eps) of the grid.
std::vector<CoarsePoint> coarse_spectrum(const WeakGibbsModel& model, int n,
                                         const std::vector<double>& alpha_grid, double eps);

}  // namespace multifractal
