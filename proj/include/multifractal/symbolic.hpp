#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "multifractal/interval.hpp"
#include "multifractal/maps.hpp"

namespace multifractal {

inline constexpr std::uint64_t kDefaultWordBudget = std::uint64_t{1} << 26;

/// A potential on Sigma_A, possibly a linear combination of primitive kinds
/// plus a constant. Every kind evaluates to an enclosure over the points of a
/// cylinder ("site bracket"), so Birkhoff sums built from sites are enclosures.
class Potential {
public:
    /// Depth-d locally constant: value depends on the first d symbols only.
    /// `values` is indexed by the base-p code of the d-word.
    struct Table {
        int depth = 1;
        std::vector<double> values;
    };
    /// psi = log|T'| composed with the coding map.
    struct LogDerivative {};
    /// Per-branch function of x, with declared Hoelder modulus |f(x)-f(y)| <= C|x-y|^theta.
    struct Pointwise {
        std::vector<std::function<double(double)>> per_branch;
        double holder_constant = 0.0;
        double holder_exponent = 1.0;
    };
    using Kind = std::variant<Table, LogDerivative, Pointwise>;
    struct Term {
        double coefficient = 1.0;
        Kind kind;
    };

    Potential() = default;

    static Potential constant(double c);
    static Potential locally_constant(std::size_t symbols, int depth, std::vector<double> values);
    /// phi_i = log p_i, the Bernoulli potential.
    static Potential bernoulli(const std::vector<double>& probabilities);
    /// coefficient * psi
    static Potential geometric(double coefficient);
    static Potential pointwise(Pointwise f);

    Potential operator+(const Potential& o) const;
    friend Potential operator*(double c, const Potential& f);

    /// f - c, recording c in pressure_shift().
    Potential shifted(double c) const;
    double pressure_shift() const { return pressure_shift_; }
    double constant_part() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }

    /// Largest table depth (at least 1).
    int depth() const;
    bool is_locally_constant() const;
    bool involves_log_derivative() const;

    /// Enclosure of f over the points of the cylinder starting with `suffix`
    /// whose span is `x` (the first site of a Birkhoff sum).
    Interval site(const MarkovMap& map, std::span<const Symbol> suffix, const Interval& x) const;

    /// Enclosure of {f(i) : i in Sigma_A}.
    Interval range(const MarkovMap& map) const;

private:
    std::vector<Term> terms_;
    double constant_ = 0.0;
    double pressure_shift_ = 0.0;
};

/// Stream of admissible n-words in lexicographic order.
class WordEnumerator {
public:
    WordEnumerator(const MarkovMap& map, int n, std::uint64_t budget = kDefaultWordBudget);
    bool next(Word& out);

private:
    const MarkovMap* map_;
    Word current_;
    bool started_ = false;
    bool done_ = false;
    bool advance(std::size_t pos);
};

/// Number of admissible n-words (sum of the entries of A^{n-1}); saturates at UINT64_MAX.
std::uint64_t count_words(const MarkovMap& map, int n);

/// Throws LevelTooLarge if the n-word count exceeds the budget.
void check_budget(const MarkovMap& map, int n, std::uint64_t budget = kDefaultWordBudget);

std::vector<Word> enumerate_words(const MarkovMap& map, int n,
                                  std::uint64_t budget = kDefaultWordBudget);

struct Cylinder {
    Word word;
    Interval interval;  // span Pi([word])
    double diameter = 0.0;
    Interval birkhoff_psi;
    Interval birkhoff_phi;
};

/// span Pi([word]) by composing inverse branches right to left.
Interval cylinder_interval(const MarkovMap& map, std::span<const Symbol> word);

/// Enclosure of S_n f over [word].
Interval birkhoff_bracket(const MarkovMap& map, const Potential& f, std::span<const Symbol> word);

Cylinder cylinder(const MarkovMap& map, const Potential& phi, const Potential& psi,
                  const Word& word);

/// View handed to bulk cylinder visitors; spans are valid only during the call.
struct CylinderView {
    std::span<const Symbol> word;
    Interval interval;
    std::span<const Interval> birkhoff;  // one per requested potential
};

/// Visits every admissible n-cylinder, grouped into chunks by their final
/// symbols, and folds chunk results in a fixed order.
template <class Acc, class Visit, class Combine>
Acc reduce_cylinders(const MarkovMap& map, int n, std::span<const Potential* const> potentials,
                     Acc identity, Visit visit, Combine combine,
                     std::uint64_t budget = kDefaultWordBudget);

struct DistortionReport {
    int level = 0;
    double K_psi = 0.0;
    double K_phi = 0.0;
    double k_n = 0.0;
    double rho = 0.0;
};

/// K_n(f) = max over n-cylinders of (max S_n f - min S_n f) / n.
DistortionReport distortion_report(const MarkovMap& map, const Potential& phi,
                                   const Potential& psi, int n, double k_n = 0.0,
                                   std::uint64_t budget = kDefaultWordBudget);

/// Z_n / D_n for a point x in the cylinder of `word`: relative distance to the boundary.
double boundary_ratio(const MarkovMap& map, const Word& word, double x);

}  // namespace multifractal

#include "multifractal/reduce_cylinders.ipp"
