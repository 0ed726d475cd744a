#pragma once

#include <map>
#include <utility>
#include <vector>

#include "multifractal/interval.hpp"
#include "multifractal/maps.hpp"
#include "multifractal/symbolic.hpp"

namespace multifractal {

/// Connector words omega(u, v) of a common length k for ordered pairs of
/// admissible n-words. Pairs are indexed by position in enumerate_words(map, n).
class ConnectorTable {
public:
    int level() const { return level_; }
    int length() const { return length_; }
    const std::vector<Word>& words() const { return words_; }
    const Word& connector(std::size_t u, std::size_t v) const;

private:
    friend ConnectorTable connector_length(const MarkovMap& map, int n, int k_max);

    int level_ = 0;
    int length_ = 0;
    std::vector<Word> words_;
    // by (last symbol of u, first symbol of v); valid unless u is listed below
    std::vector<Word> by_symbols_;
    std::size_t symbols_ = 0;
    // words whose own Birkhoff bracket does not certify expansion
    std::map<std::size_t, std::vector<Word>> exceptions_;
};

/// Smallest k such that every ordered pair u, v of n-words has an omega of
/// length k with u omega v admissible and inf S_{n+k} psi > 0 on [u omega v].
/// Ties go to the lexicographically smallest omega. k_max < 0 selects
/// 3 * aperiodicity_power + 8. Throws NoConnector past k_max.
ConnectorTable connector_length(const MarkovMap& map, int n, int k_max = -1);

struct BlockMeasure {
    int level = 0;
    int connector_length = 0;
    std::vector<Word> words;  // support with positive weight
    std::vector<double> q;
    ConnectorTable connectors;
    double entropy_per_block = 0.0;
    /// Per-symbol averages (1/n) sum q S_n f as enclosures from Birkhoff brackets.
    Interval lyapunov;
    Interval phi_avg;
    /// kL/(n+k) + rho_n: distance from these to the averages of the block measure.
    double error_bar = 0.0;
    double alpha() const { return -phi_avg.mid() / lyapunov.mid(); }
    /// entropy_per_block / sum q S_n psi
    double objective() const { return entropy_per_block / (level * lyapunov.mid()); }
};

/// Statistics of the block measure with weights q on `words` (n-words).
/// Throws InadmissibleSupport for inadmissible or wrong-length words and
/// ConfigError unless q is a probability vector.
BlockMeasure block_measure(const MarkovMap& map, const Potential& phi, int n,
                           const std::vector<Word>& words, const std::vector<double>& q);

/// Maximises entropy / sum q S_n psi subject to -sum q S_n phi / sum q S_n psi = alpha
/// over weights of the form q ~ exp(a S_n psi + b S_n phi). Throws
/// ConstraintInfeasible when alpha is outside the hull of word ratios.
BlockMeasure optimize_block_weights(const MarkovMap& map, const Potential& phi, int n, double alpha);

struct SnBracket {
    double value = 0.0;  // root over Y_{n,alpha,eps}
    double lower = 0.0;  // root over words whose ratio bracket lies inside the window
    double upper = 0.0;
    std::size_t words = 0;
    int level = 0;
};

/// s_n with sum over Y_{n,alpha,eps} of D_n^{s_n} = 1. Y holds the n-words
/// whose ratio bracket -S_n phi / S_n psi meets (alpha - eps, alpha + eps).
/// Throws EmptyWindow when Y is empty.
SnBracket bowen_sn(const MarkovMap& map, const Potential& phi, int n, double alpha, double eps);

/// q = D_n^{s_n} on Y_{n,alpha,eps}: the weights of the density construction.
BlockMeasure diameter_block_weights(const MarkovMap& map, const Potential& phi, int n,
                                    double alpha, double eps);

struct SpreadStats {
    double entropy = 0.0;  // per symbol, entropy_per_block / (n + k)
    Interval lyapunov;     // widened by the error bar
    Interval phi_avg;
    double alpha() const { return -phi_avg.mid() / lyapunov.mid(); }
};

/// Statistics of the shift-invariant average of a block measure (Abramov).
SpreadStats spread_to_shift_invariant(const BlockMeasure& bm);

/// -sum q log q with 0 log 0 = 0.
double entropy(const std::vector<double>& q);

}  // namespace multifractal
