#include "multifractal/finite_measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

struct WordStat {
    Word word;
    Interval span;
    Interval psi;  // S_n psi
    Interval phi;  // S_n phi
};

std::vector<WordStat> word_stats(const MarkovMap& map, const Potential& phi, int n) {
    const Potential psi = Potential::geometric(1.0);
    const Potential* pots[] = {&psi, &phi};
    using Stats = std::vector<WordStat>;
    Stats out = reduce_cylinders(
        map, n, std::span<const Potential* const>(pots), Stats{},
        [](Stats& acc, const CylinderView& c) {
            acc.push_back({Word(c.word.begin(), c.word.end()), c.interval, c.birkhoff[0], c.birkhoff[1]});
        },
        [](Stats a, const Stats& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        });
    std::sort(out.begin(), out.end(),
              [](const WordStat& a, const WordStat& b) { return a.word < b.word; });
    return out;
}

void require_negative(const MarkovMap& map, const Potential& phi) {
    const Interval r = phi.range(map);
    if (!(r.hi < 0.0)) {
        throw Error(ErrorKind::NotStrictlyNegative, "sup phi = " + std::to_string(r.hi));
    }
}

// Enclosure of S_m psi over the cylinder [w], m <= |w|.
Interval partial_birkhoff(const MarkovMap& map, const Potential& psi, const Word& w, std::size_t m) {
    std::vector<Interval> spans(w.size());
    spans.back() = map.core(w.back());
    for (std::size_t j = w.size() - 1; j-- > 0;) spans[j] = map.branch(w[j]).inverse(spans[j + 1]);
    Interval sum{0.0, 0.0};
    for (std::size_t j = 0; j < m; ++j) sum += psi.site(map, std::span<const Symbol>(w).subspan(j), spans[j]);
    return sum;
}

bool joins(const MarkovMap& map, Symbol a, const Word& omega, Symbol b) {
    Symbol prev = a;
    for (Symbol s : omega) {
        if (!map.allowed(prev, s)) return false;
        prev = s;
    }
    return map.allowed(prev, b);
}

double sup_abs(const Interval& x) { return std::max(std::abs(x.lo), std::abs(x.hi)); }

BlockMeasure make_block(const MarkovMap& map, const Potential& phi, int n,
                        const std::vector<WordStat>& stats, const std::vector<double>& q) {
    BlockMeasure bm;
    bm.level = n;
    bm.connectors = connector_length(map, n);
    bm.connector_length = bm.connectors.length();
    CompensatedSum psi_lo, psi_hi, phi_lo, phi_hi;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (!(q[i] > 0.0)) continue;
        bm.words.push_back(stats[i].word);
        bm.q.push_back(q[i]);
        psi_lo.add(q[i] * stats[i].psi.lo);
        psi_hi.add(q[i] * stats[i].psi.hi);
        phi_lo.add(q[i] * stats[i].phi.lo);
        phi_hi.add(q[i] * stats[i].phi.hi);
    }
    bm.entropy_per_block = entropy(bm.q);
    bm.lyapunov = {psi_lo.value() / n, psi_hi.value() / n};
    bm.phi_avg = {phi_lo.value() / n, phi_hi.value() / n};
    const Potential psi = Potential::geometric(1.0);
    const double L = std::max(sup_abs(phi.range(map)), psi.range(map).hi);
    const int k = bm.connector_length;
    const double rho = distortion_report(map, phi, psi, n).rho;
    bm.error_bar = k * L / (n + k) + rho;
    return bm;
}

}  // namespace

const Word& ConnectorTable::connector(std::size_t u, std::size_t v) const {
    const auto it = exceptions_.find(u);
    if (it != exceptions_.end()) return it->second[v];
    const auto a = static_cast<std::size_t>(words_[u].back());
    const auto b = static_cast<std::size_t>(words_[v].front());
    return by_symbols_[a * symbols_ + b];
}

ConnectorTable connector_length(const MarkovMap& map, int n, int k_max) {
    if (k_max < 0) k_max = 3 * map.aperiodicity_power() + 8;
    const Potential psi = Potential::geometric(1.0);
    ConnectorTable t;
    t.level_ = n;
    t.words_ = enumerate_words(map, n);
    t.symbols_ = map.symbols();
    const std::size_t p = t.symbols_;
    const std::size_t nw = t.words_.size();

    // With psi >= 0 a word whose own sum is certified positive needs no check on the connector.
    const bool psi_nonnegative = psi.range(map).lo >= 0.0;
    std::vector<std::size_t> unchecked;
    for (std::size_t u = 0; u < nw; ++u) {
        if (!psi_nonnegative || !(birkhoff_bracket(map, psi, t.words_[u]).lo > 0.0)) unchecked.push_back(u);
    }

    for (int k = 0; k <= k_max; ++k) {
        const std::vector<Word> omegas = k == 0 ? std::vector<Word>{Word{}} : enumerate_words(map, k);
        bool ok = true;
        std::vector<Word> by(p * p);
        for (std::size_t a = 0; a < p && ok; ++a) {
            for (std::size_t b = 0; b < p && ok; ++b) {
                bool found = false;
                bool needed = false;
                for (std::size_t u = 0; u < nw && !needed; ++u)
                    needed = static_cast<std::size_t>(t.words_[u].back()) == a;
                for (const Word& w : omegas) {
                    if (joins(map, static_cast<Symbol>(a), w, static_cast<Symbol>(b))) {
                        by[a * p + b] = w;
                        found = true;
                        break;
                    }
                }
                // a pair of symbols nobody ends/starts with does not need a connector
                bool starts = false;
                for (std::size_t v = 0; v < nw && !starts; ++v)
                    starts = static_cast<std::size_t>(t.words_[v].front()) == b;
                if (!found && needed && starts) ok = false;
            }
        }
        if (!ok) continue;
        std::map<std::size_t, std::vector<Word>> exceptions;
        for (std::size_t u : unchecked) {
            std::vector<Word> row(nw);
            for (std::size_t v = 0; v < nw && ok; ++v) {
                bool found = false;
                for (const Word& w : omegas) {
                    if (!joins(map, t.words_[u].back(), w, t.words_[v].front())) continue;
                    Word joint = t.words_[u];
                    joint.insert(joint.end(), w.begin(), w.end());
                    joint.insert(joint.end(), t.words_[v].begin(), t.words_[v].end());
                    if (partial_birkhoff(map, psi, joint, static_cast<std::size_t>(n + k)).lo > 0.0) {
                        row[v] = w;
                        found = true;
                        break;
                    }
                }
                if (!found) ok = false;
            }
            if (!ok) break;
            exceptions.emplace(u, std::move(row));
        }
        if (!ok) continue;
        t.length_ = k;
        t.by_symbols_ = std::move(by);
        t.exceptions_ = std::move(exceptions);
        return t;
    }
    throw Error(ErrorKind::NoConnector, "no connector of length <= " + std::to_string(k_max) +
                                            " at level " + std::to_string(n));
}

double entropy(const std::vector<double>& q) {
    CompensatedSum h;
    for (double x : q)
        if (x > 0.0) h.add(-x * std::log(x));
    return h.value();
}

BlockMeasure block_measure(const MarkovMap& map, const Potential& phi, int n,
                           const std::vector<Word>& words, const std::vector<double>& q) {
    if (words.size() != q.size()) throw Error(ErrorKind::ConfigError, "one weight per word");
    CompensatedSum total;
    for (double x : q) {
        if (!(x >= 0.0)) throw Error(ErrorKind::ConfigError, "negative weight");
        total.add(x);
    }
    if (std::abs(total.value() - 1.0) > 1e-12) throw Error(ErrorKind::ConfigError, "weights do not sum to 1");
    const Potential psi = Potential::geometric(1.0);
    std::vector<WordStat> stats;
    for (const Word& w : words) {
        if (static_cast<int>(w.size()) != n || !map.admissible(w)) {
            throw Error(ErrorKind::InadmissibleSupport, "word outside C_n");
        }
        stats.push_back({w, cylinder_interval(map, w), birkhoff_bracket(map, psi, w),
                         birkhoff_bracket(map, phi, w)});
    }
    return make_block(map, phi, n, stats, q);
}

namespace {

struct Family {
    const std::vector<WordStat>* stats;
    std::vector<double> psi, phi;

    double log_z(double a, double b) const {
        LogSumExp z;
        for (std::size_t i = 0; i < psi.size(); ++i) z.add(a * psi[i] + b * phi[i]);
        return z.value();
    }
    // b with log Z(a, b) = 0; log Z decreases in b because phi < 0
    double b_of(double a) const {
        double lo = -1.0, hi = 1.0;
        while (log_z(a, lo) < 0.0) lo *= 2;
        while (log_z(a, hi) > 0.0) hi *= 2;
        return bisect_root([&](double b) { return log_z(a, b); }, lo, hi, 1e-14 * (1 + std::abs(hi)));
    }
    std::vector<double> weights(double a, double b) const {
        const double lz = log_z(a, b);
        std::vector<double> q(psi.size());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::exp(a * psi[i] + b * phi[i] - lz);
        return q;
    }
    double ratio(double a) const {
        const std::vector<double> q = weights(a, b_of(a));
        CompensatedSum num, den;
        for (std::size_t i = 0; i < q.size(); ++i) {
            num.add(-q[i] * phi[i]);
            den.add(q[i] * psi[i]);
        }
        return num.value() / den.value();
    }
};

}  // namespace

BlockMeasure optimize_block_weights(const MarkovMap& map, const Potential& phi, int n, double alpha) {
    require_negative(map, phi);
    const std::vector<WordStat> stats = word_stats(map, phi, n);
    Family fam{&stats, {}, {}};
    double rmin = kInf, rmax = -kInf;
    for (const WordStat& s : stats) {
        fam.psi.push_back(s.psi.mid());
        fam.phi.push_back(s.phi.mid());
        const double r = s.psi.mid() > 0.0 ? -s.phi.mid() / s.psi.mid() : kInf;
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    // constant ratio: every q meets the constraint; the best is the level-n Bowen measure
    if (rmax - rmin <= 1e-12 * (1 + std::abs(alpha)) && std::abs(alpha - rmin) <= 1e-9 * (1 + std::abs(alpha))) {
        const auto log_z = [&](double s) {
            LogSumExp z;
            for (double x : fam.psi) z.add(-s * x);
            return z.value();
        };
        double hi = 1.0;
        while (log_z(hi) > 0.0) hi *= 2;
        const double s = bisect_root(log_z, -hi, hi, 1e-14);
        std::vector<double> q(stats.size());
        CompensatedSum total;
        for (std::size_t i = 0; i < q.size(); ++i) total.add(q[i] = std::exp(-s * fam.psi[i]));
        for (double& x : q) x /= total.value();
        return make_block(map, phi, n, stats, q);
    }
    if (!(alpha > rmin && alpha < rmax)) {
        throw Error(ErrorKind::ConstraintInfeasible,
                    "alpha " + std::to_string(alpha) + " outside (" + std::to_string(rmin) + ", " +
                        std::to_string(rmax) + ") at level " + std::to_string(n));
    }
    // the ratio decreases in a (b(a) is convex)
    double lo = -1.0, hi = 1.0;
    for (int k = 0; k < 60 && fam.ratio(lo) < alpha; ++k) lo *= 2;
    for (int k = 0; k < 60 && fam.ratio(hi) > alpha; ++k) hi *= 2;
    const double a = bisect_root([&](double x) { return fam.ratio(x) - alpha; }, lo, hi,
                                 1e-13 * (1 + std::abs(lo) + std::abs(hi)));
    std::vector<double> q = fam.weights(a, fam.b_of(a));
    CompensatedSum total;
    for (double x : q) total.add(x);
    for (double& x : q) x /= total.value();
    return make_block(map, phi, n, stats, q);
}

namespace {

struct Window {
    std::vector<double> log_d_outer, log_d_inner;
};

Window window(const std::vector<WordStat>& stats, double alpha, double eps) {
    Window w;
    for (const WordStat& s : stats) {
        const Interval c = -1.0 * s.phi;
        const double lo = c.lo / s.psi.hi;
        const double hi = s.psi.lo > 0.0 ? c.hi / s.psi.lo : kInf;
        if (!(hi > alpha - eps && lo < alpha + eps)) continue;
        const double d = s.span.width();
        if (!(d > 0.0)) throw Error(ErrorKind::DegenerateCylinder, "zero diameter cylinder");
        w.log_d_outer.push_back(std::log(d));
        if (lo > alpha - eps && hi < alpha + eps) w.log_d_inner.push_back(std::log(d));
    }
    return w;
}

double diameter_root(const std::vector<double>& log_d) {
    if (log_d.size() <= 1) return 0.0;
    const auto sum = [&](double s) {
        LogSumExp z;
        for (double l : log_d) z.add(s * l);
        return z.value();
    };
    double hi = 1.0;
    while (sum(hi) > 0.0) hi *= 2;
    return bisect_root(sum, 0.0, hi, 1e-10);
}

}  // namespace

SnBracket bowen_sn(const MarkovMap& map, const Potential& phi, int n, double alpha, double eps) {
    require_negative(map, phi);
    const Window w = window(word_stats(map, phi, n), alpha, eps);
    if (w.log_d_outer.empty()) {
        throw Error(ErrorKind::EmptyWindow, "no " + std::to_string(n) + "-cylinder has ratio within " +
                                                std::to_string(eps) + " of " + std::to_string(alpha));
    }
    SnBracket out;
    out.level = n;
    out.words = w.log_d_outer.size();
    out.value = diameter_root(w.log_d_outer);
    out.upper = out.value;
    out.lower = w.log_d_inner.empty() ? 0.0 : diameter_root(w.log_d_inner);
    return out;
}

BlockMeasure diameter_block_weights(const MarkovMap& map, const Potential& phi, int n,
                                    double alpha, double eps) {
    const std::vector<WordStat> stats = word_stats(map, phi, n);
    const double s = bowen_sn(map, phi, n, alpha, eps).value;
    std::vector<double> q(stats.size(), 0.0);
    CompensatedSum total;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const Interval c = -1.0 * stats[i].phi;
        const double lo = c.lo / stats[i].psi.hi;
        const double hi = stats[i].psi.lo > 0.0 ? c.hi / stats[i].psi.lo : kInf;
        if (!(hi > alpha - eps && lo < alpha + eps)) continue;
        q[i] = std::pow(stats[i].span.width(), s);
        total.add(q[i]);
    }
    for (double& x : q) x /= total.value();
    return make_block(map, phi, n, stats, q);
}

SpreadStats spread_to_shift_invariant(const BlockMeasure& bm) {
    SpreadStats s;
    s.entropy = bm.entropy_per_block / (bm.level + bm.connector_length);
    s.lyapunov = {bm.lyapunov.lo - bm.error_bar, bm.lyapunov.hi + bm.error_bar};
    s.phi_avg = {bm.phi_avg.lo - bm.error_bar, bm.phi_avg.hi + bm.error_bar};
    return s;
}

}  // namespace multifractal
