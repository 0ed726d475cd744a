#include "multifractal/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multifractal/error.hpp"

namespace multifractal {

namespace {

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// Enclosure of the table value over all admissible completions of `prefix`.
Interval table_site(const MarkovMap& map, const Potential::Table& t,
                    std::span<const Symbol> prefix) {
    const std::size_t p = map.symbols();
    const auto d = static_cast<std::size_t>(t.depth);
    if (prefix.size() >= d) {
        std::size_t code = 0;
        for (std::size_t k = 0; k < d; ++k) code = code * p + static_cast<std::size_t>(prefix[k]);
        return Interval::point(t.values[code]);
    }
    Interval out{kInf, -kInf};
    Word w(prefix.begin(), prefix.end());
    const auto extend = [&](auto&& self) -> void {
        if (w.size() == d) {
            std::size_t code = 0;
            for (Symbol s : w) code = code * p + static_cast<std::size_t>(s);
            out = join(out, Interval::point(t.values[code]));
            return;
        }
        for (Symbol s = 0; s < static_cast<Symbol>(p); ++s) {
            if (!w.empty() && !map.allowed(w.back(), s)) continue;
            w.push_back(s);
            self(self);
            w.pop_back();
        }
    };
    extend(extend);
    return out;
}

}  // namespace

Potential Potential::constant(double c) {
    Potential f;
    f.constant_ = c;
    return f;
}

Potential Potential::locally_constant(std::size_t symbols, int depth, std::vector<double> values) {
    if (depth < 1 || values.size() != ipow(symbols, depth)) {
        throw Error(ErrorKind::ConfigError, "locally constant table needs p^depth entries");
    }
    Potential f;
    f.terms_.push_back(Term{1.0, Table{depth, std::move(values)}});
    return f;
}

Potential Potential::bernoulli(const std::vector<double>& probabilities) {
    std::vector<double> logs;
    for (double q : probabilities) {
        if (!(q > 0.0)) throw Error(ErrorKind::ConfigError, "Bernoulli weights must be positive");
        logs.push_back(std::log(q));
    }
    return locally_constant(probabilities.size(), 1, std::move(logs));
}

Potential Potential::geometric(double coefficient) {
    Potential f;
    f.terms_.push_back(Term{coefficient, LogDerivative{}});
    return f;
}

Potential Potential::pointwise(Pointwise fn) {
    Potential f;
    f.terms_.push_back(Term{1.0, std::move(fn)});
    return f;
}

Potential Potential::operator+(const Potential& o) const {
    Potential f = *this;
    f.terms_.insert(f.terms_.end(), o.terms_.begin(), o.terms_.end());
    f.constant_ += o.constant_;
    f.pressure_shift_ += o.pressure_shift_;
    return f;
}

Potential operator*(double c, const Potential& f) {
    Potential g = f;
    for (auto& t : g.terms_) t.coefficient *= c;
    g.constant_ *= c;
    g.pressure_shift_ *= c;
    return g;
}

Potential Potential::shifted(double c) const {
    Potential f = *this;
    f.constant_ -= c;
    f.pressure_shift_ += c;
    return f;
}

int Potential::depth() const {
    int d = 1;
    for (const auto& t : terms_) {
        if (const auto* tab = std::get_if<Table>(&t.kind)) d = std::max(d, tab->depth);
    }
    return d;
}

bool Potential::is_locally_constant() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const Term& t) { return std::holds_alternative<Table>(t.kind); });
}

bool Potential::involves_log_derivative() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) {
        return std::holds_alternative<LogDerivative>(t.kind) && t.coefficient != 0.0;
    });
}

Interval Potential::site(const MarkovMap& map, std::span<const Symbol> suffix,
                         const Interval& x) const {
    Interval out = Interval::point(constant_);
    for (const auto& t : terms_) {
        if (t.coefficient == 0.0) continue;
        Interval v;
        if (const auto* tab = std::get_if<Table>(&t.kind)) {
            v = table_site(map, *tab, suffix);
        } else if (std::holds_alternative<LogDerivative>(t.kind)) {
            v = map.branch(suffix.front()).log_derivative(x);
        } else {
            const auto& pw = std::get<Pointwise>(t.kind);
            const double centre =
                pw.per_branch[static_cast<std::size_t>(suffix.front())](x.mid());
            const double slack =
                pw.holder_constant * std::pow(0.5 * x.width(), pw.holder_exponent);
            v = {centre - slack, centre + slack};
        }
        out += t.coefficient * v;
    }
    return out;
}

Interval Potential::range(const MarkovMap& map) const {
    Interval out = Interval::point(constant_);
    for (const auto& t : terms_) {
        Interval v{kInf, -kInf};
        for (Symbol i = 0; i < static_cast<Symbol>(map.symbols()); ++i) {
            const Symbol one[1] = {i};
            Potential single;
            single.terms_.push_back(Term{1.0, t.kind});
            v = join(v, single.site(map, one, map.core(i)));
        }
        out += t.coefficient * v;
    }
    return out;
}

WordEnumerator::WordEnumerator(const MarkovMap& map, int n, std::uint64_t budget)
    : map_(&map), current_(static_cast<std::size_t>(std::max(n, 0)), 0) {
    if (n < 1) throw Error(ErrorKind::LevelTooLarge, "word length must be at least 1");
    check_budget(map, n, budget);
}

bool WordEnumerator::advance(std::size_t pos) {
    // Fill positions pos.. with the lexicographically smallest admissible tail.
    const auto p = static_cast<Symbol>(map_->symbols());
    if (pos == current_.size()) return true;
    for (Symbol s = 0; s < p; ++s) {
        if (pos > 0 && !map_->allowed(current_[pos - 1], s)) continue;
        current_[pos] = s;
        if (advance(pos + 1)) return true;
    }
    return false;
}

bool WordEnumerator::next(Word& out) {
    if (done_) return false;
    const auto p = static_cast<Symbol>(map_->symbols());
    if (!started_) {
        started_ = true;
        if (!advance(0)) {
            done_ = true;
            return false;
        }
        out = current_;
        return true;
    }
    // Odometer: bump the rightmost position that has an admissible larger symbol.
    for (std::size_t pos = current_.size(); pos-- > 0;) {
        for (Symbol s = current_[pos] + 1; s < p; ++s) {
            if (pos > 0 && !map_->allowed(current_[pos - 1], s)) continue;
            current_[pos] = s;
            if (advance(pos + 1)) {
                out = current_;
                return true;
            }
        }
    }
    done_ = true;
    return false;
}

std::uint64_t count_words(const MarkovMap& map, int n) {
    const std::size_t p = map.symbols();
    std::vector<double> v(p, 1.0);  // words of current length ending in each symbol
    for (int len = 1; len < n; ++len) {
        std::vector<double> next(p, 0.0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (map.transition()(i, j)) next[j] += v[i];
        v.swap(next);
    }
    double total = 0.0;
    for (double x : v) total += x;
    if (total >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(total);
}

void check_budget(const MarkovMap& map, int n, std::uint64_t budget) {
    const std::uint64_t count = count_words(map, n);
    if (count > budget) {
        throw Error(ErrorKind::LevelTooLarge, std::to_string(count) + " words at level " +
                                                  std::to_string(n) + " exceed budget " +
                                                  std::to_string(budget));
    }
}

std::vector<Word> enumerate_words(const MarkovMap& map, int n, std::uint64_t budget) {
    WordEnumerator e(map, n, budget);
    std::vector<Word> out;
    Word w;
    while (e.next(w)) out.push_back(w);
    return out;
}

Interval cylinder_interval(const MarkovMap& map, std::span<const Symbol> word) {
    Interval x = map.core(word.back());
    for (std::size_t k = word.size() - 1; k-- > 0;) x = map.branch(word[k]).inverse(x);
    return x;
}

Interval birkhoff_bracket(const MarkovMap& map, const Potential& f, std::span<const Symbol> word) {
    const std::size_t n = word.size();
    Interval x = map.core(word.back());
    Interval sum = f.site(map, word.subspan(n - 1), x);
    for (std::size_t k = n - 1; k-- > 0;) {
        x = map.branch(word[k]).inverse(x);
        sum += f.site(map, word.subspan(k), x);
    }
    return sum;
}

Cylinder cylinder(const MarkovMap& map, const Potential& phi, const Potential& psi,
                  const Word& word) {
    if (word.empty() || !map.admissible(word)) {
        throw Error(ErrorKind::InadmissibleSupport, "cylinder word is not admissible");
    }
    Cylinder c;
    c.word = word;
    c.interval = cylinder_interval(map, word);
    c.diameter = c.interval.width();
    c.birkhoff_phi = birkhoff_bracket(map, phi, word);
    c.birkhoff_psi = birkhoff_bracket(map, psi, word);
    return c;
}

namespace detail {

std::vector<SuffixRoot> suffix_roots(const MarkovMap& map, int length) {
    std::vector<SuffixRoot> roots;
    for (const Word& w : enumerate_words(map, length)) roots.push_back({w});
    return roots;
}

}  // namespace detail

DistortionReport distortion_report(const MarkovMap& map, const Potential& phi,
                                   const Potential& psi, int n, double k_n,
                                   std::uint64_t budget) {
    const Potential* pots[] = {&psi, &phi};
    struct Widths {
        double psi = 0.0;
        double phi = 0.0;
    };
    const Widths w = reduce_cylinders(
        map, n, std::span<const Potential* const>(pots), Widths{},
        [](Widths& acc, const CylinderView& c) {
            acc.psi = std::max(acc.psi, c.birkhoff[0].width());
            acc.phi = std::max(acc.phi, c.birkhoff[1].width());
        },
        [](const Widths& a, const Widths& b) {
            return Widths{std::max(a.psi, b.psi), std::max(a.phi, b.phi)};
        },
        budget);
    DistortionReport r;
    r.level = n;
    r.K_psi = w.psi / n;
    r.K_phi = w.phi / n;
    r.k_n = k_n;
    r.rho = std::max({r.K_psi, r.K_phi, r.k_n});
    return r;
}

double boundary_ratio(const MarkovMap& map, const Word& word, double x) {
    const Interval c = cylinder_interval(map, word);
    if (!c.contains(x, 1e-15)) {
        throw Error(ErrorKind::PointOutsideCylinder, "point not in cylinder");
    }
    if (c.width() <= 0.0) return 0.0;
    const double z = std::max(0.0, std::min(x - c.lo, c.hi - x));
    return std::min(0.5, z / c.width());
}

}  // namespace multifractal
