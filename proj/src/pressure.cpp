#include "multifractal/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// A rotation of a parabolic cycle, read as a periodic symbol sequence.
struct Rotation {
    const Word* cycle;
    std::size_t shift;
    std::size_t predecessor;  // rotation index of (last symbol) + this

    Symbol at(std::size_t pos) const { return (*cycle)[(shift + pos) % cycle->size()]; }
};

std::vector<Rotation> parabolic_rotations(const MarkovMap& map) {
    std::vector<Rotation> rot;
    std::vector<std::size_t> first;
    for (const auto& orbit : map.parabolic_orbits()) {
        first.push_back(rot.size());
        for (std::size_t q = 0; q < orbit.period(); ++q) rot.push_back({&orbit.symbols, q, 0});
    }
    std::size_t o = 0;
    for (const auto& orbit : map.parabolic_orbits()) {
        const std::size_t m = orbit.period();
        for (std::size_t q = 0; q < m; ++q) rot[first[o] + q].predecessor = first[o] + (q + m - 1) % m;
        ++o;
    }
    return rot;
}

std::size_t max_period(const MarkovMap& map) {
    std::size_t m = 0;
    for (const auto& orbit : map.parabolic_orbits()) m = std::max(m, orbit.period());
    return m;
}

struct CwResult {
    double lower = 0.0;  // log of the smallest ratio
    double upper = 0.0;  // log of the largest ratio
};

struct Sweep {
    double min_ratio = kInf;
    double max_ratio = 0.0;
    double max_y = 0.0;
    bool degenerate = false;
};

Sweep combine_sweeps(const Sweep& a, const Sweep& b) {
    return {std::min(a.min_ratio, b.min_ratio), std::max(a.max_ratio, b.max_ratio),
            std::max(a.max_y, b.max_y), a.degenerate || b.degenerate};
}

constexpr std::size_t kSweepChunk = std::size_t{1} << 15;

}  // namespace

int minimal_level(const MarkovMap& map, const Potential& f) {
    const int chain = static_cast<int>(2 * max_period(map));
    return std::max({1, f.depth(), chain});
}

LeafGraph::LeafGraph(const MarkovMap& map, std::span<const Potential* const> potentials, int n,
                     const PressureOptions& options)
    : level_(n), potentials_(potentials.size()) {
    const std::size_t p = map.symbols();
    const auto rot = parabolic_rotations(map);
    for (const Potential* f : potentials) {
        if (n < minimal_level(map, *f)) {
            throw Error(ErrorKind::LevelTooLarge,
                        "level " + std::to_string(n) + " is below the minimal level " +
                            std::to_string(minimal_level(map, *f)));
        }
    }
    if (rot.empty() && n < 1) throw Error(ErrorKind::LevelTooLarge, "level must be positive");

    const std::uint64_t dense_count = count_words(map, n);
    if (dense_count > options.max_states) {
        throw Error(ErrorKind::LevelTooLarge, std::to_string(dense_count) +
                                                  " leaf states exceed the cap " +
                                                  std::to_string(options.max_states));
    }
    const double code_space = std::pow(static_cast<double>(p), n);
    if (code_space > static_cast<double>(std::uint64_t{1} << 28)) {
        throw Error(ErrorKind::LevelTooLarge, "word code space too large at this level");
    }
    const auto nn = static_cast<std::size_t>(n);
    const int K = rot.empty() ? n : std::max(n + 1, options.chain_factor * n);
    chain_length_ = K;
    const auto KK = static_cast<std::size_t>(K);

    // n-word codes that start a parabolic chain.
    std::vector<std::int32_t> chain_rot(static_cast<std::size_t>(code_space), -1);
    for (std::size_t r = 0; r < rot.size(); ++r) {
        std::size_t code = 0;
        for (std::size_t k = 0; k < nn; ++k) code = code * p + static_cast<std::size_t>(rot[r].at(k));
        chain_rot[code] = static_cast<std::int32_t>(r);
    }

    // Dense leaves: admissible n-words that are not chain prefixes.
    std::vector<std::uint32_t> dense_index(static_cast<std::size_t>(code_space), kNone);
    std::vector<std::size_t> dense_code;
    std::vector<Interval> span;
    {
        WordEnumerator e(map, n, std::numeric_limits<std::uint64_t>::max());
        Word w;
        while (e.next(w)) {
            std::size_t code = 0;
            for (Symbol s : w) code = code * p + static_cast<std::size_t>(s);
            if (chain_rot[code] >= 0) continue;
            dense_index[code] = static_cast<std::uint32_t>(dense_code.size());
            dense_code.push_back(code);
            span.push_back(cylinder_interval(map, w));
        }
    }

    // Chain leaves P_k(r) j for n <= k < K, then P_K(r).
    // chain_index[(r * (K - n) + (k - n)) * p + j]
    std::vector<std::uint32_t> chain_index(rot.size() * (KK - nn) * p, kNone);
    std::vector<std::uint32_t> chain_full(rot.size(), kNone);
    struct ChainLeaf {
        std::size_t rot;
        std::size_t k;  // K for the terminal leaf
    };
    std::vector<ChainLeaf> chain_info;  // indexed by state - dense count
    const auto cidx = [&](std::size_t r, std::size_t k, std::size_t j) -> std::uint32_t& {
        return chain_index[(r * (KK - nn) + (k - nn)) * p + j];
    };
    for (std::size_t k = nn; k < KK; ++k) {
        for (std::size_t r = 0; r < rot.size(); ++r) {
            const Symbol head = rot[r].at(0);
            const Symbol last = rot[r].at(k - 1);
            for (std::size_t j = 0; j < p; ++j) {
                const auto js = static_cast<Symbol>(j);
                if (js == rot[r].at(k) || !map.allowed(last, js)) continue;
                // span of sigma(P_k(r) j) = P_{k-1}(sigma r) j
                const std::size_t sr = (r + 1 < rot.size() && rot[r + 1].cycle == rot[r].cycle)
                                           ? r + 1
                                           : r + 1 - rot[r].cycle->size();
                Interval tail;
                if (k == nn) {
                    std::size_t code = 0;
                    for (std::size_t t = 0; t + 1 < nn; ++t)
                        code = code * p + static_cast<std::size_t>(rot[sr].at(t));
                    code = code * p + j;
                    tail = span[dense_index[code]];
                } else {
                    tail = span[cidx(sr, k - 1, j)];
                }
                cidx(r, k, j) = static_cast<std::uint32_t>(span.size());
                span.push_back(map.branch(head).inverse(tail));
                chain_info.push_back({r, k});
            }
        }
    }
    {
        // span of P_k(r), built up from k = 1
        std::vector<Interval> pk(rot.size());
        for (std::size_t r = 0; r < rot.size(); ++r) pk[r] = map.core(rot[r].at(0));
        for (std::size_t k = 2; k <= KK; ++k) {
            std::vector<Interval> next(rot.size());
            for (std::size_t r = 0; r < rot.size(); ++r) {
                const std::size_t sr = (r + 1 < rot.size() && rot[r + 1].cycle == rot[r].cycle)
                                           ? r + 1
                                           : r + 1 - rot[r].cycle->size();
                next[r] = map.branch(rot[r].at(0)).inverse(pk[sr]);
            }
            pk.swap(next);
        }
        for (std::size_t r = 0; r < rot.size(); ++r) {
            chain_full[r] = static_cast<std::uint32_t>(span.size());
            span.push_back(pk[r]);
            chain_info.push_back({r, KK});
        }
    }
    const std::size_t n_dense = dense_code.size();
    const std::size_t n_states = span.size();
    sweep_from_ = n_dense;

    // First n symbols of a leaf.
    const auto leaf_prefix = [&](std::size_t s, Word& out) {
        out.resize(nn);
        if (s < n_dense) {
            std::size_t code = dense_code[s];
            for (std::size_t t = nn; t-- > 0;) {
                out[t] = static_cast<Symbol>(code % p);
                code /= p;
            }
        } else {
            const Rotation& r = rot[chain_info[s - n_dense].rot];
            for (std::size_t t = 0; t < nn; ++t) out[t] = r.at(t);
        }
    };

    // Leaf containing [u], where u = i + leaf s; get(pos) reads u, len is |u|.
    const auto leaf_of = [&](Symbol i, std::size_t s) -> std::uint32_t {
        std::size_t len;
        const ChainLeaf* info = s >= n_dense ? &chain_info[s - n_dense] : nullptr;
        Word pre;
        leaf_prefix(s, pre);
        const auto get = [&](std::size_t pos) -> Symbol {
            if (pos == 0) return i;
            const std::size_t q = pos - 1;
            if (q < nn) return pre[q];
            const Rotation& r = rot[info->rot];
            if (q < info->k) return r.at(q);
            // q == k: the divergent symbol of a chain leaf
            for (std::size_t j = 0; j < p; ++j)
                if (cidx(info->rot, info->k, j) == s) return static_cast<Symbol>(j);
            return -1;
        };
        if (info == nullptr) {
            len = nn + 1;
        } else {
            len = info->k == KK ? KK + 1 : info->k + 2;
        }
        std::size_t code = 0;
        for (std::size_t t = 0; t < nn; ++t) code = code * p + static_cast<std::size_t>(get(t));
        if (chain_rot[code] < 0) return dense_index[code];
        const auto r = static_cast<std::size_t>(chain_rot[code]);
        // Predecessor shortcut: following the cycle one more step.
        if (info != nullptr && rot[info->rot].predecessor == r) {
            if (info->k == KK || info->k + 1 == KK) return chain_full[r];
            for (std::size_t j = 0; j < p; ++j)
                if (cidx(info->rot, info->k, j) == s) return cidx(r, info->k + 1, j);
        }
        std::size_t m = nn;
        while (m < len && m < KK && get(m) == rot[r].at(m)) ++m;
        if (m >= KK) return chain_full[r];
        if (m == len) throw std::logic_error("leaf graph closure violated");
        return cidx(r, m, static_cast<std::size_t>(get(m)));
    };

    offsets_.assign(n_states + 1, 0);
    targets_.reserve(n_states * p);
    sites_.reserve(n_states * p * potentials_);
    Word word;
    Word pre;
    for (std::size_t s = 0; s < n_states; ++s) {
        leaf_prefix(s, pre);
        for (std::size_t i = 0; i < p; ++i) {
            const auto is = static_cast<Symbol>(i);
            if (!map.allowed(is, pre[0])) continue;
            targets_.push_back(leaf_of(is, s));
            word.assign(1, is);
            word.insert(word.end(), pre.begin(), pre.end());
            const Interval x = map.branch(is).inverse(span[s]);
            for (const Potential* f : potentials) sites_.push_back(f->site(map, word, x));
        }
        offsets_[s + 1] = static_cast<std::uint32_t>(targets_.size());
    }
}

namespace {

// Collatz-Wielandt bounds for the spectral radius of the nonnegative matrix
// with log weights lw on the graph rows; x is the warm-start vector.
CwResult collatz_wielandt(std::span<const std::uint32_t> offsets,
                          std::span<const std::uint32_t> targets, std::span<const double> lw,
                          std::span<double> x, std::size_t sweep_from,
                          const PressureOptions& options) {
    const std::size_t n = offsets.size() - 1;
    const std::size_t d = sweep_from;
    double shift = -kInf;
    for (double v : lw) shift = std::max(shift, v);
    std::vector<double> w(lw.size());
    bool underflow = false;
    for (std::size_t e = 0; e < lw.size(); ++e) {
        w[e] = std::exp(lw[e] - shift);
        if (w[e] == 0.0) underflow = true;
    }
    std::vector<double> y(n);

    // One multiplication over states [lo_state, hi_state); ratios against x.
    const auto sweep = [&](std::size_t lo_state, std::size_t hi_state) {
        const std::size_t count = hi_state - lo_state;
        const std::size_t chunks = count >= 2 * kSweepChunk ? (count + kSweepChunk - 1) / kSweepChunk : 1;
        return parallel_reduce(
            chunks, Sweep{},
            [&](std::size_t c) {
                Sweep part;
                const std::size_t lo = lo_state + c * kSweepChunk;
                const std::size_t hi = chunks == 1 ? hi_state : std::min(hi_state, lo + kSweepChunk);
                for (std::size_t s = lo; s < hi; ++s) {
                    double acc = 0.0;
                    for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e)
                        acc += w[e] * x[targets[e]];
                    y[s] = acc;
                    const double ratio = acc / x[s];
                    if (!(acc > 0.0) || !std::isfinite(ratio)) part.degenerate = true;
                    part.min_ratio = std::min(part.min_ratio, ratio);
                    part.max_ratio = std::max(part.max_ratio, ratio);
                    part.max_y = std::max(part.max_y, acc);
                }
                return part;
            },
            combine_sweeps);
    };

    // Chain states hang off the dense block: for a trial eigenvalue lambda
    // their eigenvector entries follow from the dense ones by one backward
    // pass (deeper chain states have larger indices).
    double max_self = 0.0;
    for (std::size_t s = d; s < n; ++s)
        for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e)
            if (targets[e] == s) max_self = std::max(max_self, w[e]);
    const auto fill_chains = [&](double lambda) {
        for (std::size_t s = n; s-- > d;) {
            double acc = 0.0, self = 0.0;
            for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e) {
                if (targets[e] == s) {
                    self += w[e];
                } else {
                    acc += w[e] * x[targets[e]];
                }
            }
            x[s] = acc / (lambda - self);
        }
    };
    // Power iteration on the dense block with chains slaved to lambda.
    // Returns the dense ratio range.
    // Stops early once the ratios certify which side of lambda g(lambda) is on.
    const auto dense_ratios = [&](double lambda, bool decide) {
        Sweep sw;
        for (int it = 0; it < options.max_iterations; ++it) {
            if (d < n) fill_chains(lambda);
            sw = sweep(0, d);
            if (sw.degenerate) return sw;
            if (std::log(sw.max_ratio / sw.min_ratio) <= options.eigen_tol) break;
            if (decide && (sw.min_ratio >= lambda || sw.max_ratio <= lambda)) break;
            for (std::size_t s = 0; s < d; ++s) x[s] = y[s] / sw.max_y;
        }
        return sw;
    };

    if (!underflow) {
        for (std::size_t s = 0; s < n; ++s)
            if (!(x[s] > 0.0) || !std::isfinite(x[s])) x[s] = 1.0;
        bool ok = true;
        if (d < n) {
            // rho solves g(lambda) = lambda with g decreasing: bracket and refine in log lambda.
            double row_max = 0.0, row_min = kInf;
            for (std::size_t s = 0; s < n; ++s) {
                double r = 0.0;
                for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e) r += w[e];
                row_max = std::max(row_max, r);
                row_min = std::min(row_min, r);
            }
            double a = std::max(row_min, max_self * (1.0 + 1e-15));
            double b = row_max;
            if (!(a < b)) a = b;
            double lambda = std::sqrt(a * b);
            for (int outer = 0; outer < 200 && std::log(b / a) > options.eigen_tol; ++outer) {
                const Sweep sw = dense_ratios(lambda, true);
                if (sw.degenerate) {
                    ok = false;
                    break;
                }
                if (sw.min_ratio >= lambda) a = lambda;
                if (sw.max_ratio <= lambda) b = lambda;
                if (sw.min_ratio < lambda && sw.max_ratio > lambda) break;
                // fixed-point step, kept inside the bracket
                const double g = std::sqrt(sw.min_ratio * sw.max_ratio);
                lambda = (g > a && g < b) ? g : std::sqrt(a * b);
            }
            if (ok) ok = !dense_ratios(lambda, false).degenerate;
            if (ok) fill_chains(lambda);
        } else {
            ok = !dense_ratios(0.0, false).degenerate;
        }
        if (ok) {
            const Sweep full = sweep(0, n);
            if (!full.degenerate) {
                return {std::log(full.min_ratio) + shift, std::log(full.max_ratio) + shift};
            }
        }
    }

    // Log-space fallback for weights or vectors spanning more than the double range.
    std::vector<double> lx(n);
    for (std::size_t s = 0; s < n; ++s) lx[s] = x[s] > 0.0 ? std::log(x[s]) : 0.0;
    std::vector<double> ly(n);
    double lo = 0.0, hi = 0.0;
    for (int it = 0; it < options.max_iterations; ++it) {
        lo = kInf;
        hi = -kInf;
        double top = -kInf;
        for (std::size_t s = 0; s < n; ++s) {
            LogSumExp acc;
            for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e) acc.add(lw[e] + lx[targets[e]]);
            ly[s] = acc.value();
            lo = std::min(lo, ly[s] - lx[s]);
            hi = std::max(hi, ly[s] - lx[s]);
            top = std::max(top, ly[s]);
        }
        if (hi - lo <= options.eigen_tol) break;
        for (std::size_t s = 0; s < n; ++s) lx[s] = ly[s] - top;
    }
    for (std::size_t s = 0; s < n; ++s) x[s] = std::exp(std::max(lx[s], -700.0));
    return {lo, hi};
}

}  // namespace

double LeafGraph::pressure_side(std::span<const double> coefficients, Side side,
                               std::vector<double>* warm, const PressureOptions& options) const {
    if (coefficients.size() != potentials_) {
        throw std::invalid_argument("coefficient count does not match potentials");
    }
    const std::size_t n = states();
    const std::size_t ne = targets_.size();
    std::vector<double> lw(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        Interval v = Interval::point(0.0);
        for (std::size_t j = 0; j < potentials_; ++j) v += coefficients[j] * sites_[e * potentials_ + j];
        lw[e] = side == Side::Lower ? v.lo : v.hi;
    }
    std::vector<double> local;
    std::vector<double>& x = warm ? *warm : local;
    if (x.size() != n) x.assign(n, 1.0);
    const CwResult r = collatz_wielandt(offsets_, targets_, lw, x, sweep_from_, options);
    return side == Side::Lower ? r.lower : r.upper;
}

Interval LeafGraph::pressure(std::span<const double> coefficients, std::vector<double>* warm,
                             const PressureOptions& options) const {
    std::vector<double> local_lo, local_hi;
    std::vector<double>* w_lo = warm ? &warm[0] : &local_lo;
    std::vector<double>* w_hi = warm ? &warm[1] : &local_hi;
    return {pressure_side(coefficients, Side::Lower, w_lo, options),
            pressure_side(coefficients, Side::Upper, w_hi, options)};
}

namespace {

std::string describe(const Potential& f) {
    std::ostringstream os;
    os.precision(6);
    os << f.constant_part();
    for (const auto& t : f.terms()) {
        os << (t.coefficient < 0 ? " - " : " + ") << std::abs(t.coefficient) << "*";
        if (const auto* tab = std::get_if<Potential::Table>(&t.kind)) {
            os << "table[depth " << tab->depth << "]";
        } else if (std::holds_alternative<Potential::LogDerivative>(t.kind)) {
            os << "log|T'|";
        } else {
            os << "pointwise";
        }
    }
    return os.str();
}

}  // namespace

PressureBracket pressure_bracket(const MarkovMap& map, const Potential& f, int n,
                                 const PressureOptions& options) {
    const Potential* pots[] = {&f};
    const LeafGraph g(map, pots, n, options);
    const double one[] = {1.0};
    const Interval b = g.pressure(one, nullptr, options);
    PressureBracket out;
    out.level = n;
    out.lower = b.lo;
    out.upper = std::max(b.lo, b.hi);
    out.value = 0.5 * (out.lower + out.upper);
    out.potential = describe(f);
    return out;
}

PressureBracket pressure(const MarkovMap& map, const Potential& f, double tol,
                         const PressureOptions& options) {
    if (!(tol > 0.0)) throw Error(ErrorKind::ConfigError, "tolerance must be positive");
    PressureBracket best;
    bool have = false;
    for (int n = minimal_level(map, f); n <= options.max_level; ++n) {
        if (count_words(map, n) > options.max_states) break;
        const PressureBracket b = pressure_bracket(map, f, n, options);
        if (!have || b.width() < best.width()) best = b;
        have = true;
        if (b.width() <= tol) return b;
    }
    if (!have) throw Error(ErrorKind::LevelTooLarge, "no level fits the state cap");
    throw NotConverged("pressure bracket width " + std::to_string(best.width()) +
                           " above tolerance at level " + std::to_string(best.level),
                       best.interval());
}

RootBracket bowen_root(const MarkovMap& map, double tol, const PressureOptions& options) {
    if (!(tol > 0.0)) throw Error(ErrorKind::ConfigError, "tolerance must be positive");
    const Potential psi = Potential::geometric(1.0);
    const Potential* pots[] = {&psi};
    const bool parabolic = map.parabolic();
    // P(-t psi) <= P(0) - t min psi, so the root lies below P(0)/min psi.
    double t_max = 1.0;
    if (!parabolic) {
        const double min_psi = psi.range(map).lo;
        t_max = std::log(static_cast<double>(map.symbols())) / min_psi + 1.0;
    }
    RootBracket best{0.0, t_max, 0.5 * t_max, 0};
    for (int n = minimal_level(map, psi); n <= options.max_level; ++n) {
        if (count_words(map, n) > options.max_states) break;
        const LeafGraph g(map, pots, n, options);
        std::vector<double> warm[2];
        const auto side = [&](double t, LeafGraph::Side which) {
            const double c[] = {-t};
            return g.pressure_side(c, which, &warm[which == LeafGraph::Side::Upper], options);
        };
        const Interval lo_side = bisect_predicate(
            [&](double t) { return side(t, LeafGraph::Side::Lower) > 0.0; }, 0.0, t_max, tol / 8);
        double upper = t_max;
        if (!parabolic) {
            upper = bisect_predicate(
                        [&](double t) { return side(t, LeafGraph::Side::Upper) >= 0.0; },
                        lo_side.lo, t_max, tol / 8)
                        .hi;
        }
        RootBracket r{lo_side.lo, std::max(upper, lo_side.lo), 0.0, n};
        r.value = 0.5 * (r.lower + r.upper);
        if (r.width() < best.width()) best = r;
        if (r.width() <= tol) return r;
    }
    throw NotConverged("Bowen root enclosure width " + std::to_string(best.width()) +
                           " above tolerance",
                       best.interval());
}

Potential normalize_potential(const MarkovMap& map, const Potential& phi_raw, double tol,
                              const PressureOptions& options) {
    const PressureBracket pb = pressure(map, phi_raw, tol, options);
    const Potential phi = phi_raw.shifted(pb.value);
    const Potential* pots[] = {&phi};
    const LeafGraph g(map, pots, pb.level, options);
    double sup = -kInf;
    for (std::size_t e = 0; e < g.edges(); ++e) sup = std::max(sup, g.edge_site(e, 0).hi);
    if (!(sup < 0.0)) {
        throw Error(ErrorKind::NotStrictlyNegative,
                    "sup phi = " + std::to_string(sup) + " after subtracting P = " +
                        std::to_string(pb.value));
    }
    return phi;
}

}  // namespace multifractal
