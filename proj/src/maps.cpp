#include "multifractal/maps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

constexpr double kEndpointTol = 1e-12;
constexpr double kParabolicTol = 1e-10;
constexpr double kUnitDerivativeTol = 1e-9;
constexpr int kDerivativeGrid = 1001;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double power_eval(double c, double s, double shift, double x) {
    return x + c * std::pow(x, 1.0 + s) - shift;
}

double power_derivative(double c, double s, double x) {
    return 1.0 + c * (1.0 + s) * std::pow(x, s);
}

// Safeguarded Newton for an increasing function on [lo, hi] with g(lo) <= 0 <= g(hi).
template <class G, class DG>
double newton_increasing(G g, DG dg, double lo, double hi) {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double gx = g(x);
        if (gx == 0.0) return x;
        if (gx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double next = x - gx / dg(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-17 + 1e-16 * std::abs(x) || hi - lo <= 1e-16) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

std::string describe(const Interval& x) {
    std::ostringstream os;
    os.precision(17);
    os << "[" << x.lo << ", " << x.hi << "]";
    return os.str();
}

}  // namespace

std::string family_name(const BranchFamily& f) {
    return std::visit(overloaded{
                          [](const family::Linear&) { return std::string("linear"); },
                          [](const family::MannevillePomeau&) {
                              return std::string("manneville_pomeau");
                          },
                          [](const family::FareyLeft&) { return std::string("farey_left"); },
                          [](const family::FareyRight&) { return std::string("farey_right"); },
                          [](const family::PowerInterpolated&) {
                              return std::string("power_interpolated");
                          },
                      },
                      f);
}

Branch::Branch(BranchFamily family, Interval domain) : family_(family), domain_(domain) {
    if (!(domain.lo < domain.hi) || domain.lo < -kEndpointTol || domain.hi > 1.0 + kEndpointTol) {
        throw Error(ErrorKind::MarkovViolation, "branch domain " + describe(domain) +
                                                    " is not a nondegenerate subinterval of [0,1]");
    }
    const double a = (*this)(domain.lo);
    const double b = (*this)(domain.hi);
    increasing_ = b > a;
    image_ = Interval::hull(a, b);
}

double Branch::operator()(double x) const {
    return std::visit(overloaded{
                          [x](const family::Linear& f) { return f.slope * x + f.offset; },
                          [x](const family::MannevillePomeau& f) {
                              return power_eval(1.0, f.s, f.shift, x);
                          },
                          [x](const family::FareyLeft&) { return x / (1.0 - x); },
                          [x](const family::FareyRight&) { return (1.0 - x) / x; },
                          [x](const family::PowerInterpolated& f) {
                              return power_eval(f.c, f.s, f.shift, x);
                          },
                      },
                      family_);
}

double Branch::derivative(double x) const {
    return std::visit(overloaded{
                          [](const family::Linear& f) { return f.slope; },
                          [x](const family::MannevillePomeau& f) {
                              return power_derivative(1.0, f.s, x);
                          },
                          [x](const family::FareyLeft&) { return 1.0 / ((1.0 - x) * (1.0 - x)); },
                          [x](const family::FareyRight&) { return -1.0 / (x * x); },
                          [x](const family::PowerInterpolated& f) {
                              return power_derivative(f.c, f.s, x);
                          },
                      },
                      family_);
}

double Branch::inverse(double y) const {
    if (!image_.contains(y, kEndpointTol)) {
        throw Error(ErrorKind::OutOfImage, "point " + std::to_string(y) + " outside image " +
                                               describe(image_));
    }
    y = std::clamp(y, image_.lo, image_.hi);
    const auto power_inverse = [&](double c, double s, double shift) {
        return newton_increasing([&](double x) { return power_eval(c, s, shift, x) - y; },
                                 [&](double x) { return power_derivative(c, s, x); }, domain_.lo,
                                 domain_.hi);
    };
    const double x = std::visit(
        overloaded{
            [y](const family::Linear& f) { return (y - f.offset) / f.slope; },
            [&](const family::MannevillePomeau& f) { return power_inverse(1.0, f.s, f.shift); },
            [y](const family::FareyLeft&) { return y / (1.0 + y); },
            [y](const family::FareyRight&) { return 1.0 / (1.0 + y); },
            [&](const family::PowerInterpolated& f) { return power_inverse(f.c, f.s, f.shift); },
        },
        family_);
    return std::clamp(x, domain_.lo, domain_.hi);
}

Interval Branch::inverse(const Interval& y) const {
    return Interval::hull(inverse(y.lo), inverse(y.hi));
}

Interval Branch::log_derivative(const Interval& x) const {
    const double a = std::log(std::abs(derivative(x.lo)));
    const double b = std::log(std::abs(derivative(x.hi)));
    return Interval::hull(a, b);
}

bool TransitionMatrix::full() const {
    return std::all_of(a_.begin(), a_.end(), [](std::uint8_t v) { return v != 0; });
}

std::vector<Symbol> MarkovMap::parabolic_symbols() const {
    std::vector<Symbol> out;
    for (const auto& orbit : parabolic_) {
        for (Symbol s : orbit.symbols) {
            if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool MarkovMap::admissible(const Word& w) const {
    for (Symbol s : w) {
        if (s < 0 || static_cast<std::size_t>(s) >= symbols()) return false;
    }
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
        if (!allowed(w[k], w[k + 1])) return false;
    }
    return true;
}

double orbit_derivative(const MarkovMap& map, const Word& symbols, double x) {
    double d = 1.0;
    for (Symbol s : symbols) {
        const Branch& br = map.branch(s);
        d *= br.derivative(x);
        x = br(x);
    }
    return d;
}

namespace {

TransitionMatrix derive_transition(const std::vector<Branch>& branches) {
    const std::size_t p = branches.size();
    TransitionMatrix a(p);
    for (std::size_t i = 0; i < p; ++i) {
        const Interval img = branches[i].image();
        for (std::size_t j = 0; j < p; ++j) {
            const Interval dom = branches[j].domain();
            const double overlap = std::min(img.hi, dom.hi) - std::max(img.lo, dom.lo);
            if (img.contains(dom, kEndpointTol)) {
                a.set(i, j, true);
            } else if (overlap > kEndpointTol) {
                throw Error(ErrorKind::MarkovViolation,
                            "image of branch " + std::to_string(i) + " " + describe(img) +
                                " partially overlaps domain of branch " + std::to_string(j) + " " +
                                describe(dom));
            }
        }
    }
    return a;
}

void check_transition(const std::vector<Branch>& branches, const TransitionMatrix& a) {
    const std::size_t p = branches.size();
    for (std::size_t i = 0; i < p; ++i) {
        const Interval img = branches[i].image();
        for (std::size_t j = 0; j < p; ++j) {
            const Interval dom = branches[j].domain();
            if (a(i, j)) {
                if (!img.contains(dom, kEndpointTol)) {
                    throw Error(ErrorKind::MarkovViolation,
                                "A(" + std::to_string(i) + "," + std::to_string(j) +
                                    ")=1 but image " + describe(img) + " does not cover " +
                                    describe(dom));
                }
            } else {
                const double overlap = std::min(img.hi, dom.hi) - std::max(img.lo, dom.lo);
                if (overlap > kEndpointTol) {
                    throw Error(ErrorKind::MarkovViolation,
                                "A(" + std::to_string(i) + "," + std::to_string(j) +
                                    ")=0 but image " + describe(img) + " meets interior of " +
                                    describe(dom));
                }
            }
        }
    }
}

int find_aperiodicity_power(const TransitionMatrix& a, int bound) {
    const std::size_t p = a.size();
    std::vector<std::uint8_t> power(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) power[i * p + j] = a(i, j) ? 1 : 0;
    for (int k = 0; k <= bound; ++k) {
        // power == A^{k+1}
        if (std::all_of(power.begin(), power.end(), [](std::uint8_t v) { return v != 0; })) {
            return k;
        }
        std::vector<std::uint8_t> next(p * p, 0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t m = 0; m < p; ++m)
                if (power[i * p + m])
                    for (std::size_t j = 0; j < p; ++j)
                        if (a(m, j)) next[i * p + j] = 1;
        power.swap(next);
    }
    throw Error(ErrorKind::NotTransitive,
                "no k <= " + std::to_string(bound) + " with A^{k+1} > 0 entrywise");
}

std::vector<Interval> compute_cores(const std::vector<Branch>& branches,
                                    const TransitionMatrix& a) {
    const std::size_t p = branches.size();
    std::vector<Interval> core(p);
    for (std::size_t i = 0; i < p; ++i) core[i] = branches[i].domain();
    for (int it = 0; it < 2000; ++it) {
        double change = 0.0;
        std::vector<Interval> next(p);
        for (std::size_t i = 0; i < p; ++i) {
            Interval h{kInf, -kInf};
            for (std::size_t j = 0; j < p; ++j)
                if (a(i, j)) h = join(h, core[j]);
            next[i] = branches[i].inverse(h);
            change = std::max({change, std::abs(next[i].lo - core[i].lo),
                               std::abs(next[i].hi - core[i].hi)});
        }
        core.swap(next);
        if (change == 0.0) break;
    }
    return core;
}

// Lexicographically minimal rotation is the canonical label of a periodic word.
bool is_canonical_primitive(const Word& w) {
    const std::size_t m = w.size();
    for (std::size_t r = 1; r < m; ++r) {
        Word rot(w.begin() + static_cast<std::ptrdiff_t>(r), w.end());
        rot.insert(rot.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(r));
        if (rot < w) return false;
        if (rot == w) return false;  // not primitive
    }
    return true;
}

// Periodic point of the cyclically admissible word w: fixed point of the
// composite inverse branch F = T_{w_1}^{-1} o ... o T_{w_m}^{-1} on J_{w_1}.
double periodic_point(const std::vector<Branch>& branches, const Word& w) {
    const Interval dom = branches[static_cast<std::size_t>(w.front())].domain();
    const auto composite = [&](double x) {
        for (auto it = w.rbegin(); it != w.rend(); ++it) {
            x = branches[static_cast<std::size_t>(*it)].inverse(x);
        }
        return x;
    };
    // F(x) - x >= 0 at the left end and <= 0 at the right end.
    double lo = dom.lo;
    double hi = dom.hi;
    if (composite(lo) - lo <= 0.0) return lo;
    if (composite(hi) - hi >= 0.0) return hi;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        if (composite(m) - m > 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

void enumerate_cycles(std::size_t p, const TransitionMatrix& a, int period, Word& current,
                      std::vector<Word>& out) {
    if (static_cast<int>(current.size()) == period) {
        if (a(static_cast<std::size_t>(current.back()), static_cast<std::size_t>(current.front())) &&
            is_canonical_primitive(current)) {
            out.push_back(current);
        }
        return;
    }
    for (std::size_t s = 0; s < p; ++s) {
        if (!current.empty() && !a(static_cast<std::size_t>(current.back()), s)) continue;
        current.push_back(static_cast<Symbol>(s));
        enumerate_cycles(p, a, period, current, out);
        current.pop_back();
    }
}

}  // namespace

MarkovMap build_map(const MapConfig& config) {
    const auto& branches = config.branches;
    const std::size_t p = branches.size();
    if (p == 0) throw Error(ErrorKind::MarkovViolation, "map has no branches");

    // Interiors of the domains must be pairwise disjoint.
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const Interval a = branches[i].domain();
            const Interval b = branches[j].domain();
            const double overlap = std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
            if (overlap > kEndpointTol) {
                throw Error(ErrorKind::MarkovViolation, "domains of branches " + std::to_string(i) +
                                                            " and " + std::to_string(j) +
                                                            " overlap: " + describe(a) + ", " +
                                                            describe(b));
            }
        }
    }

    // |T_i'| >= 1 on a dense grid; |T_i'| is monotone per family so the
    // endpoints are included explicitly.
    for (std::size_t i = 0; i < p; ++i) {
        const Interval dom = branches[i].domain();
        for (int g = 0; g < kDerivativeGrid; ++g) {
            const double x = dom.lo + dom.width() * g / (kDerivativeGrid - 1);
            const double d = std::abs(branches[i].derivative(x));
            if (d < 1.0 - kEndpointTol) {
                throw Error(ErrorKind::ContractionViolation,
                            "|T_" + std::to_string(i) + "'(" + std::to_string(x) +
                                ")| = " + std::to_string(d) + " < 1");
            }
        }
    }

    TransitionMatrix a;
    if (config.transition) {
        a = *config.transition;
        if (a.size() != p) {
            throw Error(ErrorKind::MarkovViolation, "transition matrix size does not match branches");
        }
        check_transition(branches, a);
    } else {
        a = derive_transition(branches);
    }

    MarkovMap map;
    map.branches_ = branches;
    map.transition_ = a;
    map.aperiodicity_power_ = find_aperiodicity_power(a, config.transitivity_bound);
    map.cores_ = compute_cores(branches, a);

    for (int period = 1; period <= config.period_bound; ++period) {
        std::vector<Word> cycles;
        Word current;
        enumerate_cycles(p, a, period, current, cycles);
        for (const Word& w : cycles) {
            const double x = periodic_point(branches, w);
            const double d = orbit_derivative(map, w, x);
            if (std::abs(std::abs(d) - 1.0) > kParabolicTol) continue;
            ParabolicOrbit orbit;
            orbit.symbols = w;
            double y = x;
            for (Symbol s : w) {
                // Bisection lands within rounding of a partition endpoint; snap to it.
                const Interval dom = map.branch(s).domain();
                if (std::abs(y - dom.lo) < 1e-12) y = dom.lo;
                if (std::abs(y - dom.hi) < 1e-12) y = dom.hi;
                orbit.points.push_back(y);
                y = map.branch(s)(y);
            }
            map.parabolic_.push_back(std::move(orbit));
        }
    }

    // Inverse iteration creeps towards a parabolic point without reaching it.
    for (auto& c : map.cores_) {
        for (const auto& orbit : map.parabolic_) {
            for (double q : orbit.points) {
                if (std::abs(c.lo - q) < 1e-12) c.lo = q;
                if (std::abs(c.hi - q) < 1e-12) c.hi = q;
            }
        }
    }

    // Unit derivative is allowed only on, or at preimages of, detected parabolic orbits.
    const auto near_parabolic = [&](double x) {
        for (const auto& orbit : map.parabolic_)
            for (double q : orbit.points)
                if (std::abs(x - q) <= kUnitDerivativeTol) return true;
        return false;
    };
    for (std::size_t i = 0; i < p; ++i) {
        const Interval dom = branches[i].domain();
        for (int g = 0; g < kDerivativeGrid; ++g) {
            const double x = dom.lo + dom.width() * g / (kDerivativeGrid - 1);
            if (std::abs(std::abs(branches[i].derivative(x)) - 1.0) > kUnitDerivativeTol) continue;
            bool ok = near_parabolic(x);
            double y = x;
            std::size_t sym = i;
            for (int step = 0; !ok && step < std::max(config.period_bound, 1); ++step) {
                y = branches[sym](y);
                ok = near_parabolic(y);
                auto next = std::find_if(branches.begin(), branches.end(), [&](const Branch& b) {
                    return b.domain().contains(y, kEndpointTol);
                });
                if (next == branches.end()) break;
                sym = static_cast<std::size_t>(next - branches.begin());
            }
            if (!ok) {
                throw Error(ErrorKind::UnitDerivativeOffOrbit,
                            "|T_" + std::to_string(i) + "'| = 1 at x = " + std::to_string(x) +
                                ", which is not on or mapped onto a detected parabolic orbit");
            }
        }
    }

    for (auto& orbit : map.parabolic_) {
        try {
            const ExponentFit fit = parabolic_exponent(map, orbit);
            orbit.beta = fit.analytic_beta.value_or(fit.beta);
            orbit.L = fit.analytic_L.value_or(fit.L);
        } catch (const Error&) {
            orbit.beta = std::nan("");
            orbit.L = std::nan("");
        }
    }
    return map;
}

double inverse_branch(const MarkovMap& map, Symbol i, double y) { return map.branch(i).inverse(y); }

ExponentFit parabolic_exponent(const MarkovMap& map, const ParabolicOrbit& orbit) {
    const double omega = orbit.points.front();
    const Interval dom = map.branch(orbit.symbols.front()).domain();
    // One-sided: prefer the right neighbourhood when it lies in the domain.
    const double side = (omega + std::ldexp(1.0, -5) <= dom.hi) ? 1.0 : -1.0;
    std::vector<double> lx, ly;
    for (int e = 5; e <= 30; ++e) {
        const double h = std::ldexp(1.0, -e);
        const double x = omega + side * h;
        const double d = std::abs(orbit_derivative(map, orbit.symbols, x));
        const double excess = std::abs(d - 1.0);
        if (excess <= 0.0) continue;
        lx.push_back(std::log(h));
        ly.push_back(std::log(excess));
    }
    if (lx.size() < 8) throw Error(ErrorKind::FitUnstable, "too few usable offsets");
    // Higher-order terms bend the curve at the coarse offsets; drop them while
    // at least 8 fine offsets remain.
    LineFit line = fit_line(lx, ly);
    for (std::size_t skip = 1; line.max_residual > 1e-3 && lx.size() - skip >= 8; ++skip) {
        line = fit_line(std::span<const double>(lx).subspan(skip),
                        std::span<const double>(ly).subspan(skip));
    }
    ExponentFit fit;
    fit.beta = line.slope;
    fit.L = std::exp(line.intercept);
    fit.max_residual = line.max_residual;

    if (orbit.period() == 1) {
        const Branch& br = map.branch(orbit.symbols.front());
        std::visit(overloaded{
                       [](const family::Linear&) {},
                       [&](const family::MannevillePomeau& f) {
                           if (omega == 0.0) {
                               fit.analytic_beta = f.s;
                               fit.analytic_L = 1.0 + f.s;
                           }
                       },
                       [&](const family::FareyLeft&) {
                           if (omega == 0.0) {
                               fit.analytic_beta = 1.0;
                               fit.analytic_L = 2.0;
                           }
                       },
                       [](const family::FareyRight&) {},
                       [&](const family::PowerInterpolated& f) {
                           if (omega == 0.0) {
                               fit.analytic_beta = f.s;
                               fit.analytic_L = f.c * (1.0 + f.s);
                           }
                       },
                   },
                   br.family());
    }
    if (fit.max_residual > 1e-3) {
        throw Error(ErrorKind::FitUnstable,
                    "regression residual " + std::to_string(fit.max_residual) + " exceeds 1e-3");
    }
    return fit;
}

namespace presets {

double power_split_point(double c, double s) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        if (m + c * std::pow(m, 1.0 + s) < 1.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

MapConfig doubling() {
    MapConfig c;
    c.branches.emplace_back(family::Linear{2.0, 0.0}, Interval{0.0, 0.5});
    c.branches.emplace_back(family::Linear{2.0, -1.0}, Interval{0.5, 1.0});
    return c;
}

MapConfig golden_mean() {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    const double a = 1.0 / g;
    MapConfig c;
    c.branches.emplace_back(family::Linear{g, 0.0}, Interval{0.0, a});
    c.branches.emplace_back(family::Linear{g, -g * a}, Interval{a, 1.0});
    TransitionMatrix t(2);
    t.set(0, 0, true);
    t.set(0, 1, true);
    t.set(1, 0, true);
    c.transition = t;
    return c;
}

MapConfig two_slope() {
    MapConfig c;
    c.branches.emplace_back(family::Linear{2.0, 0.0}, Interval{0.0, 0.5});
    c.branches.emplace_back(family::Linear{4.0, -2.0}, Interval{0.5, 0.75});
    return c;
}

MapConfig manneville_pomeau(double s) {
    const double split = power_split_point(1.0, s);
    MapConfig c;
    c.branches.emplace_back(family::MannevillePomeau{s, 0.0}, Interval{0.0, split});
    c.branches.emplace_back(family::MannevillePomeau{s, 1.0}, Interval{split, 1.0});
    return c;
}

MapConfig farey() {
    MapConfig c;
    c.branches.emplace_back(family::FareyLeft{}, Interval{0.0, 0.5});
    c.branches.emplace_back(family::FareyRight{}, Interval{0.5, 1.0});
    return c;
}

}  // namespace presets

}  // namespace multifractal
