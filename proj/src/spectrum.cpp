#include "multifractal/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

const Potential* const* two(const Potential& a, const Potential& b, const Potential* (&buf)[2]) {
    buf[0] = &a;
    buf[1] = &b;
    return buf;
}

LeafGraph build_graph(const MarkovMap& map, const Potential& psi, const Potential& phi, int level,
                      const PressureOptions& options) {
    const Potential* buf[2];
    two(psi, phi, buf);
    return LeafGraph(map, std::span<const Potential* const>(buf, 2), level, options);
}

}  // namespace

BSolver::BSolver(const MarkovMap& map, const Potential& phi, int level,
                 const PressureOptions& options)
    : map_(&map),
      psi_(Potential::geometric(1.0)),
      phi_(phi),
      options_(options),
      graph_(build_graph(map, psi_, phi_, level, options)) {
    phi_range_ = {kInf, -kInf};
    for (std::size_t e = 0; e < graph_.edges(); ++e) phi_range_ = join(phi_range_, graph_.edge_site(e, 1));
    if (!(phi_range_.hi < 0.0)) {
        throw Error(ErrorKind::NotStrictlyNegative,
                    "sup phi = " + std::to_string(phi_range_.hi) + " is not negative");
    }
}

BBracket BSolver::solve(double a, double root_tol) const {
    std::vector<double> warm[2];
    const auto side = [&](double b, LeafGraph::Side which) {
        const double c[] = {a, b};
        return graph_.pressure_side(c, which, &warm[which == LeafGraph::Side::Upper], options_);
    };
    const double s_sup = -phi_range_.hi;  // slowest decrease of P in b
    const double s_inf = -phi_range_.lo;  // fastest decrease
    const double l0 = side(0.0, LeafGraph::Side::Lower);
    const double u0 = side(0.0, LeafGraph::Side::Upper);
    // P(b) lies between P(0) - b s_inf and P(0) - b s_sup for b >= 0, mirrored for b < 0.
    const auto root_range = [&](double p0) {
        return p0 >= 0.0 ? Interval{p0 / s_inf, p0 / s_sup} : Interval{p0 / s_sup, p0 / s_inf};
    };
    Interval range = join(root_range(l0), root_range(u0));
    const double pad = 1e-9 + 1e-9 * std::abs(range.hi) + 1e-9 * std::abs(range.lo);
    double lo = range.lo - pad;
    double hi = range.hi + pad;
    double span = std::max(hi - lo, 1e-6);
    for (int k = 0; k < 60 && !(side(lo, LeafGraph::Side::Lower) > 0.0); ++k) {
        lo -= span;
        span *= 2;
    }
    span = std::max(hi - lo, 1e-6);
    for (int k = 0; k < 60 && !(side(hi, LeafGraph::Side::Upper) < 0.0); ++k) {
        hi += span;
        span *= 2;
    }
    const Interval root_lo = illinois_root(
        [&](double b) { return side(b, LeafGraph::Side::Lower); }, lo, hi, root_tol);
    const Interval root_hi = illinois_root(
        [&](double b) { return side(b, LeafGraph::Side::Upper); }, lo, hi, root_tol);
    BBracket out;
    out.a = a;
    out.lower = root_lo.lo;
    out.upper = std::max(root_hi.hi, out.lower);
    out.value = 0.5 * (out.lower + out.upper);
    out.level = graph_.level();
    return out;
}

BBracket b_of_a(const MarkovMap& map, const Potential& phi, double a, double tol,
                const PressureOptions& options) {
    BBracket best;
    bool have = false;
    const Potential psi = Potential::geometric(1.0);
    const int start = std::max(minimal_level(map, phi), minimal_level(map, psi));
    for (int n = start; n <= options.max_level; ++n) {
        if (count_words(map, n) > options.max_states) break;
        const BSolver solver(map, phi, n, options);
        const BBracket b = solver.solve(a, std::min(1e-12, tol / 16));
        if (!have || b.width() < best.width()) best = b;
        have = true;
        if (b.width() <= tol) return b;
    }
    if (!have) throw Error(ErrorKind::LevelTooLarge, "no level fits the state cap");
    throw NotConverged("b(a) bracket width " + std::to_string(best.width()) + " at level " +
                           std::to_string(best.level),
                       best.interval());
}

AlphaEstimate alpha_of_a(const BSolver& solver, double a, double h) {
    const auto b = [&](double x) { return solver.solve(x).value; };
    const auto central = [&](double step) { return (b(a + step) - b(a - step)) / (2 * step); };
    double prev = central(h);
    for (int k = 0; k < 8; ++k) {
        h *= 0.5;
        const double cur = central(h);
        if (std::abs(cur - prev) <= 1e-6 * std::max(1.0, std::abs(cur))) {
            AlphaEstimate out;
            out.derivative = cur;
            out.alpha = cur > 0.0 ? 1.0 / cur : kInf;
            out.step = h;
            return out;
        }
        prev = cur;
    }
    throw Error(ErrorKind::DerivativeUnstable,
                "central differences of b do not settle at a = " + std::to_string(a));
}

AlphaEstimate alpha_of_a(const MarkovMap& map, const Potential& phi, double a, double h,
                         const PressureOptions& options) {
    int level = 0;
    try {
        level = b_of_a(map, phi, a, 1e-6, options).level;
    } catch (const NotConverged&) {
        // fall back to the finest level that fits
        level = std::max(minimal_level(map, phi), 1);
        while (level < options.max_level && count_words(map, level + 1) <= options.max_states)
            ++level;
    }
    return alpha_of_a(BSolver(map, phi, level, options), a, h);
}

namespace {

struct RatioEdge {
    std::size_t from;
    std::size_t to;
    double c;
    double t;
    std::size_t word;  // index of the n-word
};

// Bellman-Ford from a virtual source; returns edge indices of a negative
// cycle of weight c - lambda t, or nothing.
std::vector<std::size_t> negative_cycle(std::size_t nodes, const std::vector<RatioEdge>& edges,
                                        double lambda) {
    std::vector<double> dist(nodes, 0.0);
    std::vector<std::size_t> pred(nodes, std::numeric_limits<std::size_t>::max());
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (std::size_t it = 0; it <= nodes; ++it) {
        last = std::numeric_limits<std::size_t>::max();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const RatioEdge& ed = edges[e];
            const double nd = dist[ed.from] + (ed.c - lambda * ed.t);
            if (nd < dist[ed.to] - 1e-15 * (1.0 + std::abs(dist[ed.to]))) {
                dist[ed.to] = nd;
                pred[ed.to] = e;
                last = ed.to;
            }
        }
        if (last == std::numeric_limits<std::size_t>::max()) return {};
    }
    // walk back into the cycle
    std::size_t v = last;
    for (std::size_t k = 0; k < nodes; ++k) v = edges[pred[v]].from;
    std::vector<std::size_t> cycle;
    std::size_t u = v;
    do {
        cycle.push_back(pred[u]);
        u = edges[pred[u]].from;
    } while (u != v && cycle.size() <= nodes);
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
}

struct RatioResult {
    double value = 0.0;
    std::vector<std::size_t> cycle;
};

double cycle_ratio(const std::vector<RatioEdge>& edges, const std::vector<std::size_t>& cycle) {
    CompensatedSum c, t;
    for (std::size_t e : cycle) {
        c.add(edges[e].c);
        t.add(edges[e].t);
    }
    return c.value() / t.value();
}

// Lawler's parametric search for min over cycles of sum c / sum t (t >= 0).
RatioResult min_cycle_ratio(std::size_t nodes, const std::vector<RatioEdge>& edges) {
    double lo = kInf, hi = -kInf;
    for (const RatioEdge& e : edges) {
        if (e.t > 0.0) {
            lo = std::min(lo, e.c / e.t);
            hi = std::max(hi, e.c / e.t);
        }
    }
    if (!(lo <= hi)) throw Error(ErrorKind::EmptyWindow, "no edge with positive Lyapunov weight");
    std::vector<std::size_t> best;
    // Any cycle ratio is a mediant of its edge ratios, so it lies in [lo, hi].
    const double slack = 1e-12 * (1.0 + std::abs(hi));
    best = negative_cycle(nodes, edges, hi + slack);
    if (best.empty()) best = negative_cycle(nodes, edges, hi + 1e3 * slack);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        auto cyc = negative_cycle(nodes, edges, mid);
        if (cyc.empty()) {
            lo = mid;
        } else {
            hi = mid;
            best = std::move(cyc);
        }
    }
    RatioResult out;
    out.cycle = best;
    out.value = best.empty() ? hi : cycle_ratio(edges, best);
    return out;
}

Word cycle_symbols(const std::vector<Word>& words, const std::vector<RatioEdge>& edges,
                   const std::vector<std::size_t>& cycle) {
    Word w;
    for (std::size_t e : cycle) w.push_back(words[edges[e].word].front());
    return w;
}

}  // namespace

Endpoints endpoints(const MarkovMap& map, const Potential& phi, int n) {
    if (n < 2) throw Error(ErrorKind::ConfigError, "endpoint level must be at least 2");
    if (n < phi.depth()) throw Error(ErrorKind::ConfigError, "endpoint level below potential depth");
    const Potential psi = Potential::geometric(1.0);
    const std::vector<Word> words = enumerate_words(map, n);
    const std::size_t p = map.symbols();
    std::unordered_map<std::size_t, std::size_t> node_of;
    const auto node = [&](std::span<const Symbol> w) {
        std::size_t code = 0;
        for (Symbol s : w) code = code * p + static_cast<std::size_t>(s);
        const auto it = node_of.find(code);
        if (it != node_of.end()) return it->second;
        const std::size_t id = node_of.size();
        node_of.emplace(code, id);
        return id;
    };
    struct Site {
        Interval c, t;
        std::size_t from, to;
    };
    std::vector<Site> sites;
    for (const Word& w : words) {
        const Interval x = cylinder_interval(map, w);
        const std::span<const Symbol> ws(w);
        Site s;
        s.c = -1.0 * phi.site(map, ws, x);
        s.t = psi.site(map, ws, x);
        s.from = node(ws.first(w.size() - 1));
        s.to = node(ws.subspan(1));
        sites.push_back(s);
    }
    const std::size_t nodes = node_of.size();
    const auto edges_for = [&](bool c_high, bool t_high, double sign) {
        std::vector<RatioEdge> edges;
        for (std::size_t k = 0; k < sites.size(); ++k) {
            const Site& s = sites[k];
            edges.push_back({s.from, s.to, sign * (c_high ? s.c.hi : s.c.lo),
                             t_high ? s.t.hi : s.t.lo, k});
        }
        return edges;
    };

    Endpoints out;
    out.level = n;
    {
        const auto e_lo = edges_for(false, true, 1.0);
        const auto e_hi = edges_for(true, false, 1.0);
        const RatioResult r_lo = min_cycle_ratio(nodes, e_lo);
        const RatioResult r_hi = min_cycle_ratio(nodes, e_hi);
        out.alpha_min = {r_lo.value, std::max(r_lo.value, r_hi.value)};
        out.min_cycle = cycle_symbols(words, e_lo, r_lo.cycle);
    }
    if (map.parabolic()) {
        out.alpha_max_infinite = true;
        out.alpha_max = {kInf, kInf};
    } else {
        // max c/t = -min (-c)/t
        const auto e_lo = edges_for(false, true, -1.0);
        const auto e_hi = edges_for(true, false, -1.0);
        const RatioResult r_lo = min_cycle_ratio(nodes, e_lo);
        const RatioResult r_hi = min_cycle_ratio(nodes, e_hi);
        out.alpha_max = {-r_lo.value, std::max(-r_lo.value, -r_hi.value)};
        out.max_cycle = cycle_symbols(words, e_hi, r_hi.cycle);
    }
    return out;
}

RootBracket dim_x_infinity(const MarkovMap& map, double tol, const PressureOptions& options) {
    if (!map.parabolic()) {
        throw Error(ErrorKind::NoParabolicOrbit, "X_infinity is empty without a parabolic orbit");
    }
    return bowen_root(map, tol, options);
}

namespace {

struct Piece {
    double a;
    BBracket b;
    double slope() const { return b.value; }
};

struct Evaluated {
    double f, lo, hi, a;
    BBracket b;
};

Evaluated envelope(const std::vector<Piece>& pieces, double alpha) {
    Evaluated out{kInf, kInf, kInf, 0.0, {}};
    for (const Piece& p : pieces) {
        const double v = p.b.value * alpha - p.a;
        if (v < out.f) {
            out.f = v;
            out.a = p.a;
            out.b = p.b;
        }
        out.lo = std::min(out.lo, p.b.lower * alpha - p.a);
        out.hi = std::min(out.hi, p.b.upper * alpha - p.a);
    }
    return out;
}

}  // namespace

SpectrumCurve legendre_spectrum(const MarkovMap& map, const Potential& phi,
                                const std::vector<double>& alpha_grid, double a_lo, double a_hi,
                                const SpectrumOptions& options) {
    if (!(a_lo < a_hi) || options.a_samples < 3) {
        throw Error(ErrorKind::ConfigError, "a range needs a_lo < a_hi and at least 3 samples");
    }
    SpectrumCurve curve;
    const PressureOptions& po = options.pressure;
    curve.ends = endpoints(map, phi, std::max({2, options.endpoint_level, phi.depth()}));
    curve.alpha_min = curve.ends.alpha_min.mid();
    curve.alpha_max = curve.ends.alpha_max_infinite ? kInf : curve.ends.alpha_max.mid();

    // Level: the first whose b brackets at the ends and middle of the a range meet tol.
    const Potential psi = Potential::geometric(1.0);
    std::unique_ptr<BSolver> solver;
    const int start = std::max(minimal_level(map, phi), minimal_level(map, psi));
    for (int n = start; n <= po.max_level; ++n) {
        if (count_words(map, n) > po.max_states) break;
        solver = std::make_unique<BSolver>(map, phi, n, po);
        double width = 0.0;
        for (double a : {a_lo, 0.5 * (a_lo + a_hi), a_hi}) {
            const BBracket b = solver->solve(a);
            // on a b = 0 ray only the upper end converges; the ray test does not need width
            if (map.parabolic() && b.lower <= 0.0 && b.upper >= 0.0 && a != a_hi) continue;
            width = std::max(width, b.width());
        }
        if (width <= options.tol) break;
        if (n == po.max_level || count_words(map, n + 1) > po.max_states) {
            curve.converged = false;
            curve.notes.push_back("b brackets wider than tolerance at the finest level " +
                                  std::to_string(n) + ": " + std::to_string(width));
        }
    }
    if (!solver) throw Error(ErrorKind::LevelTooLarge, "no level fits the state cap");
    curve.level = solver->level();

    const auto na = static_cast<std::size_t>(options.a_samples);
    std::vector<double> as(na);
    for (std::size_t i = 0; i < na; ++i)
        as[i] = a_lo + (a_hi - a_lo) * static_cast<double>(i) / static_cast<double>(na - 1);
    using Brackets = std::vector<BBracket>;
    const Brackets bs = parallel_reduce(
        na, Brackets{}, [&](std::size_t i) { return Brackets{solver->solve(as[i])}; },
        [](Brackets x, const Brackets& y) {
            x.insert(x.end(), y.begin(), y.end());
            return x;
        });

    // b(a) = 0 ray on the left of a phase transition.
    std::size_t ray_end = 0;
    if (map.parabolic()) {
        while (ray_end < na && bs[ray_end].lower <= 0.0 && bs[ray_end].upper >= 0.0) ++ray_end;
    }
    const bool ray = ray_end >= 2 && ray_end < na;
    double a_c = a_lo;
    if (ray) {
        const Interval edge = bisect_predicate(
            [&](double a) {
                const BBracket b = solver->solve(a);
                return b.lower <= 0.0 && b.upper >= 0.0;
            },
            as[ray_end - 1], as[ray_end], 1e-6);
        a_c = edge.lo;
        curve.a_transition = a_c;
    }
    // True b is nonnegative right of the transition; clamp midpoints that noise pushed below.
    const auto clamp = [&](BBracket b) {
        if (ray && b.a >= a_c && b.value < 0.0 && b.upper >= 0.0) b.value = 0.0;
        return b;
    };

    for (std::size_t i = 0; i < na; ++i) {
        SpectrumSample s;
        s.a = as[i];
        s.b = clamp(bs[i]);
        s.on_ray = ray && i < ray_end;
        if (s.on_ray) {
            s.alpha = std::numeric_limits<double>::quiet_NaN();
            s.f = std::numeric_limits<double>::quiet_NaN();
        } else {
            try {
                s.alpha = alpha_of_a(*solver, s.a, options.derivative_step).alpha;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DerivativeUnstable) throw;
                const double h = options.derivative_step;
                const bool forward = s.a + h <= a_hi;
                const double d = forward ? (clamp(solver->solve(s.a + h)).value - s.b.value) / h
                                         : (s.b.value - clamp(solver->solve(s.a - h)).value) / h;
                s.alpha = d > 0.0 ? 1.0 / d : kInf;
                s.one_sided = true;
            }
            s.f = s.b.value * s.alpha - s.a;
        }
        curve.samples.push_back(s);
    }

    try {
        curve.dim_lambda = bowen_root(map, options.bowen_tol, po);
    } catch (const NotConverged& e) {
        curve.dim_lambda = {e.best().lo, e.best().hi, e.best().mid(), 0};
        curve.converged = false;
        curve.notes.push_back("Bowen root not resolved to tolerance");
    }

    // Common family of affine pieces alpha -> b alpha - a.
    std::vector<Piece> pieces;
    for (const auto& s : curve.samples)
        if (!s.on_ray) pieces.push_back({s.a, s.b});
    if (ray) {
        BBracket bc = clamp(solver->solve(a_c));
        bc.value = std::max(bc.value, 0.0);
        pieces.insert(pieces.begin(), Piece{a_c, bc});
        const double h = options.derivative_step;
        const double d = (clamp(solver->solve(a_c + h)).value - bc.value) / h;
        curve.alpha_0 = d > 0.0 ? 1.0 / d : kInf;
    }
    if (pieces.size() < 2) throw Error(ErrorKind::ConfigError, "a range leaves no usable samples");

    const double tol_e = 1e-9 + curve.ends.alpha_min.width() + curve.ends.alpha_max.width();
    const auto inside = [&](double alpha) {
        if (alpha < curve.ends.alpha_min.lo - tol_e) return false;
        if (!curve.ends.alpha_max_infinite && alpha > curve.ends.alpha_max.hi + tol_e) return false;
        return true;
    };

    // Refine the minimising a for every alpha before the final envelope pass.
    const double a_first = pieces.front().a;
    const double a_last = pieces.back().a;
    using Pieces = std::vector<Piece>;
    const Pieces refined = parallel_reduce(
        alpha_grid.size(), Pieces{},
        [&](std::size_t k) -> Pieces {
            const double alpha = alpha_grid[k];
            if (!inside(alpha) || (curve.alpha_0 && alpha >= *curve.alpha_0)) return {};
            const Evaluated e = envelope(pieces, alpha);
            const double step = (a_hi - a_lo) / static_cast<double>(na - 1);
            const double lo = std::max(a_first, e.a - step);
            const double hi = std::min(a_last, e.a + step);
            if (!(hi > lo)) return {};
            const double a_star = golden_section_min(
                [&](double a) { return clamp(solver->solve(a)).value * alpha - a; }, lo, hi,
                options.golden_tol);
            return {Piece{a_star, clamp(solver->solve(a_star))}};
        },
        [](Pieces x, const Pieces& y) {
            x.insert(x.end(), y.begin(), y.end());
            return x;
        });
    pieces.insert(pieces.end(), refined.begin(), refined.end());

    const auto evaluate = [&](double alpha) {
        SpectrumPoint pt;
        pt.alpha = alpha;
        if (!inside(alpha)) {
            pt.empty = true;
            pt.f = pt.f_lower = pt.f_upper = -kInf;
            return pt;
        }
        const double at = (curve.alpha_0 && alpha > *curve.alpha_0) ? *curve.alpha_0 : alpha;
        const Evaluated e = envelope(pieces, at);
        pt.f = e.f;
        pt.f_lower = e.lo;
        pt.f_upper = e.hi;
        pt.a_star = e.a;
        pt.b = e.b;
        return pt;
    };
    for (double alpha : alpha_grid) curve.points.push_back(evaluate(alpha));
    for (double d : {0.0, 1e-1, 1e-2, 1e-3, 1e-4}) curve.endpoint_approach.push_back(evaluate(curve.alpha_min + d));

    if (curve.alpha_0) {
        const double tail = evaluate(*curve.alpha_0).f;
        if (std::abs(tail - curve.dim_lambda.value) > options.bowen_tol + curve.dim_lambda.width()) {
            curve.notes.push_back("constant tail " + std::to_string(tail) +
                                  " differs from dim Lambda " +
                                  std::to_string(curve.dim_lambda.value));
        }
    }
    return curve;
}

CurveChecks check_curve(const SpectrumCurve& curve) {
    CurveChecks c;
    std::vector<const SpectrumPoint*> pts;
    for (const auto& p : curve.points)
        if (!p.empty) pts.push_back(&p);
    std::sort(pts.begin(), pts.end(),
              [](const SpectrumPoint* x, const SpectrumPoint* y) { return x->alpha < y->alpha; });
    c.max_second_difference = -kInf;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double x0 = pts[i - 1]->alpha, x1 = pts[i]->alpha, x2 = pts[i + 1]->alpha;
        if (!(x2 > x0)) continue;
        const double interp = pts[i - 1]->f + (pts[i + 1]->f - pts[i - 1]->f) * (x1 - x0) / (x2 - x0);
        c.max_second_difference = std::max(c.max_second_difference, 2.0 * (interp - pts[i]->f));
    }
    if (pts.size() < 3) c.max_second_difference = 0.0;

    c.min_b_second_difference = kInf;
    const auto& s = curve.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i + 1].b.upper < s[i].b.lower) c.b_nondecreasing = false;
    }
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double d2 = s[i - 1].b.value - 2 * s[i].b.value + s[i + 1].b.value;
        const double allowance = s[i - 1].b.width() + 2 * s[i].b.width() + s[i + 1].b.width();
        c.min_b_second_difference = std::min(c.min_b_second_difference, d2 + allowance);
    }

    c.max_excess_over_dim = -kInf;
    for (const auto* p : pts)
        c.max_excess_over_dim = std::max(c.max_excess_over_dim, p->f_lower - curve.dim_lambda.upper);

    c.min_endpoint_f = kInf;
    if (!curve.endpoint_approach.empty() && !curve.endpoint_approach.front().empty) {
        c.min_endpoint_f = curve.endpoint_approach.front().f;
        c.endpoint_continuity =
            std::abs(curve.endpoint_approach.back().f - curve.endpoint_approach.front().f);
    }
    if (curve.alpha_0) {
        double prev = -kInf;
        for (const auto* p : pts) {
            if (p->alpha < *curve.alpha_0) continue;
            if (p->f < prev - 1e-12) c.tail_nondecreasing = false;
            prev = p->f;
        }
    }
    return c;
}

}  // namespace multifractal
