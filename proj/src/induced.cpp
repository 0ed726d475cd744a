#include "multifractal/induced.hpp"

#include <algorithm>
#include <string>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

// Enclosures of S_m f over T^{-1}_{w_0 .. w_{m-1}}(end), one per f.
void pullback_sums(const MarkovMap& map, const Word& w, std::size_t m, Interval end,
                   std::span<const Potential* const> fs, Interval* out) {
    std::vector<Interval> spans(m);
    for (std::size_t j = m; j-- > 0;) {
        end = map.branch(w[j]).inverse(end);
        spans[j] = end;
    }
    for (std::size_t k = 0; k < fs.size(); ++k) {
        Interval s{0.0, 0.0};
        for (std::size_t j = 0; j < m; ++j) s += fs[k]->site(map, std::span<const Symbol>(w).subspan(j), spans[j]);
        out[k] = s;
    }
}

constexpr std::size_t kMaxBranches = 100000;

}  // namespace

InducedSystem build_induced(const WeakGibbsModel& model, int N, std::vector<Symbol> base) {
    const MarkovMap& map = model.map();
    if (N < 1) throw Error(ErrorKind::ConfigError, "truncation must be at least 1");
    InducedSystem sys;
    sys.map = &map;
    sys.phi = model.phi();
    sys.trivial = !map.parabolic();
    if (base.empty()) {
        const auto par = map.parabolic_symbols();
        for (Symbol i = 0; i < static_cast<Symbol>(map.symbols()); ++i)
            if (std::find(par.begin(), par.end(), i) == par.end()) base.push_back(i);
    }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    if (base.empty()) throw Error(ErrorKind::ConfigError, "empty inducing base");
    const auto in_base = [&](Symbol s) { return std::binary_search(base.begin(), base.end(), s); };
    sys.base = base;
    sys.truncation = sys.trivial ? 1 : N;

    const Potential psi = Potential::geometric(1.0);
    const Potential* fs[] = {&psi, &sys.phi};
    const auto add_branch = [&](const Word& w) {
        InducedBranch br;
        br.return_time = static_cast<int>(w.size());
        br.word = w;
        br.domain = {kInf, -kInf};
        br.psi = {kInf, -kInf};
        br.phi = {kInf, -kInf};
        bool any = false;
        for (Symbol e : base) {
            if (!map.allowed(w.back(), e)) continue;
            any = true;
            Interval s[2];
            pullback_sums(map, w, w.size(), map.core(e), fs, s);
            br.psi = join(br.psi, s[0]);
            br.phi = join(br.phi, s[1]);
            Word we = w;
            we.push_back(e);
            br.domain = join(br.domain, cylinder_interval(map, we));
            br.mass += cylinder_mass_bracket(model, we).mid();
        }
        if (!any) return;
        if (sys.branches.size() >= kMaxBranches) {
            throw Error(ErrorKind::LevelTooLarge, "more than " + std::to_string(kMaxBranches) + " induced branches");
        }
        sys.branches.push_back(std::move(br));
    };
    const auto grow = [&](auto&& self, Word& w) -> void {
        add_branch(w);
        if (static_cast<int>(w.size()) >= sys.truncation) return;
        for (Symbol c = 0; c < static_cast<Symbol>(map.symbols()); ++c) {
            if (in_base(c) || !map.allowed(w.back(), c)) continue;
            w.push_back(c);
            self(self, w);
            w.pop_back();
        }
    };
    double base_mass = 0.0;
    for (Symbol b : base) {
        Word w{b};
        base_mass += cylinder_mass_bracket(model, w).mid();
        grow(grow, w);
    }
    std::stable_sort(sys.branches.begin(), sys.branches.end(),
                     [](const InducedBranch& x, const InducedBranch& y) { return x.return_time < y.return_time; });
    double kept = 0.0;
    for (const auto& br : sys.branches) kept += br.mass;
    sys.kept_mass = kept / base_mass;
    if (sys.kept_mass < 0.5) {
        throw Error(ErrorKind::TruncationTooSmall, "kept branches carry " + std::to_string(sys.kept_mass) +
                                                       " of the base mass at N = " + std::to_string(N));
    }
    return sys;
}

Interval induced_ratio_hull(const InducedSystem& isys) {
    Interval h{kInf, -kInf};
    for (const auto& br : isys.branches) {
        const Interval c = -1.0 * br.phi;
        h = join(h, {c.lo / br.psi.hi, br.psi.lo > 0.0 ? c.hi / br.psi.lo : kInf});
    }
    return h;
}

namespace {

class InducedPressure {
public:
    explicit InducedPressure(const InducedSystem& sys) : sys_(sys), n_(sys.branches.size()) {
        const MarkovMap& map = *sys.map;
        const Potential psi = Potential::geometric(1.0);
        const Potential* fs[] = {&psi, &sys.phi};
        psi_.assign(n_ * n_, {});
        phi_.assign(n_ * n_, {});
        allowed_.assign(n_ * n_, 0);
        for (std::size_t u = 0; u < n_; ++u) {
            const InducedBranch& bu = sys.branches[u];
            for (std::size_t v = 0; v < n_; ++v) {
                const InducedBranch& bv = sys.branches[v];
                if (!map.allowed(bu.word.back(), bv.word.front())) continue;
                Word uv = bu.word;
                uv.insert(uv.end(), bv.word.begin(), bv.word.end());
                Interval s[2];
                // the first r_u sites over the part of [u v] that continues like v
                pullback_sums(map, uv, bu.word.size(), bv.domain, fs, s);
                psi_[u * n_ + v] = s[0];
                phi_[u * n_ + v] = s[1];
                allowed_[u * n_ + v] = 1;
            }
        }
        for (std::size_t v = 0; v < n_; ++v) last_time_ = std::max(last_time_, sys.branches[v].return_time);
    }

    /// Collatz-Wielandt bounds on the log spectral radius of the lower (or upper)
    /// entry matrix; `tail` adds the extrapolated dropped branches to the upper end.
    Interval log_radius(double a, double b, bool upper, bool tail, std::vector<double>& x) const {
        std::vector<double> m(n_ * n_, 0.0);
        double shift = -kInf;
        for (std::size_t k = 0; k < n_ * n_; ++k) {
            if (!allowed_[k]) continue;
            const Interval w = a * psi_[k] + b * phi_[k];
            m[k] = upper ? w.hi : w.lo;
            shift = std::max(shift, m[k]);
        }
        for (std::size_t k = 0; k < n_ * n_; ++k) m[k] = allowed_[k] ? std::exp(m[k] - shift) : 0.0;
        if (x.size() != n_) x.assign(n_, 1.0);
        std::vector<double> y(n_);
        Interval out{-kInf, kInf};
        for (int it = 0; it < 2000; ++it) {
            out = meet(out, bounds(m, x, y, false) + shift);
            double ymax = 0.0;
            for (double v : y) ymax = std::max(ymax, v);
            if (!(ymax > 0.0) || !std::isfinite(ymax)) break;
            for (std::size_t u = 0; u < n_; ++u) x[u] = std::max(y[u] / ymax, 1e-300);
            if (it > 2 && out.width() < 1e-13) break;
        }
        // the tail enters once, at the converged vector
        if (tail && !sys_.trivial) out.hi = bounds(m, x, y, true).hi + shift;
        return out;
    }

private:
    // Collatz-Wielandt bounds of m at x; y receives m x.
    Interval bounds(const std::vector<double>& m, const std::vector<double>& x, std::vector<double>& y,
                    bool with_tail) const {
        double rmin = kInf, rmax = 0.0;
        for (std::size_t u = 0; u < n_; ++u) {
            double s = 0.0;
            double w[3] = {0.0, 0.0, 0.0};  // the part with return times N-2, N-1, N
            for (std::size_t v = 0; v < n_; ++v) {
                const double t = m[u * n_ + v] * x[v];
                s += t;
                const int k = sys_.branches[v].return_time - (last_time_ - 2);
                if (with_tail && k >= 0) w[k] += t;
            }
            y[u] = s;
            rmin = std::min(rmin, s / x[u]);
            if (with_tail) s += tail_sum(w, last_time_);
            rmax = std::max(rmax, s / x[u]);
        }
        return {std::log(rmin), std::log(rmax)};
    }

    // Sum over r > N of C r^-kappa q^r fitted through the last three return times.
    static double tail_sum(const double (&w)[3], int N) {
        if (w[2] == 0.0) return 0.0;
        if (N < 3 || w[0] == 0.0 || w[1] == 0.0) return kInf;
        const double r1 = N - 2, r2 = N - 1, r3 = N;
        const double d1 = std::log(w[1] / w[0]), d2 = std::log(w[2] / w[1]);
        const double g1 = std::log(r2 / r1), g2 = std::log(r3 / r2);
        const double kappa = (d2 - d1) / (g1 - g2);
        const double lambda = d2 + kappa * g2;
        if (lambda > 0.0 || (lambda > -1e-12 && kappa <= 1.0)) return kInf;
        const auto term = [&](double r) { return w[2] * std::exp(-kappa * std::log(r / r3) + lambda * (r - r3)); };
        CompensatedSum sum;
        double r = r3 + 1;
        for (; r < r3 + 1e4; r += 1) {
            const double t = term(r);
            sum.add(t);
            if (t < 1e-17 * sum.value()) return sum.value();
        }
        // integral bound on the remainder, the terms decrease by now
        double rest = kInf;
        if (kappa > 1.0) rest = r / (kappa - 1.0);
        if (lambda < 0.0) rest = std::min(rest, 1.0 / -lambda);
        return sum.value() + term(r) * rest;
    }

    const InducedSystem& sys_;
    std::size_t n_;
    std::vector<Interval> psi_, phi_;
    std::vector<unsigned char> allowed_;
    int last_time_ = 0;
};

}  // namespace

std::vector<InducedPoint> induced_b_curve(const InducedSystem& isys, const std::vector<double>& a_grid,
                                          double tol) {
    if (isys.branches.empty()) throw Error(ErrorKind::InvalidModel, "induced system has no branches");
    const InducedPressure pressure(isys);
    const bool clamp = !isys.trivial;  // with a parabolic orbit b(a) >= 0
    std::vector<InducedPoint> out;
    std::vector<double> warm_lo, warm_hi;
    for (double a : a_grid) {
        const auto root = [&](bool upper, bool tail) {
            const auto f = [&](double b) {
                const Interval r = pressure.log_radius(a, b, upper, tail, upper ? warm_hi : warm_lo);
                return upper ? r.hi : r.lo;
            };
            double lo = clamp ? 0.0 : -1.0, hi = 1.0;
            if (clamp && !(f(0.0) > 0.0)) return 0.0;
            for (int k = 0; k < 200 && !(f(lo) > 0.0); ++k) lo -= (hi - lo);
            for (int k = 0; k < 200 && !(f(hi) < 0.0); ++k) hi += (hi - lo);
            if (std::isinf(f(hi))) {
                throw Error(ErrorKind::TailDominates, "tail bound diverges at a = " + std::to_string(a));
            }
            const Interval r = illinois_root(
                [&](double b) {
                    const double v = f(b);
                    return std::isinf(v) ? 1e300 : v;
                },
                lo, hi, 1e-14);
            return upper ? r.hi : r.lo;
        };
        InducedPoint p;
        p.a = a;
        p.lower = root(false, false);
        const double upper_kept = root(true, false);
        p.upper = root(true, true);
        p.truncation_error = std::max(0.0, p.upper - upper_kept);
        if (p.truncation_error > tol) {
            throw Error(ErrorKind::TailDominates, "dropped branches move b by " +
                                                      std::to_string(p.truncation_error) + " at a = " +
                                                      std::to_string(a));
        }
        p.value = 0.5 * (p.lower + p.upper);
        out.push_back(p);
    }
    return out;
}

}  // namespace multifractal
