#include "multifractal/weak_gibbs.hpp"

#include <random>
#include <string>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"

namespace multifractal {

namespace {

// outward allowance for rounding in the ratio of two logs
Interval widen(Interval x) {
    const double r = 1e-13 * (1.0 + std::max(std::abs(x.lo), std::abs(x.hi)));
    return {x.lo - r, x.hi + r};
}

}  // namespace

WeakGibbsModel::WeakGibbsModel(const MarkovMap& map, Potential phi, KnLaw law)
    : map_(&map), phi_(std::move(phi)), law_(law) {
    if (!(phi_.range(map).hi < 0.0)) {
        throw Error(ErrorKind::InvalidModel, "phi must be strictly negative");
    }
    if (!law_.exact) {
        if (!(law_.C >= 0.0) || !(law_.gamma > 0.0)) {
            throw Error(ErrorKind::InvalidModel, "k_n law needs C >= 0 and gamma > 0");
        }
        return;
    }
    if (!phi_.is_locally_constant()) {
        throw Error(ErrorKind::InvalidModel, "exact mode needs a locally constant potential");
    }
    // the masses exp(S_n phi) must form a consistent family
    const int d = phi_.depth();
    for (int n = d; n <= d + 2; ++n) {
        const Potential* pots[] = {&phi_};
        const LogSumExp total = reduce_cylinders(
            map, n, std::span<const Potential* const>(pots), LogSumExp{},
            [](LogSumExp& acc, const CylinderView& c) { acc.add(c.birkhoff[0].mid()); },
            [](LogSumExp a, const LogSumExp& b) {
                a.merge(b);
                return a;
            });
        if (std::abs(total.value()) > 1e-12) {
            throw Error(ErrorKind::InvalidModel,
                        "level " + std::to_string(n) + " masses sum to exp(" +
                            std::to_string(total.value()) + "), not 1");
        }
    }
}

Interval log_mass_bracket(const WeakGibbsModel& model, std::span<const Symbol> word) {
    const auto n = static_cast<int>(word.size());
    const Interval s = birkhoff_bracket(model.map(), model.phi(), word);
    const double slack = n * model.law()(n);
    return {s.lo - slack, s.hi + slack};
}

Interval cylinder_mass_bracket(const WeakGibbsModel& model, std::span<const Symbol> word) {
    const Interval l = log_mass_bracket(model, word);
    return {std::exp(l.lo), std::exp(l.hi)};
}

LocalDimension local_dimension(const WeakGibbsModel& model, const Word& word,
                               double min_boundary_ratio) {
    const auto N = static_cast<int>(word.size());
    if (N < 4) throw Error(ErrorKind::ConfigError, "local dimension needs depth >= 4");
    const MarkovMap& map = model.map();
    const Potential psi = Potential::geometric(1.0);
    LocalDimension out;
    out.depth = N;
    CompensatedSum mean;
    const std::span<const Symbol> w(word);
    for (int n = N / 2; n <= N; ++n) {
        const Interval c = -1.0 * birkhoff_bracket(map, model.phi(), w.first(n));
        const Interval t = birkhoff_bracket(map, psi, w.first(n));
        const Interval r{c.lo / t.hi, t.lo > 0.0 ? c.hi / t.lo : kInf};
        out.ratios.push_back(r);
        mean.add(std::isinf(r.hi) ? r.lo : r.mid());
    }
    out.trend = mean.value() / static_cast<double>(out.ratios.size());

    const Interval span = cylinder_interval(map, w);
    const double log_d = std::log(span.width());
    if (!(span.width() > 0.0) || !std::isfinite(log_d)) {
        throw Error(ErrorKind::DegenerateCylinder, "D_N underflows at depth " + std::to_string(N));
    }
    const Interval lm = log_mass_bracket(model, w);
    out.estimate = widen({lm.hi / log_d, lm.lo / log_d});
    out.boundary_ratio = boundary_ratio(map, Word(word.begin(), word.begin() + N / 2), span.mid());
    out.boundary_ok = out.boundary_ratio >= min_boundary_ratio;
    return out;
}

std::vector<Word> sample_points(const WeakGibbsModel& model, std::size_t count, int depth,
                                std::uint64_t seed) {
    const MarkovMap& map = model.map();
    using Words = std::vector<Word>;
    const std::size_t chunk = 64;
    const std::size_t chunks = (count + chunk - 1) / chunk;
    return parallel_reduce(
        chunks, Words{},
        [&](std::size_t c) {
            Words out;
            const std::size_t end = std::min(count, (c + 1) * chunk);
            for (std::size_t i = c * chunk; i < end; ++i) {
                std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                 static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
                std::mt19937_64 rng(ss);
                std::uniform_real_distribution<double> u(0.0, 1.0);
                Word w;
                for (int m = 0; m < depth; ++m) {
                    std::vector<Symbol> kids;
                    std::vector<Interval> logs;
                    double top = -kInf;
                    for (Symbol j = 0; j < static_cast<Symbol>(map.symbols()); ++j) {
                        if (!w.empty() && !map.allowed(w.back(), j)) continue;
                        Word child = w;
                        child.push_back(j);
                        kids.push_back(j);
                        logs.push_back(log_mass_bracket(model, child));
                        top = std::max(top, logs.back().hi);
                    }
                    // midpoint of each mass bracket, scaled by the largest upper end
                    std::vector<double> weight(kids.size());
                    double total = 0.0;
                    for (std::size_t k = 0; k < kids.size(); ++k) {
                        weight[k] = 0.5 * (std::exp(logs[k].lo - top) + std::exp(logs[k].hi - top));
                        total += weight[k];
                    }
                    double x = u(rng) * total;
                    std::size_t pick = kids.size() - 1;
                    for (std::size_t k = 0; k < kids.size(); ++k) {
                        if (x < weight[k]) {
                            pick = k;
                            break;
                        }
                        x -= weight[k];
                    }
                    w.push_back(kids[pick]);
                }
                out.push_back(std::move(w));
            }
            return out;
        },
        [](Words a, const Words& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        });
}

std::vector<CoarsePoint> coarse_spectrum(const WeakGibbsModel& model, int n,
                                         const std::vector<double>& alpha_grid, double eps) {
    std::vector<CoarsePoint> out;
    for (double alpha : alpha_grid) {
        CoarsePoint p;
        p.alpha = alpha;
        try {
            p.s = bowen_sn(model.map(), model.phi(), n, alpha, eps);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyWindow) throw;
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace multifractal
