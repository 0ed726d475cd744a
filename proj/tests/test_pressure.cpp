#include <doctest.h>

#include <cmath>
#include <random>

#include "multifractal/error.hpp"
#include "multifractal/pressure.hpp"

using namespace multifractal;

namespace {

// Power iteration on a small dense matrix, independent of the library's graph code.
double perron_log(const std::vector<std::vector<double>>& m) {
    std::vector<double> v(m.size(), 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        std::vector<double> u(m.size(), 0.0);
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = 0; j < m.size(); ++j) u[i] += m[i][j] * v[j];
        double top = 0.0;
        for (double x : u) top = std::max(top, x);
        lambda = top / *std::max_element(v.begin(), v.end());
        for (std::size_t i = 0; i < m.size(); ++i) v[i] = u[i] / top;
    }
    return std::log(lambda);
}

const double kLog2 = std::log(2.0);

}  // namespace

TEST_CASE("full shift closed forms") {
    const MarkovMap m = build_map(presets::doubling());
    for (int n : {1, 3, 7}) {
        const PressureBracket b = pressure_bracket(m, Potential::constant(0.0), n);
        CHECK(b.lower == doctest::Approx(kLog2).epsilon(1e-15));
        CHECK(b.upper == doctest::Approx(kLog2).epsilon(1e-15));
        const PressureBracket z = pressure_bracket(m, Potential::constant(-kLog2), n);
        CHECK(std::abs(z.value) < 1e-15);
    }
    // doubling: P(a psi + b phi) = (1 + a - b) log 2 with phi = -log 2
    const Potential phi = Potential::constant(-kLog2);
    for (double a : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
        for (double bb : {-1.0, 0.0, 1.5}) {
            const Potential f = Potential::geometric(a) + bb * phi;
            const PressureBracket p = pressure_bracket(m, f, 1);
            CHECK(std::abs(p.lower - (1 + a - bb) * kLog2) < 1e-12);
            CHECK(std::abs(p.upper - (1 + a - bb) * kLog2) < 1e-12);
        }
    }
    // depth-1 table: log sum exp
    const Potential t = Potential::locally_constant(2, 1, {0.3, -1.7});
    const PressureBracket pt = pressure_bracket(m, t, 1);
    CHECK(std::abs(pt.value - std::log(std::exp(0.3) + std::exp(-1.7))) < 1e-12);
    CHECK(pt.width() == 0.0);
}

TEST_CASE("depth-2 table matches the Perron root of its weight matrix") {
    const MarkovMap m = build_map(presets::doubling());
    const std::vector<double> v = {0.1, -0.4, 0.9, -2.0};  // 00, 01, 10, 11
    const Potential f = Potential::locally_constant(2, 2, v);
    std::vector<std::vector<double>> w = {{std::exp(v[0]), std::exp(v[1])},
                                          {std::exp(v[2]), std::exp(v[3])}};
    const double oracle = perron_log(w);
    for (int n : {2, 5}) {
        const PressureBracket b = pressure_bracket(m, f, n);
        CHECK(std::abs(b.lower - oracle) < 1e-12);
        CHECK(std::abs(b.upper - oracle) < 1e-12);
    }
}

TEST_CASE("golden mean entropy") {
    const MarkovMap m = build_map(presets::golden_mean());
    const double oracle = perron_log({{1.0, 1.0}, {1.0, 0.0}});
    CHECK(oracle == doctest::Approx(0.481212).epsilon(1e-6));
    const PressureBracket b = pressure_bracket(m, Potential::constant(0.0), 20);
    CHECK(b.lower <= oracle + 1e-12);
    CHECK(b.upper >= oracle - 1e-12);
    const PressureBracket q = pressure(m, Potential::constant(0.0), 1e-6);
    CHECK(q.level <= 24);
    CHECK(std::abs(q.value - oracle) < 1e-6);
}

TEST_CASE("parabolic acip case") {
    const MarkovMap m = build_map(presets::manneville_pomeau(0.5));
    const PressureBracket b = pressure(m, Potential::geometric(-1.0), 1e-2);
    CHECK(b.lower <= 0.0);
    CHECK(b.upper >= 0.0);
    CHECK(b.width() <= 1e-2);
}

TEST_CASE("pressure reports NotConverged with its best bracket") {
    const MarkovMap m = build_map(presets::manneville_pomeau(0.5));
    PressureOptions o;
    o.max_states = 64;
    try {
        pressure(m, Potential::geometric(-1.0), 1e-9, o);
        FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
        CHECK(e.best().contains(0.0));
    }
}

TEST_CASE("Bowen roots") {
    SUBCASE("doubling") {
        const RootBracket r = bowen_root(build_map(presets::doubling()), 1e-10);
        CHECK(std::abs(r.value - 1.0) < 1e-10);
    }
    SUBCASE("two slopes") {
        // scalar bisection on 2^-s + 4^-s = 1
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double s = 0.5 * (lo + hi);
            (std::pow(2.0, -s) + std::pow(4.0, -s) > 1.0 ? lo : hi) = s;
        }
        CHECK(lo == doctest::Approx(0.6942).epsilon(1e-4));
        const RootBracket r = bowen_root(build_map(presets::two_slope()), 1e-9);
        CHECK(r.lower <= lo + 1e-12);
        CHECK(r.upper >= lo - 1e-12);
        CHECK(r.width() <= 1e-9);
    }
    SUBCASE("Manneville-Pomeau") {
        const RootBracket r = bowen_root(build_map(presets::manneville_pomeau(0.5)), 1e-2);
        CHECK(std::abs(r.value - 1.0) < 1e-2);
        CHECK(r.lower <= 1.0);
    }
}

TEST_CASE("normalization") {
    SUBCASE("full shift") {
        const MarkovMap m = build_map(presets::doubling());
        const Potential phi = normalize_potential(m, Potential::constant(0.0), 1e-12);
        CHECK(phi.constant_part() == doctest::Approx(-kLog2).epsilon(1e-14));
        CHECK(phi.pressure_shift() == doctest::Approx(kLog2).epsilon(1e-14));
    }
    SUBCASE("Bernoulli already normalized") {
        const MarkovMap m = build_map(presets::doubling());
        const Potential phi = normalize_potential(m, Potential::bernoulli({0.25, 0.75}), 1e-12);
        CHECK(std::abs(phi.pressure_shift()) < 1e-14);
        CHECK(phi.range(m).hi == doctest::Approx(std::log(0.75)));
    }
    SUBCASE("golden mean") {
        const MarkovMap m = build_map(presets::golden_mean());
        const Potential phi = normalize_potential(m, Potential::constant(0.0), 1e-9);
        CHECK(phi.constant_part() == doctest::Approx(-0.481212).epsilon(1e-6));
    }
    SUBCASE("sup phi above the pressure") {
        const MarkovMap m = build_map(presets::golden_mean());
        // heavy weight on the symbol that must be followed by the other one
        const Potential raw = Potential::locally_constant(2, 1, {0.0, 10.0});
        try {
            normalize_potential(m, raw, 1e-9);
            FAIL("expected NotStrictlyNegative");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NotStrictlyNegative);
        }
    }
}

TEST_CASE("monotonicity and translation on random tables") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 1.0);
    const MarkovMap m = build_map(presets::golden_mean());
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> f(4), g(4);
        for (int k = 0; k < 4; ++k) {
            f[k] = u(rng);
            g[k] = f[k] + std::abs(u(rng));
        }
        const PressureBracket pf = pressure_bracket(m, Potential::locally_constant(2, 2, f), 6);
        const PressureBracket pg = pressure_bracket(m, Potential::locally_constant(2, 2, g), 6);
        CHECK(pf.lower <= pg.upper + 1e-12);
        const double c = u(rng);
        const PressureBracket pc =
            pressure_bracket(m, Potential::locally_constant(2, 2, f) + Potential::constant(c), 6);
        CHECK(std::abs(pc.value - (pf.value + c)) <= pf.width() + 1e-12);
    }
}

TEST_CASE("bracket widths shrink with the level") {
    for (const MapConfig& cfg : {presets::doubling(), presets::golden_mean(), presets::two_slope(),
                                 presets::manneville_pomeau(0.5), presets::farey()}) {
        const MarkovMap m = build_map(cfg);
        const Potential f = Potential::geometric(-0.8);
        double prev = kInf;
        for (int n : {4, 8, 12, 16}) {
            const PressureBracket b = pressure_bracket(m, f, n);
            CHECK(b.width() <= prev + 1e-12);
            prev = b.width();
        }
    }
}

TEST_CASE("leaf graph refines parabolic chains") {
    const MarkovMap m = build_map(presets::manneville_pomeau(0.5));
    const Potential psi = Potential::geometric(1.0);
    const Potential* pots[] = {&psi};
    PressureOptions o;
    o.chain_factor = 4;
    const LeafGraph g(m, pots, 3, o);
    // 2^3 words minus 000, plus 000..0 1 for k = 3..11 and the terminal 0^12
    CHECK(g.chain_length() == 12);
    CHECK(g.states() == 7 + 9 + 1);
    CHECK_THROWS_AS(LeafGraph(m, pots, 1, o), Error);
}
