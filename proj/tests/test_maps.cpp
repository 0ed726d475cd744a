#include <doctest.h>

#include <cmath>

#include "multifractal/error.hpp"
#include "multifractal/maps.hpp"

using namespace multifractal;

namespace {

// Plain bisection for an increasing function, independent of the library's Newton path.
double bisection_oracle(double (*g)(double), double target, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        if (g(m) < target) {
            lo = m;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

double mp_half(double x) { return x + std::pow(x, 1.5); }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("doubling map is valid with no parabolic orbits") {
    const MarkovMap m = build_map(presets::doubling());
    CHECK(m.symbols() == 2);
    CHECK(m.transition().full());
    CHECK(m.aperiodicity_power() == 0);
    CHECK(m.parabolic_orbits().empty());
    CHECK(inverse_branch(m, 0, 0.6) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("Manneville-Pomeau s=0.5 has one parabolic fixed point at 0") {
    const double split = bisection_oracle(mp_half, 1.0, 0.0, 1.0);
    const MapConfig cfg = presets::manneville_pomeau(0.5);
    CHECK(cfg.branches[0].domain().hi == doctest::Approx(split).epsilon(1e-15));
    const MarkovMap m = build_map(cfg);
    REQUIRE(m.parabolic_orbits().size() == 1);
    const auto& orbit = m.parabolic_orbits().front();
    CHECK(orbit.period() == 1);
    CHECK(orbit.symbols.front() == 0);
    CHECK(orbit.points.front() == 0.0);
    CHECK(std::abs(std::abs(orbit_derivative(m, orbit.symbols, orbit.points.front())) - 1.0) <
          1e-10);

    const double x = inverse_branch(m, 0, 0.5);
    CHECK(std::abs(x - bisection_oracle(mp_half, 0.5, 0.0, split)) < 1e-14);
}

TEST_CASE("Farey map inverse branches and parabolic point") {
    const MarkovMap m = build_map(presets::farey());
    CHECK(inverse_branch(m, 1, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    REQUIRE(m.parabolic_orbits().size() == 1);
    CHECK(m.parabolic_orbits().front().points.front() == 0.0);
    CHECK_FALSE(m.branch(1).increasing());
}

TEST_CASE("branches that fail to cover their required images are rejected") {
    MapConfig cfg;
    cfg.branches.emplace_back(family::Linear{1.0, 0.0}, Interval{0.0, 0.5});
    cfg.branches.emplace_back(family::Linear{1.0, -0.5}, Interval{0.5, 1.0});
    TransitionMatrix full(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) full.set(i, j, true);
    cfg.transition = full;
    CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::MarkovViolation);
}

TEST_CASE("validation errors") {
    SUBCASE("overlapping domains") {
        MapConfig cfg = presets::doubling();
        cfg.branches[1] = Branch(family::Linear{2.0, -0.8}, Interval{0.4, 0.9});
        CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::MarkovViolation);
    }
    SUBCASE("contraction") {
        MapConfig cfg;
        cfg.branches.emplace_back(family::Linear{0.5, 0.0}, Interval{0.0, 1.0});
        CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::ContractionViolation);
    }
    SUBCASE("not transitive") {
        // Two branches each mapping onto itself.
        MapConfig cfg;
        cfg.branches.emplace_back(family::Linear{1.0, 0.0}, Interval{0.0, 0.5});
        cfg.branches.emplace_back(family::Linear{1.0, 0.0}, Interval{0.5, 1.0});
        CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::NotTransitive);
    }
    SUBCASE("partial image overlap under auto-derivation") {
        MapConfig cfg;
        cfg.branches.emplace_back(family::Linear{1.5, 0.0}, Interval{0.0, 0.5});
        cfg.branches.emplace_back(family::Linear{2.0, -1.0}, Interval{0.5, 1.0});
        CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::MarkovViolation);
    }
    SUBCASE("out of image") {
        const MarkovMap m = build_map(presets::two_slope());
        CHECK(kind_of([&] { (void)inverse_branch(m, 0, 1.5); }) == ErrorKind::OutOfImage);
    }
}

TEST_CASE("golden mean map realises the golden mean shift") {
    const MarkovMap m = build_map(presets::golden_mean());
    CHECK(m.allowed(0, 0));
    CHECK(m.allowed(0, 1));
    CHECK(m.allowed(1, 0));
    CHECK_FALSE(m.allowed(1, 1));
    CHECK(m.aperiodicity_power() == 1);
}

TEST_CASE("cores of a Cantor repeller shrink to the span of Lambda") {
    const MarkovMap m = build_map(presets::two_slope());
    // sup Lambda is the fixed point 2/3 of the steep branch.
    CHECK(m.core(0).lo == doctest::Approx(0.0));
    CHECK(m.core(0).hi == doctest::Approx(1.0 / 3.0));
    CHECK(m.core(1).lo == doctest::Approx(0.5));
    CHECK(m.core(1).hi == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("parabolic exponents") {
    SUBCASE("MP s=0.5") {
        const MarkovMap m = build_map(presets::manneville_pomeau(0.5));
        const ExponentFit fit = parabolic_exponent(m, m.parabolic_orbits().front());
        CHECK(fit.beta == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(fit.L == doctest::Approx(1.5).epsilon(1e-6));
        CHECK(*fit.analytic_beta == 0.5);
        CHECK(*fit.analytic_L == 1.5);
    }
    SUBCASE("MP s=1") {
        const MarkovMap m = build_map(presets::manneville_pomeau(1.0));
        const ExponentFit fit = parabolic_exponent(m, m.parabolic_orbits().front());
        CHECK(fit.beta == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(fit.L == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("Farey") {
        const MarkovMap m = build_map(presets::farey());
        const ExponentFit fit = parabolic_exponent(m, m.parabolic_orbits().front());
        CHECK(*fit.analytic_beta == 1.0);
        CHECK(*fit.analytic_L == 2.0);
        CHECK(fit.beta == doctest::Approx(1.0).epsilon(0.02));
        CHECK(fit.L == doctest::Approx(2.0).epsilon(0.05));
        CHECK(m.parabolic_orbits().front().beta == 1.0);
    }
}

TEST_CASE("inverse branches round-trip and derivatives match finite differences") {
    for (const MapConfig& cfg : {presets::doubling(), presets::golden_mean(), presets::two_slope(),
                                 presets::manneville_pomeau(0.5), presets::farey()}) {
        const MarkovMap m = build_map(cfg);
        for (const Branch& br : m.branches()) {
            const Interval img = br.image();
            for (int g = 0; g < 1000; ++g) {
                const double y = img.lo + img.width() * (g + 0.5) / 1000.0;
                CHECK(std::abs(br(br.inverse(y)) - y) < 1e-12);
            }
            const Interval dom = br.domain();
            for (int g = 1; g < 100; ++g) {
                const double x = dom.lo + dom.width() * g / 100.0;
                const double h = 1e-6;
                const double fd = (br(x + h) - br(x - h)) / (2 * h);
                CHECK(std::abs(fd - br.derivative(x)) < 1e-6);
            }
        }
    }
}

TEST_CASE("alpha_max classification follows parabolic orbit detection") {
    CHECK_FALSE(build_map(presets::doubling()).parabolic());
    CHECK_FALSE(build_map(presets::two_slope()).parabolic());
    CHECK(build_map(presets::manneville_pomeau(0.5)).parabolic());
    CHECK(build_map(presets::farey()).parabolic());
}

TEST_CASE("unit derivative away from parabolic orbits is rejected") {
    // slope 1 on a branch that is not a fixed point
    MapConfig cfg;
    cfg.branches.emplace_back(family::Linear{2.0, 0.0}, Interval{0.0, 0.5});
    cfg.branches.emplace_back(family::Linear{1.0, -0.5}, Interval{0.5, 1.0});
    TransitionMatrix a(2);
    a.set(0, 0, true);
    a.set(0, 1, true);
    a.set(1, 0, true);
    cfg.transition = a;
    CHECK(kind_of([&] { build_map(cfg); }) == ErrorKind::UnitDerivativeOffOrbit);
}
