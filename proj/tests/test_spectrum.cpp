#include <doctest.h>

#include <cmath>

#include "multifractal/error.hpp"
#include "multifractal/numerics.hpp"
#include "multifractal/spectrum.hpp"

using namespace multifractal;

namespace {

const double kLog2 = std::log(2.0);

// Bernoulli(p, 1-p) on the doubling map, parametrised by b:
// a(b) = -log(p^b + q^b) / log 2, alpha(b) = E_b[-log p_i] / log 2.
struct BernoulliOracle {
    double p;
    double a(double b) const { return -std::log(std::pow(p, b) + std::pow(1 - p, b)) / kLog2; }
    double alpha(double b) const {
        const double u = std::pow(p, b), v = std::pow(1 - p, b);
        return (u * -std::log(p) + v * -std::log(1 - p)) / ((u + v) * kLog2);
    }
    double f(double b) const { return b * alpha(b) - a(b); }
    double b_of(double a_target) const {
        return bisect_root([&](double b) { return a(b) - a_target; }, -50.0, 50.0, 1e-14);
    }
};

}  // namespace

TEST_CASE("doubling with phi = -log 2: b = 1 + a") {
    const MarkovMap m = build_map(presets::doubling());
    const Potential phi = Potential::constant(-kLog2);
    const BSolver solver(m, phi, 1);
    for (double a : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        const BBracket b = solver.solve(a);
        CHECK(b.lower <= 1 + a + 1e-12);
        CHECK(b.upper >= 1 + a - 1e-12);
        CHECK(b.width() < 1e-10);
        CHECK(alpha_of_a(solver, a).alpha == doctest::Approx(1.0).epsilon(1e-8));
    }
    const Endpoints e = endpoints(m, phi, 3);
    CHECK(e.alpha_min.lo == doctest::Approx(1.0));
    CHECK(e.alpha_max.hi == doctest::Approx(1.0));
    CHECK_THROWS_AS(dim_x_infinity(m), Error);
}

TEST_CASE("Bernoulli measure on the doubling map") {
    const MarkovMap m = build_map(presets::doubling());
    const Potential phi = Potential::bernoulli({0.25, 0.75});
    const BernoulliOracle o{0.25};
    const BBracket b0 = b_of_a(m, phi, 0.0, 1e-9);
    CHECK(b0.value == doctest::Approx(1.0).epsilon(1e-9));
    for (double a : {-1.0, 1.0, 2.5}) {
        const BBracket b = b_of_a(m, phi, a, 1e-9);
        CHECK(std::abs(b.value - o.b_of(a)) < 1e-8);
    }
    CHECK(std::abs(alpha_of_a(m, phi, 0.0).alpha - 0.811278) < 1e-5);
    CHECK(std::abs(alpha_of_a(m, phi, -1.0).alpha - o.alpha(o.b_of(-1.0))) < 1e-5);

    // exhaustive oracle: ratios of single symbols (mediants cover all cycles)
    const Endpoints e = endpoints(m, phi, 3);
    CHECK(std::abs(e.alpha_min.mid() - std::log(4.0 / 3.0) / kLog2) < 1e-9);
    CHECK(std::abs(e.alpha_max.mid() - 2.0) < 1e-9);
    CHECK_FALSE(e.alpha_max_infinite);

    std::vector<double> grid;
    for (double b = -6.0; b <= 6.0; b += 0.5) grid.push_back(o.alpha(b));
    SpectrumOptions opt;
    opt.a_samples = 61;
    const SpectrumCurve c = legendre_spectrum(m, phi, grid, -15.0, 15.0, opt);
    CHECK(c.converged);
    std::size_t k = 0;
    for (double b = -6.0; b <= 6.0; b += 0.5, ++k) {
        REQUIRE_FALSE(c.points[k].empty);
        CHECK(std::abs(c.points[k].f - o.f(b)) < 1e-4);
    }
    const CurveChecks ck = check_curve(c);
    CHECK(ck.concave());
    CHECK(ck.b_nondecreasing);
    CHECK(ck.min_b_second_difference >= -1e-9);
    CHECK(ck.max_excess_over_dim <= 1e-6);
    CHECK(ck.min_endpoint_f >= -1e-9);

    // outside [alpha_min, alpha_max] the level set is empty
    const SpectrumCurve out = legendre_spectrum(m, phi, {0.2, 2.5}, -5.0, 5.0, opt);
    CHECK(out.points[0].empty);
    CHECK(out.points[1].empty);
}

TEST_CASE("two-slope Cantor map endpoints match single-symbol ratios") {
    const MarkovMap m = build_map(presets::two_slope());
    const double p = 0.3;
    const Potential phi = Potential::bernoulli({p, 1 - p});
    const double r0 = -std::log(p) / std::log(2.0);
    const double r1 = -std::log(1 - p) / std::log(4.0);
    const Endpoints e = endpoints(m, phi, 4);
    CHECK(std::abs(e.alpha_min.mid() - std::min(r0, r1)) < 1e-9);
    CHECK(std::abs(e.alpha_max.mid() - std::max(r0, r1)) < 1e-9);
    CHECK(e.min_cycle.size() >= 1);
}

TEST_CASE("positive phi is rejected") {
    const MarkovMap m = build_map(presets::doubling());
    CHECK_THROWS_AS(BSolver(m, Potential::constant(0.1), 2), Error);
}

TEST_CASE("parabolic maps: infinite alpha_max and dim X_infinity") {
    for (const MapConfig& cfg : {presets::manneville_pomeau(0.5), presets::farey()}) {
        const MarkovMap m = build_map(cfg);
        const Potential phi = Potential::bernoulli({0.5, 0.5});
        const Endpoints e = endpoints(m, phi, 3);
        CHECK(e.alpha_max_infinite);
        CHECK(std::isinf(e.alpha_max.lo));
        CHECK(e.alpha_min.lo > 0.0);
    }
    const MarkovMap mp = build_map(presets::manneville_pomeau(0.5));
    const RootBracket d = dim_x_infinity(mp);
    CHECK(d.lower <= 1.0);
    CHECK(d.lower >= 0.99);
}
