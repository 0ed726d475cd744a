#include <doctest.h>

#include <cmath>

#include "multifractal/error.hpp"
#include "multifractal/induced.hpp"
#include "multifractal/numerics.hpp"
#include "multifractal/spectrum.hpp"

using namespace multifractal;

namespace {
const double kLog2 = std::log(2.0);
}

TEST_CASE("trivial inducing on the doubling map") {
    const MarkovMap dbl = build_map(presets::doubling());
    const WeakGibbsModel model(dbl, Potential::constant(-kLog2));
    const InducedSystem sys = build_induced(model, 30);
    CHECK(sys.trivial);
    REQUIRE(sys.branches.size() == 2);
    CHECK(sys.branches[0].return_time == 1);
    CHECK(sys.kept_mass == doctest::Approx(1.0));
    const auto curve = induced_b_curve(sys, {-2.0, -0.5, 0.0, 1.0, 2.5});
    for (const auto& p : curve) {
        CHECK(p.lower <= 1 + p.a + 1e-9);
        CHECK(p.upper >= 1 + p.a - 1e-9);
        CHECK(p.width() < 1e-9);
        CHECK(p.truncation_error == 0.0);
    }
}

TEST_CASE("Farey branches are unary excursions") {
    const MarkovMap f = build_map(presets::farey());
    const WeakGibbsModel model(f, Potential::constant(-kLog2), KnLaw::declared(0.5, 1.0));
    const InducedSystem sys = build_induced(model, 15);
    CHECK_FALSE(sys.trivial);
    REQUIRE(sys.base == std::vector<Symbol>{1});
    REQUIRE(sys.branches.size() == 15);
    for (int r = 1; r <= 15; ++r) {
        const InducedBranch& b = sys.branches[static_cast<std::size_t>(r - 1)];
        CHECK(b.return_time == r);
        Word w{1};
        w.insert(w.end(), static_cast<std::size_t>(r - 1), Symbol{0});
        CHECK(b.word == w);
        CHECK(b.psi.lo > 0.0);
        CHECK(b.phi.lo == doctest::Approx(-r * kLog2));
    }
    // disjoint domains inside the base
    for (std::size_t i = 0; i + 1 < sys.branches.size(); ++i)
        CHECK(meet(sys.branches[i].domain, sys.branches[i + 1].domain).width() <= 0.0);
    CHECK_THROWS_AS(build_induced(model, 0), Error);
}

TEST_CASE("MP branch lengths decay like r^-(1+1/s)") {
    const MarkovMap mp = build_map(presets::manneville_pomeau(0.5));
    const WeakGibbsModel model(mp, Potential::constant(-kLog2));
    const InducedSystem sys = build_induced(model, 60);
    REQUIRE(sys.branches.size() == 60);
    std::vector<double> x, y;
    for (const auto& b : sys.branches) {
        if (b.return_time < 30) continue;  // the power law is only asymptotic
        x.push_back(std::log(b.return_time));
        y.push_back(std::log(b.domain.width()));
    }
    const LineFit fit = fit_line(x, y);
    CHECK(std::abs(fit.slope + 3.0) < 0.3);

    // below the transition the truncated sum at b = 0 stays under one
    const auto ray = induced_b_curve(sys, {-1.5, -2.0});
    for (const auto& p : ray) {
        CHECK(p.lower == 0.0);
        CHECK(p.upper <= p.truncation_error + 1e-9);
    }
}

TEST_CASE("Farey induced b against direct brackets") {
    const MarkovMap f = build_map(presets::farey());
    const Potential phi = Potential::constant(-kLog2);
    const WeakGibbsModel model(f, phi);
    const InducedSystem s20 = build_induced(model, 20);
    const InducedSystem s40 = build_induced(model, 40);
    const std::vector<double> as{-0.5, 0.0, 1.0};
    const auto c20 = induced_b_curve(s20, as);
    const auto c40 = induced_b_curve(s40, as);
    const BSolver direct(f, phi, 10);
    for (std::size_t i = 0; i < as.size(); ++i) {
        CHECK(c20[i].lower <= c40[i].lower + 1e-12);  // more branches, more pressure
        const BBracket d = direct.solve(as[i]);
        CHECK(std::abs(c40[i].value - d.value) < 0.05);
    }
    const Interval hull = induced_ratio_hull(s40);
    CHECK(hull.lo <= endpoints(f, phi, 4).alpha_min.hi + 1e-9);
}
