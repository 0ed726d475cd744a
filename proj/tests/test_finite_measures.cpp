#include <doctest.h>

#include <cmath>
#include <random>

#include "multifractal/error.hpp"
#include "multifractal/finite_measures.hpp"

using namespace multifractal;

namespace {

const double kLog2 = std::log(2.0);

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

// Shannon entropy of Bernoulli(t) in bits.
double h2(double t) { return -(t * std::log2(t) + (1 - t) * std::log2(1 - t)); }

bool chain_admissible(const MarkovMap& m, const Word& w) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        if (!m.allowed(w[i], w[i + 1])) return false;
    return true;
}

}  // namespace

TEST_CASE("connectors") {
    const MarkovMap dbl = build_map(presets::doubling());
    for (int n : {1, 3, 6}) CHECK(connector_length(dbl, n).length() == 0);

    // golden mean: the pair (01, 10) is not admissible at k = 0, every pair is at k = 1 via "0"
    const MarkovMap gm = build_map(presets::golden_mean());
    const ConnectorTable t = connector_length(gm, 2);
    CHECK(t.length() == 1);
    const auto& w = t.words();
    bool some_pair_fails = false;
    for (std::size_t u = 0; u < w.size(); ++u) {
        for (std::size_t v = 0; v < w.size(); ++v) {
            Word joint = w[u];
            joint.insert(joint.end(), w[v].begin(), w[v].end());
            some_pair_fails |= !chain_admissible(gm, joint);
            CHECK(t.connector(u, v) == Word{0});
        }
    }
    CHECK(some_pair_fails);

    // MP: 0^n 0^n contains the parabolic fixed point, so a connector is needed
    const MarkovMap mp = build_map(presets::manneville_pomeau(0.5));
    const ConnectorTable c = connector_length(mp, 3);
    CHECK(c.length() >= 1);
    const std::size_t zero = 0;  // 000 is the first word
    REQUIRE(c.words()[zero] == Word{0, 0, 0});
    const Word& om = c.connector(zero, zero);
    CHECK(std::find(om.begin(), om.end(), Symbol{1}) != om.end());
    CHECK_THROWS_AS(connector_length(mp, 3, 0), Error);
}

TEST_CASE("block measure statistics") {
    const MarkovMap dbl = build_map(presets::doubling());
    const Potential phi = Potential::bernoulli({0.25, 0.75});
    const double phibar = 0.5 * (std::log(0.25) + std::log(0.75));

    const BlockMeasure b1 = block_measure(dbl, phi, 1, {{0}, {1}}, {0.5, 0.5});
    CHECK(b1.entropy_per_block == doctest::Approx(kLog2).epsilon(1e-14));
    CHECK(b1.lyapunov.mid() == doctest::Approx(kLog2).epsilon(1e-14));
    CHECK(b1.phi_avg.mid() == doctest::Approx(phibar).epsilon(1e-14));
    CHECK(b1.error_bar == doctest::Approx(0.0));

    const BlockMeasure b2 = block_measure(dbl, phi, 2, {{0, 1}}, {1.0});
    CHECK(b2.entropy_per_block == 0.0);
    CHECK(b2.lyapunov.mid() == doctest::Approx(kLog2).epsilon(1e-14));
    CHECK(b2.phi_avg.mid() == doctest::Approx(phibar).epsilon(1e-14));
    const SpreadStats s2 = spread_to_shift_invariant(b2);
    CHECK(s2.entropy == 0.0);
    CHECK(s2.lyapunov.contains(kLog2, 1e-14));

    const SpreadStats s1 = spread_to_shift_invariant(
        block_measure(dbl, Potential::constant(-kLog2), 1, {{0}, {1}}, {0.5, 0.5}));
    CHECK(s1.entropy == doctest::Approx(kLog2));
    CHECK(s1.alpha() == doctest::Approx(1.0));

    // golden mean uniform on 00, 01, 10 with k = 1
    const MarkovMap gm = build_map(presets::golden_mean());
    const Potential c = Potential::constant(-1.0);
    const BlockMeasure g = block_measure(gm, c, 2, {{0, 0}, {0, 1}, {1, 0}}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(g.entropy_per_block == doctest::Approx(std::log(3.0)));
    const double log_g = std::log((1 + std::sqrt(5.0)) / 2);
    CHECK(std::abs(g.lyapunov.mid() - log_g) <= g.error_bar + 1e-12);
    CHECK(spread_to_shift_invariant(g).entropy == doctest::Approx(std::log(3.0) / 3));

    CHECK_THROWS_AS(block_measure(gm, c, 2, {{1, 1}}, {1.0}), Error);
    CHECK_THROWS_AS(block_measure(gm, c, 2, {{0, 0, 0}}, {1.0}), Error);
    CHECK_THROWS_AS(block_measure(gm, c, 2, {{0, 0}, {0, 1}}, {0.5, 0.4}), Error);
}

TEST_CASE("optimal block weights") {
    const MarkovMap dbl = build_map(presets::doubling());
    const Potential phi = Potential::bernoulli({0.25, 0.75});
    const double a_quarter = (0.25 * 2 + 0.75 * std::log2(4.0 / 3)) ;
    const BlockMeasure q1 = optimize_block_weights(dbl, phi, 1, a_quarter);
    REQUIRE(q1.q.size() == 2);
    CHECK(q1.q[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(q1.objective() == doctest::Approx(h2(0.25)).epsilon(1e-9));

    const double a_half = (2 + std::log2(4.0 / 3)) / 2;
    const BlockMeasure q2 = optimize_block_weights(dbl, phi, 1, a_half);
    CHECK(q2.q[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(q2.objective() == doctest::Approx(1.0).epsilon(1e-9));

    const BlockMeasure q3 = optimize_block_weights(dbl, Potential::constant(-kLog2), 1, 1.0);
    CHECK(q3.q[0] == doctest::Approx(0.5));
    CHECK(q3.objective() == doctest::Approx(1.0));

    CHECK_THROWS_AS(optimize_block_weights(dbl, phi, 3, 2.5), Error);
    CHECK_THROWS_AS(optimize_block_weights(dbl, phi, 3, 0.3), Error);

    // n = 2 against a constrained grid search; the middle words share their mass equally
    const double alpha = 1.0;
    const double c00 = -2 * std::log(0.25), c11 = -2 * std::log(0.75), c01 = 0.5 * (c00 + c11);
    const double K = alpha * 2 * kLog2;
    double best = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double x = i / 200000.0;
        // x c00 + (1 - x - z) c01 + z c11 = K
        const double z = (K - c01 - x * (c00 - c01)) / (c11 - c01);
        const double m = 1 - x - z;
        if (z < 0 || m < 0) continue;
        const double h = entropy({x, m / 2, m / 2, z});
        best = std::max(best, h / (2 * kLog2));
    }
    const BlockMeasure q4 = optimize_block_weights(dbl, phi, 2, alpha);
    CHECK(q4.objective() == doctest::Approx(best).epsilon(1e-6));
    CHECK(q4.alpha() == doctest::Approx(alpha).epsilon(1e-9));
}

TEST_CASE("Bowen roots s_n") {
    const MarkovMap dbl = build_map(presets::doubling());
    CHECK(bowen_sn(dbl, Potential::constant(-kLog2), 5, 1.0, 0.1).value == doctest::Approx(1.0).epsilon(1e-9));

    const Potential phi = Potential::bernoulli({0.25, 0.75});
    // only 0000 has ratio near 2
    const SnBracket one = bowen_sn(dbl, phi, 4, 2.0, 0.1);
    CHECK(one.words == 1);
    CHECK(one.value == 0.0);

    // binomial oracle: ratio of a word with j zeros is (2j + (n - j) log2(4/3)) / n
    const double alpha = 0.8113, eps = 0.05;
    for (int n : {4, 8, 11, 12}) {
        double count = 0;
        for (int j = 0; j <= n; ++j) {
            const double r = (2.0 * j + (n - j) * std::log2(4.0 / 3)) / n;
            if (std::abs(r - alpha) < eps) count += binomial(n, j);
        }
        const SnBracket s = bowen_sn(dbl, phi, n, alpha, eps);
        CHECK(s.value == doctest::Approx(std::log2(count) / n).epsilon(1e-9));
    }
    // no j / 14 falls in the window
    CHECK_THROWS_AS(bowen_sn(dbl, phi, 14, alpha, eps), Error);

    // shrinking the window cannot raise s_n
    const double wide = bowen_sn(dbl, phi, 10, 1.2, 0.3).value;
    const double narrow = bowen_sn(dbl, phi, 10, 1.2, 0.1).value;
    CHECK(narrow <= wide);
}

TEST_CASE("diameter weights against the optimum") {
    const MarkovMap dbl = build_map(presets::doubling());
    const Potential phi = Potential::locally_constant(2, 2, {std::log(0.1), std::log(0.4), std::log(0.3), std::log(0.6)});
    const MarkovMap ts = build_map(presets::two_slope());
    for (const MarkovMap* m : {&dbl, &ts}) {
        const Potential f = m == &dbl ? phi : Potential::bernoulli({0.3, 0.7});
        for (int n : {4, 8}) {
            const BlockMeasure opt = optimize_block_weights(*m, f, n, 1.0);
            const BlockMeasure dia = diameter_block_weights(*m, f, n, 1.0, 0.2);
            CHECK(dia.objective() <= opt.objective() + 4 * (dia.error_bar + opt.error_bar) + 0.2);
        }
    }
}

TEST_CASE("entropy of mixtures with disjoint supports") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> q1(6, 0.0), q0(6, 0.0);
        double s1 = 0, s0 = 0;
        for (int i = 0; i < 3; ++i) s1 += q1[i] = u(rng);
        for (int i = 3; i < 6; ++i) s0 += q0[i] = u(rng);
        for (double& x : q1) x /= s1;
        for (double& x : q0) x /= s0;
        const double t = u(rng);
        std::vector<double> qt(6);
        for (int i = 0; i < 6; ++i) qt[i] = t * q1[i] + (1 - t) * q0[i];
        CHECK(entropy(qt) >= t * entropy(q1) + (1 - t) * entropy(q0) - 1e-14);
    }
}
