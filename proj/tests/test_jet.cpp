#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <perturbex/jet.hpp>

#include <cmath>
#include <random>
#include <vector>

using perturbex::Jet;
using perturbex::ScalarJet;

namespace {

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Brute-force series of exp(q(e)) for a polynomial q with q(0) = 0: sums
// q^j / j! with plain polynomial arithmetic, independent of the jet_exp
// recurrence it checks.
std::vector<double> exp_of_polynomial_oracle(const std::vector<double>& q, int order) {
    std::vector<double> result(order + 1, 0.0);
    result[0] = 1.0;
    std::vector<double> power(order + 1, 0.0);
    power[0] = 1.0;
    for (int j = 1; j <= order; ++j) {
        std::vector<double> next(order + 1, 0.0);
        for (int a = 0; a <= order; ++a)
            for (int b = 0; a + b <= order && b < static_cast<int>(q.size()); ++b)
                next[a + b] += power[a] * q[b];
        power = next;
        for (int k = 0; k <= order; ++k) result[k] += power[k] / factorial(j);
    }
    return result;
}

ScalarJet random_jet(std::mt19937_64& rng, int order, double c0_lo, double c0_hi) {
    std::uniform_real_distribution<double> mag(c0_lo, c0_hi);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> c(order + 1);
    c[0] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    for (int k = 1; k <= order; ++k) c[k] = coef(rng);
    return ScalarJet(std::move(c));
}

}  // namespace

TEST_CASE("jet_mul basic products") {
    ScalarJet a(std::vector<double>{1.0, 1.0, 0.0});
    ScalarJet b(std::vector<double>{1.0, -1.0, 0.0});
    auto ab = jet_mul(a, b);
    CHECK(ab[0] == doctest::Approx(1.0));
    CHECK(ab[1] == doctest::Approx(0.0));
    CHECK(ab[2] == doctest::Approx(-1.0));

    ScalarJet one(std::vector<double>{1.0, 0.0, 0.0});
    auto a1 = jet_mul(a, one);
    for (int k = 0; k <= 2; ++k) CHECK(a1[k] == doctest::Approx(a[k]));
}

TEST_CASE("jet_mul against the e^e * e^e oracle") {
    const int n = 3;
    std::vector<double> e(n + 1);
    for (int k = 0; k <= n; ++k) e[k] = 1.0 / factorial(k);
    auto sq = jet_mul(ScalarJet(e), ScalarJet(e));
    // oracle: e^e * e^e = e^{2e}, coefficient 2^k / k!
    for (int k = 0; k <= n; ++k)
        CHECK(sq[k] == doctest::Approx(std::pow(2.0, k) / factorial(k)).epsilon(1e-13));
}

TEST_CASE("jet_mul rejects order mismatch") {
    ScalarJet a(std::vector<double>{1.0, 1.0});
    ScalarJet b(std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(jet_mul(a, b), std::invalid_argument);
}

TEST_CASE("jet_reciprocal examples") {
    auto r1 = jet_reciprocal(ScalarJet(std::vector<double>{1.0, 1.0, 0.0}));
    CHECK(r1[0] == doctest::Approx(1.0));
    CHECK(r1[1] == doctest::Approx(-1.0));
    CHECK(r1[2] == doctest::Approx(1.0));

    auto r2 = jet_reciprocal(ScalarJet(std::vector<double>{2.0, 0.0}));
    CHECK(r2[0] == doctest::Approx(0.5));
    CHECK(r2[1] == doctest::Approx(0.0));

    // oracle: 1 / e^e = e^{-e}, coefficient (-1)^k / k!
    std::vector<double> e{1.0, 1.0, 0.5, 1.0 / 6.0};
    auto re = jet_reciprocal(ScalarJet(e));
    for (int k = 0; k <= 3; ++k)
        CHECK(re[k] == doctest::Approx(std::pow(-1.0, k) / factorial(k)).epsilon(1e-13));

    CHECK_THROWS_AS(jet_reciprocal(ScalarJet(std::vector<double>{0.0, 1.0})), std::domain_error);
}

TEST_CASE("jet_exp and jet_log series") {
    auto ex = jet_exp(ScalarJet(std::vector<double>{0.0, 1.0, 0.0, 0.0}));
    CHECK(ex[0] == doctest::Approx(1.0));
    CHECK(ex[1] == doctest::Approx(1.0));
    CHECK(ex[2] == doctest::Approx(0.5));
    CHECK(ex[3] == doctest::Approx(1.0 / 6.0));

    auto lg = jet_log(ScalarJet(std::vector<double>{1.0, 1.0, 0.0, 0.0}));
    CHECK(lg[0] == doctest::Approx(0.0));
    CHECK(lg[1] == doctest::Approx(1.0));
    CHECK(lg[2] == doctest::Approx(-0.5));
    CHECK(lg[3] == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(jet_log(ScalarJet(std::vector<double>{-1.0, 1.0})), std::domain_error);
}

TEST_CASE("jet_exp of e + e^2 against brute series") {
    auto oracle = exp_of_polynomial_oracle({0.0, 1.0, 1.0}, 2);
    auto ex = jet_exp(ScalarJet(std::vector<double>{0.0, 1.0, 1.0}));
    CHECK(ex[0] == doctest::Approx(oracle[0]).epsilon(1e-13));
    CHECK(ex[1] == doctest::Approx(oracle[1]).epsilon(1e-13));
    CHECK(ex[2] == doctest::Approx(oracle[2]).epsilon(1e-13));
    CHECK(oracle[2] == doctest::Approx(1.5));
}

TEST_CASE("jet_compose_scalar") {
    // f = square about c0 = 1: coefficients 1, 2, 1
    auto sq = jet_compose_scalar({1.0, 2.0, 1.0}, ScalarJet(std::vector<double>{1.0, 1.0, 0.0}));
    CHECK(sq[0] == doctest::Approx(1.0));
    CHECK(sq[1] == doctest::Approx(2.0));
    CHECK(sq[2] == doctest::Approx(1.0));

    // f = identity leaves the jet unchanged
    ScalarJet inner(std::vector<double>{0.7, -0.3, 0.2});
    auto id = jet_compose_scalar({0.7, 1.0, 0.0}, inner);
    for (int k = 0; k <= 2; ++k) CHECK(id[k] == doctest::Approx(inner[k]));

    // f = log about 1/3, order 1: d/de log(1/3 + e) at 0 is 3
    auto lg = jet_compose_scalar({std::log(1.0 / 3.0), 3.0}, ScalarJet(std::vector<double>{1.0 / 3.0, 1.0}));
    CHECK(lg[0] == doctest::Approx(std::log(1.0 / 3.0)));
    CHECK(lg[1] == doctest::Approx(3.0));

    // agrees with jet_exp/jet_log on their domains
    ScalarJet a(std::vector<double>{0.4, 1.3, -0.2, 0.5});
    std::vector<double> exp_outer(4);
    for (int k = 0; k <= 3; ++k) exp_outer[k] = std::exp(a[0]) / factorial(k);
    auto via_compose = jet_compose_scalar(exp_outer, a);
    auto via_exp = jet_exp(a);
    for (int k = 0; k <= 3; ++k) CHECK(via_compose[k] == doctest::Approx(via_exp[k]).epsilon(1e-13));
}

TEST_CASE("ring axioms on random scalar jets") {
    std::mt19937_64 rng(20250810);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = random_jet(rng, 4, 0.1, 10.0);
        auto b = random_jet(rng, 4, 0.1, 10.0);
        auto c = random_jet(rng, 4, 0.1, 10.0);
        auto ab_c = jet_mul(jet_mul(a, b), c);
        auto a_bc = jet_mul(a, jet_mul(b, c));
        auto ab = jet_mul(a, b);
        auto ba = jet_mul(b, a);
        for (int k = 0; k <= 4; ++k) {
            CHECK(std::abs(ab_c[k] - a_bc[k]) <= 1e-12 * (std::abs(ab_c[k]) + 1.0));
            CHECK(std::abs(ab[k] - ba[k]) <= 1e-12 * (std::abs(ab[k]) + 1.0));
        }
    }
}

TEST_CASE("a * reciprocal(a) is the unit jet for 100 random jets") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_jet(rng, 5, 0.1, 10.0);
        auto unit = jet_mul(a, jet_reciprocal(a));
        CHECK(std::abs(unit[0] - 1.0) <= 1e-12);
        for (int k = 1; k <= 5; ++k) CHECK(std::abs(unit[k]) <= 1e-12 * (1.0 + std::abs(a[k] / a[0])) * 100);
    }
}

TEST_CASE("division is multiplication by the reciprocal") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_jet(rng, 4, 0.1, 5.0);
        auto b = random_jet(rng, 4, 0.5, 5.0);
        auto q = perturbex::jet_div(a, b);
        auto back = jet_mul(q, b);
        for (int k = 0; k <= 4; ++k) CHECK(std::abs(back[k] - a[k]) <= 1e-11 * (1.0 + std::abs(a[k])));
    }
}

TEST_CASE("exp and log are mutually inverse") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = random_jet(rng, 4, 0.1, 2.0);
        auto roundtrip = jet_log(jet_exp(a));
        for (int k = 0; k <= 4; ++k) CHECK(std::abs(roundtrip[k] - a[k]) <= 1e-12 * (1.0 + std::abs(a[k])));

        auto b = random_jet(rng, 4, 0.5, 3.0);
        if (b[0] < 0) b[0] = -b[0];
        auto roundtrip2 = jet_exp(jet_log(b));
        for (int k = 0; k <= 4; ++k) CHECK(std::abs(roundtrip2[k] - b[k]) <= 1e-12 * (1.0 + std::abs(b[k])));
    }
}

TEST_CASE("truncation error scales like eps^{n+1}") {
    // f(e) = exp(0.3 + e) / (2 - e), jets through the module, values exact.
    const int n = 3;
    ScalarJet arg(std::vector<double>(n + 1, 0.0));
    arg[0] = 0.3;
    arg[1] = 1.0;
    ScalarJet den(std::vector<double>(n + 1, 0.0));
    den[0] = 2.0;
    den[1] = -1.0;
    auto jet = jet_mul(jet_exp(arg), jet_reciprocal(den));

    auto exact = [](double e) { return std::exp(0.3 + e) / (2.0 - e); };
    const double e1 = 1e-2, e2 = 1e-3;
    const double err1 = std::abs(exact(e1) - perturbex::jet_eval(jet, e1));
    const double err2 = std::abs(exact(e2) - perturbex::jet_eval(jet, e2));
    const double c1 = err1 / std::pow(e1, n + 1);
    const double c2 = err2 / std::pow(e2, n + 1);
    // the fitted constants agree, so the error is truly order n+1
    CHECK(c2 <= 4.0 * c1 + 1e-9);
    CHECK(c1 <= 4.0 * c2 + 1e-9);
}
