#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <perturbex/jet.hpp>
#include <perturbex/transfer.hpp>

#include <cmath>
#include <random>

using namespace perturbex;

namespace {

ShiftPtr full2() {
    Eigen::MatrixXi a(2, 2);
    a << 1, 1, 1, 1;
    return build_shift(a);
}

ShiftPtr golden() {
    Eigen::MatrixXi a(2, 2);
    a << 1, 1, 1, 0;
    return build_shift(a);
}

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

TEST_CASE("build_ruelle matrices for the standard shifts") {
    auto s = full2();
    auto L = build_ruelle(DepthFn(s, 1, 0.0));
    CHECK(L.mat == Eigen::MatrixXd::Ones(2, 2));
    CHECK(L.mat.rowwise().sum().isApproxToConstant(2.0));

    auto g = golden();
    auto Lg = build_ruelle(DepthFn(g, 1, 0.0));
    // Lf(0) = f(0) + f(1), Lf(1) = f(0)
    DepthFn f(g, 1, Eigen::Vector2d(3.0, 5.0));
    auto Lf = apply(Lg, f);
    CHECK(Lf.values(0) == doctest::Approx(8.0));
    CHECK(Lf.values(1) == doctest::Approx(3.0));

    // weighted full shift is rank one: Lf = a f(0) + b f(1) everywhere
    const double a = 0.7, b = 1.9;
    auto Lw = build_ruelle(DepthFn(s, 1, Eigen::Vector2d(std::log(a), std::log(b))));
    DepthFn u(s, 1, Eigen::Vector2d(2.0, -1.0));
    auto Lu = apply(Lw, u);
    CHECK(Lu.values(0) == doctest::Approx(a * 2.0 + b * -1.0));
    CHECK(Lu.values(1) == doctest::Approx(a * 2.0 + b * -1.0));
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(Lw.mat).rank() == 1);
}

TEST_CASE("spectral_triplet on the full 2-shift") {
    auto t = spectral_triplet(build_ruelle(DepthFn(full2(), 1, 0.0)));
    CHECK(t.lambda == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(t.h(0) == doctest::Approx(1.0));
    CHECK(t.h(1) == doctest::Approx(1.0));
    CHECK(t.nu(0) == doctest::Approx(0.5));
    CHECK(t.nu(1) == doctest::Approx(0.5));
    CHECK(t.nu.dot(t.h) == doctest::Approx(1.0));
}

TEST_CASE("spectral_triplet on the golden-mean shift") {
    auto t = spectral_triplet(build_ruelle(DepthFn(golden(), 1, 0.0)));
    CHECK(std::abs(t.lambda - kGolden) <= 1e-12);
    // nu = (1/lambda, 1/lambda^2), h = (lambda, 1)/(3 - lambda)
    CHECK(t.nu(0) == doctest::Approx(1.0 / kGolden).epsilon(1e-12));
    CHECK(t.nu(1) == doctest::Approx(1.0 / (kGolden * kGolden)).epsilon(1e-12));
    CHECK(t.h(0) == doctest::Approx(kGolden / (3.0 - kGolden)).epsilon(1e-12));
    CHECK(t.h(1) == doctest::Approx(1.0 / (3.0 - kGolden)).epsilon(1e-12));
    CHECK(t.nu.dot(t.h) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.second_modulus == doctest::Approx(1.0 / kGolden).epsilon(1e-10));
}

TEST_CASE("triplet operator identities") {
    for (auto shift : {full2(), golden()}) {
        DepthFn phi(shift, 1, Eigen::Vector2d(0.3, -0.4));
        auto op = build_ruelle(phi);
        auto t = spectral_triplet(op);
        const int n = static_cast<int>(op.mat.rows());
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

        CHECK((op.mat * t.h - t.lambda * t.h).cwiseAbs().maxCoeff() <= 1e-10 * t.lambda);
        CHECK((op.mat.transpose() * t.nu - t.lambda * t.nu).cwiseAbs().maxCoeff() <= 1e-10 * t.lambda);
        CHECK((t.S * t.h).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((t.nu.transpose() * t.S).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(((t.R - t.lambda * I) * t.R_lambda - I).cwiseAbs().maxCoeff() <= 1e-10);
        // I - P = S(L - lambda I)
        CHECK((t.S * (op.mat - t.lambda * I) - (I - t.P)).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(t.gap_margin > 0.0);
    }
}

TEST_CASE("duality: nu(Lf) = lambda nu(f) on random observables") {
    std::mt19937_64 rng(5150);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto shift = golden();
    for (int depth = 1; depth <= 3; ++depth) {
        Eigen::VectorXd pv(admissible_words(shift, depth).count());
        for (int i = 0; i < pv.size(); ++i) pv(i) = 0.5 * gauss(rng);
        DepthFn phi(shift, depth, pv);
        auto t = spectral_triplet(build_ruelle(phi));
        auto op = build_ruelle(phi);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd fv(op.mat.rows());
            for (int i = 0; i < fv.size(); ++i) fv(i) = gauss(rng);
            DepthFn f(shift, op.depth, fv);
            double lhs = t.nu_of(apply(op, f));
            double rhs = t.lambda * t.nu_of(f);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("pressure closed forms") {
    CHECK(pressure(full2(), DepthFn(full2(), 1, 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(pressure(golden(), DepthFn(golden(), 1, 0.0)) == doctest::Approx(std::log(kGolden)).epsilon(1e-12));
    const double a = 1.3, b = 0.4;
    CHECK(pressure(full2(), DepthFn(full2(), 1, Eigen::Vector2d(std::log(a), std::log(b)))) ==
          doctest::Approx(std::log(a + b)).epsilon(1e-12));
}

TEST_CASE("gibbs weights and their extensions") {
    auto sf = full2();
    DepthFn phi0(sf, 1, 0.0);
    auto tf = spectral_triplet(build_ruelle(phi0));
    auto mu1 = gibbs_weights(tf, phi0, 1);
    CHECK(mu1.values(0) == doctest::Approx(0.5));
    CHECK(mu1.values(1) == doctest::Approx(0.5));

    auto sg = golden();
    DepthFn phig(sg, 1, 0.0);
    auto tg = spectral_triplet(build_ruelle(phig));
    auto mug = gibbs_weights(tg, phig, 1);
    CHECK(mug.values(0) == doctest::Approx((5.0 + std::sqrt(5.0)) / 10.0).epsilon(1e-12));
    CHECK(mug.values.sum() == doctest::Approx(1.0).epsilon(1e-13));

    // total mass stays 1 under extension, and the extension agrees with a
    // rebuild of the triplet at the deeper depth
    for (int m = 2; m <= 5; ++m) {
        auto mum = gibbs_weights(tg, phig, m);
        CHECK(mum.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
        auto deep = spectral_triplet(build_ruelle(phig, m));
        CHECK((extend_nu(tg, phig, m) - deep.nu).cwiseAbs().maxCoeff() <= 1e-12);
    }

    // shift-invariance: summing mu over one-symbol extensions returns mu
    auto mu2 = gibbs_weights(tg, phig, 2);
    const auto& w2 = admissible_words(sg, 2);
    Eigen::Vector2d marginal = Eigen::Vector2d::Zero();
    for (int i = 0; i < w2.count(); ++i) marginal(w2.word(i)[1]) += mu2.values(i);
    CHECK((marginal - mug.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gibbs sandwich constant is depth uniform") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss(0.0, 0.7);
    for (auto shift : {full2(), golden()}) {
        for (int pd = 1; pd <= 2; ++pd) {
            Eigen::VectorXd pv(admissible_words(shift, pd).count());
            for (int i = 0; i < pv.size(); ++i) pv(i) = gauss(rng);
            DepthFn phi(shift, pd, pv);
            auto t = spectral_triplet(build_ruelle(phi));
            double c = gibbs_sandwich_constant(t, refine(phi, t.depth));
            CHECK(c >= 1.0);
            for (int depth = std::max(t.depth, 2); depth <= 6; ++depth)
                CHECK(gibbs_sandwich_deviation(t, refine(phi, t.depth), depth) <= c * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("power iteration agrees with the dense route") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng() % 4);
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = unif(rng) < 0.3 ? 0.0 : unif(rng);
        m.diagonal().array() += 0.1;  // keeps the matrix irreducible-ish and nonzero
        Eigen::EigenSolver<Eigen::MatrixXd> es(m);
        double rho = 0.0;
        for (int i = 0; i < n; ++i) rho = std::max(rho, std::abs(es.eigenvalues()(i)));
        CHECK(perron_root_power_iteration(m) == doctest::Approx(rho).epsilon(1e-9));
    }
}

TEST_CASE("spectral_triplet rejects bad inputs") {
    Eigen::MatrixXi reducible(2, 2);
    reducible << 1, 1, 0, 1;
    auto s = build_shift(reducible);
    CHECK(!s->irreducible());
    CHECK_THROWS_AS(spectral_triplet(build_ruelle(DepthFn(s, 1, 0.0))), std::domain_error);

    auto t = spectral_triplet(build_ruelle(DepthFn(full2(), 1, 0.0)));
    DepthFn deep(full2(), 2, 1.0);
    CHECK_THROWS_AS(t.nu_of(deep), std::invalid_argument);
}

TEST_CASE("period-2 shift still yields its Perron data") {
    Eigen::MatrixXi a(2, 2);
    a << 0, 1, 1, 0;
    auto s = build_shift(a);
    auto t = spectral_triplet(build_ruelle(DepthFn(s, 1, 0.0)));
    CHECK(t.lambda == doctest::Approx(1.0).epsilon(1e-12));  // peripheral pair {1, -1}, only lambda extracted
    CHECK(t.nu.sum() == doctest::Approx(1.0));
}

TEST_CASE("transfer operators as jet coefficients act on function jets") {
    auto s = golden();
    auto L = build_ruelle(DepthFn(s, 1, 0.0));
    // constant operator jet applied to a function jet multiplies through
    perturbex::Jet<TransferOp> Lj(std::vector<TransferOp>{L, L});
    DepthFn f0(s, 1, Eigen::Vector2d(1.0, 2.0));
    DepthFn f1(s, 1, Eigen::Vector2d(-1.0, 0.5));
    perturbex::Jet<DepthFn> fj(std::vector<DepthFn>{f0, f1});
    auto out = jet_mul(Lj, fj);
    CHECK((out[0].values - apply(L, f0).values).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((out[1].values - (apply(L, f0).values + apply(L, f1).values)).cwiseAbs().maxCoeff() <= 1e-14);
}
