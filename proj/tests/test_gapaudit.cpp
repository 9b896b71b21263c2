#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <perturbex/gapaudit.hpp>

#include <cmath>

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

// FIX-A potential with the boundary schedule theta(e) = 1 - e^{1/(4(n+2))}
PotentialFamily scheduled_fix_a(int order) {
    auto s = full2();
    DepthFn base(s, 1, 0.0);
    std::vector<DepthFn> coeff{DepthFn(s, 1, Eigen::Vector2d(1.0, 0.0))};
    for (int k = 2; k <= order; ++k) coeff.emplace_back(s, 1, 0.0);
    auto pf = make_potential_family(base, coeff);
    pf.theta_of_eps = [order](double eps) { return 1.0 - std::pow(eps, 1.0 / (4.0 * (order + 2))); };
    return pf;
}

std::vector<double> geometric_grid(double start, double ratio, int count) {
    std::vector<double> g;
    double e = start;
    for (int i = 0; i < count; ++i) {
        g.push_back(e);
        e *= ratio;
    }
    return g;
}

}  // namespace

TEST_CASE("c(e) closed forms") {
    CHECK(c_of_eps(0.9, 0.0) == doctest::Approx(1e4).epsilon(1e-12));

    // boundary schedule: c(e) = e^{-1/(n+2)} exactly
    for (int n : {1, 2, 3}) {
        for (double eps : {1e-1, 1e-3}) {
            const double theta = 1.0 - std::pow(eps, 1.0 / (4.0 * (n + 2)));
            CHECK(std::abs(log_c_of_eps(theta, 0.0) + std::log(eps) / (n + 2)) <= 1e-12);
        }
    }

    // divergence without overflow: the log value stays finite
    CHECK(std::isfinite(log_c_of_eps(1.0 - 1e-12, 2.0)));
    CHECK(std::isinf(c_of_eps(1.0 - 1e-12, 2.0)));
    CHECK_THROWS_AS(log_c_of_eps(1.0, 0.0), std::domain_error);

    // monotone in theta for fixed lip
    double prev = 0.0;
    for (double theta : {0.3, 0.5, 0.7, 0.9, 0.99}) {
        const double v = log_c_of_eps(theta, 0.7);
        CHECK(v > prev);
        prev = v;
    }

    // lip = 0: c(e) (1 - theta)^4 == 1 exactly
    for (double theta : {0.2, 0.5, 0.9, 0.999})
        CHECK(std::abs(std::exp(log_c_of_eps(theta, 0.0)) * std::pow(1.0 - theta, 4) - 1.0) <= 1e-12);
}

TEST_CASE("primitivity index") {
    CHECK(primitivity_index(full2()) == 1);
    CHECK(primitivity_index(golden()) == 2);

    Eigen::MatrixXi swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK_THROWS_AS(primitivity_index(build_shift(swap)), std::domain_error);
}

TEST_CASE("reduced resolvent bound on the flat fixtures") {
    auto s = full2();
    auto t = spectral_triplet(build_ruelle(DepthFn(s, 1, 0.0)));
    auto gc = gap_constants(t, DepthFn(s, 1, 0.0), 0.5);
    CHECK(gc.lip == 0.0);
    CHECK(gc.M == 1);

    NormOptions norms;
    norms.samples = 300;
    auto sb = bound_S_norm(t, gc, 0.9, norms);
    // lip = 0 kills the series part: chain = (1 + ||h||)/lambda = 1
    CHECK(std::exp(sb.log_chain) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sb.empirical.lower >= 0.49);
    CHECK(sb.empirical.lower <= 0.5 + 1e-9);
    CHECK(sb.dominates);

    auto tg = spectral_triplet(build_ruelle(DepthFn(golden(), 1, 0.0)));
    auto gcg = gap_constants(tg, DepthFn(golden(), 1, 0.0), 0.5);
    CHECK(gcg.M == 2);
    auto sbg = bound_S_norm(tg, gcg, 0.7, norms);
    CHECK(std::isfinite(sbg.log_chain));
    CHECK(sbg.dominates);

    // nonzero seminorm exercises the full constant chain
    auto tw = spectral_triplet(build_ruelle(DepthFn(golden(), 2, Eigen::Vector3d(0.3, -0.1, 0.2))));
    auto gcw = gap_constants(tw, DepthFn(golden(), 2, Eigen::Vector3d(0.3, -0.1, 0.2)), 0.5);
    CHECK(gcw.lip > 0.0);
    for (double theta_eps : {0.6, 0.9, 0.99}) {
        auto sbw = bound_S_norm(tw, gcw, theta_eps, norms);
        CHECK(std::isfinite(sbw.log_chain));
        CHECK(sbw.dominates);
        CHECK(sbw.c_sc2 > 0.0);
        CHECK(sbw.c_sc2 <= 1.0);
        CHECK(sbw.log_one_minus_c_sc2 < 0.0);  // stays below 1 in exact arithmetic
    }
}

TEST_CASE("empirical gap data") {
    auto pf = scheduled_fix_a(1);
    auto fam = build_family(pf);
    auto g = empirical_gap(fam, 0.1, pf.theta_of_eps(0.1));
    CHECK(g.lambda_eps == doctest::Approx(std::exp(0.1) + 1.0).epsilon(1e-12));
    CHECK(g.second_modulus <= 1e-12);  // rank one
    CHECK(g.matrix_gap == doctest::Approx(g.lambda_eps));
    CHECK(g.essential_lower == doctest::Approx(pf.theta_of_eps(0.1) * g.lambda_eps));

    const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;
    auto sg = golden();
    auto pg = make_potential_family(DepthFn(sg, 1, 0.0), {DepthFn(sg, 1, 0.0)});
    auto famg = build_family(pg);
    auto gg = empirical_gap(famg, 0.05, 0.9);
    CHECK(gg.second_modulus == doctest::Approx(1.0 / kGolden).epsilon(1e-2));
}

TEST_CASE("gap audit on the boundary schedule with zero remainder") {
    const int n = 2;
    auto pf = scheduled_fix_a(n);
    auto grid = geometric_grid(1e-1, 0.1, 4);
    GapAuditOptions opt;
    opt.norms.samples = 150;
    auto rep = gap_audit(pf, grid, opt);

    // B.1 boundary algebra: c(e) e^{1/(n+2)} constant to 1e-12 relative
    for (std::size_t i = 1; i < rep.b1_log_margin.size(); ++i)
        CHECK(std::abs(rep.b1_log_margin[i] - rep.b1_log_margin[0]) <= 1e-12);
    CHECK(rep.b1_pass);
    CHECK(rep.b2_pass);  // no remainder at all

    // the proof's rate algebra: slope of product k is (k+1)/(n+2)
    for (int k = 0; k <= n; ++k)
        CHECK(rep.product_slopes[static_cast<std::size_t>(k)] >=
              static_cast<double>(k + 1) / (n + 2) - 0.1);
    CHECK(rep.criterion_pass);
    CHECK(rep.empirical_vanishing);
    CHECK(rep.agree);
    CHECK(rep.bounds_dominate);

    // literal bound shapes: ~phi_n = 0 gives exactly c16 * eps at every order
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int k = 0; k <= n; ++k)
            CHECK(rep.tl_bounds[i][static_cast<std::size_t>(k)].shape ==
                  doctest::Approx(rep.c16 * grid[i]).epsilon(1e-12));
}

TEST_CASE("gap audit flags the B.2 boundary family") {
    const int n = 1;
    auto s = full2();
    DepthFn base(s, 1, 0.0);
    std::vector<DepthFn> coeff{DepthFn(s, 1, Eigen::Vector2d(1.0, 0.0))};
    // ||~phi_n(e)||_{F_theta(e)} = e^{1/(n+2)} exactly: a constant shape
    auto remainder = [s, n](double eps) { return DepthFn(s, 1, std::pow(eps, 1.0 / (n + 2))); };
    auto pf = make_potential_family(base, coeff, remainder,
                                    [n](double eps) { return 1.0 - std::pow(eps, 1.0 / (4.0 * (n + 2))); });
    auto grid = geometric_grid(1e-1, 0.1, 4);
    GapAuditOptions opt;
    opt.norms.samples = 100;
    auto rep = gap_audit(pf, grid, opt);
    CHECK(rep.b1_pass);
    CHECK(!rep.b2_pass);  // exactly O, not o
    CHECK(!rep.criterion_pass);
    CHECK(rep.bounds_dominate);  // literal bounds still dominate the brackets
}

TEST_CASE("gap audit with a constant schedule passes trivially") {
    auto s = golden();
    DepthFn base(s, 1, Eigen::Vector2d(0.1, -0.2));
    auto pf = make_potential_family(base, {DepthFn(s, 1, Eigen::Vector2d(0.4, 0.1))}, nullptr,
                                    [](double) { return 0.6; });
    auto grid = geometric_grid(1e-1, 0.1, 4);
    GapAuditOptions opt;
    opt.norms.samples = 100;
    auto rep = gap_audit(pf, grid, opt);
    CHECK(rep.b1_pass);  // constant c(e)
    CHECK(rep.b2_pass);
    CHECK(rep.criterion_pass);
    CHECK(rep.empirical_vanishing);
    CHECK(rep.agree);
    CHECK(rep.bounds_dominate);
}

TEST_CASE("audit input validation") {
    auto pf = scheduled_fix_a(1);
    CHECK_THROWS_AS(gap_audit(pf, {1e-1, 1e-2}, {}), std::invalid_argument);

    auto s = full2();
    auto no_schedule = make_potential_family(DepthFn(s, 1, 0.0), {DepthFn(s, 1, 1.0)});
    CHECK_THROWS_AS(gap_audit(no_schedule, {1e-1, 1e-2, 1e-3, 1e-4}, {}), std::invalid_argument);

    // decreasing schedule rejected
    auto bad = make_potential_family(DepthFn(s, 1, 0.0), {DepthFn(s, 1, 1.0)}, nullptr,
                                     [](double eps) { return 0.5 + eps; });
    CHECK_THROWS_AS(gap_audit(bad, {1e-1, 1e-2, 1e-3, 1e-4}, {}), std::invalid_argument);
}
