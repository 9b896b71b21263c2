#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <perturbex/gdms.hpp>

#include <cmath>

using namespace perturbex;

namespace {

ScalarJet jet_from(std::vector<double> c) { return ScalarJet(std::move(c)); }

// two affine maps of common ratio 1/3 + e on [0, 1]; s(e) = log2 / (-log(1/3 + e))
GdmsSystem fix_c(int order, bool perturb_second = true) {
    GdmsEdge e0, e1;
    e0.from = e0.to = 0;
    e0.map.kind = EdgeMap::Kind::affine;
    e0.map.r = jet_from({1.0 / 3.0, 1.0});
    e0.map.c = jet_from({0.0});
    e1.from = e1.to = 0;
    e1.map.kind = EdgeMap::Kind::affine;
    e1.map.r = perturb_second ? jet_from({1.0 / 3.0, 1.0}) : jet_from({1.0 / 3.0});
    e1.map.c = perturb_second ? jet_from({2.0 / 3.0, -1.0}) : jet_from({2.0 / 3.0});
    return make_gdms({{0.0, 1.0}}, {e0, e1}, order);
}

GdmsSystem moebius_pair(int order) {
    GdmsEdge e0, e1;
    e0.from = e0.to = 0;
    e0.map.kind = EdgeMap::Kind::moebius;  // x -> x / (x + 2 + e)
    e0.map.ma = jet_from({1.0});
    e0.map.mb = jet_from({0.0});
    e0.map.mc = jet_from({1.0});
    e0.map.md = jet_from({2.0, 1.0});
    e1.from = e1.to = 0;
    e1.map.kind = EdgeMap::Kind::moebius;  // x -> (x + 2) / (x + 3)
    e1.map.ma = jet_from({1.0});
    e1.map.mb = jet_from({2.0});
    e1.map.mc = jet_from({1.0});
    e1.map.md = jet_from({3.0});
    return make_gdms({{0.0, 1.0}}, {e0, e1}, order);
}

const double kS0 = std::log(2.0) / std::log(3.0);
const double kS1 = 3.0 * std::log(2.0) / (std::log(3.0) * std::log(3.0));
const double kS2 = 9.0 * std::log(2.0) * (2.0 - std::log(3.0)) / (2.0 * std::pow(std::log(3.0), 3));

double fixc_dimension(double eps) { return std::log(2.0) / (-std::log(1.0 / 3.0 + eps)); }

}  // namespace

TEST_CASE("construction validates geometry") {
    auto sys = fix_c(2);
    CHECK(sys.contraction == doctest::Approx(1.0 / 3.0));
    CHECK(sys.shift->num_states() == 2);
    CHECK(sys.shift->irreducible());

    // overlapping images violate the open set condition
    GdmsEdge a, b;
    a.from = a.to = 0;
    a.map.r = jet_from({0.6});
    a.map.c = jet_from({0.0});
    b.from = b.to = 0;
    b.map.r = jet_from({0.6});
    b.map.c = jet_from({0.3});
    CHECK_THROWS_AS(make_gdms({{0.0, 1.0}}, {a, b}, 1), std::invalid_argument);

    // expansion is rejected
    GdmsEdge big;
    big.from = big.to = 0;
    big.map.r = jet_from({1.2});
    big.map.c = jet_from({0.0});
    CHECK_THROWS_AS(make_gdms({{0.0, 1.0}}, {big}, 1), std::invalid_argument);
}

TEST_CASE("coding jets") {
    auto sys = fix_c(2);
    // word 00 anchored at 0 under x -> (1/3+e)x stays 0 at every order
    auto j = coding_jet(sys, {0, 0}, 0.0);
    for (int k = 0; k <= 2; ++k) CHECK(std::abs(j[k]) <= 1e-15);

    // single-symbol word is just T_{w0}(e, x0)
    auto j1 = coding_jet(sys, {1}, 0.25);
    CHECK(j1[0] == doctest::Approx(1.0 / 3.0 * 0.25 + 2.0 / 3.0));
    CHECK(j1[1] == doctest::Approx(0.25 - 1.0));

    // unperturbed system: constant in eps
    auto frozen = fix_c(2, false);
    frozen.edges[0].map.r = jet_from({1.0 / 3.0});
    auto sys0 = make_gdms(frozen.intervals, frozen.edges, 2);
    auto j0 = coding_jet(sys0, {0, 1, 0});
    CHECK(std::abs(j0[1]) <= 1e-15);
    CHECK(std::abs(j0[2]) <= 1e-15);

    CHECK_THROWS_AS(coding_jet(sys, {0}, 5.0), std::invalid_argument);
    CHECK(coding_truncation_bound(sys, 4) == doctest::Approx(std::pow(1.0 / 3.0, 4)));
}

TEST_CASE("potential jets of affine maps are the log-ratio series") {
    auto sys = fix_c(3);
    auto j = potential_jet(sys, {0});
    CHECK(j[0] == doctest::Approx(std::log(1.0 / 3.0)));
    CHECK(j[1] == doctest::Approx(3.0));
    CHECK(j[2] == doctest::Approx(-4.5));
    CHECK(j[3] == doctest::Approx(9.0));

    // deeper words carry the same value: affine potentials are depth-1 exact
    auto j2 = potential_jet(sys, {0, 1});
    for (int k = 0; k <= 3; ++k) CHECK(j2[k] == doctest::Approx(j[k]));
}

TEST_CASE("moebius potential jets match finite differences of the exact family") {
    auto sys = moebius_pair(2);
    auto pf = gdms_potential_family(sys, 3, par::Exec::serial);
    const double delta = 1e-5;
    DepthFn plus = pf.at(delta), minus = pf.at(-delta);
    Eigen::VectorXd fd = (plus.values - minus.values) / (2.0 * delta);
    CHECK((fd - pf.coeff[0].values).cwiseAbs().maxCoeff() <= 1e-8);

    Eigen::VectorXd fd2 = (plus.values - 2.0 * pf.base.values + minus.values) / (delta * delta);
    CHECK((0.5 * fd2 - pf.coeff[1].values).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("bowen dimension closed forms") {
    CHECK(bowen_dimension(fix_c(1), 2) == doctest::Approx(kS0).epsilon(1e-11));

    // three affine maps of ratio 1/4: s = log3 / log4
    GdmsEdge e;
    e.from = e.to = 0;
    e.map.r = jet_from({0.25});
    std::vector<GdmsEdge> edges;
    for (double off : {0.0, 0.375, 0.75}) {
        e.map.c = jet_from({off});
        edges.push_back(e);
    }
    auto three = make_gdms({{0.0, 1.0}}, edges, 1);
    CHECK(bowen_dimension(three, 2) == doctest::Approx(std::log(3.0) / std::log(4.0)).epsilon(1e-11));

    // single map: dimension degenerates to 0
    e.map.c = jet_from({0.0});
    auto single = make_gdms({{0.0, 1.0}}, {e}, 1);
    CHECK_THROWS_AS(bowen_dimension(single, 2), std::domain_error);
}

TEST_CASE("bowen dimension is depth robust") {
    auto sys = fix_c(1);
    const double d2 = bowen_dimension(sys, 2);
    const double d3 = bowen_dimension(sys, 3);
    CHECK(std::abs(d2 - d3) <= 1e-10);  // affine: potential exactly depth 1

    auto moe = moebius_pair(1);
    double prev_gap = 1.0;
    for (int m = 2; m <= 5; ++m) {
        const double gap = std::abs(bowen_dimension(moe, m) - bowen_dimension(moe, m + 1));
        CHECK(gap <= 2.0 * std::pow(moe.contraction, m));
        prev_gap = gap;
    }
    (void)prev_gap;
}

TEST_CASE("direct roots follow the closed form on equal-ratio systems") {
    auto sys = fix_c(2);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        CHECK(std::abs(bowen_dimension_at(sys, 2, eps) - fixc_dimension(eps)) <= 1e-10);
    }
}

TEST_CASE("dimension expansion on FIX-C") {
    auto sys = fix_c(2);
    auto dim = dimension_expansion(sys, 2, 2);
    CHECK(std::abs(dim.s[0] - kS0) <= 1e-10);
    CHECK(std::abs(dim.s[1] - kS1) <= 1e-6);
    CHECK(std::abs(dim.s[2] - kS2) <= 1e-8 * std::abs(kS2));
    CHECK(dim.pressure_residual_at_s0 <= 1e-10);
    CHECK(dim.pressure_slope_at_s0 < std::log(sys.contraction) + 1e-6);

    // validation samples match the closed form with the right order
    for (std::size_t i = 0; i < dim.sample_eps.size(); ++i) {
        CHECK(std::abs(dim.direct_roots[i] - fixc_dimension(dim.sample_eps[i])) <= 1e-10);
        CHECK(std::abs(dim.direct_roots[i] - dim.expansion_values[i]) <=
              std::max(2.0 * dim.fitted_constant, 1.0) * std::pow(dim.sample_eps[i], 3));
    }
}

TEST_CASE("unperturbed jets have zero expansion coefficients") {
    GdmsEdge e0, e1;
    e0.from = e0.to = 0;
    e0.map.r = jet_from({1.0 / 3.0});
    e0.map.c = jet_from({0.0});
    e1 = e0;
    e1.map.c = jet_from({2.0 / 3.0});
    auto sys = make_gdms({{0.0, 1.0}}, {e0, e1}, 2);
    auto dim = dimension_expansion(sys, 2, 2);
    CHECK(std::abs(dim.s[1]) <= 1e-9);
    CHECK(std::abs(dim.s[2]) <= 1e-6);
}

TEST_CASE("gibbs expansion of the dimension measure") {
    // symmetric ratios: both branches always carry weight 1/2
    auto sys = fix_c(2);
    auto dim = dimension_expansion(sys, 2, 2);
    DepthFn f(sys.shift, 1, Eigen::Vector2d(1.0, 0.0));
    auto mu = gdms_gibbs_expansion(sys, 2, dim, f);
    CHECK(std::abs(mu[0] - 0.5) <= 1e-11);
    CHECK(std::abs(mu[1]) <= 1e-9);
    CHECK(std::abs(mu[2]) <= 1e-7);

    auto mu_total = gdms_gibbs_expansion(sys, 2, dim, DepthFn(sys.shift, 1, 1.0));
    CHECK(std::abs(mu_total[0] - 1.0) <= 1e-12);
    CHECK(std::abs(mu_total[1]) <= 1e-10);
    CHECK(std::abs(mu_total[2]) <= 1e-10);
}

TEST_CASE("asymmetric ratios match a central-difference oracle") {
    // r0(e) = 1/3 + e, r1 = 1/3 fixed
    GdmsEdge e0, e1;
    e0.from = e0.to = 0;
    e0.map.r = jet_from({1.0 / 3.0, 1.0});
    e0.map.c = jet_from({0.0});
    e1.from = e1.to = 0;
    e1.map.r = jet_from({1.0 / 3.0});
    e1.map.c = jet_from({2.0 / 3.0});
    auto sys = make_gdms({{0.0, 1.0}}, {e0, e1}, 2);

    auto dim = dimension_expansion(sys, 2, 2);
    DepthFn f(sys.shift, 1, Eigen::Vector2d(1.0, 0.0));
    auto mu = gdms_gibbs_expansion(sys, 2, dim, f);

    // direct Gibbs weight of [edge0] at eps: measure of s(e) phi(e)
    auto pf = gdms_potential_family(sys, 2, par::Exec::serial);
    auto weight_at = [&](double eps) {
        const double s_eps = bowen_dimension_at(sys, 2, eps);
        DepthFn phi_eps = s_eps * pf.at(eps);
        auto t = spectral_triplet(build_ruelle(phi_eps));
        DepthFn fr = refine(f, t.depth);
        return t.nu.dot(Eigen::VectorXd(t.h.cwiseProduct(fr.values)));
    };
    const double delta = 1e-4;
    const double fd = (weight_at(delta) - weight_at(-delta)) / (2.0 * delta);
    CHECK(std::abs(fd - mu[1]) <= 1e-5);
    CHECK(std::abs(mu[1]) > 1e-3);  // genuinely asymmetric response
}

TEST_CASE("condition audit with finite-edge defaults") {
    auto sys = fix_c(1);
    auto audit = gdms_condition_audit(sys, 2);
    for (double tk : audit.t_k) CHECK(tk == 1.0);
    CHECK(audit.tilde_t == 1.0);
    CHECK(audit.p_n == 0.0);
    CHECK(audit.dimension == doctest::Approx(kS0).epsilon(1e-9));
    CHECK(audit.pass);

    auto audit0 = gdms_condition_audit(sys, 0);  // p(0) = p_lower / ~t
    CHECK(audit0.p_n == 0.0);
    CHECK(audit0.pass);

    GdmsSystem flagged = sys;
    flagged.infinite_truncation_study = true;
    CHECK_THROWS_AS(gdms_condition_audit(flagged, 1), std::invalid_argument);
}

TEST_CASE("remainder derivative spot check stays bounded") {
    auto moe = moebius_pair(2);
    const double q = gdms_remainder_holder_spot_check(moe, 2, 16);
    CHECK(std::isfinite(q));
    // affine families have identically zero remainders
    CHECK(gdms_remainder_holder_spot_check(fix_c(2), 2, 8) <= 1e-9);
}
