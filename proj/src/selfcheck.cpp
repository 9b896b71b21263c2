#include <perturbex/selfcheck.hpp>

#include <perturbex/gapaudit.hpp>
#include <perturbex/gdms.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace perturbex {

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

PotentialFamily fix_a_potential(int order) {
    auto s = full2();
    std::vector<DepthFn> coeff{DepthFn(s, 1, Eigen::Vector2d(1.0, 0.0))};
    for (int k = 2; k <= order; ++k) coeff.emplace_back(s, 1, 0.0);
    return make_potential_family(DepthFn(s, 1, 0.0), coeff);
}

PotentialFamily fix_b_potential(int order) {
    auto s = golden();
    std::vector<DepthFn> coeff{DepthFn(s, 1, Eigen::Vector2d(1.0, 0.0))};
    for (int k = 2; k <= order; ++k) coeff.emplace_back(s, 1, 0.0);
    return make_potential_family(DepthFn(s, 1, 0.0), coeff);
}

GdmsSystem fix_c(int order) {
    GdmsEdge e0, e1;
    e0.from = e0.to = 0;
    e0.map.kind = EdgeMap::Kind::affine;
    e0.map.r = ScalarJet(std::vector<double>{1.0 / 3.0, 1.0});
    e0.map.c = ScalarJet(std::vector<double>{0.0});
    e1 = e0;
    e1.map.c = ScalarJet(std::vector<double>{2.0 / 3.0, -1.0});
    return make_gdms({{0.0, 1.0}}, {e0, e1}, order);
}

DepthFn indicator0(const ShiftPtr& s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s->words(1).count());
    v(0) = 1.0;
    return DepthFn(s, 1, std::move(v));
}

struct Tally {
    double worst = 0.0;  // in units of the tolerance
    std::ostringstream note;
    void check(double err, double tol, const char* what) {
        const double units = err / tol;
        if (units > worst) {
            worst = units;
            note.str(std::string());
            note << what << " err=" << err << " tol=" << tol;
        }
    }
    void check_flag(bool ok, const char* what) { check(ok ? 0.0 : 2.0, 1.0, what); }
};

PotentialFamily random_exp_potential(std::mt19937_64& rng, int order) {
    std::normal_distribution<double> gauss(0.0, 0.35);
    const int ns = 2 + static_cast<int>(rng() % 2);
    Eigen::MatrixXi a = Eigen::MatrixXi::Ones(ns, ns);
    if (ns == 2 && rng() % 2 == 0) a(1, 1) = 0;
    auto s = build_shift(a);
    const int depth = 1 + static_cast<int>(rng() % 2);
    const int count = s->words(depth).count();
    auto draw = [&] {
        Eigen::VectorXd v(count);
        for (int i = 0; i < count; ++i) v(i) = gauss(rng);
        return DepthFn(s, depth, std::move(v));
    };
    DepthFn base = draw();
    std::vector<DepthFn> coeff;
    for (int k = 1; k <= order; ++k) coeff.push_back(draw());
    return make_potential_family(base, coeff);
}

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

CriterionResult criterion_1(double tol_override) {
    CriterionResult c{1, "exponential fixture coefficients", false, 0.0, ""};
    const double tol = tol_override > 0.0 ? tol_override : 1e-10;
    Tally t;
    auto fam = build_family(fix_a_potential(4));
    auto r = expand_all(fam);
    auto p = pressure_coefficients(r);
    double fact = 1.0;
    for (int k = 1; k <= 4; ++k) {
        fact *= k;
        t.check(std::abs(r.lambda_k[static_cast<std::size_t>(k)] - 1.0 / fact), tol, "lambda_k = 1/k!");
    }
    t.check(std::abs(p[1] - 0.5), tol, "p_1 = 1/2");
    t.check(std::abs(p[2] - 0.125), tol, "p_2 = 1/8");
    DepthFn f = indicator0(full2());
    auto mu = gibbs_coefficients(r, refine(f, fam.base.depth));
    t.check(std::abs(r.kappa_of(1, f) - 0.25), tol, "kappa_1([0]) = 1/4");
    t.check(std::abs(r.nu_of(1, f) - 0.25), tol, "nu_1([0]) = 1/4");
    t.check(std::abs(mu[1] - 0.25), tol, "mu_1([0]) = 1/4");
    for (int k = 1; k <= 4; ++k) {
        t.check(r.g_k[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff(), tol, "g_k = 0");
        t.check(r.h_k[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff(), tol, "h_k = 0");
    }
    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

CriterionResult criterion_2(double tol_override) {
    CriterionResult c{2, "golden-mean fixture", false, 0.0, ""};
    Tally t;
    auto fam = build_family(fix_b_potential(2));
    auto r = expand_all(fam);
    auto p = pressure_coefficients(r);
    t.check(std::abs(r.lambda_k[0] - kGolden), tol_override > 0.0 ? tol_override : 1e-12, "lambda = (1+sqrt5)/2");
    const double tol = tol_override > 0.0 ? tol_override : 1e-10;
    t.check(std::abs(r.lambda_k[1] - kGolden * kGolden / std::sqrt(5.0)), tol, "lambda_1 = lambda^2/sqrt5");
    const double parry = (5.0 + std::sqrt(5.0)) / 10.0;
    DepthFn f = indicator0(golden());
    auto mu = gibbs_coefficients(r, refine(f, fam.base.depth));
    t.check(std::abs(p[1] - parry), tol, "p_1 = (5+sqrt5)/10");
    t.check(std::abs(mu[0] - parry), tol, "mu_0([0]) = (5+sqrt5)/10");
    t.check(std::abs(p[1] - mu[0]), tol, "two routes agree");
    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

CriterionResult criterion_3(double tol_override, std::uint64_t seed, par::Exec exec) {
    CriterionResult c{3, "route agreement on 50 random families", false, 0.0, ""};
    const double tol = tol_override > 0.0 ? tol_override : 1e-11;
    const double tol_cf = tol_override > 0.0 ? tol_override : 1e-12;
    std::vector<double> worst(50, 0.0);
    std::vector<std::string> errors(50);
    par::for_index(50, exec, [&](std::ptrdiff_t i) {
        std::mt19937_64 rng(seed + 1000 + static_cast<std::uint64_t>(i));
        try {
            auto pf = random_exp_potential(rng, 3);
            auto fam = build_family(pf);
            // the dual and eigenfunction recursions, cross-checked internally
            auto r = expand_eigen_dual(fam);
            std::vector<double> lam_dual = r.lambda_k;
            expand_eigenfunction(fam, r);
            expand_nu_h(fam, r);
            double w = 0.0;
            for (int k = 1; k <= 3; ++k) {
                // recompute the eigenfunction-route lambda directly
                double lam2 = 0.0;
                for (int j = 1; j <= k; ++j)
                    lam2 += fam.base.nu.dot(fam.L(j) * r.g_k[static_cast<std::size_t>(k - j)]);
                const double scale = std::max({std::abs(lam2), std::abs(lam_dual[static_cast<std::size_t>(k)]), 1e-11});
                w = std::max(w, std::abs(lam2 - lam_dual[static_cast<std::size_t>(k)]) / scale / tol);
            }
            auto cf = closed_forms_n012(fam);
            auto rel = [&](double a, double b) {
                return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-11});
            };
            w = std::max(w, rel(cf.lambda1, r.lambda_k[1]) / tol_cf);
            w = std::max(w, rel(cf.lambda2, r.lambda_k[2]) / tol_cf);
            w = std::max(w, (cf.kappa1 - r.kappa_k[1]).cwiseAbs().maxCoeff() / tol_cf);
            w = std::max(w, (cf.kappa2 - r.kappa_k[2]).cwiseAbs().maxCoeff() / tol_cf);
            w = std::max(w, (cf.g1 - r.g_k[1]).cwiseAbs().maxCoeff() / tol_cf);
            w = std::max(w, (cf.g2 - r.g_k[2]).cwiseAbs().maxCoeff() / tol_cf);
            worst[static_cast<std::size_t>(i)] = w;
        } catch (const std::exception& e) {
            worst[static_cast<std::size_t>(i)] = 1e9;
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    });
    for (std::size_t i = 0; i < worst.size(); ++i) {
        if (worst[i] > c.max_err) {
            c.max_err = worst[i];
            c.note = errors[i].empty() ? "family " + std::to_string(i) : errors[i];
        }
    }
    c.pass = c.max_err <= 1.0;
    return c;
}

CriterionResult criterion_4(double tol_override) {
    CriterionResult c{4, "remainder identities (formula vs direct)", false, 0.0, ""};
    const double tol = tol_override > 0.0 ? tol_override : 1e-9;
    double worst = 0.0;
    std::string note;
    for (int fixture = 0; fixture < 2; ++fixture) {
        auto pf = fixture == 0 ? fix_a_potential(3) : fix_b_potential(3);
        auto fam = build_family(pf);
        auto r = expand_all(fam);
        DepthFn f = indicator0(pf.shift);
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            try {
                worst = std::max(worst, verify_remainder_identities(fam, r, eps, f, tol) / tol);
            } catch (const std::exception& e) {
                worst = 1e9;
                note = e.what();
            }
        }
    }
    c.max_err = worst;
    c.pass = worst <= 1.0;
    c.note = note;
    return c;
}

CriterionResult criterion_5(double tol_override, par::Exec exec) {
    CriterionResult c{5, "convergence orders and the stagnant family", false, 0.0, ""};
    (void)tol_override;
    Tally t;
    std::vector<double> grid{1e-1, 1e-2, 1e-3, 1e-4};
    DiagnosticsOptions dopt;
    dopt.exec = exec;

    for (int fixture = 0; fixture < 2; ++fixture) {
        auto pf = fixture == 0 ? fix_a_potential(2) : fix_b_potential(2);
        auto fam = build_family(pf);
        auto r = expand_all(fam);
        auto p = pressure_coefficients(r);
        DepthFn f = indicator0(pf.shift);
        auto diag = convergence_diagnostics(fam, r, grid, f, dopt);
        for (const auto& row : diag.rows)
            if (row.order == 2 && row.quantity == "lambda") {
                t.check_flag(row.slope >= 0.8 && row.slope <= 1.2, "slope of ~lambda_n in [0.8, 1.2]");
                t.check_flag(row.verdict == "vanishing", "~lambda_n vanishing");
            }
        // fitted slopes for ~p_n and ~mu_n over the three smallest points
        auto mu = gibbs_coefficients(r, refine(f, fam.base.depth));
        std::vector<double> rp, rm;
        for (double eps : grid) {
            rp.push_back(std::abs(pressure_remainder(fam, r, p, eps, RemainderMode::direct)));
            rm.push_back(std::abs(gibbs_remainder(fam, r, mu, f, eps, RemainderMode::direct)));
        }
        auto fit = [&](const std::vector<double>& v) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (int j = 1; j < 4; ++j) {
                const double x = std::log(grid[static_cast<std::size_t>(j)]);
                const double y = std::log(std::max(v[static_cast<std::size_t>(j)], 1e-300));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            return (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
        };
        t.check_flag(fit(rp) >= 0.8 && fit(rp) <= 1.2, "slope of ~p_n in [0.8, 1.2]");
        t.check_flag(fit(rm) >= 0.8 && fit(rm) <= 1.2, "slope of ~mu_n in [0.8, 1.2]");
    }

    // constructed eps^{1/2} family must be flagged
    auto s = full2();
    DepthFn psi(s, 1, Eigen::Vector2d(0.5, 0.1));
    auto pf = make_potential_family(
        DepthFn(s, 1, 0.0), {DepthFn(s, 1, 0.0)},
        [s, psi](double eps) { return DepthFn(s, 1, Eigen::VectorXd(std::pow(eps, -0.5) * psi.values)); });
    auto fam = build_family(pf);
    auto r = expand_all(fam);
    auto diag = convergence_diagnostics(fam, r, grid, indicator0(s), dopt);
    for (const auto& row : diag.rows)
        if (row.order == 1 && row.quantity == "lambda")
            t.check_flag(row.verdict == "stagnant", "sqrt(eps) family flagged stagnant");

    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

CriterionResult criterion_6(double tol_override) {
    CriterionResult c{6, "GDMS dimension expansion", false, 0.0, ""};
    Tally t;
    auto sys = fix_c(2);
    auto dim = dimension_expansion(sys, 2, 2);
    const double s0 = std::log(2.0) / std::log(3.0);
    const double s1 = 3.0 * std::log(2.0) / (std::log(3.0) * std::log(3.0));
    const double s2 = 9.0 * std::log(2.0) * (2.0 - std::log(3.0)) / (2.0 * std::pow(std::log(3.0), 3));
    t.check(std::abs(dim.s[0] - s0), tol_override > 0.0 ? tol_override : 1e-10, "s_0 = log2/log3");
    t.check(std::abs(dim.s[1] - s1), tol_override > 0.0 ? tol_override : 1e-6, "s_1 = 3log2/(log3)^2");
    t.check(std::abs(dim.s[2] - s2) / std::abs(s2), tol_override > 0.0 ? tol_override : 1e-8,
            "s_2 matches the analytic second derivative");
    for (std::size_t i = 0; i < dim.sample_eps.size(); ++i) {
        const double bound = std::max(1.0, 2.0 * dim.fitted_constant) * std::pow(dim.sample_eps[i], 3);
        t.check(std::abs(dim.direct_roots[i] - dim.expansion_values[i]), bound, "residual <= C eps^{n+1}");
    }
    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

CriterionResult criterion_7(double tol_override, std::uint64_t seed, par::Exec exec) {
    CriterionResult c{7, "gap-free audit rates and bound soundness", false, 0.0, ""};
    Tally t;
    const int n = 2;
    auto pf = fix_a_potential(n);
    pf.theta_of_eps = [](double eps) { return 1.0 - std::pow(eps, 1.0 / (4.0 * (n + 2))); };
    std::vector<double> grid{1e-1, 1e-2, 1e-3, 1e-4};
    GapAuditOptions opt;
    opt.norms.samples = 400;
    opt.norms.seed = seed;
    opt.norms.exec = exec;
    auto rep = gap_audit(pf, grid, opt);
    const double tol_const = tol_override > 0.0 ? tol_override : 1e-12;
    for (std::size_t i = 1; i < rep.b1_log_margin.size(); ++i)
        t.check(std::abs(rep.b1_log_margin[i] - rep.b1_log_margin[0]), tol_const,
                "c(e) e^{1/(n+2)} constant across the grid");
    for (int k = 0; k <= n; ++k)
        t.check_flag(rep.product_slopes[static_cast<std::size_t>(k)] >= static_cast<double>(k + 1) / (n + 2) - 0.1,
                     "product slope >= (k+1)/(n+2) - 0.1");
    t.check_flag(rep.bounds_dominate, "literal bounds dominate empirical brackets");
    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

CriterionResult criterion_8(double tol_override, std::uint64_t seed) {
    CriterionResult c{8, "structural invariants suite", false, 0.0, ""};
    const double tol = tol_override > 0.0 ? tol_override : 1e-10;
    Tally t;
    std::mt19937_64 rng(seed + 88);
    for (int instance = 0; instance < 5; ++instance) {
        PotentialFamily pf = instance == 0   ? fix_a_potential(3)
                             : instance == 1 ? fix_b_potential(3)
                                             : random_exp_potential(rng, 2);
        auto fam = build_family(pf);
        auto r = expand_all(fam);
        const SpectralTriplet& tr = fam.base;
        const int dim = static_cast<int>(fam.L0.rows());
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);

        t.check((tr.S * tr.h).cwiseAbs().maxCoeff(), tol, "S h = 0");
        t.check((tr.nu.transpose() * tr.S).cwiseAbs().maxCoeff(), tol, "nu o S = 0");
        t.check((tr.S * (fam.L0 - tr.lambda * I) - (I - tr.P)).cwiseAbs().maxCoeff(), tol, "S(L - lambda I) = I - P");

        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(dim);
        for (int k = 1; k <= fam.order; ++k) {
            t.check(std::abs(r.kappa_k[static_cast<std::size_t>(k)].dot(tr.h)), tol, "kappa_k(h) = 0");
            t.check(std::abs(tr.nu.dot(r.g_k[static_cast<std::size_t>(k)])), tol, "nu(g_k) = 0");
            t.check(std::abs(r.nu_k[static_cast<std::size_t>(k)].dot(ones)), tol, "nu_k(1) = 0");
            auto mu = gibbs_coefficients(r, DepthFn(pf.shift, tr.depth, 1.0));
            t.check(std::abs(mu[static_cast<std::size_t>(k)]), tol, "mu_k(1) = 0");
        }

        // Gibbs shift-invariance and the depth-uniform sandwich
        const DepthFn phi = refine(pf.base, tr.depth);
        auto mu_d = gibbs_weights(tr, phi, tr.depth);
        auto mu_d1 = gibbs_weights(tr, phi, tr.depth + 1);
        const WordIndex& fine = pf.shift->words(tr.depth + 1);
        const WordIndex& coarse = pf.shift->words(tr.depth);
        Eigen::VectorXd marginal = Eigen::VectorXd::Zero(coarse.count());
        for (int i = 0; i < fine.count(); ++i)
            marginal(coarse.position.at(coarse.pack(fine.word(i) + 1, tr.depth))) += mu_d1.values(i);
        t.check((marginal - mu_d.values).cwiseAbs().maxCoeff(), tol, "shift invariance of mu");

        const double cst = gibbs_sandwich_constant(tr, phi);
        for (int d = std::max(tr.depth, 2); d <= 6; ++d) {
            const double dev = gibbs_sandwich_deviation(tr, phi, d);
            t.check(std::max(0.0, dev - cst), tol * cst, "sandwich with depth-uniform constant");
        }
    }
    c.pass = t.worst <= 1.0;
    c.max_err = t.worst;
    c.note = t.note.str();
    return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(const SelfcheckOptions& opt) {
    std::vector<CriterionResult> out;
    out.push_back(criterion_1(opt.tol_override));
    out.push_back(criterion_2(opt.tol_override));
    out.push_back(criterion_3(opt.tol_override, opt.seed, opt.exec));
    out.push_back(criterion_4(opt.tol_override));
    out.push_back(criterion_5(opt.tol_override, opt.exec));
    out.push_back(criterion_6(opt.tol_override));
    out.push_back(criterion_7(opt.tol_override, opt.seed, opt.exec));
    out.push_back(criterion_8(opt.tol_override, opt.seed));
    return out;
}

}  // namespace perturbex
