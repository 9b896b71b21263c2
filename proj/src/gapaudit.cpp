#include <perturbex/gapaudit.hpp>

#include <perturbex/perturb.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perturbex {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double slope_fit(const std::vector<double>& logx, const std::vector<double>& logy) {
    const std::size_t n = logx.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += logx[i];
        sy += logy[i];
        sxx += logx[i] * logx[i];
        sxy += logx[i] * logy[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

double log_c_of_eps(double theta_eps, double lip) {
    if (!(theta_eps > 0.0 && theta_eps < 1.0)) throw std::domain_error("c(e): theta(e) must lie in (0,1)");
    if (lip < 0.0) throw std::domain_error("c(e): negative seminorm");
    const double one_minus = 1.0 - theta_eps;
    return 26.0 * lip / one_minus - 4.0 * std::log(one_minus);
}

double c_of_eps(double theta_eps, double lip) { return std::exp(log_c_of_eps(theta_eps, lip)); }

int primitivity_index(const ShiftPtr& shift) {
    const int n = shift->num_states();
    const int cap = (n - 1) * (n - 1) + 1;  // Wielandt bound
    Eigen::MatrixXi p = Eigen::MatrixXi::Identity(n, n);
    for (int m = 1; m <= cap; ++m) {
        p = p * shift->transition();
        p = p.cwiseMin(1);  // keep entries small, only positivity matters
        if ((p.array() > 0).all()) return m;
    }
    throw std::domain_error("primitivity_index: matrix is not primitive");
}

GapConstants gap_constants(const SpectralTriplet& base, const DepthFn& phi, double theta_base) {
    GapConstants gc;
    const DepthFn p = refine(phi, base.depth);
    gc.lip = lipschitz_seminorm(p, theta_base);
    gc.sup_phi = sup_norm(p);
    gc.symbols = base.shift->num_states();
    gc.M = primitivity_index(base.shift);
    const double log_c15 = gc.lip == 0.0
                               ? kNegInf
                               : std::log(9600.0) + 2.0 * std::log(gc.lip) + 11.0 * gc.M * std::log(gc.symbols) +
                                     22.0 * gc.M * gc.sup_phi - 26.0 * gc.lip + std::log(static_cast<double>(gc.M));
    gc.log_c15 = log_c15;
    const double h_norm = sup_norm(DepthFn(base.shift, base.depth, Eigen::VectorXd(base.h))) +
                          lipschitz_seminorm(DepthFn(base.shift, base.depth, Eigen::VectorXd(base.h)), theta_base);
    // c14 = (1 + ||h||_{F_theta} + 2 c15) / lambda
    const double big = std::isinf(log_c15) ? 0.0 : 2.0 * std::exp(log_c15);
    gc.log_c14 = std::log1p(h_norm + big) - std::log(base.lambda);
    return gc;
}

SNormBound bound_S_norm(const SpectralTriplet& base, const GapConstants& gc, double theta_eps,
                        const NormOptions& opt) {
    if (!(theta_eps > 0.0 && theta_eps < 1.0)) throw std::domain_error("bound_S_norm: theta(e) outside (0,1)");
    SNormBound out;
    const double one_minus = 1.0 - theta_eps;

    if (gc.lip == 0.0) {
        out.log_c_sc = kNegInf;
        out.c_sc2 = 0.0;
        out.log_one_minus_c_sc2 = 0.0;
    } else {
        out.log_c_sc = std::log(1200.0) - std::log(theta_eps) - 3.0 * std::log(one_minus) +
                       2.0 * std::log(gc.lip) + 9.0 * gc.M * std::log(gc.symbols) + 18.0 * gc.M * gc.sup_phi +
                       18.0 * gc.lip * theta_eps / one_minus;
        const double log_denom = 8.0 * gc.lip * theta_eps / one_minus + 2.0 * gc.M * std::log(gc.symbols) +
                                 4.0 * gc.M * gc.sup_phi + std::log(4.0);
        const double log_x = std::log(one_minus) - log_denom;
        if (log_x > -500.0) {
            const double x = std::exp(log_x);
            const double log_c2 = std::log1p(-x) / (2.0 * gc.M);
            out.c_sc2 = std::exp(log_c2);
            out.log_one_minus_c_sc2 = std::log(-std::expm1(log_c2));
        } else {
            // the gap to 1 underflows; 1 - (1-x)^{1/(2M)} ~ x/(2M)
            out.c_sc2 = 1.0;
            out.log_one_minus_c_sc2 = log_x - std::log(2.0 * gc.M);
        }
    }

    // chain: (1/lambda)(1 + ||h||_{F_theta(e)}) + (1/lambda) c_Sc c_Sc2/(1 - c_Sc2)
    DepthFn h_fn(base.shift, base.depth, Eigen::VectorXd(base.h));
    const double h_norm = sup_norm(h_fn) + lipschitz_seminorm(h_fn, theta_eps);
    double log_series = kNegInf;
    if (gc.lip > 0.0)
        log_series = out.log_c_sc + std::min(0.0, std::log(out.c_sc2)) - out.log_one_minus_c_sc2;
    const double log_head = std::log1p(h_norm);
    const double big = std::max(log_head, log_series);
    out.log_chain = big + std::log1p(std::exp(std::min(log_head, log_series) - big)) - std::log(base.lambda);
    out.log_rate_form = gc.log_c14 + log_c_of_eps(theta_eps, gc.lip);

    out.empirical = op_norm_ftheta(base.shift, base.depth, base.S, theta_eps, opt);
    out.dominates = std::log(std::max(out.empirical.lower, 1e-300)) <= out.log_chain + 1e-9 &&
                    std::log(std::max(out.empirical.lower, 1e-300)) <= out.log_rate_form + 1e-9;
    return out;
}

namespace {

// proof-chain value of ||~L_k(e,.)||_{F_theta(e)} from the exact ~F_k
double tilde_l_chain(const PotentialFamily& pf, const OperatorFamily& fam, double eps, int k,
                     double theta_eps, double theta_base) {
    const int depth = fam.base.depth;
    const Eigen::MatrixXd tl = fam.tilde_L(k, eps);
    // recover ~F_k entrywise: tl = L0 diag(~F_k)
    Eigen::VectorXd tf(tl.cols());
    for (int u = 0; u < tl.cols(); ++u) {
        int w = 0;
        while (w < tl.rows() && fam.L0(w, u) == 0.0) ++w;
        tf(u) = w < tl.rows() ? tl(w, u) / fam.L0(w, u) : 0.0;
    }
    DepthFn tf_fn(fam.base.shift, depth, std::move(tf));
    const double l1_sup = fam.L0.cwiseAbs().rowwise().sum().maxCoeff();  // ||L 1||_C
    const double lip = lipschitz_seminorm(refine(pf.base, depth), theta_base);
    return l1_sup * (sup_norm(tf_fn) * (2.0 + std::exp(lip) * lip) + lipschitz_seminorm(tf_fn, theta_eps));
}

double tilde_phi_norm(const PotentialFamily& pf, double eps, double theta_eps) {
    const DepthFn t = pf.tilde_phi(pf.order, eps);
    const double norm = sup_norm(t) + lipschitz_seminorm(t, theta_eps);
    // floating-point residue of an algebraically zero tail, amplified by the
    // eps^{-n} division, is not a remainder
    double scale = sup_norm(pf.base);
    for (const auto& c : pf.coeff) scale += sup_norm(c);
    const double floor = 64.0 * 2.220446049250313e-16 * std::max(1.0, scale) / std::pow(eps, pf.order);
    return norm <= floor ? 0.0 : norm;
}

double theta_at(const PotentialFamily& pf, double eps) {
    if (!pf.theta_of_eps) throw std::invalid_argument("gap audit: theta schedule missing");
    return pf.theta_of_eps(eps);
}

}  // namespace

double estimate_c16(const PotentialFamily& pf, const OperatorFamily& fam, const std::vector<double>& grid,
                    double theta_base) {
    const int n = pf.order;
    double c16 = 0.0;
    for (double eps : grid) {
        const double theta_eps = theta_at(pf, eps);
        const double phin = tilde_phi_norm(pf, eps, theta_eps);
        for (int k = 0; k <= n; ++k) {
            const double chain = tilde_l_chain(pf, fam, eps, k, theta_eps, theta_base);
            const double denom = n == 0 ? phin : eps + phin * std::pow(eps, n - k);
            if (denom > 0.0) c16 = std::max(c16, chain / denom);
        }
    }
    return c16;
}

TildeLBound bound_tL(const PotentialFamily& pf, const OperatorFamily& fam, double eps, int k,
                     double theta_eps, double theta_base, double c16, const NormOptions& opt) {
    TildeLBound out;
    const int n = pf.order;
    out.chain = tilde_l_chain(pf, fam, eps, k, theta_eps, theta_base);
    const double phin = tilde_phi_norm(pf, eps, theta_eps);
    out.shape = n == 0 ? c16 * phin : c16 * (eps + phin * std::pow(eps, n - k));
    out.empirical = op_norm_ftheta(fam.base.shift, fam.base.depth, fam.tilde_L(k, eps), theta_eps, opt);
    out.dominates = out.empirical.lower <= out.chain * (1.0 + 1e-9) &&
                    out.empirical.lower <= out.shape * (1.0 + 1e-9);
    return out;
}

GapEmpirical empirical_gap(const OperatorFamily& fam, double eps, double theta_eps) {
    GapEmpirical g;
    PerronPair pair = perron_pair(fam.evaluator(eps), fam.base.shift->period());
    g.lambda_eps = pair.lambda;
    g.second_modulus = pair.second_modulus;
    g.matrix_gap = pair.lambda - pair.second_modulus;
    g.essential_lower = theta_eps * pair.lambda;
    g.vanishing_margin = (1.0 - theta_eps) * pair.lambda;
    return g;
}

GapAuditReport gap_audit(const PotentialFamily& pf, const std::vector<double>& grid,
                         const GapAuditOptions& opt) {
    if (grid.size() < 4) throw std::invalid_argument("grid count >= 4 required");
    if (!pf.theta_of_eps) throw std::invalid_argument("gap audit: theta schedule missing");
    const int n = pf.order;

    GapAuditReport rep;
    rep.grid = grid;
    OperatorFamily fam = build_family(pf);
    ExpansionResult r = expand_all(fam);
    rep.constants = gap_constants(fam.base, refine(pf.base, fam.base.depth), opt.theta_base);
    rep.c16 = estimate_c16(pf, fam, grid, opt.theta_base);

    // schedule sanity: theta(e) increases as e decreases
    {
        std::vector<std::size_t> order_idx(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) order_idx[i] = i;
        std::sort(order_idx.begin(), order_idx.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
        double prev = 0.0;
        for (std::size_t j = 0; j < order_idx.size(); ++j) {
            const double th = theta_at(pf, grid[order_idx[j]]);
            if (j > 0 && th < prev - 1e-12)
                throw std::invalid_argument("gap audit: theta schedule not increasing as eps decreases");
            prev = th;
        }
    }

    const std::size_t pts = grid.size();
    rep.theta.resize(pts);
    rep.log_c.resize(pts);
    rep.b1_log_margin.resize(pts);
    rep.b2_log_margin.resize(pts);
    rep.s_bounds.resize(pts);
    rep.tl_bounds.assign(pts, {});
    rep.gaps.resize(pts);

    par::for_index(static_cast<std::ptrdiff_t>(pts), opt.norms.exec, [&](std::ptrdiff_t ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double eps = grid[i];
        const double theta_eps = theta_at(pf, eps);
        NormOptions serial = opt.norms;
        serial.exec = par::Exec::serial;
        rep.theta[i] = theta_eps;
        rep.log_c[i] = log_c_of_eps(theta_eps, rep.constants.lip);
        rep.b1_log_margin[i] = rep.log_c[i] + std::log(eps) / (n + 2);
        const double phin = tilde_phi_norm(pf, eps, theta_eps);
        rep.b2_log_margin[i] = n == 0 ? (phin == 0.0 ? kNegInf : std::log(phin) - rep.log_c[i])
                                      : (phin == 0.0 ? kNegInf : std::log(phin) - std::log(eps) / (n + 2));
        rep.s_bounds[i] = bound_S_norm(fam.base, rep.constants, theta_eps, serial);
        for (int k = 0; k <= n; ++k)
            rep.tl_bounds[i].push_back(bound_tL(pf, fam, eps, k, theta_eps, opt.theta_base, rep.c16, serial));
        rep.gaps[i] = empirical_gap(fam, eps, theta_eps);
    });

    // sort by decreasing eps for the trend work
    std::vector<std::size_t> idx(pts);
    for (std::size_t i = 0; i < pts; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

    // (B.1): c(e) = O(e^{-1/(n+2)}) — margins must not grow as e -> 0
    {
        double early = kNegInf, late = kNegInf;
        for (std::size_t j = 0; j < pts; ++j)
            (j < pts / 2 ? early : late) = std::max(j < pts / 2 ? early : late, rep.b1_log_margin[idx[j]]);
        rep.b1_pass = n == 0 || late <= early + std::log(2.0);
    }
    // (B.2): remainder norms are o(e^{1/(n+2)}) (n >= 1) or o(c(e)) (n = 0)
    {
        bool all_zero = true;
        for (double v : rep.b2_log_margin) all_zero = all_zero && v == kNegInf;
        if (all_zero) {
            rep.b2_pass = true;
        } else {
            const double first = rep.b2_log_margin[idx.front()];
            const double last = rep.b2_log_margin[idx.back()];
            rep.b2_pass = last < first - std::log(2.0);
        }
    }

    // product criterion with the literal rate-form bounds
    rep.product_slopes.assign(static_cast<std::size_t>(n) + 1, 0.0);
    bool products_vanish = true;
    for (int k = 0; k <= n; ++k) {
        std::vector<double> logx, logy;
        for (std::size_t j = 0; j < pts; ++j) {
            const std::size_t i = idx[j];
            const double log_prod = (n - k + 1) * rep.s_bounds[i].log_rate_form +
                                    std::log(std::max(rep.tl_bounds[i][static_cast<std::size_t>(k)].shape, 1e-300));
            logx.push_back(std::log(grid[i]));
            logy.push_back(log_prod);
        }
        rep.product_slopes[static_cast<std::size_t>(k)] = slope_fit(logx, logy);
        products_vanish = products_vanish && rep.product_slopes[static_cast<std::size_t>(k)] > 0.05 &&
                          logy.back() < logy.front();
    }
    rep.criterion_pass = products_vanish;

    // empirical vanishing from the direct diagnostics on the same family
    DepthFn f(fam.base.shift, fam.base.depth, 0.0);
    f.values(0) = 1.0;
    DiagnosticsOptions dopt;
    dopt.exec = opt.norms.exec;
    auto diag = convergence_diagnostics(fam, r, grid, f, dopt);
    rep.empirical_vanishing = true;
    for (const auto& row : diag.rows)
        if (row.order == n && (row.quantity == "lambda" || row.quantity == "kappa"))
            rep.empirical_vanishing = rep.empirical_vanishing && row.verdict == "vanishing";

    rep.agree = rep.criterion_pass == rep.empirical_vanishing;
    rep.bounds_dominate = true;
    for (std::size_t i = 0; i < pts; ++i) {
        rep.bounds_dominate = rep.bounds_dominate && rep.s_bounds[i].dominates;
        for (const auto& t : rep.tl_bounds[i]) rep.bounds_dominate = rep.bounds_dominate && t.dominates;
    }
    return rep;
}

}  // namespace perturbex
