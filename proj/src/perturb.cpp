#include <perturbex/perturb.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perturbex {

namespace {

double rel_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-11) return 0.0;
    return std::abs(a - b) / scale;
}

double rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (scale < 1e-11) return 0.0;
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// all (i_1..i_parts) with entries >= 1 summing to total
template <class Fn>
void for_compositions(int total, int parts, std::vector<int>& cur, Fn&& fn) {
    if (parts == 1) {
        if (total >= 1) {
            cur.push_back(total);
            fn(cur);
            cur.pop_back();
        }
        return;
    }
    for (int first = 1; first + parts - 1 <= total; ++first) {
        cur.push_back(first);
        for_compositions(total - first, parts - 1, cur, fn);
        cur.pop_back();
    }
}

}  // namespace

double divide_eps_pow(double x, double eps, int k) {
    if (!(eps > 0.0)) throw std::domain_error("remainders need eps > 0");
    if (k == 0 || x == 0.0) return x;
    return x * std::exp(-static_cast<double>(k) * std::log(eps));
}

const Eigen::MatrixXd& OperatorFamily::L(int j) const {
    if (j < 1 || j > order) throw std::out_of_range("OperatorFamily: coefficient index");
    return coeff[static_cast<std::size_t>(j - 1)];
}

Eigen::MatrixXd OperatorFamily::tilde_L(int k, double eps) const {
    if (!(eps > 0.0)) throw std::domain_error("tilde_L needs eps > 0");
    if (k < 0 || k > order) throw std::out_of_range("tilde_L: order");
    Eigen::MatrixXd m = evaluator(eps) - L0;
    double ep = 1.0;
    for (int j = 1; j <= k; ++j) {
        ep *= eps;
        m -= ep * coeff[static_cast<std::size_t>(j - 1)];
    }
    const double scale = std::exp(-static_cast<double>(k) * std::log(eps));
    return m * scale;
}

OperatorFamily make_operator_family(const TransferOp& op, std::vector<Eigen::MatrixXd> coeff,
                                    std::function<Eigen::MatrixXd(double)> evaluator) {
    OperatorFamily fam;
    fam.base = spectral_triplet(op);
    fam.L0 = op.mat;
    fam.order = static_cast<int>(coeff.size());
    for (const auto& c : coeff)
        if (c.rows() != fam.L0.rows() || c.cols() != fam.L0.cols())
            throw std::invalid_argument("operator family: coefficient shape mismatch");
    fam.coeff = std::move(coeff);
    fam.evaluator = std::move(evaluator);
    const Eigen::MatrixXd at0 = fam.evaluator(0.0);
    const double scale = std::max(1.0, fam.L0.cwiseAbs().maxCoeff());
    if ((at0 - fam.L0).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("operator family: evaluator(0) differs from the base operator");
    return fam;
}

double ExpansionResult::kappa_of(int k, const DepthFn& f) const {
    return kappa_k.at(static_cast<std::size_t>(k)).dot(f.values);
}

double ExpansionResult::nu_of(int k, const DepthFn& f) const {
    return nu_k.at(static_cast<std::size_t>(k)).dot(f.values);
}

ExpansionResult expand_eigen_dual(const OperatorFamily& fam) {
    const SpectralTriplet& t = fam.base;
    if (t.cond_resolvent > 1e12) throw std::domain_error("expand: R - lambda I near-singular");
    const int n = fam.order;
    if (n < 1) throw std::invalid_argument("expand: order must be >= 1");

    ExpansionResult r;
    r.lambda_k = {t.lambda};
    r.kappa_k = {t.nu};

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(fam.L0.rows(), fam.L0.cols());
    auto A = [&](int j) { return Eigen::MatrixXd(r.lambda_k[static_cast<std::size_t>(j)] * I - fam.L(j)); };

    for (int k = 1; k <= n; ++k) {
        double lam = 0.0;
        for (int j = 1; j <= k; ++j) lam += r.kappa_k[static_cast<std::size_t>(k - j)].dot(fam.L(j) * t.h);
        r.lambda_k.push_back(lam);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(fam.L0.rows());
        for (int j = 1; j <= k; ++j)
            w += t.R_lambda.transpose() * (A(j).transpose() * r.kappa_k[static_cast<std::size_t>(k - j)]);
        r.kappa_k.push_back(std::move(w));
    }

    // The closed composition sums must reproduce the
    // recursion; a disagreement is an implementation defect.
    std::vector<int> cur;
    for (int k = 1; k <= n; ++k) {
        double lam = t.nu.dot(fam.L(k) * t.h);
        for (int parts = 2; parts <= k; ++parts) {
            for_compositions(k, parts, cur, [&](const std::vector<int>& c) {
                Eigen::VectorXd v = fam.L(c.back()) * t.h;
                for (int idx = parts - 2; idx >= 0; --idx) v = A(c[static_cast<std::size_t>(idx)]) * (t.R_lambda * v);
                lam += t.nu.dot(v);
            });
        }
        if (rel_gap(lam, r.lambda_k[static_cast<std::size_t>(k)]) > 1e-11)
            throw std::logic_error("expand_eigen_dual: composition sum disagrees with recursion (lambda)");

        Eigen::VectorXd w = Eigen::VectorXd::Zero(fam.L0.rows());
        for (int parts = 1; parts <= k; ++parts) {
            for_compositions(k, parts, cur, [&](const std::vector<int>& c) {
                Eigen::VectorXd v = t.nu;
                for (int idx = 0; idx < parts; ++idx)
                    v = t.R_lambda.transpose() * (A(c[static_cast<std::size_t>(idx)]).transpose() * v);
                w += v;
            });
        }
        if (rel_gap(w, r.kappa_k[static_cast<std::size_t>(k)]) > 1e-11)
            throw std::logic_error("expand_eigen_dual: composition sum disagrees with recursion (kappa)");
    }
    return r;
}

void expand_eigenfunction(const OperatorFamily& fam, ExpansionResult& r) {
    const SpectralTriplet& t = fam.base;
    const int n = fam.order;
    r.g_k = {t.h};
    std::vector<double> lam2 = {t.lambda};
    for (int k = 1; k <= n; ++k) {
        double lam = 0.0;
        for (int j = 1; j <= k; ++j) lam += t.nu.dot(fam.L(j) * r.g_k[static_cast<std::size_t>(k - j)]);
        lam2.push_back(lam);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(fam.L0.rows());
        for (int j = 1; j <= k; ++j) {
            Eigen::VectorXd v = lam2[static_cast<std::size_t>(j)] * r.g_k[static_cast<std::size_t>(k - j)] -
                                fam.L(j) * r.g_k[static_cast<std::size_t>(k - j)];
            g += t.S * v;
        }
        r.g_k.push_back(std::move(g));

        if (rel_gap(lam2[static_cast<std::size_t>(k)], r.lambda_k[static_cast<std::size_t>(k)]) > 1e-11)
            throw std::logic_error("eigenvalue routes disagree between the dual and eigenfunction recursions");
        const double nug = t.nu.dot(r.g_k[static_cast<std::size_t>(k)]);
        if (std::abs(nug) > 1e-11 * std::max(1.0, r.g_k[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff()))
            throw std::logic_error("expand_eigenfunction: nu(g_k) != 0");
    }
}

void expand_nu_h(const OperatorFamily& fam, ExpansionResult& r) {
    const int n = fam.order;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(fam.L0.rows());

    // 1/nu(e,h) = kappa(e,1_B)-series; nu(e,h) is its reciprocal
    ScalarJet q(n, 0.0);
    for (int k = 0; k <= n; ++k) q[k] = r.kappa_k[static_cast<std::size_t>(k)].dot(ones);
    ScalarJet a = jet_reciprocal(q);

    // signed composition sums give the same reciprocal
    std::vector<int> cur;
    for (int i = 1; i <= n; ++i) {
        double acc = 0.0;
        for (int parts = 1; parts <= i; ++parts) {
            const double sgn = (parts % 2 == 0) ? 1.0 : -1.0;
            for_compositions(i, parts, cur, [&](const std::vector<int>& c) {
                double prod = 1.0;
                for (int j : c) prod *= q[j];
                acc += sgn * prod;
            });
        }
        if (rel_gap(acc, a[i]) > 1e-11)
            throw std::logic_error("expand_nu_h: combinatorial reciprocal disagrees with the series route");
    }

    r.nu_k.clear();
    for (int k = 0; k <= n; ++k) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(fam.L0.rows());
        for (int i = 0; i <= k; ++i) w += a[i] * r.kappa_k[static_cast<std::size_t>(k - i)];
        r.nu_k.push_back(std::move(w));
        if (k >= 1) {
            const double mass = r.nu_k[static_cast<std::size_t>(k)].dot(ones);
            if (std::abs(mass) > 1e-11) throw std::logic_error("expand_nu_h: nu_k(1) != 0");
        }
    }

    // 1/nu(h(e,.)) series c and its reciprocal d; h_k = sum d_i g_j
    ScalarJet c(n, 0.0);
    for (int k = 0; k <= n; ++k) {
        double ck = 0.0;
        for (int i = 0; i <= k; ++i)
            ck += r.nu_k[static_cast<std::size_t>(i)].dot(r.g_k[static_cast<std::size_t>(k - i)]);
        c[k] = ck;
    }
    ScalarJet d = jet_reciprocal(c);
    r.c_k.assign(c.coeffs().begin(), c.coeffs().end());

    r.h_k.clear();
    for (int k = 0; k <= n; ++k) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(fam.L0.rows());
        for (int i = 0; i <= k; ++i) h += d[i] * r.g_k[static_cast<std::size_t>(k - i)];
        r.h_k.push_back(std::move(h));
    }

    // normalization nu(e, h(e)) = 1 order by order
    for (int k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (int i = 0; i <= k; ++i)
            acc += r.nu_k[static_cast<std::size_t>(i)].dot(r.h_k[static_cast<std::size_t>(k - i)]);
        if (std::abs(acc) > 1e-11) throw std::logic_error("expand_nu_h: sum nu_i(h_{k-i}) != 0");
    }
}

ExpansionResult expand_all(const OperatorFamily& fam) {
    ExpansionResult r = expand_eigen_dual(fam);
    expand_eigenfunction(fam, r);
    expand_nu_h(fam, r);
    return r;
}

PerturbedEigendata eigen_at(const OperatorFamily& fam, double eps) {
    if (!(eps > 0.0)) throw std::domain_error("eigen_at needs eps > 0");
    PerronPair pair = perron_pair(fam.evaluator(eps), fam.base.shift->period());
    PerturbedEigendata d;
    d.lambda = pair.lambda;
    d.nu = pair.left;  // nu(e, 1) = 1
    d.nu_eps_of_h0 = d.nu.dot(fam.base.h);
    if (d.nu_eps_of_h0 == 0.0) throw std::runtime_error("eigen_at: nu(e, h) vanished");
    d.h = pair.right / pair.left.dot(pair.right);  // nu(e, h(e)) = 1
    d.nu0_of_heps = fam.base.nu.dot(d.h);
    if (d.nu0_of_heps == 0.0) throw std::runtime_error("eigen_at: nu(h(e)) vanished");
    d.kappa = d.nu / d.nu_eps_of_h0;
    d.g = d.h / d.nu0_of_heps;
    return d;
}

namespace {

std::vector<Eigen::VectorXd> kappa_remainder_weights(const OperatorFamily& fam, const ExpansionResult& r,
                                                     double eps, const PerturbedEigendata& d) {
    const SpectralTriplet& t = fam.base;
    const int n = fam.order;
    const int dim = static_cast<int>(fam.L0.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd Q = t.h * d.kappa.transpose() - I;
    std::vector<Eigen::VectorXd> wt(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const Eigen::MatrixXd tl = fam.tilde_L(k, eps);
        Eigen::VectorXd w = t.R_lambda.transpose() * (Q.transpose() * (tl.transpose() * d.kappa));
        for (int l = 1; l <= k; ++l) {
            const Eigen::VectorXd& prev = wt[static_cast<std::size_t>(k - l)];
            w += t.R_lambda.transpose() * (Q.transpose() * (fam.L(l).transpose() * prev));
            w += r.lambda_k[static_cast<std::size_t>(l)] * (t.R_lambda.transpose() * prev);
        }
        wt[static_cast<std::size_t>(k)] = std::move(w);
    }
    return wt;
}

std::vector<Eigen::VectorXd> g_remainders_formula(const OperatorFamily& fam, const ExpansionResult& r,
                                                  double eps, const PerturbedEigendata& d) {
    const SpectralTriplet& t = fam.base;
    const int n = fam.order;
    const int dim = static_cast<int>(fam.L0.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd T = d.g * t.nu.transpose() - I;
    std::vector<Eigen::VectorXd> tg(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const Eigen::MatrixXd tl = fam.tilde_L(k, eps);
        Eigen::VectorXd v = t.S * (T * (tl * d.g));
        for (int l = 1; l <= k; ++l) {
            const Eigen::VectorXd& prev = tg[static_cast<std::size_t>(k - l)];
            v += t.S * (T * (fam.L(l) * prev));
            v += r.lambda_k[static_cast<std::size_t>(l)] * (t.S * prev);
        }
        tg[static_cast<std::size_t>(k)] = std::move(v);
    }
    return tg;
}

}  // namespace

std::vector<double> remainder_lambda(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                     RemainderMode mode) {
    const int n = fam.order;
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    const PerturbedEigendata d = eigen_at(fam, eps);
    if (mode == RemainderMode::direct) {
        double acc = d.lambda;
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc -= ep * r.lambda_k[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(k)] = divide_eps_pow(acc, eps, k);
            ep *= eps;
        }
        return out;
    }
    const SpectralTriplet& t = fam.base;
    auto wt = kappa_remainder_weights(fam, r, eps, d);
    for (int k = 0; k <= n; ++k) {
        double v = d.kappa.dot(fam.tilde_L(k, eps) * t.h);
        for (int l = 1; l <= k; ++l) v += wt[static_cast<std::size_t>(k - l)].dot(fam.L(l) * t.h);
        out[static_cast<std::size_t>(k)] = v;
    }
    return out;
}

std::vector<double> remainder_kappa(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                    const DepthFn& f, RemainderMode mode) {
    const int n = fam.order;
    const DepthFn fr = refine(f, fam.base.depth);
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    const PerturbedEigendata d = eigen_at(fam, eps);
    if (mode == RemainderMode::direct) {
        double acc = d.kappa.dot(fr.values);
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc -= ep * r.kappa_k[static_cast<std::size_t>(k)].dot(fr.values);
            out[static_cast<std::size_t>(k)] = divide_eps_pow(acc, eps, k);
            ep *= eps;
        }
        return out;
    }
    auto wt = kappa_remainder_weights(fam, r, eps, d);
    for (int k = 0; k <= n; ++k) out[static_cast<std::size_t>(k)] = wt[static_cast<std::size_t>(k)].dot(fr.values);
    return out;
}

std::vector<Eigen::VectorXd> remainder_g(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                         RemainderMode mode) {
    const int n = fam.order;
    const PerturbedEigendata d = eigen_at(fam, eps);
    if (mode == RemainderMode::direct) {
        std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n) + 1);
        Eigen::VectorXd acc = d.g;
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc -= ep * r.g_k[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(k)] = acc * (k == 0 ? 1.0 : std::exp(-static_cast<double>(k) * std::log(eps)));
            ep *= eps;
        }
        return out;
    }
    return g_remainders_formula(fam, r, eps, d);
}

std::vector<double> remainder_lambda_eigenfunction_route(const OperatorFamily& fam, const ExpansionResult& r,
                                                         double eps, int max_order) {
    const SpectralTriplet& t = fam.base;
    const PerturbedEigendata d = eigen_at(fam, eps);
    auto tg = g_remainders_formula(fam, r, eps, d);
    const int kmax = std::min(max_order, fam.order);
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (int k = 0; k <= kmax; ++k) {
        double v = t.nu.dot(fam.tilde_L(k, eps) * d.g);
        for (int l = 1; l <= k; ++l) v += t.nu.dot(fam.L(l) * tg[static_cast<std::size_t>(k - l)]);
        out[static_cast<std::size_t>(k)] = v;
    }
    return out;
}

double verify_remainder_identities(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                   const DepthFn& f, double tol) {
    // The identity is exact, but the direct mode divides machine noise of the
    // perturbed eigendata by eps^k. Each comparison therefore carries the
    // propagation floor 64 * eps_mach * scale / eps^k next to the relative
    // tolerance; a formula transcription error produces mismatches far above
    // both.
    constexpr double noise = 64.0 * 2.220446049250313e-16;
    const PerturbedEigendata d = eigen_at(fam, eps);
    const DepthFn fr = refine(f, fam.base.depth);
    const int n = fam.order;

    double worst = 0.0;  // measured in multiples of the local tolerance
    auto check = [&](double a, double b, double scale, int k, const char* what) {
        const double floor_k = divide_eps_pow(noise * scale, eps, k);
        const double allowed = std::max(tol * std::max(std::abs(a), std::abs(b)), floor_k);
        const double gap = std::abs(a - b);
        worst = std::max(worst, gap / allowed * tol);
        if (gap > allowed)
            throw std::logic_error(std::string("remainder identity violated (") + what +
                                   "): formula and direct modes disagree");
    };

    double scale_lambda = std::abs(d.lambda);
    double scale_kappa = std::abs(d.kappa.dot(fr.values));
    double scale_g = d.g.cwiseAbs().maxCoeff();
    {
        double ep = 1.0;
        for (int i = 0; i <= n; ++i) {
            scale_lambda += std::abs(r.lambda_k[static_cast<std::size_t>(i)]) * ep;
            scale_kappa += std::abs(r.kappa_k[static_cast<std::size_t>(i)].dot(fr.values)) * ep;
            scale_g += r.g_k[static_cast<std::size_t>(i)].cwiseAbs().maxCoeff() * ep;
            ep *= eps;
        }
    }

    auto la = remainder_lambda(fam, r, eps, RemainderMode::direct);
    auto lb = remainder_lambda(fam, r, eps, RemainderMode::formula);
    for (int k = 0; k <= n; ++k)
        check(la[static_cast<std::size_t>(k)], lb[static_cast<std::size_t>(k)], scale_lambda, k, "lambda");

    auto ka = remainder_kappa(fam, r, eps, f, RemainderMode::direct);
    auto kb = remainder_kappa(fam, r, eps, f, RemainderMode::formula);
    for (int k = 0; k <= n; ++k)
        check(ka[static_cast<std::size_t>(k)], kb[static_cast<std::size_t>(k)], scale_kappa, k, "kappa");

    auto ga = remainder_g(fam, r, eps, RemainderMode::direct);
    auto gb = remainder_g(fam, r, eps, RemainderMode::formula);
    for (int k = 0; k <= n; ++k) {
        const Eigen::VectorXd& a = ga[static_cast<std::size_t>(k)];
        const Eigen::VectorXd& b = gb[static_cast<std::size_t>(k)];
        const double gap = (a - b).cwiseAbs().maxCoeff();
        const double floor_k = divide_eps_pow(noise * scale_g, eps, k);
        const double allowed = std::max(tol * std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()), floor_k);
        worst = std::max(worst, gap / allowed * tol);
        if (gap > allowed) throw std::logic_error("remainder identity violated (g): formula and direct modes disagree");
    }

    auto l2 = remainder_lambda_eigenfunction_route(fam, r, eps, 2);
    for (std::size_t k = 0; k < l2.size(); ++k)
        check(la[k], l2[k], scale_lambda, static_cast<int>(k), "lambda, eigenfunction route");
    return worst;
}

ClosedForms closed_forms_n012(const OperatorFamily& fam) {
    if (fam.order < 2) throw std::invalid_argument("closed_forms_n012 needs order >= 2");
    const SpectralTriplet& t = fam.base;
    const int dim = static_cast<int>(fam.L0.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);

    ClosedForms cf;
    cf.lambda1 = t.nu.dot(fam.L(1) * t.h);
    const Eigen::MatrixXd A1 = cf.lambda1 * I - fam.L(1);
    cf.lambda2 = t.nu.dot(fam.L(2) * t.h) + t.nu.dot(A1 * (t.R_lambda * (fam.L(1) * t.h)));
    const Eigen::MatrixXd A2 = cf.lambda2 * I - fam.L(2);

    cf.kappa1 = (A1 * t.R_lambda).transpose() * t.nu;
    cf.kappa2 = (A1 * t.R_lambda * A1 * t.R_lambda).transpose() * t.nu + (A2 * t.R_lambda).transpose() * t.nu;
    cf.g1 = t.S * (A1 * t.h);
    cf.g2 = t.S * (A2 * t.h) + t.S * (A1 * (t.S * (A1 * t.h)));
    return cf;
}

DiagnosticsReport convergence_diagnostics(const OperatorFamily& fam, const ExpansionResult& r,
                                          const std::vector<double>& grid, const DepthFn& f,
                                          const DiagnosticsOptions& opt) {
    if (grid.size() < 4) throw std::invalid_argument("grid count >= 4 required");
    const int n = fam.order;
    const int pts = static_cast<int>(grid.size());

    // one magnitude row per grid point; blocks: lambda orders, kappa orders, g orders
    std::vector<std::vector<double>> mags(static_cast<std::size_t>(pts));
    par::for_index(pts, opt.exec, [&](std::ptrdiff_t i) {
        const double eps = grid[static_cast<std::size_t>(i)];
        auto la = remainder_lambda(fam, r, eps, RemainderMode::direct);
        auto ka = remainder_kappa(fam, r, eps, f, RemainderMode::direct);
        auto ga = remainder_g(fam, r, eps, RemainderMode::direct);
        std::vector<double> row;
        for (int k = 0; k <= n; ++k) row.push_back(std::abs(la[static_cast<std::size_t>(k)]));
        for (int k = 0; k <= n; ++k) row.push_back(std::abs(ka[static_cast<std::size_t>(k)]));
        for (int k = 0; k <= n; ++k) row.push_back(ga[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff());
        mags[static_cast<std::size_t>(i)] = std::move(row);
    });

    // order grid points by decreasing eps; the "last three" are the smallest
    std::vector<int> idx(grid.size());
    for (int i = 0; i < pts; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return grid[a] > grid[b]; });

    const double noise_scale =
        3.0 * std::max({1.0, fam.base.lambda, fam.base.h.cwiseAbs().maxCoeff()});

    DiagnosticsReport report;
    report.grid = grid;
    const char* names[3] = {"lambda", "kappa", "g"};
    for (int block = 0; block < 3; ++block) {
        for (int k = 0; k <= n; ++k) {
            DiagnosticsRow row;
            row.quantity = names[block];
            row.order = k;
            for (int i = 0; i < pts; ++i)
                row.magnitudes.push_back(
                    mags[static_cast<std::size_t>(i)][static_cast<std::size_t>(block * (n + 1) + k)]);

            // points whose magnitude exceeds the propagation floor carry signal
            std::vector<int> signal;  // ordered by decreasing eps
            for (int j = 0; j < pts; ++j) {
                const int i = idx[static_cast<std::size_t>(j)];
                const double floor_i = std::max(
                    opt.zero_floor, divide_eps_pow(opt.noise_constant * 2.220446049250313e-16 * noise_scale,
                                                   grid[static_cast<std::size_t>(i)], k));
                if (row.magnitudes[static_cast<std::size_t>(i)] > floor_i) signal.push_back(i);
            }

            row.slope = 0.0;
            if (signal.empty()) {
                row.verdict = "vanishing";  // everything at machine scale
            } else if (static_cast<int>(signal.size()) < 3) {
                // the sequence drops into the noise floor as eps decreases;
                // decay evidence as long as the signal sits at the large-eps end
                bool leading_signal = true;
                for (std::size_t j = 0; j < signal.size(); ++j)
                    leading_signal = leading_signal && signal[j] == idx[j];
                row.verdict = leading_signal ? "vanishing" : "stagnant";
            } else {
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                for (std::size_t j = signal.size() - 3; j < signal.size(); ++j) {
                    const int i = signal[j];
                    const double x = std::log(grid[static_cast<std::size_t>(i)]);
                    const double y = std::log(std::max(row.magnitudes[static_cast<std::size_t>(i)], 1e-300));
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    sxy += x * y;
                }
                row.slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
                const double first = row.magnitudes[static_cast<std::size_t>(signal.front())];
                const double last = row.magnitudes[static_cast<std::size_t>(signal.back())];
                row.verdict =
                    (row.slope >= opt.slope_floor && last < first * opt.shrink_factor) ? "vanishing" : "stagnant";
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace perturbex
