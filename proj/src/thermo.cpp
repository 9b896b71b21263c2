#include <perturbex/thermo.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace perturbex {

namespace {

// partitions (l_1..l_k >= 0) with sum j*l_j = k
template <class Fn>
void for_partitions(int k, int j, int remaining, std::vector<int>& cur, Fn&& fn) {
    if (j > k) {
        if (remaining == 0) fn(cur);
        return;
    }
    for (int lj = 0; lj * j <= remaining; ++lj) {
        cur.push_back(lj);
        for_partitions(k, j + 1, remaining - lj * j, cur, fn);
        cur.pop_back();
    }
}

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

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p1 = t, p0 = 1.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = t;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        p0 = 1.0;
        p1 = t;
        for (int j = 2; j <= n; ++j) {
            double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - t);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

DepthFn PotentialFamily::at(double eps) const {
    DepthFn out = base;
    double ep = 1.0;
    for (int k = 1; k <= order; ++k) {
        ep *= eps;
        out = out + ep * coeff[static_cast<std::size_t>(k - 1)];
    }
    if (remainder) {
        DepthFn rem = remainder(eps);
        if (rem.depth != depth) throw std::invalid_argument("potential remainder must match the family depth");
        out = out + std::pow(eps, order) * rem;
    }
    return out;
}

DepthFn PotentialFamily::tilde_phi(int k, double eps) const {
    if (k < 0 || k > order) throw std::out_of_range("tilde_phi order");
    if (!(eps > 0.0)) throw std::domain_error("tilde_phi needs eps > 0");
    DepthFn diff = at(eps) - base;
    double ep = 1.0;
    for (int j = 1; j <= k; ++j) {
        ep *= eps;
        diff = diff - ep * coeff[static_cast<std::size_t>(j - 1)];
    }
    return std::exp(-static_cast<double>(k) * std::log(eps)) * diff;
}

PotentialFamily make_potential_family(DepthFn base, std::vector<DepthFn> coeff,
                                      std::function<DepthFn(double)> remainder,
                                      std::function<double(double)> theta_of_eps) {
    PotentialFamily pf;
    pf.shift = base.shift;
    pf.depth = base.depth;
    pf.order = static_cast<int>(coeff.size());
    pf.base = std::move(base);
    for (const auto& c : coeff)
        if (c.shift.get() != pf.shift.get() || c.depth != pf.depth)
            throw std::invalid_argument("potential coefficients must share shift and depth");
    pf.coeff = std::move(coeff);
    pf.remainder = std::move(remainder);
    pf.theta_of_eps = std::move(theta_of_eps);
    return pf;
}

std::vector<DepthFn> bell_coefficients(const std::vector<DepthFn>& phik) {
    if (phik.empty()) return {};
    const ShiftPtr& shift = phik.front().shift;
    const int depth = phik.front().depth;
    for (const auto& p : phik)
        if (p.shift.get() != shift.get() || p.depth != depth)
            throw std::invalid_argument("bell_coefficients: depth mismatch");
    const int n = static_cast<int>(phik.size());
    const int count = static_cast<int>(phik.front().values.size());

    std::vector<DepthFn> f;
    std::vector<int> cur;
    for (int k = 1; k <= n; ++k) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(count);
        for_partitions(k, 1, k, cur, [&](const std::vector<int>& l) {
            Eigen::VectorXd term = Eigen::VectorXd::Ones(count);
            double denom = 1.0;
            for (int j = 1; j <= k; ++j) {
                const int lj = l[static_cast<std::size_t>(j - 1)];
                denom *= factorial(lj);
                for (int rep = 0; rep < lj; ++rep)
                    term = term.cwiseProduct(phik[static_cast<std::size_t>(j - 1)].values);
            }
            acc += term / denom;
        });
        f.emplace_back(shift, depth, Eigen::VectorXd(acc));
    }

    // second route: exponential jet per cylinder
    for (int w = 0; w < count; ++w) {
        ScalarJet a(n, 0.0);
        for (int j = 1; j <= n; ++j) a[j] = phik[static_cast<std::size_t>(j - 1)].values(w);
        ScalarJet e = jet_exp(a);
        for (int k = 1; k <= n; ++k) {
            const double ref = f[static_cast<std::size_t>(k - 1)].values(w);
            if (std::abs(e[k] - ref) > 1e-12 * std::max(1.0, std::abs(ref)))
                throw std::logic_error("bell_coefficients: partition sum and exponential jet disagree");
        }
    }
    return f;
}

OperatorFamily build_family(const PotentialFamily& pf) {
    TransferOp op = build_ruelle(pf.base);
    const int depth = op.depth;
    auto fk = bell_coefficients(pf.coeff);
    std::vector<Eigen::MatrixXd> coeff;
    for (const auto& f : fk)
        coeff.emplace_back(op.mat * refine(f, depth).values.asDiagonal());

    PotentialFamily copy = pf;
    auto evaluator = [copy, depth](double eps) {
        if (eps == 0.0) return build_ruelle(copy.base, depth).mat;
        return build_ruelle(refine(copy.at(eps), depth), depth).mat;
    };
    OperatorFamily fam = make_operator_family(op, std::move(coeff), std::move(evaluator));

    // order-0 remainder closed form of the exponential route
    for (double eps : {0.1, 0.01}) {
        const Eigen::VectorXd delta = refine(pf.at(eps) - pf.base, depth).values;
        const Eigen::MatrixXd lhs = fam.evaluator(eps) - fam.L0;
        const Eigen::MatrixXd rhs = fam.L0 * (delta.array().exp() - 1.0).matrix().asDiagonal();
        if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, fam.L0.cwiseAbs().maxCoeff()))
            throw std::logic_error("build_family: order-0 remainder closed form violated");
    }
    return fam;
}

std::vector<double> pressure_coefficients(const ExpansionResult& r) {
    const int n = static_cast<int>(r.lambda_k.size()) - 1;
    ScalarJet lam(n, 0.0);
    for (int k = 0; k <= n; ++k) lam[k] = r.lambda_k[static_cast<std::size_t>(k)];
    ScalarJet p = jet_log(lam);

    // combinatorial composition sums
    std::vector<int> cur;
    const double lambda = lam[0];
    for (int k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (int l = 1; l <= k; ++l) {
            const double c = ((l % 2 == 1) ? 1.0 : -1.0) / (l * std::pow(lambda, l));
            double s = 0.0;
            for_compositions(k, l, cur, [&](const std::vector<int>& comp) {
                double prod = 1.0;
                for (int i : comp) prod *= lam[i];
                s += prod;
            });
            acc += c * s;
        }
        if (std::abs(acc - p[k]) > 1e-12 * std::max(1.0, std::abs(p[k])))
            throw std::logic_error("pressure_coefficients: combinatorial sum disagrees with the log jet");
    }
    return std::vector<double>(p.coeffs().begin(), p.coeffs().end());
}

double pressure_remainder(const OperatorFamily& fam, const ExpansionResult& r,
                          const std::vector<double>& p, double eps, RemainderMode mode) {
    const int n = fam.order;
    if (mode == RemainderMode::direct) {
        const double lam_eps = eigen_at(fam, eps).lambda;
        double acc = std::log(lam_eps);
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc -= ep * p[static_cast<std::size_t>(k)];
            ep *= eps;
        }
        return divide_eps_pow(acc, eps, n);
    }

    // Exact remainder identity of the logarithm composition: Taylor terms of
    // log about lambda in the increment, minus the expansion coefficients,
    // split into the polynomial tail of S^m beyond degree n, the mixed terms
    // carrying the eigenvalue remainder, and the integral-form Taylor tail.
    const double lambda = r.lambda_k[0];
    const double tln = remainder_lambda(fam, r, eps, RemainderMode::formula)[static_cast<std::size_t>(n)];
    double s_eps = 0.0;
    {
        double ep = 1.0;
        for (int i = 1; i <= n; ++i) {
            ep *= eps;
            s_eps += r.lambda_k[static_cast<std::size_t>(i)] * ep;
        }
    }
    const double delta = s_eps + tln * std::pow(eps, n);

    double total = 0.0;
    for (int m = 1; m <= n; ++m) {
        const double cm = ((m % 2 == 1) ? 1.0 : -1.0) / (m * std::pow(lambda, m));
        std::vector<double> poly(static_cast<std::size_t>(m * n) + 1, 0.0);
        poly[0] = 1.0;
        for (int rep = 0; rep < m; ++rep) {
            std::vector<double> next(poly.size(), 0.0);
            for (std::size_t a = 0; a < poly.size(); ++a) {
                if (poly[a] == 0.0) continue;
                for (int i = 1; i <= n; ++i)
                    if (a + static_cast<std::size_t>(i) < next.size())
                        next[a + static_cast<std::size_t>(i)] += poly[a] * r.lambda_k[static_cast<std::size_t>(i)];
            }
            poly = next;
        }
        double tail = 0.0;
        for (int d = static_cast<int>(poly.size()) - 1; d > n; --d)
            tail = tail * eps + poly[static_cast<std::size_t>(d)];
        tail *= eps;  // lowest surviving power is eps^{n+1} over eps^n
        double mixed = 0.0;
        double binom = 1.0;
        for (int j = 1; j <= m; ++j) {
            binom = binom * (m - j + 1) / j;
            mixed += binom * std::pow(s_eps, m - j) * std::pow(tln, j) * std::pow(eps, n * (j - 1));
        }
        total += cm * (tail + mixed);
    }

    static const auto quad = [] {
        std::pair<std::vector<double>, std::vector<double>> q;
        gauss_legendre_01(32, q.first, q.second);
        return q;
    }();
    double integral = 0.0;
    for (std::size_t i = 0; i < quad.first.size(); ++i) {
        const double t = quad.first[i];
        integral += quad.second[i] * std::pow(1.0 - t, n - 1) *
                    (std::pow(lambda + t * delta, -n) - std::pow(lambda, -n));
    }
    integral *= (n % 2 == 1) ? 1.0 : -1.0;
    total += integral * std::pow(delta / eps, n);
    return total;
}

std::vector<double> gibbs_coefficients(const ExpansionResult& r, const DepthFn& f) {
    const int n = static_cast<int>(r.nu_k.size()) - 1;
    if (f.values.size() != r.nu_k.front().size())
        throw std::invalid_argument("gibbs_coefficients: observable depth mismatch; refine first");
    std::vector<double> mu;
    for (int k = 0; k <= n; ++k) {
        double acc = 0.0;
        for (int i = 0; i <= k; ++i)
            acc += r.nu_k[static_cast<std::size_t>(i)].dot(
                Eigen::VectorXd(r.h_k[static_cast<std::size_t>(k - i)].cwiseProduct(f.values)));
        mu.push_back(acc);
    }
    return mu;
}

double gibbs_remainder(const OperatorFamily& fam, const ExpansionResult& r,
                       const std::vector<double>& mu, const DepthFn& f, double eps, RemainderMode mode) {
    const int n = fam.order;
    const DepthFn fr = refine(f, fam.base.depth);
    const PerturbedEigendata d = eigen_at(fam, eps);
    if (mode == RemainderMode::direct) {
        double acc = d.nu.dot(Eigen::VectorXd(d.h.cwiseProduct(fr.values)));
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc -= ep * mu[static_cast<std::size_t>(k)];
            ep *= eps;
        }
        return divide_eps_pow(acc, eps, n);
    }

    // remainder assembly: ~mu_n(e,f) = sum_k nu_k(~h_{n-k}(e) f) + ~nu_n(e, h(e) f)
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(fam.L0.rows());
    ScalarJet q(n, 0.0);
    for (int k = 0; k <= n; ++k) q[k] = r.kappa_k[static_cast<std::size_t>(k)].dot(ones);
    const ScalarJet a = jet_reciprocal(q);  // nu(e,h) series

    auto scalar_tail = [&](double value, const ScalarJet& series, int j) {
        double acc = value;
        double ep = 1.0;
        for (int i = 0; i <= j; ++i) {
            acc -= ep * series[i];
            ep *= eps;
        }
        return divide_eps_pow(acc, eps, j);
    };

    const auto tg = remainder_g(fam, r, eps, RemainderMode::formula);

    // From nu(e,.) = kappa(e,.) nu(e,h) with the per-order split of nu(e,h):
    // ~nu_j(e, x) = sum_{k=0}^{j} kappa_k(x) ~a_{j-k}(e) + nu(e,h) ~kappa_j(e, x)
    auto tilde_nu = [&](int j, const DepthFn& x) {
        auto tk = remainder_kappa(fam, r, eps, x, RemainderMode::formula);
        double acc = d.nu_eps_of_h0 * tk[static_cast<std::size_t>(j)];
        for (int k = 0; k <= j; ++k)
            acc += scalar_tail(d.nu_eps_of_h0, a, j - k) * r.kappa_k[static_cast<std::size_t>(k)].dot(x.values);
        return acc;
    };

    // From h(e) = nu(h(e)) g(e) with nu(h(e)) the reciprocal of the c-series:
    // ~h_m(e) = sum_{j=0}^{m} g_j ~d_{m-j}(e) + nu(h(e)) ~g_m(e)
    ScalarJet c(n, 0.0);
    for (int k = 0; k <= n; ++k) c[k] = r.c_k[static_cast<std::size_t>(k)];
    const ScalarJet dser = jet_reciprocal(c);
    auto tilde_h = [&](int m) {
        Eigen::VectorXd v = d.nu0_of_heps * tg[static_cast<std::size_t>(m)];
        for (int j = 0; j <= m; ++j)
            v += scalar_tail(d.nu0_of_heps, dser, m - j) * r.g_k[static_cast<std::size_t>(j)];
        return v;
    };

    double total = 0.0;
    for (int k = 0; k <= n; ++k)
        total += r.nu_k[static_cast<std::size_t>(k)].dot(
            Eigen::VectorXd(tilde_h(n - k).cwiseProduct(fr.values)));
    total += tilde_nu(n, DepthFn(fam.base.shift, fam.base.depth, Eigen::VectorXd(d.h.cwiseProduct(fr.values))));
    return total;
}

double pressure_gibbs_consistency(const ExpansionResult& r, const std::vector<double>& p,
                                  const PotentialFamily& pf) {
    if (pf.order < 1) throw std::invalid_argument("needs at least one potential coefficient");
    // the Gibbs layer lives at the operator depth, which may exceed pf.depth
    const int count = static_cast<int>(r.nu_k.front().size());
    DepthFn phi1 = pf.coeff.front();
    for (int depth = pf.depth; depth <= pf.depth + 8; ++depth) {
        if (pf.shift->words(depth).count() == count) {
            std::vector<double> mu = gibbs_coefficients(r, refine(phi1, depth));
            return std::abs(p[1] - mu[0]);
        }
    }
    throw std::invalid_argument("pressure_gibbs_consistency: cannot match working depth");
}

namespace {

DepthFn random_unit(const ShiftPtr& shift, int depth, double theta, std::uint64_t seed) {
    const int count = shift->words(depth).count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(count);
    for (int i = 0; i < count; ++i) v(i) = gauss(rng);
    DepthFn f(shift, depth, std::move(v));
    const double norm = ftheta_norm(f, theta);
    if (norm == 0.0) return f;
    return (1.0 / norm) * f;
}

// max over prefix-sharing row pairs of ||row_w - row_w'||_1 / theta^j: the
// coefficient of ||f||_C in the image seminorm. Exact pair sweep for moderate
// sizes, triangle bound beyond.
double row_pair_bound(const ShiftPtr& shift, int depth, const Eigen::MatrixXd& m, double theta) {
    if (depth <= 1) return 0.0;
    const WordIndex& idx = shift->words(depth);
    const int count = idx.count();
    if (count > 1024) {
        double maxrow = m.cwiseAbs().rowwise().sum().maxCoeff();
        return 2.0 * maxrow / std::pow(theta, depth - 1);
    }
    double best = 0.0;
    for (int j = 1; j <= depth - 1; ++j) {
        const double scale = 1.0 / std::pow(theta, j);
        for (int wa = 0; wa < count; ++wa)
            for (int wb = wa + 1; wb < count; ++wb) {
                if (!std::equal(idx.word(wa), idx.word(wa) + j, idx.word(wb))) continue;
                if (idx.word(wa)[j] == idx.word(wb)[j]) continue;
                best = std::max(best, (m.row(wa) - m.row(wb)).cwiseAbs().sum() * scale);
            }
    }
    return best;
}

}  // namespace

NormBracket op_norm_ftheta(const ShiftPtr& shift, int depth, const Eigen::MatrixXd& m, double theta,
                           const NormOptions& opt) {
    NormBracket b;
    const double rowsum = m.cwiseAbs().rowwise().sum().maxCoeff();
    b.upper = rowsum + row_pair_bound(shift, depth, m, theta);

    const int count = static_cast<int>(m.rows());
    std::vector<double> vals(static_cast<std::size_t>(opt.samples + count + 1), 0.0);
    auto image_norm = [&](const DepthFn& f) {
        DepthFn img(shift, depth, Eigen::VectorXd(m * f.values));
        return ftheta_norm(img, theta);
    };
    par::for_index(opt.samples, opt.exec, [&](std::ptrdiff_t i) {
        DepthFn f = random_unit(shift, depth, theta, splitmix64(opt.seed + static_cast<std::uint64_t>(i)));
        vals[static_cast<std::size_t>(i)] = image_norm(f);
    });
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(count);
        e(i) = 1.0;
        DepthFn f(shift, depth, std::move(e));
        vals[static_cast<std::size_t>(opt.samples + i)] = image_norm(f) / ftheta_norm(f, theta);
    }
    vals.back() = image_norm(DepthFn(shift, depth, 1.0));
    b.lower = *std::max_element(vals.begin(), vals.end());
    return b;
}

NormBracket op_norm_ftheta_to_sup(const ShiftPtr& shift, int depth, const Eigen::MatrixXd& m, double theta,
                                  const NormOptions& opt) {
    NormBracket b;
    b.upper = m.cwiseAbs().rowwise().sum().maxCoeff();
    const int count = static_cast<int>(m.rows());
    std::vector<double> vals(static_cast<std::size_t>(opt.samples + count + 1), 0.0);
    auto image_norm = [&](const DepthFn& f) { return (m * f.values).cwiseAbs().maxCoeff(); };
    par::for_index(opt.samples, opt.exec, [&](std::ptrdiff_t i) {
        DepthFn f = random_unit(shift, depth, theta, splitmix64(opt.seed + static_cast<std::uint64_t>(i)));
        vals[static_cast<std::size_t>(i)] = image_norm(f);
    });
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(count);
        e(i) = 1.0;
        DepthFn f(shift, depth, std::move(e));
        vals[static_cast<std::size_t>(opt.samples + i)] = image_norm(f) / ftheta_norm(f, theta);
    }
    vals.back() = image_norm(DepthFn(shift, depth, 1.0));
    b.lower = *std::max_element(vals.begin(), vals.end());
    return b;
}

bool sequence_vanishing(const std::vector<double>& grid, const std::vector<double>& vals,
                        double slope_floor, double shrink_factor, double zero_floor,
                        const std::vector<double>& noise_floors) {
    if (grid.size() != vals.size() || grid.size() < 4) throw std::invalid_argument("grid count >= 4 required");
    std::vector<int> idx(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return grid[static_cast<std::size_t>(a)] > grid[static_cast<std::size_t>(b)]; });
    bool all_zero = true;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double floor_i = std::max(zero_floor, noise_floors.empty() ? 0.0 : noise_floors[i]);
        all_zero = all_zero && std::abs(vals[i]) <= floor_i;
    }
    if (all_zero) return true;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int pts = static_cast<int>(grid.size());
    for (int j = pts - 3; j < pts; ++j) {
        const int i = idx[static_cast<std::size_t>(j)];
        const double x = std::log(grid[static_cast<std::size_t>(i)]);
        const double y = std::log(std::max(std::abs(vals[static_cast<std::size_t>(i)]), 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    const double first = std::abs(vals[static_cast<std::size_t>(idx.front())]);
    const double last = std::abs(vals[static_cast<std::size_t>(idx.back())]);
    return slope >= slope_floor && last < first * shrink_factor;
}

bool sequence_bounded(const std::vector<double>& grid, const std::vector<double>& vals) {
    if (grid.size() != vals.size() || vals.empty()) throw std::invalid_argument("bad sequence");
    std::vector<int> idx(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return grid[static_cast<std::size_t>(a)] > grid[static_cast<std::size_t>(b)]; });
    const std::size_t half = grid.size() / 2;
    double early = 0.0, late = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double v = std::abs(vals[idx[j]]);
        if (j < half)
            early = std::max(early, v);
        else
            late = std::max(late, v);
    }
    return late <= 2.0 * early + 1e-12;
}

std::vector<TheoremVerdict> theorem_criteria_check(const PotentialFamily& pf, const OperatorFamily& fam,
                                                   const ExpansionResult& r, const std::vector<double>& grid,
                                                   const DepthFn& f, const CriteriaOptions& opt) {
    if (grid.size() < 4) throw std::invalid_argument("grid count >= 4 required");
    const int n = fam.order;
    const ShiftPtr& shift = fam.base.shift;
    const int depth = fam.base.depth;
    const std::size_t pts = grid.size();
    const auto p = pressure_coefficients(r);
    const auto mu = gibbs_coefficients(r, refine(f, depth));

    std::vector<double> tLn_sup(pts), tLn_fc(pts), tLn_ff(pts), phi_sem2(pts);
    std::vector<double> rem_lambda(pts), rem_nu(pts), rem_p(pts), rem_mu(pts), rem_h_l1(pts), rem_h_sup(pts);
    std::vector<double> product_upper(pts, 0.0), product_lower(pts, 0.0);
    const bool has_schedule = static_cast<bool>(pf.theta_of_eps);
    if (opt.want_schedule_theorem && !has_schedule)
        throw std::invalid_argument("theta schedule required for the scheduled theorem check");

    par::for_index(static_cast<std::ptrdiff_t>(pts), opt.norms.exec, [&](std::ptrdiff_t ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double eps = grid[i];
        const Eigen::MatrixXd tln = fam.tilde_L(n, eps);
        NormOptions serial_norms = opt.norms;
        serial_norms.exec = par::Exec::serial;  // outer loop already parallel
        tLn_sup[i] = tln.cwiseAbs().rowwise().sum().maxCoeff();
        tLn_fc[i] = op_norm_ftheta_to_sup(shift, depth, tln, opt.theta, serial_norms).upper;
        tLn_ff[i] = op_norm_ftheta(shift, depth, tln, opt.theta, serial_norms).upper;
        phi_sem2[i] = lipschitz_seminorm(refine(pf.at(eps), depth), opt.theta, 2);

        rem_lambda[i] = std::abs(remainder_lambda(fam, r, eps, RemainderMode::direct)[static_cast<std::size_t>(n)]);
        rem_p[i] = std::abs(pressure_remainder(fam, r, p, eps, RemainderMode::direct));
        rem_mu[i] = std::abs(gibbs_remainder(fam, r, mu, f, eps, RemainderMode::direct));

        const PerturbedEigendata d = eigen_at(fam, eps);
        const DepthFn fr = refine(f, depth);
        double nu_acc = d.nu.dot(fr.values);
        Eigen::VectorXd h_acc = d.h;
        double ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            nu_acc -= ep * r.nu_k[static_cast<std::size_t>(k)].dot(fr.values);
            h_acc -= ep * r.h_k[static_cast<std::size_t>(k)];
            ep *= eps;
        }
        rem_nu[i] = std::abs(divide_eps_pow(nu_acc, eps, n));
        const Eigen::VectorXd th = h_acc * std::exp(-static_cast<double>(n) * std::log(eps));
        rem_h_l1[i] = fam.base.nu.dot(th.cwiseAbs());
        rem_h_sup[i] = th.cwiseAbs().maxCoeff();

        if (has_schedule) {
            const double theta_eps = pf.theta_of_eps(eps);
            auto snorm = op_norm_ftheta(shift, depth, fam.base.S, theta_eps, serial_norms);
            double pu = 0.0, pl = 0.0;
            for (int k = 0; k <= n; ++k) {
                auto tnorm = op_norm_ftheta(shift, depth, fam.tilde_L(k, eps), theta_eps, serial_norms);
                pu = std::max(pu, std::pow(snorm.upper, n - k + 1) * tnorm.upper);
                pl = std::max(pl, std::pow(snorm.lower, n - k + 1) * tnorm.lower);
            }
            product_upper[i] = pu;
            product_lower[i] = pl;
        }
    });

    // machine-noise floors of the direct-difference remainders
    const double scale = 3.0 * std::max({1.0, fam.base.lambda, fam.base.h.maxCoeff()});
    std::vector<double> floors(pts);
    for (std::size_t i = 0; i < pts; ++i)
        floors[i] = divide_eps_pow(64.0 * 2.220446049250313e-16 * scale, grid[i], n);

    std::vector<TheoremVerdict> out;
    {
        TheoremVerdict v;
        v.name = "pressure-dual";
        v.hypothesis_holds = sequence_vanishing(grid, tLn_sup);
        v.conclusion_holds = sequence_vanishing(grid, rem_lambda, 0.5, 0.5, 1e-12, floors) &&
                             sequence_vanishing(grid, rem_nu, 0.5, 0.5, 1e-12, floors) &&
                             sequence_vanishing(grid, rem_p, 0.5, 0.5, 1e-12, floors);
        for (std::size_t i = 0; i < pts; ++i) {
            v.details.emplace_back("tL_n_sup", tLn_sup[i]);
            v.details.emplace_back("rem_p", rem_p[i]);
        }
        out.push_back(std::move(v));
    }
    {
        TheoremVerdict v;
        v.name = "gibbs-fixed-theta";
        v.hypothesis_holds = sequence_vanishing(grid, tLn_fc) && sequence_bounded(grid, phi_sem2) &&
                             sequence_bounded(grid, tLn_ff);
        v.conclusion_holds = sequence_vanishing(grid, rem_h_l1, 0.5, 0.5, 1e-12, floors) &&
                             sequence_vanishing(grid, rem_mu, 0.5, 0.5, 1e-12, floors);
        for (std::size_t i = 0; i < pts; ++i) {
            v.details.emplace_back("tL_n_ftheta_to_C", tLn_fc[i]);
            v.details.emplace_back("phi_sem2", phi_sem2[i]);
            v.details.emplace_back("rem_h_L1", rem_h_l1[i]);
            v.details.emplace_back("rem_mu", rem_mu[i]);
        }
        out.push_back(std::move(v));
    }
    if (opt.want_schedule_theorem) {
        TheoremVerdict v;
        v.name = "gibbs-scheduled-theta";
        v.hypothesis_holds = sequence_vanishing(grid, product_upper);
        v.conclusion_holds = sequence_vanishing(grid, rem_h_sup, 0.5, 0.5, 1e-12, floors) &&
                             sequence_vanishing(grid, rem_mu, 0.5, 0.5, 1e-12, floors);
        for (std::size_t i = 0; i < pts; ++i) {
            v.details.emplace_back("product_upper", product_upper[i]);
            v.details.emplace_back("product_lower", product_lower[i]);
            v.details.emplace_back("rem_h_sup", rem_h_sup[i]);
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace perturbex
