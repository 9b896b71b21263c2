#include <perturbex/gdms.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perturbex {

namespace {

ScalarJet pad(const ScalarJet& j, int order) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    for (int k = 0; k <= std::min(order, j.order()); ++k) c[static_cast<std::size_t>(k)] = j[k];
    return ScalarJet(std::move(c));
}

ScalarJet constant_jet(double v, int order) {
    ScalarJet j(order, 0.0);
    j[0] = v;
    return j;
}

// log |j| as a jet; requires a nonzero constant term
ScalarJet jet_log_abs(const ScalarJet& j) {
    if (j[0] == 0.0) throw std::domain_error("gdms: derivative vanishing on the interval");
    return jet_log(j[0] > 0.0 ? j : -1.0 * j);
}

struct Interval {
    double lo, hi;
};

}  // namespace

int GdmsSystem::state_of_edge(int edge) const {
    const auto& labels = shift->original_labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == edge) return static_cast<int>(i);
    return -1;
}

double GdmsSystem::map_value(int edge, double eps, double x) const {
    const EdgeMap& m = edges[static_cast<std::size_t>(edge)].map;
    if (m.kind == EdgeMap::Kind::affine) return jet_eval(m.r, eps) * x + jet_eval(m.c, eps);
    const double den = jet_eval(m.mc, eps) * x + jet_eval(m.md, eps);
    return (jet_eval(m.ma, eps) * x + jet_eval(m.mb, eps)) / den;
}

double GdmsSystem::map_derivative(int edge, double eps, double x) const {
    const EdgeMap& m = edges[static_cast<std::size_t>(edge)].map;
    if (m.kind == EdgeMap::Kind::affine) return jet_eval(m.r, eps);
    const double den = jet_eval(m.mc, eps) * x + jet_eval(m.md, eps);
    const double det = jet_eval(m.ma, eps) * jet_eval(m.md, eps) - jet_eval(m.mb, eps) * jet_eval(m.mc, eps);
    return det / (den * den);
}

GdmsSystem make_gdms(std::vector<std::array<double, 2>> intervals, std::vector<GdmsEdge> edges, int order) {
    if (intervals.empty() || edges.empty()) throw std::invalid_argument("gdms: needs vertices and edges");
    GdmsSystem sys;
    sys.order = order;
    sys.intervals = std::move(intervals);
    sys.edges = std::move(edges);

    for (auto& [lo, hi] : sys.intervals)
        if (!(lo < hi)) throw std::invalid_argument("gdms: seed interval is empty");

    const int nv = static_cast<int>(sys.intervals.size());
    for (auto& e : sys.edges) {
        if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv)
            throw std::invalid_argument("gdms: edge references an unknown vertex");
        if (e.map.kind == EdgeMap::Kind::affine) {
            e.map.r = pad(e.map.r, order);
            e.map.c = pad(e.map.c, order);
        } else {
            e.map.ma = pad(e.map.ma, order);
            e.map.mb = pad(e.map.mb, order);
            e.map.mc = pad(e.map.mc, order);
            e.map.md = pad(e.map.md, order);
        }
    }

    // contraction + open set condition at eps = 0
    double contraction = 0.0;
    std::vector<std::vector<Interval>> images(static_cast<std::size_t>(nv));
    for (std::size_t ei = 0; ei < sys.edges.size(); ++ei) {
        const GdmsEdge& e = sys.edges[ei];
        const auto [lo, hi] = sys.intervals[static_cast<std::size_t>(e.to)];
        if (e.map.kind == EdgeMap::Kind::moebius) {
            const double d0 = jet_eval(e.map.mc, 0.0) * lo + jet_eval(e.map.md, 0.0);
            const double d1 = jet_eval(e.map.mc, 0.0) * hi + jet_eval(e.map.md, 0.0);
            if (d0 * d1 <= 0.0) throw std::invalid_argument("gdms: map denominator vanishes on the seed interval");
        }
        const double da = std::abs(sys.map_derivative(static_cast<int>(ei), 0.0, lo));
        const double db = std::abs(sys.map_derivative(static_cast<int>(ei), 0.0, hi));
        contraction = std::max({contraction, da, db});
        if (std::min(da, db) <= 0.0) throw std::invalid_argument("gdms: derivative vanishing on the interval");

        const double va = sys.map_value(static_cast<int>(ei), 0.0, lo);
        const double vb = sys.map_value(static_cast<int>(ei), 0.0, hi);
        Interval img{std::min(va, vb), std::max(va, vb)};
        const auto [flo, fhi] = sys.intervals[static_cast<std::size_t>(e.from)];
        if (img.lo < flo - 1e-12 || img.hi > fhi + 1e-12)
            throw std::invalid_argument("gdms: edge image leaves the initial seed interval");
        images[static_cast<std::size_t>(e.from)].push_back(img);
    }
    if (!(contraction < 1.0)) throw std::invalid_argument("gdms: system is not contracting");
    sys.contraction = contraction;
    for (auto& list : images) {
        std::sort(list.begin(), list.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i].lo < list[i - 1].hi - 1e-12)
                throw std::invalid_argument("gdms: open set condition violated at eps = 0");
    }

    const int ne = static_cast<int>(sys.edges.size());
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(ne, ne);
    for (int e1 = 0; e1 < ne; ++e1)
        for (int e2 = 0; e2 < ne; ++e2)
            if (sys.edges[static_cast<std::size_t>(e1)].to == sys.edges[static_cast<std::size_t>(e2)].from)
                a(e1, e2) = 1;
    sys.shift = build_shift(a);
    return sys;
}

ScalarJet coding_jet(const GdmsSystem& sys, const std::vector<int>& word, std::optional<double> anchor) {
    if (word.empty()) throw std::invalid_argument("coding_jet: empty word");
    const int n = sys.order;
    std::vector<int> edges_in_word;
    for (std::size_t j = 0; j < word.size(); ++j) {
        const int state = word[j];
        if (state < 0 || state >= sys.states()) throw std::invalid_argument("coding_jet: unknown symbol");
        edges_in_word.push_back(sys.edge_of_state(state));
        if (j > 0 && sys.shift->transition()(word[j - 1], word[j]) == 0)
            throw std::invalid_argument("coding_jet: inadmissible word");
    }
    const int last_edge = edges_in_word.back();
    const auto [lo, hi] = sys.intervals[static_cast<std::size_t>(sys.edges[static_cast<std::size_t>(last_edge)].to)];
    const double x0 = anchor.value_or(0.5 * (lo + hi));
    if (x0 < lo - 1e-12 || x0 > hi + 1e-12) throw std::invalid_argument("coding_jet: anchor outside seed interval");

    ScalarJet x = constant_jet(x0, n);
    for (int j = static_cast<int>(edges_in_word.size()) - 1; j >= 0; --j) {
        const EdgeMap& m = sys.edges[static_cast<std::size_t>(edges_in_word[static_cast<std::size_t>(j)])].map;
        if (m.kind == EdgeMap::Kind::affine) {
            x = jet_mul(m.r, x) + m.c;
        } else {
            ScalarJet num = jet_mul(m.ma, x) + m.mb;
            ScalarJet den = jet_mul(m.mc, x) + m.md;
            x = jet_mul(num, jet_reciprocal(den));
        }
    }
    return x;
}

double coding_truncation_bound(const GdmsSystem& sys, int depth) {
    double diam = 0.0;
    for (const auto& [lo, hi] : sys.intervals) diam = std::max(diam, hi - lo);
    return diam * std::pow(sys.contraction, depth);
}

ScalarJet potential_jet(const GdmsSystem& sys, const std::vector<int>& word) {
    if (word.empty()) throw std::invalid_argument("potential_jet: empty word");
    const int n = sys.order;
    const int first_edge = sys.edge_of_state(word.front());
    const EdgeMap& m = sys.edges[static_cast<std::size_t>(first_edge)].map;

    if (m.kind == EdgeMap::Kind::affine) return jet_log_abs(m.r);  // constant derivative, depth-1 exact

    ScalarJet x(0, 0.0);
    if (word.size() == 1) {
        const auto [lo, hi] =
            sys.intervals[static_cast<std::size_t>(sys.edges[static_cast<std::size_t>(first_edge)].to)];
        x = constant_jet(0.5 * (lo + hi), n);
    } else {
        x = coding_jet(sys, std::vector<int>(word.begin() + 1, word.end()));
        if (sys.shift->transition()(word[0], word[1]) == 0)
            throw std::invalid_argument("potential_jet: inadmissible word");
    }

    ScalarJet det = jet_mul(m.ma, m.md) - jet_mul(m.mb, m.mc);
    ScalarJet den = jet_mul(m.mc, x) + m.md;
    return jet_log_abs(det) - 2.0 * jet_log_abs(den);
}

namespace {

// exact depth-m potential value at eps on one cylinder word (state indices)
double exact_potential_value(const GdmsSystem& sys, const std::int32_t* word, int m, double eps) {
    const int last_edge = sys.edge_of_state(word[m - 1]);
    const auto [lo, hi] = sys.intervals[static_cast<std::size_t>(sys.edges[static_cast<std::size_t>(last_edge)].to)];
    double x = 0.5 * (lo + hi);
    for (int j = m - 1; j >= 1; --j) x = sys.map_value(sys.edge_of_state(word[j]), eps, x);
    return std::log(std::abs(sys.map_derivative(sys.edge_of_state(word[0]), eps, x)));
}

}  // namespace

PotentialFamily gdms_potential_family(const GdmsSystem& sys, int depth, par::Exec exec) {
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    const int n = sys.order;
    const WordIndex& idx = sys.shift->words(depth);
    const int count = idx.count();

    Eigen::VectorXd base(count);
    std::vector<Eigen::VectorXd> coeff(static_cast<std::size_t>(n), Eigen::VectorXd(count));
    par::for_index(count, exec, [&](std::ptrdiff_t i) {
        std::vector<int> word(idx.word(static_cast<int>(i)), idx.word(static_cast<int>(i)) + depth);
        ScalarJet j = potential_jet(sys, word);
        base(static_cast<Eigen::Index>(i)) = j[0];
        for (int k = 1; k <= n; ++k) coeff[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(i)) = j[k];
    });

    DepthFn base_fn(sys.shift, depth, std::move(base));
    std::vector<DepthFn> coeff_fn;
    for (auto& c : coeff) coeff_fn.emplace_back(sys.shift, depth, std::move(c));

    // remainder evaluator from exact map evaluation (the jets are the eps
    // Taylor coefficients of exactly this depth-m truncated potential)
    GdmsSystem copy = sys;
    DepthFn base_copy = base_fn;
    std::vector<DepthFn> coeff_copy = coeff_fn;
    auto remainder = [copy, base_copy, coeff_copy, depth, n](double eps) {
        const WordIndex& widx = copy.shift->words(depth);
        Eigen::VectorXd rem(widx.count());
        for (int i = 0; i < widx.count(); ++i) {
            double val = exact_potential_value(copy, widx.word(i), depth, eps);
            val -= base_copy.values(i);
            double ep = 1.0;
            for (int k = 1; k <= n; ++k) {
                ep *= eps;
                val -= ep * coeff_copy[static_cast<std::size_t>(k - 1)].values(i);
            }
            rem(i) = n == 0 ? val : val / ep;
        }
        return DepthFn(copy.shift, depth, std::move(rem));
    };
    return make_potential_family(std::move(base_fn), std::move(coeff_fn), std::move(remainder));
}

namespace {

double pressure_of_values(const DepthFn& phi, double s) {
    TransferOp op = build_ruelle(s * phi);
    return std::log(perron_root_power_iteration(op.mat));
}

double bowen_root(const DepthFn& phi) {
    if (phi.values.maxCoeff() >= 0.0) throw std::domain_error("gdms: non-contractive system (potential not < 0)");
    const double p0 = pressure_of_values(phi, 0.0);
    if (p0 <= 1e-12) throw std::domain_error("degenerate: single-edge system has dimension 0");

    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (pressure_of_values(phi, hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw std::domain_error("gdms: no sign change while bracketing the dimension");
    }
    // pressure is strictly decreasing in s (potential < 0); plain bisection
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = pressure_of_values(phi, mid);
        if (std::abs(p) <= 1e-13) return mid;
        (p > 0.0 ? lo : hi) = mid;
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    const double s = 0.5 * (lo + hi);
    if (std::abs(pressure_of_values(phi, s)) > 1e-12)
        throw std::runtime_error("gdms: bisection failed to reach |P| <= 1e-12");
    return s;
}

}  // namespace

double bowen_dimension(const GdmsSystem& sys, int depth) {
    PotentialFamily pf = gdms_potential_family(sys, depth, par::Exec::serial);
    // monotonicity sanity on a coarse grid
    double prev = pressure_of_values(pf.base, 0.0);
    for (double s : {0.25, 0.5, 0.75, 1.0}) {
        const double p = pressure_of_values(pf.base, s);
        if (p >= prev) throw std::runtime_error("gdms: pressure not strictly decreasing in s");
        prev = p;
    }
    return bowen_root(pf.base);
}

double bowen_dimension_at(const GdmsSystem& sys, int depth, double eps) {
    const WordIndex& idx = sys.shift->words(depth);
    Eigen::VectorXd values(idx.count());
    for (int i = 0; i < idx.count(); ++i) values(i) = exact_potential_value(sys, idx.word(i), depth, eps);
    return bowen_root(DepthFn(sys.shift, depth, std::move(values)));
}

namespace {

// pressure coefficients p_0..p_n of the family s * phi(e)
std::vector<double> pressure_coeffs_at_s(const PotentialFamily& pf, double s) {
    PotentialFamily scaled = pf;
    scaled.base = s * pf.base;
    for (std::size_t k = 0; k < scaled.coeff.size(); ++k) scaled.coeff[k] = s * pf.coeff[k];
    if (pf.remainder) {
        auto inner = pf.remainder;
        scaled.remainder = [inner, s](double eps) { return s * inner(eps); };
    }
    OperatorFamily fam = build_family(scaled);
    ExpansionResult r = expand_eigen_dual(fam);
    return pressure_coefficients(r);
}

}  // namespace

DimensionExpansion dimension_expansion(const GdmsSystem& sys, int depth, int order) {
    DimensionExpansion out;
    const int n = order;
    if (n > sys.order) throw std::invalid_argument("dimension_expansion: order exceeds the system order");
    PotentialFamily pf = gdms_potential_family(sys, depth);
    const double s0 = bowen_root(pf.base);

    // centered stencil, spacing 1e-3 plus the halved refinement
    const double delta = 1e-3;
    std::vector<double> offsets;
    for (int j = -4; j <= 4; ++j) offsets.push_back(j * delta / 2.0);
    const std::size_t pts = offsets.size();
    std::vector<std::vector<double>> pk_at(pts);
    par::for_index(static_cast<std::ptrdiff_t>(pts), par::Exec::openmp, [&](std::ptrdiff_t i) {
        pk_at[static_cast<std::size_t>(i)] = pressure_coeffs_at_s(pf, s0 + offsets[static_cast<std::size_t>(i)]);
    });

    // derivatives p_k^{(d)}(s0) by Newton interpolation through the stencil
    std::vector<std::vector<double>> deriv(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        std::vector<double> dd(pts);
        for (std::size_t i = 0; i < pts; ++i) dd[i] = pk_at[i][static_cast<std::size_t>(k)];
        for (std::size_t j = 1; j < pts; ++j)
            for (std::size_t i = pts - 1; i >= j; --i) dd[i] = (dd[i] - dd[i - 1]) / (offsets[i] - offsets[i - j]);
        // expand the Newton form about u = 0: poly <- poly*(u - u_j) + dd[j]
        std::vector<double> poly{dd[pts - 1]};
        for (int j = static_cast<int>(pts) - 2; j >= 0; --j) {
            poly.insert(poly.begin(), 0.0);
            for (std::size_t i = 0; i + 1 < poly.size(); ++i) poly[i] -= offsets[static_cast<std::size_t>(j)] * poly[i + 1];
            poly[0] += dd[static_cast<std::size_t>(j)];
        }
        std::vector<double> dk;
        double fact = 1.0;
        for (std::size_t d = 0; d < poly.size(); ++d) {
            if (d > 0) fact *= static_cast<double>(d);
            dk.push_back(poly[d] * fact);
        }
        dk.resize(static_cast<std::size_t>(n) + 1, 0.0);
        deriv[static_cast<std::size_t>(k)] = std::move(dk);
    }

    out.pressure_residual_at_s0 = std::abs(deriv[0][0]);
    out.pressure_slope_at_s0 = deriv[0][1];
    if (!(out.pressure_slope_at_s0 < 0.0) || out.pressure_slope_at_s0 > std::log(sys.contraction) + 1e-6)
        throw std::runtime_error("gdms: degenerate thermodynamics, pressure slope not negative enough");

    // order-by-order solve of sum_k p_k(s(e)) e^k = 0
    std::vector<double> s(static_cast<std::size_t>(n) + 1, 0.0);
    s[0] = s0;
    for (int m = 1; m <= n; ++m) {
        ScalarJet djet(n, 0.0);
        for (int j = 1; j < m; ++j) djet[j] = s[static_cast<std::size_t>(j)];
        ScalarJet total(n, 0.0);
        for (int k = 0; k <= n; ++k) {
            ScalarJet qk(n, 0.0);
            qk[0] = pk_at[pts / 2][static_cast<std::size_t>(k)];  // p_k(s0), center of the stencil
            ScalarJet dp = constant_jet(1.0, n);
            double fact = 1.0;
            for (int d = 1; d <= n; ++d) {
                fact *= d;
                dp = jet_mul(dp, djet);
                qk = qk + (deriv[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] / fact) * dp;
            }
            for (int e = 0; e + k <= n; ++e) total[e + k] += qk[e];
        }
        s[static_cast<std::size_t>(m)] = -total[m] / out.pressure_slope_at_s0;
    }
    out.s = std::move(s);

    // validation against direct root-finding
    out.sample_eps = {1e-2, 1e-3};
    for (double eps : out.sample_eps) {
        out.direct_roots.push_back(bowen_dimension_at(sys, depth, eps));
        double val = 0.0, ep = 1.0;
        for (int k = 0; k <= n; ++k) {
            val += out.s[static_cast<std::size_t>(k)] * ep;
            ep *= eps;
        }
        out.expansion_values.push_back(val);
    }
    double c = 0.0;
    for (std::size_t i = 0; i < out.sample_eps.size(); ++i)
        c = std::max(c, std::abs(out.direct_roots[i] - out.expansion_values[i]) / std::pow(out.sample_eps[i], n + 1));
    out.fitted_constant = c;
    return out;
}

PotentialFamily gdms_combined_family(const GdmsSystem& sys, int depth, const DimensionExpansion& dim) {
    const int n = sys.order;
    PotentialFamily pf = gdms_potential_family(sys, depth);

    // psi_k = sum_{i<=k} s_i phi_{k-i}
    DepthFn base = dim.s[0] * pf.base;
    std::vector<DepthFn> coeff;
    for (int k = 1; k <= n; ++k) {
        DepthFn psi = dim.s[static_cast<std::size_t>(k)] * pf.base;
        for (int i = 0; i < k; ++i)
            psi = psi + dim.s[static_cast<std::size_t>(i)] * pf.coeff[static_cast<std::size_t>(k - i - 1)];
        coeff.push_back(psi);
    }

    GdmsSystem copy = sys;
    DepthFn base_copy = base;
    std::vector<DepthFn> coeff_copy = coeff;
    auto remainder = [copy, base_copy, coeff_copy, depth, n](double eps) {
        const double s_eps = bowen_dimension_at(copy, depth, eps);
        const WordIndex& widx = copy.shift->words(depth);
        Eigen::VectorXd rem(widx.count());
        for (int i = 0; i < widx.count(); ++i) {
            double val = s_eps * exact_potential_value(copy, widx.word(i), depth, eps);
            val -= base_copy.values(i);
            double ep = 1.0;
            for (int k = 1; k <= n; ++k) {
                ep *= eps;
                val -= ep * coeff_copy[static_cast<std::size_t>(k - 1)].values(i);
            }
            rem(i) = n == 0 ? val : val / ep;
        }
        return DepthFn(copy.shift, depth, std::move(rem));
    };
    return make_potential_family(std::move(base), std::move(coeff), std::move(remainder));
}

std::vector<double> gdms_gibbs_expansion(const GdmsSystem& sys, int depth, const DimensionExpansion& dim,
                                         const DepthFn& f) {
    PotentialFamily pf = gdms_combined_family(sys, depth, dim);
    OperatorFamily fam = build_family(pf);
    ExpansionResult r = expand_all(fam);
    return gibbs_coefficients(r, refine(f, fam.base.depth));
}

ConditionAudit gdms_condition_audit(const GdmsSystem& sys, int order) {
    const int n = order;
    if (sys.infinite_truncation_study && sys.holder_exponents.empty())
        throw std::invalid_argument("gdms audit: exponent table required for an infinite-truncation study");

    auto t_of = [&](int l, int k) {
        if (sys.holder_exponents.empty()) return 1.0;  // finite edge set default
        return sys.holder_exponents.at(static_cast<std::size_t>(l)).at(static_cast<std::size_t>(k - 1));
    };

    ConditionAudit audit;
    // D = 1: t_k = min{ t(i, j+1) : (i = k, j = 0) or (0 <= i < k, 1 <= i + j <= k) }
    for (int k = 1; k <= n; ++k) {
        double tk = t_of(k, 1);
        for (int i = 0; i < k; ++i)
            for (int j = 1; i + j <= k; ++j) tk = std::min(tk, t_of(i, j + 1));
        audit.t_k.push_back(tk);
    }

    // ~t = min{t_n, ~t_0, ...}; with D = 1 the mixed terms collapse to ~t_0
    double tt = sys.tilde_t0;
    if (n >= 1) tt = std::min(tt, audit.t_k.back());
    audit.tilde_t = tt;

    const double p_lower = sys.s_lower;  // p_ = s_/D, D = 1
    if (n == 0) {
        audit.p_n = p_lower / tt;
    } else {
        double p = std::max(p_lower + 1.0 - tt, p_lower / tt);
        for (int k = 1; k <= n; ++k) {
            p = std::max(p, p_lower + n * (1.0 - audit.t_k[static_cast<std::size_t>(k - 1)]) / k);
            p = std::max(p, p_lower / audit.t_k[static_cast<std::size_t>(k - 1)]);
        }
        audit.p_n = p;
    }

    audit.dimension = bowen_dimension(sys, 2);
    audit.pass = audit.dimension > audit.p_n;
    return audit;
}

double gdms_remainder_holder_spot_check(const GdmsSystem& sys, int order, int samples) {
    const int n = std::min(order, sys.order);
    double worst = 0.0;
    for (std::size_t ei = 0; ei < sys.edges.size(); ++ei) {
        const auto [lo, hi] = sys.intervals[static_cast<std::size_t>(sys.edges[ei].to)];
        auto derivative_tail = [&](double point, double eps) {
            // eps-jet of the map derivative at the fixed point
            const EdgeMap& m = sys.edges[ei].map;
            ScalarJet dj(sys.order, 0.0);
            if (m.kind == EdgeMap::Kind::affine) {
                dj = m.r;
            } else {
                ScalarJet det = jet_mul(m.ma, m.md) - jet_mul(m.mb, m.mc);
                ScalarJet den = jet_mul(m.mc, constant_jet(point, sys.order)) + m.md;
                dj = jet_mul(det, jet_reciprocal(jet_mul(den, den)));
            }
            double val = sys.map_derivative(static_cast<int>(ei), eps, point);
            double ep = 1.0;
            for (int k = 0; k <= n; ++k) {
                val -= ep * dj[k];
                ep *= eps;
            }
            return val / std::pow(eps, n);
        };
        for (int a = 0; a < samples; ++a)
            for (int b = a + 1; b < samples; ++b) {
                const double x = lo + (hi - lo) * (a + 0.5) / samples;
                const double y = lo + (hi - lo) * (b + 0.5) / samples;
                for (double eps : {1e-1, 1e-2, 1e-3})
                    worst = std::max(worst,
                                     std::abs(derivative_tail(x, eps) - derivative_tail(y, eps)) / std::abs(x - y));
            }
    }
    return worst;
}

}  // namespace perturbex
