#include <perturbex/transfer.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace perturbex {

TransferOp build_ruelle(const DepthFn& phi, int depth_override) {
    const int d = std::max({phi.depth, depth_override, 1});
    const DepthFn p = refine(phi, d);
    const ShiftPtr& shift = phi.shift;
    const WordIndex& idx = shift->words(d);
    const int n = idx.count();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);

    if (d == 1) {
        const Eigen::MatrixXi& a = shift->transition();
        for (int w = 0; w < n; ++w)
            for (int u = 0; u < n; ++u)
                if (a(u, w) != 0) m(w, u) = std::exp(p.values(u));
    } else {
        std::vector<std::int32_t> u(static_cast<std::size_t>(d));
        for (int w = 0; w < n; ++w) {
            const std::int32_t* ww = idx.word(w);
            std::copy(ww, ww + (d - 1), u.begin() + 1);
            for (int a = 0; a < shift->num_states(); ++a) {
                u[0] = a;
                int ui = idx.index_of(u.data());
                if (ui >= 0) m(w, ui) = std::exp(p.values(ui));
            }
        }
    }
    return TransferOp{shift, d, std::move(m)};
}

DepthFn apply(const TransferOp& op, const DepthFn& f) {
    if (f.shift.get() != op.shift.get()) throw std::invalid_argument("apply: shift mismatch");
    if (f.depth > op.depth) throw std::invalid_argument("apply: function deeper than the operator");
    const DepthFn g = refine(f, op.depth);
    return DepthFn(op.shift, op.depth, Eigen::VectorXd(op.mat * g.values));
}

DepthFn operator*(const TransferOp& op, const DepthFn& f) { return apply(op, f); }

double perron_root_power_iteration(const Eigen::MatrixXd& m, double tol, int max_iter) {
    const int n = static_cast<int>(m.rows());
    // Positive diagonal shift makes the Perron root strictly dominant even
    // for period > 1 matrices.
    const double shift = m.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double rayleigh = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = m * x + shift * x;
        double norm = y.norm();
        if (norm == 0.0) throw std::domain_error("power iteration: matrix annihilates the positive cone");
        y /= norm;
        double next = y.dot(m * y + shift * y);
        if (std::abs(next - rayleigh) <= tol * std::abs(next)) return next - shift;
        rayleigh = next;
        x = y;
    }
    return rayleigh - shift;
}

PerronPair perron_pair(const Eigen::MatrixXd& m, int period_hint) {
    const int n = static_cast<int>(m.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> right(m);
    if (right.info() != Eigen::Success) throw std::runtime_error("perron_pair: eigensolver failure");
    const auto evs = right.eigenvalues();

    int imax = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(evs(i)) > std::abs(evs(imax))) imax = i;
    const double lambda = evs(imax).real();
    const double m0 = std::abs(evs(imax));
    if (lambda <= 0.0 || std::abs(evs(imax).imag()) > 1e-9 * m0)
        throw std::runtime_error("perron_pair: dominant eigenvalue not real positive");

    // Simplicity: either a clear modulus gap, or (period p > 1) an angularly
    // distinct peripheral cycle of which only lambda itself is extracted.
    double m1 = 0.0;
    for (int i = 0; i < n; ++i)
        if (i != imax) m1 = std::max(m1, std::abs(evs(i)));
    if (n > 1 && m0 - m1 <= 1e-8 * m0) {
        std::vector<std::complex<double>> peripheral;
        for (int i = 0; i < n; ++i)
            if (std::abs(evs(i)) >= m0 * (1.0 - 1e-8)) peripheral.push_back(evs(i));
        bool ok = period_hint > 1 && static_cast<int>(peripheral.size()) <= period_hint;
        for (std::size_t i = 0; ok && i < peripheral.size(); ++i)
            for (std::size_t j = i + 1; ok && j < peripheral.size(); ++j)
                if (std::abs(std::arg(peripheral[i]) - std::arg(peripheral[j])) < 1e-6) ok = false;
        if (!ok) throw std::domain_error("perron_pair: leading eigenvalue not simple within tolerance");
    }

    auto real_positive = [n](const Eigen::VectorXcd& v, const char* what) {
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) {
            if (std::abs(v(i).imag()) > 1e-9 * v.norm())
                throw std::runtime_error(std::string("perron_pair: complex ") + what);
            r(i) = v(i).real();
        }
        if (r.maxCoeff() < 0.0) r = -r;
        if (r.minCoeff() < -1e-10 * r.maxCoeff())
            throw std::runtime_error(std::string("perron_pair: sign change in ") + what);
        return r;
    };

    PerronPair out;
    out.lambda = lambda;
    out.second_modulus = m1;
    out.right = real_positive(right.eigenvectors().col(imax), "eigenfunction");

    Eigen::EigenSolver<Eigen::MatrixXd> left(m.transpose());
    if (left.info() != Eigen::Success) throw std::runtime_error("perron_pair: eigensolver failure (dual)");
    int jmax = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(left.eigenvalues()(i) - lambda) < std::abs(left.eigenvalues()(jmax) - lambda)) jmax = i;
    out.left = real_positive(left.eigenvectors().col(jmax), "dual eigenvector");
    out.left /= out.left.sum();
    return out;
}

SpectralTriplet spectral_triplet(const TransferOp& op) {
    if (!op.shift->irreducible()) throw std::domain_error("spectral_triplet: shift is reducible");
    const Eigen::MatrixXd& m = op.mat;
    const int n = static_cast<int>(m.rows());
    if (m.minCoeff() < 0.0 || m.cwiseAbs().maxCoeff() == 0.0)
        throw std::domain_error("spectral_triplet: matrix must be nonnegative and nonzero");

    PerronPair pair = perron_pair(m, op.shift->period());
    const double lambda = pair.lambda;
    const double m1 = pair.second_modulus;

    const double lambda_power = perron_root_power_iteration(m);
    if (std::abs(lambda_power - lambda) > 1e-7 * lambda)
        throw std::runtime_error("spectral_triplet: power-iteration cross-check disagrees with eigensolver");

    Eigen::VectorXd h = pair.right;
    Eigen::VectorXd nu = pair.left;  // already nu(1) = 1
    h /= nu.dot(h);                  // nu(h) = 1

    SpectralTriplet t;
    t.shift = op.shift;
    t.depth = op.depth;
    t.lambda = lambda;
    t.h = h;
    t.nu = nu;
    t.second_modulus = m1;
    t.P = h * nu.transpose();
    t.R = m - lambda * t.P;

    const double res_h = (m * h - lambda * h).norm() / h.norm();
    const double res_nu = (m.transpose() * nu - lambda * nu).norm() / nu.norm();
    if (res_h > 1e-10 * lambda || res_nu > 1e-10 * lambda)
        throw std::runtime_error("spectral_triplet: eigen residual above tolerance");

    Eigen::MatrixXd shifted = t.R - lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted);
    const double smin = svd.singularValues()(n - 1);
    t.cond_resolvent = smin > 0.0 ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
    if (!(smin > 0.0)) throw std::runtime_error("spectral_triplet: R - lambda I is singular");
    t.R_lambda = shifted.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    t.S = t.R_lambda * (Eigen::MatrixXd::Identity(n, n) - t.P);

    // spectrum split: margin of R's spectrum (minus the replaced eigenvalue) to lambda
    Eigen::EigenSolver<Eigen::MatrixXd> rspec(t.R);
    int drop = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(rspec.eigenvalues()(i)) < std::abs(rspec.eigenvalues()(drop))) drop = i;
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        if (i != drop) margin = std::min(margin, std::abs(rspec.eigenvalues()(i) - lambda));
    t.gap_margin = n == 1 ? lambda : margin;
    return t;
}

double SpectralTriplet::nu_of(const DepthFn& f) const {
    if (f.depth > depth)
        throw std::invalid_argument("nu_of: observable deeper than the triplet; rebuild at higher depth");
    return nu.dot(refine(f, depth).values);
}

double pressure(const ShiftPtr& shift, const DepthFn& phi) {
    (void)shift;
    return std::log(spectral_triplet(build_ruelle(phi)).lambda);
}

Eigen::VectorXd extend_nu(const SpectralTriplet& t, const DepthFn& phi, int m) {
    if (m < t.depth) throw std::invalid_argument("extend_nu: target depth below triplet depth");
    if (phi.depth > t.depth) throw std::invalid_argument("extend_nu: potential deeper than triplet");
    Eigen::VectorXd w = t.nu;
    const ShiftPtr& shift = t.shift;
    const WordIndex& phi_idx = shift->words(phi.depth);
    for (int tt = t.depth + 1; tt <= m; ++tt) {
        const WordIndex& fine = shift->words(tt);
        const WordIndex& coarse = shift->words(tt - 1);
        Eigen::VectorXd next(fine.count());
        for (int i = 0; i < fine.count(); ++i) {
            const std::int32_t* u = fine.word(i);
            int tail = coarse.index_of(u + 1);
            int head = phi_idx.position.at(phi_idx.pack(u, phi.depth));
            next(i) = std::exp(phi.values(head)) * w(tail) / t.lambda;
        }
        w = std::move(next);
    }
    return w;
}

DepthFn gibbs_weights(const SpectralTriplet& t, const DepthFn& phi, int m) {
    Eigen::VectorXd nu_m = extend_nu(t, phi, m);
    const WordIndex& fine = t.shift->words(m);
    const WordIndex& base = t.shift->words(t.depth);
    Eigen::VectorXd out(fine.count());
    for (int i = 0; i < fine.count(); ++i)
        out(i) = t.h(base.position.at(base.pack(fine.word(i), t.depth))) * nu_m(i);
    return DepthFn(t.shift, m, std::move(out));
}

namespace {
double deviation(double v) {
    if (!(v > 0.0)) throw std::runtime_error("gibbs sandwich: nonpositive ratio");
    return std::max(v, 1.0 / v);
}
}  // namespace

double gibbs_sandwich_deviation(const SpectralTriplet& t, const DepthFn& phi, int depth) {
    const int m = phi.depth;
    if (depth < std::max(t.depth, m)) throw std::invalid_argument("gibbs sandwich: depth too small");
    const ShiftPtr& shift = t.shift;
    const int full = depth + m - 1;  // word plus the extension the Birkhoff sum needs
    const WordIndex& widx = shift->words(full);
    const WordIndex& phi_idx = shift->words(m);
    const WordIndex& base = shift->words(t.depth);
    Eigen::VectorXd nu_d = extend_nu(t, phi, depth);
    const WordIndex& didx = shift->words(depth);

    const double logl = std::log(t.lambda);
    double worst = 1.0;
    for (int i = 0; i < widx.count(); ++i) {
        const std::int32_t* w = widx.word(i);
        double birkhoff = 0.0;
        for (int k = 0; k < depth; ++k) birkhoff += phi.values(phi_idx.position.at(phi_idx.pack(w + k, m)));
        const double mu = t.h(base.position.at(base.pack(w, t.depth))) * nu_d(didx.position.at(didx.pack(w, depth)));
        worst = std::max(worst, deviation(mu * std::exp(depth * logl - birkhoff)));
    }
    return worst;
}

double gibbs_sandwich_constant(const SpectralTriplet& t, const DepthFn& phi) {
    const int m = phi.depth;
    const int d = t.depth;
    const int t0 = std::max(m, d);
    const ShiftPtr& shift = t.shift;

    // Every ratio at depth >= t0 + d factors as h(prefix) times a value read
    // off a suffix word of length t0 + m - 1; the max over independent
    // prefix/suffix choices is a depth-uniform constant.
    const WordIndex& base = shift->words(d);
    double hmin = t.h.minCoeff(), hmax = t.h.maxCoeff();
    (void)base;

    const int zlen = t0 + m - 1;
    const WordIndex& zidx = shift->words(zlen);
    const WordIndex& phi_idx = shift->words(m);
    const WordIndex& t0idx = shift->words(t0);
    Eigen::VectorXd nu_t0 = extend_nu(t, phi, t0);

    double bmin = 1e300, bmax = -1e300;
    for (int i = 0; i < zidx.count(); ++i) {
        const std::int32_t* z = zidx.word(i);
        double s = 0.0;
        for (int k = 0; k < t0; ++k) s += phi.values(phi_idx.position.at(phi_idx.pack(z + k, m)));
        const double v = std::pow(t.lambda, t0) * nu_t0(t0idx.position.at(t0idx.pack(z, t0))) * std::exp(-s);
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    double c = std::max(deviation(hmin * bmin), deviation(hmax * bmax));
    c = std::max(c, std::max(deviation(hmin * bmax), deviation(hmax * bmin)));

    // short words, below the factorization depth, checked directly
    for (int depth = std::max(t0, 2); depth <= std::min(t0 + d, 6); ++depth)
        c = std::max(c, gibbs_sandwich_deviation(t, phi, depth));
    return c;
}

}  // namespace perturbex
