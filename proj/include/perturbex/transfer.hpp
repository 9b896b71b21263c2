#pragma once

#include <perturbex/shift.hpp>

#include <Eigen/Dense>

namespace perturbex {

/// Ruelle operator of a depth-m potential, materialized on the admissible
/// m-word basis: (Lf)(w) = sum_u mat(w,u) f(u), where mat(w,u) = e^{phi(u)}
/// exactly when u routes into w (the length-(m-1) suffix of u equals the
/// length-(m-1) prefix of w; for m = 1, A(u, w) = 1).
struct TransferOp {
    ShiftPtr shift;
    int depth = 0;
    Eigen::MatrixXd mat;
};

/// Builds the operator at depth max(phi.depth, depth_override). A larger
/// override refines phi so the same operator can act on deeper observables.
TransferOp build_ruelle(const DepthFn& phi, int depth_override = 0);

/// Exact action on functions of depth <= operator depth.
DepthFn apply(const TransferOp& op, const DepthFn& f);
DepthFn operator*(const TransferOp& op, const DepthFn& f);

/// Perron data of a nonnegative irreducible transfer matrix plus the
/// projector P = h (x) nu, R = L - lambda P, the resolvent (R - lambda I)^{-1},
/// and the reduced resolvent S = R_lambda (I - P). Normalized nu(1) = 1,
/// nu(h) = 1.
struct SpectralTriplet {
    ShiftPtr shift;
    int depth = 0;
    double lambda = 0.0;
    Eigen::VectorXd h;
    Eigen::VectorXd nu;
    Eigen::MatrixXd P;
    Eigen::MatrixXd R;
    Eigen::MatrixXd R_lambda;
    Eigen::MatrixXd S;
    double second_modulus = 0.0;  // second-largest eigenvalue modulus of L
    double gap_margin = 0.0;      // min |mu - lambda| over spectrum of R minus the replaced eigenvalue
    double cond_resolvent = 0.0;  // condition number of (R - lambda I)

    double nu_of(const DepthFn& f) const;
    double nu_dot(const Eigen::VectorXd& values) const { return nu.dot(values); }
};

SpectralTriplet spectral_triplet(const TransferOp& op);

/// Raw Perron data of a matrix with a real positive dominant eigenvalue:
/// lambda, positive right and left eigenvectors (left scaled to sum 1, right
/// left at unit norm). Throws when no such eigenvalue stands out.
struct PerronPair {
    double lambda = 0.0;
    Eigen::VectorXd right;
    Eigen::VectorXd left;
    double second_modulus = 0.0;
};
PerronPair perron_pair(const Eigen::MatrixXd& m, int period_hint = 1);

/// Perron root by power iteration on the positively shifted matrix; the
/// cross-check route next to the dense eigensolver.
double perron_root_power_iteration(const Eigen::MatrixXd& m, double tol = 1e-13, int max_iter = 100000);

/// log of the Perron eigenvalue of the Ruelle operator of phi.
double pressure(const ShiftPtr& shift, const DepthFn& phi);

/// Eigen-measure cylinder weights at depth m >= triplet depth, extended by
/// nu([u]) = e^{phi(u)} nu([sigma u]) / lambda.
Eigen::VectorXd extend_nu(const SpectralTriplet& t, const DepthFn& phi, int m);

/// Gibbs cylinder masses mu([w]) = h(w) nu([w]) at depth m >= triplet depth.
DepthFn gibbs_weights(const SpectralTriplet& t, const DepthFn& phi, int m);

/// Depth-uniform Gibbs sandwich constant: a c >= 1 with
/// c^{-1} <= mu([w]) / exp(-|w| log lambda + S_{|w|} phi) <= c for all words of
/// every depth, assembled from small-depth triplet data.
double gibbs_sandwich_constant(const SpectralTriplet& t, const DepthFn& phi);

/// Largest deviation max(ratio, 1/ratio) of the sandwich ratio over all words
/// of the given depth (extensions handled for potentials deeper than 1).
double gibbs_sandwich_deviation(const SpectralTriplet& t, const DepthFn& phi, int depth);

}  // namespace perturbex
