#pragma once

#include <perturbex/jet.hpp>
#include <perturbex/parallel.hpp>
#include <perturbex/transfer.hpp>

#include <functional>
#include <string>
#include <vector>

namespace perturbex {

/// Perturbed operator family L(e) = L + L_1 e + ... + L_n e^n + ~L_n(e) e^n,
/// given by coefficient matrices plus an exact evaluator e -> L(e).
struct OperatorFamily {
    SpectralTriplet base;
    Eigen::MatrixXd L0;
    std::vector<Eigen::MatrixXd> coeff;  // L_1..L_n
    std::function<Eigen::MatrixXd(double)> evaluator;
    int order = 0;

    const Eigen::MatrixXd& L(int j) const;  // j >= 1
    /// ~L_k(e) = (L(e) - L - L_1 e - ... - L_k e^k) / e^k
    Eigen::MatrixXd tilde_L(int k, double eps) const;
};

/// Validates shapes and evaluator(0) == L before use.
OperatorFamily make_operator_family(const TransferOp& op, std::vector<Eigen::MatrixXd> coeff,
                                    std::function<Eigen::MatrixXd(double)> evaluator);

/// Expansion coefficients: index 0 holds the unperturbed data. Functionals
/// are materialized as weight vectors on the working depth.
struct ExpansionResult {
    std::vector<double> lambda_k;
    std::vector<Eigen::VectorXd> kappa_k;
    std::vector<Eigen::VectorXd> g_k;
    std::vector<Eigen::VectorXd> nu_k;
    std::vector<Eigen::VectorXd> h_k;
    std::vector<double> c_k;  // coefficients of 1/nu(h(e,.))

    double kappa_of(int k, const DepthFn& f) const;
    double nu_of(int k, const DepthFn& f) const;
};

/// Dual recursion: lambda_k = sum kappa_{k-j}(L_j h),
/// kappa_k = ((lambda_j I - L_j) R_lambda)^T-chains applied to nu. Both the
/// inductive recursion and the closed composition sums are computed and must
/// agree to 1e-11 relative.
ExpansionResult expand_eigen_dual(const OperatorFamily& fam);

/// Eigenfunction recursion: g_k = sum S(lambda_j I - L_j) g_{k-j} with the
/// second lambda route; asserts agreement with the dual route to 1e-11.
void expand_eigenfunction(const OperatorFamily& fam, ExpansionResult& r);

/// nu_k, h_k, c_k from the reciprocal/product series route,
/// cross-checked against the combinatorial signed sums.
void expand_nu_h(const OperatorFamily& fam, ExpansionResult& r);

ExpansionResult expand_all(const OperatorFamily& fam);

/// Exact Perron data of L(e) with the normalizations nu(e,1) = 1 and
/// nu(e,h(e)) = 1; kappa(e) = nu(e,.)/nu(e,h), g(e) = h(e)/nu(h(e)).
struct PerturbedEigendata {
    double lambda = 0.0;
    Eigen::VectorXd h;
    Eigen::VectorXd nu;
    Eigen::VectorXd kappa;
    Eigen::VectorXd g;
    double nu_eps_of_h0 = 0.0;  // nu(e, h)
    double nu0_of_heps = 0.0;   // nu(h(e,.))
};

PerturbedEigendata eigen_at(const OperatorFamily& fam, double eps);

enum class RemainderMode { direct, formula };

/// ~lambda_k(e) for k = 0..order. Direct mode divides out the expansion;
/// formula mode evaluates the inductive remainder displays with the true
/// perturbed eigendata. The two agree identically up to roundoff.
std::vector<double> remainder_lambda(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                     RemainderMode mode);

std::vector<double> remainder_kappa(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                    const DepthFn& f, RemainderMode mode);

std::vector<Eigen::VectorXd> remainder_g(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                         RemainderMode mode);

/// Second representation of ~lambda_k(e) through the eigenfunction route,
/// kept for low orders as an extra identity check.
std::vector<double> remainder_lambda_eigenfunction_route(const OperatorFamily& fam, const ExpansionResult& r,
                                                         double eps, int max_order);

/// Largest relative gap between formula-mode and direct-mode remainders over
/// all orders; throws std::logic_error above tol (an implementation defect,
/// not an input problem).
double verify_remainder_identities(const OperatorFamily& fam, const ExpansionResult& r, double eps,
                                   const DepthFn& f, double tol = 1e-9);

/// Direct transcription of the order-0,1,2 closed forms.
struct ClosedForms {
    double lambda1 = 0.0, lambda2 = 0.0;
    Eigen::VectorXd kappa1, kappa2, g1, g2;
};
ClosedForms closed_forms_n012(const OperatorFamily& fam);

struct DiagnosticsRow {
    std::string quantity;
    int order = 0;
    std::vector<double> magnitudes;  // one per grid point
    double slope = 0.0;              // log-log fit over the last three points
    std::string verdict;             // "vanishing" or "stagnant"
};

struct DiagnosticsReport {
    std::vector<double> grid;
    std::vector<DiagnosticsRow> rows;
};

struct DiagnosticsOptions {
    double slope_floor = 0.5;
    double shrink_factor = 0.5;
    double zero_floor = 1e-12;
    /// Propagation-floor constant: direct differences divided by eps^k carry
    /// machine noise of size noise_constant * eps_mach * scale / eps^k; grid
    /// points below that floor hold no signal and are excluded from verdicts.
    double noise_constant = 64.0;
    par::Exec exec = par::Exec::openmp;
};

/// Remainder magnitudes of ~lambda_k, ~kappa_k(.,f), ||~g_k||_C over a
/// geometric grid (>= 4 points) with fitted slopes and verdicts.
DiagnosticsReport convergence_diagnostics(const OperatorFamily& fam, const ExpansionResult& r,
                                          const std::vector<double>& grid, const DepthFn& f,
                                          const DiagnosticsOptions& opt = {});

/// x / e^k evaluated in log space.
double divide_eps_pow(double x, double eps, int k);

}  // namespace perturbex
