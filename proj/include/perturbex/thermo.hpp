#pragma once

#include <perturbex/perturb.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace perturbex {

/// Potential family phi(e) = phi + phi_1 e + ... + phi_n e^n + ~phi_n(e) e^n
/// on one shift and depth, with an optional exact remainder evaluator and an
/// optional theta schedule for the gap-free layer.
struct PotentialFamily {
    ShiftPtr shift;
    int depth = 1;
    int order = 0;
    DepthFn base;
    std::vector<DepthFn> coeff;                     // phi_1..phi_n
    std::function<DepthFn(double)> remainder;       // ~phi_n(e); empty means 0
    std::function<double(double)> theta_of_eps;     // optional schedule

    DepthFn at(double eps) const;                   // exact phi(e)
    DepthFn tilde_phi(int k, double eps) const;     // (phi(e) - ... - phi_k e^k)/e^k
};

PotentialFamily make_potential_family(DepthFn base, std::vector<DepthFn> coeff,
                                      std::function<DepthFn(double)> remainder = nullptr,
                                      std::function<double(double)> theta_of_eps = nullptr);

/// F_k = k-th coefficient of exp(sum_j phi_j e^j), computed both by the
/// Bell-partition sum and by an exponential jet per cylinder; the two routes
/// must agree to 1e-12.
std::vector<DepthFn> bell_coefficients(const std::vector<DepthFn>& phik);

/// Operator family of the potential family: L_k = L (F_k .), evaluator the
/// Ruelle operator of phi(e). The order-0 remainder identity
/// ~L_0(e, f) = L((e^{~phi_0(e)} - 1) f) is asserted on sample points.
OperatorFamily build_family(const PotentialFamily& pf);

/// p_0..p_n with p_0 = log lambda, via the logarithm jet of the eigenvalue
/// jet; the combinatorial composition sums are cross-checked to 1e-12.
std::vector<double> pressure_coefficients(const ExpansionResult& r);

/// ~p_n(e). Direct mode divides out the expansion of log lambda(e); formula
/// mode evaluates an exact remainder identity of the log composition built
/// from the formula-mode eigenvalue remainder and a Taylor-integral term.
double pressure_remainder(const OperatorFamily& fam, const ExpansionResult& r,
                          const std::vector<double>& p, double eps, RemainderMode mode);

/// mu_0(f)..mu_n(f) with mu_k(f) = sum_i nu_i(h_{k-i} f).
std::vector<double> gibbs_coefficients(const ExpansionResult& r, const DepthFn& f);

/// ~mu_n(e, f). Direct mode uses mu(e, f) = nu(e, h(e) f) from the true
/// eigendata; formula mode assembles the remainder identity from
/// formula-mode ~kappa/~g plus the scalar series remainders.
double gibbs_remainder(const OperatorFamily& fam, const ExpansionResult& r,
                       const std::vector<double>& mu, const DepthFn& f, double eps, RemainderMode mode);

/// |p_1 - mu_0(phi_1)|, the first-derivative-of-pressure identity; both
/// sides computed independently.
double pressure_gibbs_consistency(const ExpansionResult& r, const std::vector<double>& p,
                                  const PotentialFamily& pf);

/// Operator-norm bracketing on the depth-m representation with the composite
/// norm ||f||_C + [f]_theta: column-sum style upper bounds plus randomized
/// lower bounds (unit-ball samples with deterministic per-sample seeding).
struct NormBracket {
    double lower = 0.0;
    double upper = 0.0;
};

struct NormOptions {
    int samples = 1000;
    std::uint64_t seed = 0x5eed;
    par::Exec exec = par::Exec::openmp;
};

NormBracket op_norm_ftheta(const ShiftPtr& shift, int depth, const Eigen::MatrixXd& m, double theta,
                           const NormOptions& opt = {});
NormBracket op_norm_ftheta_to_sup(const ShiftPtr& shift, int depth, const Eigen::MatrixXd& m, double theta,
                                  const NormOptions& opt = {});

/// Trend predicates for grid sequences (grid in decreasing eps order is not
/// required; points are sorted internally). When per-point noise floors are
/// supplied, a sequence everywhere below its floors counts as vanished at
/// machine scale.
bool sequence_vanishing(const std::vector<double>& grid, const std::vector<double>& vals,
                        double slope_floor = 0.5, double shrink_factor = 0.5, double zero_floor = 1e-12,
                        const std::vector<double>& noise_floors = {});
bool sequence_bounded(const std::vector<double>& grid, const std::vector<double>& vals);

/// Numerical check of the three convergence theorems of the thermodynamic
/// layer: each hypothesis evaluated on the finite representation and each
/// conclusion sampled empirically over the grid.
struct TheoremVerdict {
    std::string name;
    bool hypothesis_holds = false;
    bool conclusion_holds = false;
    std::vector<std::pair<std::string, double>> details;
};

struct CriteriaOptions {
    double theta = 0.5;     // fixed-theta norms for the unscheduled checks
    NormOptions norms{};    // bracketing parameters
    bool want_schedule_theorem = true;
};

std::vector<TheoremVerdict> theorem_criteria_check(const PotentialFamily& pf, const OperatorFamily& fam,
                                                   const ExpansionResult& r, const std::vector<double>& grid,
                                                   const DepthFn& f, const CriteriaOptions& opt = {});

}  // namespace perturbex
