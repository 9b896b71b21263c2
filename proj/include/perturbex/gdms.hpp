#pragma once

#include <perturbex/thermo.hpp>

#include <array>
#include <optional>
#include <vector>

namespace perturbex {

/// One-dimensional edge map family with polynomial-in-eps coefficients:
/// affine x -> r(e) x + c(e), or Moebius x -> (a(e) x + b(e))/(c(e) x + d(e)).
struct EdgeMap {
    enum class Kind { affine, moebius };
    Kind kind = Kind::affine;
    ScalarJet r{0, 0.0}, c{0, 0.0};
    ScalarJet ma{0, 0.0}, mb{0, 0.0}, mc{0, 0.0}, md{0, 0.0};
};

struct GdmsEdge {
    int from = 0;  // initial vertex: the image lands in its interval
    int to = 0;    // terminal vertex: the domain interval
    EdgeMap map;
};

/// Perturbed graph-directed system on the line with finitely many vertices
/// and edges. The edge shift has A(e, e') = 1 iff t(e) = i(e'); construction
/// validates contraction and the open set condition at eps = 0.
struct GdmsSystem {
    std::vector<std::array<double, 2>> intervals;  // J_v per vertex
    std::vector<GdmsEdge> edges;
    int order = 0;
    double contraction = 0.0;  // sup |T_e'(0, .)|
    ShiftPtr shift;            // states = surviving edges
    std::vector<std::vector<double>> holder_exponents;  // t(l, k) table; empty = finite-E default 1
    double tilde_t0 = 1.0;
    double s_lower = 0.0;  // finiteness threshold, 0 for finite edge sets
    bool infinite_truncation_study = false;

    int states() const { return shift->num_states(); }
    int edge_of_state(int state) const { return shift->original_labels()[static_cast<std::size_t>(state)]; }
    int state_of_edge(int edge) const;

    double map_value(int edge, double eps, double x) const;       // T_e(e, x)
    double map_derivative(int edge, double eps, double x) const;  // d/dx T_e(e, x)
};

GdmsSystem make_gdms(std::vector<std::array<double, 2>> intervals, std::vector<GdmsEdge> edges, int order);

/// eps-jet of T_{w_0}(e) o ... o T_{w_{m-1}}(e)(x0); the anchor defaults to
/// the midpoint of the terminal seed interval. Words use shift-state indices.
ScalarJet coding_jet(const GdmsSystem& sys, const std::vector<int>& word,
                     std::optional<double> anchor = std::nullopt);

/// diam(J) r^m, the reported depth-truncation error of the coding map.
double coding_truncation_bound(const GdmsSystem& sys, int depth);

/// eps-jet of log |d/dx T_{w_0}(e, pi(e, sigma w))| on the cylinder [w].
ScalarJet potential_jet(const GdmsSystem& sys, const std::vector<int>& word);

/// Depth-m potential family of the system: base and coefficients from the
/// per-cylinder jets, remainder evaluator from exact map evaluation.
PotentialFamily gdms_potential_family(const GdmsSystem& sys, int depth,
                                      par::Exec exec = par::Exec::openmp);

/// Root of s -> P(s phi) by bisection to |P| <= 1e-12 (eps = 0 potential).
double bowen_dimension(const GdmsSystem& sys, int depth);

/// Direct root-finding of s(e) for the exact depth-m potential at eps.
double bowen_dimension_at(const GdmsSystem& sys, int depth, double eps);

struct DimensionExpansion {
    std::vector<double> s;                  // s_0..s_n
    double pressure_residual_at_s0 = 0.0;   // |P(s_0 phi)|
    double pressure_slope_at_s0 = 0.0;      // d/ds P(s phi) at s_0, negative
    std::vector<double> sample_eps;         // validation grid
    std::vector<double> direct_roots;       // s(e) by direct root-finding
    std::vector<double> expansion_values;   // sum s_k e^k
    double fitted_constant = 0.0;           // C with |s(e) - sum| <= C e^{n+1}
};

/// s_k solved order by order from sum_k p_k(s(e)) e^k = 0; s-derivatives of
/// the pressure coefficients via a centered stencil (spacing 1e-3, halved
/// once) read through polynomial interpolation. Validated against direct
/// root-finding on a sample grid.
DimensionExpansion dimension_expansion(const GdmsSystem& sys, int depth, int order);

/// Potential family of the combined jet s(e) phi(e) whose Gibbs measure is
/// the one attached to the perturbed dimension.
PotentialFamily gdms_combined_family(const GdmsSystem& sys, int depth, const DimensionExpansion& dim);

/// mu_0(f)..mu_n(f) of the Gibbs measure of s(e) phi(e).
std::vector<double> gdms_gibbs_expansion(const GdmsSystem& sys, int depth, const DimensionExpansion& dim,
                                         const DepthFn& f);

struct ConditionAudit {
    std::vector<double> t_k;  // t_1..t_n
    double tilde_t = 1.0;
    double p_n = 0.0;
    double dimension = 0.0;
    bool pass = false;
};

/// t_k, ~t and p(n) from the exponent bookkeeping displays (D = 1), with the
/// finite-edge-set defaults t(l,k) = 1, ~t_0 = 1, s_lower = 0; checks
/// dim/D > p(n).
ConditionAudit gdms_condition_audit(const GdmsSystem& sys, int order);

/// Largest sampled Hoelder quotient of d/dx ~T_{e,n}(e, .) over a grid of
/// (x, y, eps); the uniform-bound condition is a user declaration, this is
/// its numerical spot check.
double gdms_remainder_holder_spot_check(const GdmsSystem& sys, int order, int samples = 64);

}  // namespace perturbex
