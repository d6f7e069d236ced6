#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfglab/cosine_field.hpp"
#include "mfglab/discrete_ops.hpp"
#include "mfglab/field.hpp"

namespace mfglab {

/// Parameters of the time weight phi(t) = exp(2 lambda (t+a)^nu).
///
/// The raw weight overflows double precision already for modest lambda and
/// nu, so it is only ever handled through its logarithm or through the
/// normalized form phi_tilde(t) = exp(2 lambda ((t+a)^nu - (T+a)^nu)),
/// which increases to phi_tilde(T) = 1. sigma in {1,2} selects whether the
/// weighted integrals carry phi or phi^2; the two theorems print different
/// powers and phi^2 is phi with lambda doubled.
struct CarlemanWeight {
    double lambda = 2.0;
    double nu = 3.0;
    double a = 2.0;
    double T = 1.0;
    int sigma = 1;
};

/// log phi(t) = 2 lambda (t+a)^nu. t must lie in [0, T].
double weight_log_value(const CarlemanWeight& w, double t);
/// phi_tilde(t)^sigma in (0, 1], evaluated through the log.
double normalized_weight(const CarlemanWeight& w, double t);

/// Checks max |d_n u| (Neumann0) or max |u| (Dirichlet0) over all face
/// nodes of every time slice against 10 h^2 max(1, |u|_inf); the normal
/// derivative is formed with one-sided stencils so the check is not
/// trivially zero. Throws with the worst node spelled out.
void require_bc_compliance(const ScalarField& u, BoundaryCondition bc,
                           double tol_factor = 10.0);

/// Two sides of the identity  int (Lap u)^2 = sum_ij int u_{x_i x_j}^2 on a
/// prism, valid under either zero Neumann or zero Dirichlet data.
struct IdentityReport {
    double lhs = 0.0;          // int (Lap u)^2
    double rhs = 0.0;          // sum_ij int u_{x_i x_j}^2
    double relative_gap = 0.0; // |lhs-rhs| / max(lhs, floor)
    double h = 0.0;            // max spacing, for convergence studies
};

IdentityReport verify_identity(const ScalarField& u, BoundaryCondition bc);

enum class EstimateKind { forward, backward };
enum class EstimateVariant { laplacian_form, mixed_form };

/// Term-by-term decomposition of one Carleman estimate, all integrals in
/// normalized units (common factor exp(log_common_factor) divided out).
///
/// forward (kind=forward):
///   lhs       = int (u_t + beta Lap u)^2 phi^s
///   principal = int (u_t^2/4 + beta^2 P) phi^s, P per variant
///   gradient  = lambda nu int |grad u|^2 phi^s
///   zero      = lambda^2 nu^2 int u^2 phi^s
///   boundary_T= phi^s(T) int [ |grad u|^2 + lambda nu (T+a)^nu u^2 ](x,T) dx
///   margin(C) = lhs - principal - C (gradient + zero) + boundary_T
/// backward (kind=backward):
///   lhs       = int (u_t - beta Lap u)^2 phi^s
///   gradient  = sqrt(nu) beta int |grad u|^2 phi^s
///   zero      = lambda nu^2 int u^2 phi^s
///   boundary_T= lambda nu (T+a)^(nu-1) phi^s(T) int u^2(x,T) dx
///   boundary_0= phi^s(0) int [ |grad u|^2 + sqrt(nu) u^2 ](x,0) dx
///   margin(C) = lhs - C (gradient + zero) + boundary_T + boundary_0
struct EstimateReport {
    EstimateKind kind = EstimateKind::forward;
    EstimateVariant variant = EstimateVariant::laplacian_form;
    double lambda = 0.0, nu = 0.0, a = 0.0;
    int sigma = 1;
    double log_common_factor = 0.0; // sigma * 2 lambda (T+a)^nu

    double lhs = 0.0;
    double principal = 0.0;
    double gradient = 0.0;
    double zero_order = 0.0;
    double boundary_T = 0.0;
    double boundary_0 = 0.0;

    double margin(double C) const;
    /// Largest C with margin(C) >= 0 (infinity when the scaled terms vanish).
    double max_feasible_constant() const;
    std::string which_name() const;
};

EstimateReport forward_estimate_terms(const ScalarField& u, const CarlemanWeight& w,
                                      double beta, EstimateVariant variant);
EstimateReport backward_estimate_terms(const ScalarField& u, const CarlemanWeight& w,
                                       double beta);

/// Empirical stand-in for the paper's existential constants: the largest C
/// such that margin(C) >= 0 across a family of compliant fields and all
/// lambda >= lambda_star on the grid, located by bisection. The value is an
/// artifact of the family and the resolution, not a property of the PDE.
struct CalibrationResult {
    double constant = 0.0;
    double lambda_star = 0.0;
    bool degenerate = false; // family carried no scaled terms (e.g. all zero)
    int binding_member = -1;
    double binding_lambda = 0.0;
    std::vector<EstimateReport> reports; // member-major, lambda within member
    std::vector<int> report_member;
    std::vector<double> report_lambda;
};

CalibrationResult calibrate_constant(EstimateKind kind, EstimateVariant variant,
                                     std::span<const ScalarField> family,
                                     std::span<const double> lambda_grid, double nu,
                                     double a, int sigma, double beta);

} // namespace mfglab
