#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mfglab/discrete_ops.hpp"
#include "mfglab/field.hpp"

namespace mfglab {

/// Interaction F(x,t,y,z) = g0(x,t) + c1 tanh(y/s1) + c2 tanh(z/s2), where
/// y is the kernel average of m and z is m itself. The tanh coupling keeps
/// |F_y| <= |c1|/s1 and |F_z| <= |c2|/s2 globally, so the boundedness
/// hypothesis on F holds with an explicit constant. g0 exists only to carry
/// manufactured sources.
struct InteractionSpec {
    double c1 = 0.0, c2 = 0.0;
    double s1 = 1.0, s2 = 1.0;
    std::optional<ScalarField> g0;

    double lipschitz_bound() const; // M1 contributor: max(|c1|/s1, |c2|/s2)
    double couple(double y, double z) const;
    double dF_dy(double y) const;
    double dF_dz(double z) const;
};

/// Gaussian interaction kernel K(x,y) = k0 exp(-|x-y|^2 / (2 sigma_k^2)).
struct KernelSpec {
    double k0 = 0.0;
    double sigma_k = 1.0;

    double sup_bound() const; // M2 contributor: |k0|
};

/// A-priori bound records of the stability theorem: v is measured against
/// B3(M3) = {sup|u|, sup|grad u|, sup|lap u| <= M3} and m against
/// B4(M4) = {sup|u|, sup|grad u| <= M4}.
struct AprioriBounds {
    double M1 = 1.0, M2 = 1.0, M3 = 1.0, M4 = 1.0;
    double M() const;
};

struct MfgProblem {
    GridPtr grid;
    double beta = 1.0;
    ScalarField kappa;  // spatial kappa(x); operators use kappa^2
    InteractionSpec interaction;
    KernelSpec kernel;
    ScalarField v_T; // terminal payoff
    ScalarField m_0; // initial density, nonnegative with unit mass

    MfgProblem(GridPtr grid_, double beta_, ScalarField kappa_, InteractionSpec inter,
               KernelSpec kern, ScalarField v_T_, ScalarField m_0_);

    const ScalarField& kappa2() const { return kappa2_; }
    /// Discrete sup|kappa| + sup|grad kappa| (C^1 norm estimate, M2 record).
    double kappa_c1_norm() const { return kappa_c1_; }
    /// out(x) = int K(x,y) m(y) dy by direct quadrature over the slice.
    void apply_kernel(std::span<const double> m_slice, std::span<double> out) const;

private:
    ScalarField kappa2_;
    double kappa_c1_ = 0.0;
    std::vector<double> node_coords_;        // space_size x dim
    std::vector<double> kernel_matrix_;      // cached K(x,y) w(y), small grids only
};

enum class TimeScheme {
    imex_euler, // implicit diffusion, explicit nonlinearity; one solve per step
    imex_heun   // trapezoidal corrector on the explicit terms, second order
};

struct SolverOptions {
    TimeScheme scheme = TimeScheme::imex_euler;
    FluxScheme flux = FluxScheme::upwind;
    double picard_damping = 0.5;
    double picard_tol = 1e-8;
    int picard_max_iter = 200;
    double cg_tol_bellman = 1e-10;
    double cg_tol_fp = 1e-13;
    bool allow_cfl_violation = false;
};

struct SolutionPair {
    ScalarField v, m;
    int picard_iterations = 0;
    double final_update_norm = 0.0;
    std::pair<double, double> residual_norms{0.0, 0.0};
    std::vector<double> update_trace;
};

/// Bellman equation v_t + beta lap v + kappa^2 |grad v|^2/2 + F = 0 marched
/// in reversed time from v(.,T) = v_T with m given. Diffusion is implicit
/// (conjugate gradients on the symmetrized Neumann system), the Hamiltonian
/// and interaction explicit.
ScalarField solve_bellman_backward(const ScalarField& m, const MfgProblem& problem,
                                   const SolverOptions& opts = {});

/// Fokker-Planck equation m_t - beta lap m + div(kappa^2 m grad v) = 0 from
/// m(.,0) = m_0 with v given; conservative flux form, so the discrete mass
/// is constant up to the linear-solver tolerance. Refuses steps violating
/// dt max|kappa^2 dv/dn| / h > 1 unless allow_cfl_violation is set.
ScalarField solve_fokker_planck_forward(const ScalarField& v, const MfgProblem& problem,
                                        const SolverOptions& opts = {});

/// Damped Picard alternation of the two half-solves; stops when the
/// undamped sup-norm update of m drops below picard_tol. Throws with the
/// iteration trace when the cap is reached.
SolutionPair picard_solve(const MfgProblem& problem, const SolverOptions& opts = {});

/// L2(Q_T) norms of the two discrete equation residuals, centered stencils.
std::pair<double, double> system_residual(const ScalarField& v, const ScalarField& m,
                                          const MfgProblem& problem);

struct BoundsReport {
    double sup_v = 0.0, sup_grad_v = 0.0, sup_lap_v = 0.0;
    double sup_m = 0.0, sup_grad_m = 0.0;
    bool v_in_B3 = false, m_in_B4 = false;
};

BoundsReport check_bounds(const SolutionPair& pair, const AprioriBounds& bounds);

/// Scales a nonnegative spatial field to unit mass; errors on nonpositive mass.
void normalize_mass(ScalarField& density);

} // namespace mfglab
