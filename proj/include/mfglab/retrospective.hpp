#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfglab/carleman.hpp"
#include "mfglab/mfg.hpp"

namespace mfglab {

/// The three measured functions of the retrospective problem: terminal
/// payoff, initial density and the overdetermining terminal density.
struct RetrospectiveData {
    ScalarField v_T, m_0, m_T;
    bool noisy = false;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// Assembles exact data from a forward solution (m_T is its terminal slice).
RetrospectiveData exact_data(const MfgProblem& problem, const SolutionPair& truth);

/// Adds independent Neumann-compatible cosine-series noise to each datum,
/// rescaled so each contributes exactly delta to the data-side norm
/// combination |v_T|_H1 + |m_T|_L2 + |m_0|_H1. delta = 0 returns the input.
RetrospectiveData perturb_data(const RetrospectiveData& exact, double delta,
                               std::uint64_t seed);

/// Carleman-weighted least-squares objective over the pair (v, m):
///   J = int_QT R1^2 phi_t + int_QT R2^2 phi_t
///     + alpha_vT |v(.,T)-v_T|_H1^2 + alpha_m0 |m(.,0)-m_0|_H1^2
///     + alpha_mT |m(.,T)-m_T|_L2^2,
/// R1, R2 the centered discrete residuals of the two equations and phi_t the
/// normalized weight. Data enter by penalty, so the unknowns stay
/// unconstrained space-time fields.
struct WeightedObjective {
    CarlemanWeight weight{2.0, 3.0, 2.0, 1.0, 1};
    double alpha_vT = 1e3;
    double alpha_m0 = 1e3;
    double alpha_mT = 1e3;
};

/// J and its exact discrete gradient (transpose-stencil assembly, not a
/// discretized continuum adjoint). grad fields are overwritten.
double objective_and_gradient(const ScalarField& v, const ScalarField& m,
                              const RetrospectiveData& data, const WeightedObjective& obj,
                              const MfgProblem& problem, ScalarField& grad_v,
                              ScalarField& grad_m);
double objective_value(const ScalarField& v, const ScalarField& m,
                       const RetrospectiveData& data, const WeightedObjective& obj,
                       const MfgProblem& problem);

enum class ReconStatus { converged, iteration_cap, line_search_failure };

struct DescentOptions {
    int max_iter = 2000;
    double grad_tol = 1e-8; // on the euclidean norm of the stacked gradient
    int lbfgs_memory = 10;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-20;
};

/// Left-hand sides of the stability estimates for a difference pair
/// (v_hat - v, m_hat - m).
struct ErrorBlock {
    double v_dt_l2 = 0.0;     // |d_t v~|_L2(QT)
    double v_lap_l2 = 0.0;    // |lap v~|_L2(QT)
    double v_h10 = 0.0;       // |v~|_H10(QT)
    double v_block = 0.0;     // sum of the three above
    double v_h21 = 0.0;       // |v~|_H21(QT), prism strengthening
    double m_h10 = 0.0;       // |m~|_H10(QT)
};

ErrorBlock error_block(const ScalarField& v_hat, const ScalarField& m_hat,
                       const ScalarField& v_ref, const ScalarField& m_ref);

struct ReconstructionResult {
    ScalarField v_hat, m_hat;
    std::vector<double> objective_trace; // accepted iterates, non-increasing
    double gradient_norm = 0.0;
    int iterations = 0;
    ReconStatus status = ReconStatus::converged;
    std::string message;
    std::optional<ErrorBlock> errors; // vs truth when truth is known
};

/// First-order descent (l-bfgs directions, Armijo backtracking) on J from
/// the interpolant init v = v_T, m = (1-t/T) m_0 + (t/T) m_T, or from the
/// given custom initial fields.
ReconstructionResult reconstruct(const RetrospectiveData& data, const WeightedObjective& obj,
                                 const MfgProblem& problem, const DescentOptions& dopts = {},
                                 const ScalarField* v_init = nullptr,
                                 const ScalarField* m_init = nullptr,
                                 const SolutionPair* truth = nullptr);

struct SweepCell {
    double delta = 0.0;
    std::uint64_t seed = 0;
    double data_norm = 0.0; // |v~_T|_H1 + |m~_T|_L2 + |m~_0|_H1, recomputed
    ErrorBlock errors;
    ReconStatus status = ReconStatus::converged;
    int iterations = 0;
    double final_objective = 0.0;
    double gradient_norm = 0.0;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // rms of the log-log fit residuals
    int points = 0;        // distinct deltas entering the fit
};

struct StabilitySweep {
    std::vector<SweepCell> cells; // (delta, seed) order
    FitResult fit_m_h10;
    FitResult fit_v_block;
    FitResult fit_v_h21;
    int excluded = 0;
    BoundsReport truth_bounds;
    double measured_M = 0.0;
    std::pair<double, double> truth_residuals{0.0, 0.0};
};

/// The noise-versus-error experiment behind the Lipschitz stability claim:
/// perturb, reconstruct, tabulate error norms against the data-side norm,
/// fit log-log slopes with per-delta seed averaging. Non-converged cells
/// are kept in the table, counted and excluded from the fits. Cells run
/// concurrently; results merge in (delta, seed) order.
StabilitySweep stability_sweep(const MfgProblem& problem, const SolutionPair& truth,
                               std::span<const double> delta_grid, int seeds_per_delta,
                               const WeightedObjective& obj, const DescentOptions& dopts,
                               std::uint64_t base_seed, int workers = 1);

struct UniquenessReport {
    int n_inits = 0;
    int non_converged = 0;
    double max_pairwise_h10 = 0.0; // |v_i-v_j|_H10 + |m_i-m_j|_H10, worst pair
    double solution_norm = 0.0;    // |v_0|_H10 + |m_0|_H10 reference scale
    double relative = 0.0;
    std::vector<double> final_objectives;
};

/// Reconstructs from several random Neumann-compatible initializations with
/// identical exact data; clustering of the results is the experimental
/// stand-in for the uniqueness conclusion.
UniquenessReport uniqueness_check(const MfgProblem& problem, const SolutionPair& truth,
                                  const WeightedObjective& obj, int n_inits,
                                  const DescentOptions& dopts, std::uint64_t seed,
                                  int workers = 1);

} // namespace mfglab
