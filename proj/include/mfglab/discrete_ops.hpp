#pragma once

#include <vector>

#include "mfglab/field.hpp"

namespace mfglab {

/// Boundary handling of the PDE operators. Neumann0 realizes d_n u = 0 on
/// all faces by even ghost reflection, Dirichlet0 assumes u = 0 on the
/// faces and reflects oddly. Corner ghosts reflect one axis at a time.
enum class BoundaryCondition { Neumann0, Dirichlet0 };

enum class FluxScheme { centered, upwind };

/// Centered first derivative along one axis (slice-wise on space-time
/// fields). Under Neumann0 the normal component on each face is exactly 0.
ScalarField axis_derivative(const ScalarField& u, int axis, BoundaryCondition bc);
std::vector<ScalarField> gradient(const ScalarField& u, BoundaryCondition bc);

/// Standard (2n+1)-point Laplacian with ghost closure per bc.
ScalarField laplacian(const ScalarField& u, BoundaryCondition bc);

/// u_{x_i x_j}: the 1-D second difference for i = j, the 4-point cross
/// stencil (per-axis ghost extension applied sequentially) for i != j.
ScalarField mixed_second(const ScalarField& u, int axis_i, int axis_j,
                         BoundaryCondition bc);

/// Centered in interior time levels, second-order one-sided at t = 0, T.
ScalarField time_derivative(const ScalarField& u);

/// Conservative realization of div(kappa2 * m * grad v): signed face fluxes
/// divided by the dual-cell width, with kappa2 averaged onto faces and m
/// taken centered or upwinded. Fluxes through the domain faces are exactly
/// zero, so the weighted node sum of the output telescopes to zero.
ScalarField divergence_of_flux(const ScalarField& m, const ScalarField& v,
                               const ScalarField& kappa2, FluxScheme scheme);

/// Largest face speed |kappa2 * dv/dn| over all faces; CFL numerator.
double max_face_speed(const ScalarField& v, const ScalarField& kappa2);

// Exact transposes used for discrete objective gradients. Each accumulates
// into `out` the transpose of the matching linear map applied to `s`.
void axis_derivative_transpose_add(const ScalarField& s, ScalarField& out, int axis,
                                   BoundaryCondition bc);
void laplacian_transpose_add(const ScalarField& s, ScalarField& out, BoundaryCondition bc);
void time_derivative_transpose_add(const ScalarField& s, ScalarField& out);
/// Transpose in m of m -> div(kappa2 * m_face * grad v), centered faces.
void flux_divergence_m_transpose_add(const ScalarField& v, const ScalarField& kappa2,
                                     const ScalarField& s, ScalarField& out);
/// Transpose in v of v -> div(kappa2 * m_face * grad v), centered faces.
void flux_divergence_v_transpose_add(const ScalarField& m, const ScalarField& kappa2,
                                     const ScalarField& s, ScalarField& out);

} // namespace mfglab
