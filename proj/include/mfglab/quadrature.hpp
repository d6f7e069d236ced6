#pragma once

#include "mfglab/field.hpp"

namespace mfglab {

enum class Region { Omega, QT };

/// Sobolev flavors used by the stability estimates. H10_QT is value plus
/// spatial gradient in L2(Q_T); H21_QT adds the time derivative and all
/// second spatial derivatives.
enum class NormKind { L2_Omega, H1_Omega, L2_QT, H10_QT, H21_QT };

/// Composite trapezoid quadrature; exact for multilinear integrands.
double integrate(const ScalarField& f, Region region);
/// Integral of f(., t_k) over Omega for a space-time field.
double integrate_time_slice(const ScalarField& f, int level);

/// Derivatives with no boundary assumption: centered in the interior,
/// second-order one-sided at the ends. These are the stencils behind every
/// norm so that norm identities hold exactly as computed.
ScalarField one_sided_axis_derivative(const ScalarField& f, int axis);
ScalarField one_sided_second_derivative(const ScalarField& f, int axis_i, int axis_j);
ScalarField one_sided_time_derivative(const ScalarField& f);

double norm(const ScalarField& f, NormKind kind);

/// sqrt(sum_sp w_sp a_sp b_sp) building block shared by norms and penalties.
double weighted_l2_omega_sq(std::span<const double> values, const SpaceTimeGrid& g);

} // namespace mfglab
