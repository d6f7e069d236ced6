#pragma once

#include <cstdint>
#include <vector>

#include "mfglab/field.hpp"

namespace mfglab {

/// Closure used for stencil rows at the two ends of a grid line.
///
/// neumann_even and dirichlet_odd extend the line by ghost reflection
/// (even: u[-1] = u[1]; odd: u[-1] = -u[1]) before differencing, so a
/// compliant field keeps its boundary structure exactly. one_sided makes no
/// boundary assumption and closes with second-order one-sided stencils;
/// norms and compliance checks use it.
enum class GhostRule { neumann_even, dirichlet_odd, one_sided };

/// Sparse banded linear operator on a 1-D line of nodes.
///
/// Every differential operator in the project is assembled from these, and
/// apply_transpose_add applies the exact matrix transpose of the same rows.
/// That makes discrete objective gradients exact by construction instead of
/// by a separately derived adjoint stencil.
class LineOp {
public:
    static LineOp first_derivative(int n, double h, GhostRule rule);
    static LineOp second_derivative(int n, double h, GhostRule rule);

    int n() const { return n_; }

    /// out[i] = sum_j coef(i,j) * in[j], strided access.
    void apply(const double* in, std::int64_t in_stride, double* out,
               std::int64_t out_stride) const;
    /// out[j] += sum_i coef(i,j) * in[i], strided access.
    void apply_transpose_add(const double* in, std::int64_t in_stride, double* out,
                             std::int64_t out_stride) const;

private:
    LineOp(int n) : n_(n), row_ptr_(static_cast<std::size_t>(n) + 1, 0) {}
    void push_row(std::initializer_list<std::pair<int, double>> entries);

    int n_;
    int next_row_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> coef_;
};

/// Apply a line operator along spatial axis `axis` of every time slice.
void apply_along_axis(const LineOp& op, const ScalarField& in, ScalarField& out, int axis);
void apply_transpose_along_axis_add(const LineOp& op, const ScalarField& in,
                                    ScalarField& out, int axis);

/// Apply a line operator along the time axis of a space-time field.
void apply_along_time(const LineOp& op, const ScalarField& in, ScalarField& out);
void apply_transpose_along_time_add(const LineOp& op, const ScalarField& in,
                                    ScalarField& out);

} // namespace mfglab
