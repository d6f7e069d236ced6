#include "mfglab/line_op.hpp"

#include <stdexcept>

namespace mfglab {

void LineOp::push_row(std::initializer_list<std::pair<int, double>> entries) {
    for (auto [c, v] : entries) {
        col_.push_back(c);
        coef_.push_back(v);
    }
    ++next_row_;
    row_ptr_[static_cast<std::size_t>(next_row_)] = static_cast<int>(col_.size());
}

namespace {
void require_line(int n) {
    if (n < 3) throw std::invalid_argument("LineOp: need at least 3 nodes per line");
}
} // namespace

LineOp LineOp::first_derivative(int n, double h, GhostRule rule) {
    require_line(n);
    LineOp op(n);
    const double c = 1.0 / (2.0 * h);
    switch (rule) {
    case GhostRule::neumann_even:
        op.push_row({}); // (u[1]-u[1])/2h = 0 exactly on the face
        break;
    case GhostRule::dirichlet_odd:
        op.push_row({{1, 2.0 * c}});
        break;
    case GhostRule::one_sided:
        op.push_row({{0, -3.0 * c}, {1, 4.0 * c}, {2, -1.0 * c}});
        break;
    }
    for (int k = 1; k < n - 1; ++k) op.push_row({{k - 1, -c}, {k + 1, c}});
    switch (rule) {
    case GhostRule::neumann_even:
        op.push_row({});
        break;
    case GhostRule::dirichlet_odd:
        op.push_row({{n - 2, -2.0 * c}});
        break;
    case GhostRule::one_sided:
        op.push_row({{n - 3, 1.0 * c}, {n - 2, -4.0 * c}, {n - 1, 3.0 * c}});
        break;
    }
    return op;
}

LineOp LineOp::second_derivative(int n, double h, GhostRule rule) {
    require_line(n);
    LineOp op(n);
    const double c = 1.0 / (h * h);
    switch (rule) {
    case GhostRule::neumann_even:
        op.push_row({{0, -2.0 * c}, {1, 2.0 * c}});
        break;
    case GhostRule::dirichlet_odd:
        op.push_row({{0, -2.0 * c}});
        break;
    case GhostRule::one_sided:
        if (n >= 4)
            op.push_row({{0, 2.0 * c}, {1, -5.0 * c}, {2, 4.0 * c}, {3, -1.0 * c}});
        else // 3-node line: reuse the centered stencil of the neighbor
            op.push_row({{0, c}, {1, -2.0 * c}, {2, c}});
        break;
    }
    for (int k = 1; k < n - 1; ++k) op.push_row({{k - 1, c}, {k, -2.0 * c}, {k + 1, c}});
    switch (rule) {
    case GhostRule::neumann_even:
        op.push_row({{n - 2, 2.0 * c}, {n - 1, -2.0 * c}});
        break;
    case GhostRule::dirichlet_odd:
        op.push_row({{n - 1, -2.0 * c}});
        break;
    case GhostRule::one_sided:
        if (n >= 4)
            op.push_row({{n - 4, -1.0 * c}, {n - 3, 4.0 * c}, {n - 2, -5.0 * c}, {n - 1, 2.0 * c}});
        else
            op.push_row({{n - 3, c}, {n - 2, -2.0 * c}, {n - 1, c}});
        break;
    }
    return op;
}

void LineOp::apply(const double* in, std::int64_t in_stride, double* out,
                   std::int64_t out_stride) const {
    for (int row = 0; row < n_; ++row) {
        double acc = 0.0;
        for (int p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p)
            acc += coef_[static_cast<std::size_t>(p)] * in[col_[static_cast<std::size_t>(p)] * in_stride];
        out[row * out_stride] = acc;
    }
}

void LineOp::apply_transpose_add(const double* in, std::int64_t in_stride, double* out,
                                 std::int64_t out_stride) const {
    for (int row = 0; row < n_; ++row) {
        const double v = in[row * in_stride];
        if (v == 0.0) continue;
        for (int p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p)
            out[col_[static_cast<std::size_t>(p)] * out_stride] += coef_[static_cast<std::size_t>(p)] * v;
    }
}

namespace {

template <typename Fn>
void for_each_line(const SpaceTimeGrid& g, const ScalarField& f, int axis, Fn&& fn) {
    const std::int64_t stride = g.stride(axis);
    const std::int64_t n_ax = g.nodes(axis);
    const std::int64_t block = stride * n_ax;
    const std::int64_t n_outer = g.space_size() / block;
    const int levels = f.spatial() ? 1 : g.time_levels();
    for (int k = 0; k < levels; ++k) {
        const std::int64_t base_k = static_cast<std::int64_t>(k) * g.space_size();
        for (std::int64_t outer = 0; outer < n_outer; ++outer)
            for (std::int64_t inner = 0; inner < stride; ++inner)
                fn(base_k + outer * block + inner, stride);
    }
}

} // namespace

void apply_along_axis(const LineOp& op, const ScalarField& in, ScalarField& out, int axis) {
    const auto& g = in.grid();
    if (axis < 0 || axis >= g.dim())
        throw std::out_of_range("apply_along_axis: axis out of range");
    if (in.size() != out.size())
        throw std::invalid_argument("apply_along_axis: field size mismatch");
    const double* pin = in.values().data();
    double* pout = out.values().data();
    for_each_line(g, in, axis, [&](std::int64_t base, std::int64_t stride) {
        op.apply(pin + base, stride, pout + base, stride);
    });
}

void apply_transpose_along_axis_add(const LineOp& op, const ScalarField& in,
                                    ScalarField& out, int axis) {
    const auto& g = in.grid();
    if (axis < 0 || axis >= g.dim())
        throw std::out_of_range("apply_transpose_along_axis_add: axis out of range");
    if (in.size() != out.size())
        throw std::invalid_argument("apply_transpose_along_axis_add: field size mismatch");
    const double* pin = in.values().data();
    double* pout = out.values().data();
    for_each_line(g, in, axis, [&](std::int64_t base, std::int64_t stride) {
        op.apply_transpose_add(pin + base, stride, pout + base, stride);
    });
}

void apply_along_time(const LineOp& op, const ScalarField& in, ScalarField& out) {
    const auto& g = in.grid();
    if (in.spatial())
        throw std::invalid_argument("apply_along_time: spatial field has no time axis");
    const std::int64_t nsp = g.space_size();
    const double* pin = in.values().data();
    double* pout = out.values().data();
    for (std::int64_t sp = 0; sp < nsp; ++sp)
        op.apply(pin + sp, nsp, pout + sp, nsp);
}

void apply_transpose_along_time_add(const LineOp& op, const ScalarField& in,
                                    ScalarField& out) {
    const auto& g = in.grid();
    if (in.spatial())
        throw std::invalid_argument("apply_transpose_along_time_add: spatial field has no time axis");
    const std::int64_t nsp = g.space_size();
    const double* pin = in.values().data();
    double* pout = out.values().data();
    for (std::int64_t sp = 0; sp < nsp; ++sp)
        op.apply_transpose_add(pin + sp, nsp, pout + sp, nsp);
}

} // namespace mfglab
