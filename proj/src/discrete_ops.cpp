#include "mfglab/discrete_ops.hpp"

#include <cmath>
#include <stdexcept>

#include "mfglab/line_op.hpp"

namespace mfglab {

namespace {

GhostRule ghost_of(BoundaryCondition bc) {
    return bc == BoundaryCondition::Neumann0 ? GhostRule::neumann_even
                                             : GhostRule::dirichlet_odd;
}

void check_axis(const SpaceTimeGrid& g, int axis) {
    if (axis < 0 || axis >= g.dim())
        throw std::out_of_range("discrete op: axis out of range");
}

// Visit every 1-D line along `axis` of every time slice: fn(base, stride).
template <typename Fn>
void for_each_line(const ScalarField& f, int axis, Fn&& fn) {
    const auto& g = f.grid();
    const std::int64_t stride = g.stride(axis);
    const std::int64_t block = stride * g.nodes(axis);
    const std::int64_t n_outer = g.space_size() / block;
    const int levels = f.spatial() ? 1 : g.time_levels();
    for (int k = 0; k < levels; ++k) {
        const std::int64_t base_k = static_cast<std::int64_t>(k) * g.space_size();
        for (std::int64_t outer = 0; outer < n_outer; ++outer)
            for (std::int64_t inner = 0; inner < stride; ++inner)
                fn(base_k + outer * block + inner, stride);
    }
}

// Per-axis dual cell width: h in the interior, h/2 at the two face nodes.
inline double cell_width(int k, int n, double h) {
    return (k == 0 || k == n - 1) ? 0.5 * h : h;
}

} // namespace

ScalarField axis_derivative(const ScalarField& u, int axis, BoundaryCondition bc) {
    const auto& g = u.grid();
    check_axis(g, axis);
    ScalarField out(u.grid_ptr(), u.kind());
    auto op = LineOp::first_derivative(g.nodes(axis), g.spacing(axis), ghost_of(bc));
    apply_along_axis(op, u, out, axis);
    return out;
}

std::vector<ScalarField> gradient(const ScalarField& u, BoundaryCondition bc) {
    std::vector<ScalarField> comps;
    comps.reserve(static_cast<std::size_t>(u.grid().dim()));
    for (int ax = 0; ax < u.grid().dim(); ++ax)
        comps.push_back(axis_derivative(u, ax, bc));
    return comps;
}

ScalarField laplacian(const ScalarField& u, BoundaryCondition bc) {
    const auto& g = u.grid();
    ScalarField out(u.grid_ptr(), u.kind());
    ScalarField tmp(u.grid_ptr(), u.kind());
    for (int ax = 0; ax < g.dim(); ++ax) {
        auto op = LineOp::second_derivative(g.nodes(ax), g.spacing(ax), ghost_of(bc));
        apply_along_axis(op, u, tmp, ax);
        axpy(1.0, tmp, out);
    }
    return out;
}

ScalarField mixed_second(const ScalarField& u, int axis_i, int axis_j,
                         BoundaryCondition bc) {
    const auto& g = u.grid();
    check_axis(g, axis_i);
    check_axis(g, axis_j);
    if (axis_i == axis_j) {
        ScalarField out(u.grid_ptr(), u.kind());
        auto op = LineOp::second_derivative(g.nodes(axis_i), g.spacing(axis_i), ghost_of(bc));
        apply_along_axis(op, u, out, axis_i);
        return out;
    }
    return axis_derivative(axis_derivative(u, axis_i, bc), axis_j, bc);
}

ScalarField time_derivative(const ScalarField& u) {
    const auto& g = u.grid();
    if (u.spatial())
        throw std::invalid_argument("time_derivative: field is spatial");
    ScalarField out(u.grid_ptr(), u.kind());
    auto op = LineOp::first_derivative(g.time_levels(), g.dt(), GhostRule::one_sided);
    apply_along_time(op, u, out);
    return out;
}

ScalarField divergence_of_flux(const ScalarField& m, const ScalarField& v,
                               const ScalarField& kappa2, FluxScheme scheme) {
    const auto& g = m.grid();
    if (m.kind() != v.kind() || m.size() != v.size())
        throw std::invalid_argument("divergence_of_flux: m and v layouts differ");
    if (!kappa2.spatial())
        throw std::invalid_argument("divergence_of_flux: kappa2 must be spatial");
    ScalarField out(m.grid_ptr(), m.kind());
    const double* pm = m.values().data();
    const double* pv = v.values().data();
    const double* pk = kappa2.values().data();
    double* po = out.values().data();
    const std::int64_t nsp = g.space_size();

    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        for_each_line(m, ax, [&](std::int64_t base, std::int64_t stride) {
            const std::int64_t sp_base = base % nsp; // spatial part for kappa2
            for (int k = 0; k + 1 < n_ax; ++k) {
                const std::int64_t l = base + k * stride;
                const std::int64_t r = l + stride;
                const std::int64_t sl = sp_base + k * stride;
                const double a = 0.5 * (pk[sl] + pk[sl + stride]);
                const double gv = (pv[r] - pv[l]) / h;
                double mf;
                if (scheme == FluxScheme::centered)
                    mf = 0.5 * (pm[l] + pm[r]);
                else
                    mf = (a * gv > 0.0) ? pm[l] : pm[r];
                const double flux = a * mf * gv;
                po[l] += flux / cell_width(k, n_ax, h);
                po[r] -= flux / cell_width(k + 1, n_ax, h);
            }
        });
    }
    return out;
}

double max_face_speed(const ScalarField& v, const ScalarField& kappa2) {
    const auto& g = v.grid();
    const double* pv = v.values().data();
    const double* pk = kappa2.values().data();
    const std::int64_t nsp = g.space_size();
    double speed = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        for_each_line(v, ax, [&](std::int64_t base, std::int64_t stride) {
            const std::int64_t sp_base = base % nsp;
            for (int k = 0; k + 1 < n_ax; ++k) {
                const std::int64_t l = base + k * stride;
                const std::int64_t sl = sp_base + k * stride;
                const double a = 0.5 * (pk[sl] + pk[sl + stride]);
                const double gv = (pv[l + stride] - pv[l]) / h;
                speed = std::max(speed, std::abs(a * gv));
            }
        });
    }
    return speed;
}

void axis_derivative_transpose_add(const ScalarField& s, ScalarField& out, int axis,
                                   BoundaryCondition bc) {
    const auto& g = s.grid();
    check_axis(g, axis);
    auto op = LineOp::first_derivative(g.nodes(axis), g.spacing(axis), ghost_of(bc));
    apply_transpose_along_axis_add(op, s, out, axis);
}

void laplacian_transpose_add(const ScalarField& s, ScalarField& out, BoundaryCondition bc) {
    const auto& g = s.grid();
    for (int ax = 0; ax < g.dim(); ++ax) {
        auto op = LineOp::second_derivative(g.nodes(ax), g.spacing(ax), ghost_of(bc));
        apply_transpose_along_axis_add(op, s, out, ax);
    }
}

void time_derivative_transpose_add(const ScalarField& s, ScalarField& out) {
    const auto& g = s.grid();
    auto op = LineOp::first_derivative(g.time_levels(), g.dt(), GhostRule::one_sided);
    apply_transpose_along_time_add(op, s, out);
}

void flux_divergence_m_transpose_add(const ScalarField& v, const ScalarField& kappa2,
                                     const ScalarField& s, ScalarField& out) {
    const auto& g = v.grid();
    const double* pv = v.values().data();
    const double* pk = kappa2.values().data();
    const double* ps = s.values().data();
    double* po = out.values().data();
    const std::int64_t nsp = g.space_size();
    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        for_each_line(v, ax, [&](std::int64_t base, std::int64_t stride) {
            const std::int64_t sp_base = base % nsp;
            for (int k = 0; k + 1 < n_ax; ++k) {
                const std::int64_t l = base + k * stride;
                const std::int64_t r = l + stride;
                const std::int64_t sl = sp_base + k * stride;
                const double a = 0.5 * (pk[sl] + pk[sl + stride]);
                const double c = a * (pv[r] - pv[l]) / h;
                const double t = 0.5 * c *
                                 (ps[l] / cell_width(k, n_ax, h) -
                                  ps[r] / cell_width(k + 1, n_ax, h));
                po[l] += t;
                po[r] += t;
            }
        });
    }
}

void flux_divergence_v_transpose_add(const ScalarField& m, const ScalarField& kappa2,
                                     const ScalarField& s, ScalarField& out) {
    const auto& g = m.grid();
    const double* pm = m.values().data();
    const double* pk = kappa2.values().data();
    const double* ps = s.values().data();
    double* po = out.values().data();
    const std::int64_t nsp = g.space_size();
    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        for_each_line(m, ax, [&](std::int64_t base, std::int64_t stride) {
            const std::int64_t sp_base = base % nsp;
            for (int k = 0; k + 1 < n_ax; ++k) {
                const std::int64_t l = base + k * stride;
                const std::int64_t r = l + stride;
                const std::int64_t sl = sp_base + k * stride;
                const double a = 0.5 * (pk[sl] + pk[sl + stride]);
                const double b = a * 0.5 * (pm[l] + pm[r]);
                const double q = (b / h) * (ps[l] / cell_width(k, n_ax, h) -
                                            ps[r] / cell_width(k + 1, n_ax, h));
                po[r] += q;
                po[l] -= q;
            }
        });
    }
}

} // namespace mfglab
