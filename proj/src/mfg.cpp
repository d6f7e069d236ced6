#include "mfglab/mfg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfglab/carleman.hpp"
#include "mfglab/line_op.hpp"
#include "mfglab/quadrature.hpp"

namespace mfglab {

double InteractionSpec::lipschitz_bound() const {
    return std::max(std::abs(c1) / s1, std::abs(c2) / s2);
}

double InteractionSpec::couple(double y, double z) const {
    return c1 * std::tanh(y / s1) + c2 * std::tanh(z / s2);
}

double InteractionSpec::dF_dy(double y) const {
    const double c = std::cosh(y / s1);
    return c1 / (s1 * c * c);
}

double InteractionSpec::dF_dz(double z) const {
    const double c = std::cosh(z / s2);
    return c2 / (s2 * c * c);
}

double KernelSpec::sup_bound() const { return std::abs(k0); }

double AprioriBounds::M() const { return std::max(std::max(M1, M2), std::max(M3, M4)); }

namespace {
constexpr std::int64_t kKernelCacheLimit = 4096; // nodes; cache is N^2 doubles
}

MfgProblem::MfgProblem(GridPtr grid_, double beta_, ScalarField kappa_,
                       InteractionSpec inter, KernelSpec kern, ScalarField v_T_,
                       ScalarField m_0_)
    : grid(std::move(grid_)), beta(beta_), kappa(std::move(kappa_)),
      interaction(std::move(inter)), kernel(kern), v_T(std::move(v_T_)),
      m_0(std::move(m_0_)), kappa2_(grid, FieldKind::spatial) {
    if (!(beta > 0.0)) throw std::invalid_argument("MfgProblem: beta must be positive");
    if (!kappa.spatial() || !v_T.spatial() || !m_0.spatial())
        throw std::invalid_argument("MfgProblem: kappa, v_T, m_0 must be spatial fields");
    if (!(kappa.grid().same_layout(*grid) && v_T.grid().same_layout(*grid) &&
          m_0.grid().same_layout(*grid)))
        throw std::invalid_argument("MfgProblem: fields live on a different grid");
    if (interaction.g0 && interaction.g0->spatial())
        throw std::invalid_argument("MfgProblem: g0 must be a space-time field");
    if (!(kernel.sigma_k > 0.0))
        throw std::invalid_argument("MfgProblem: kernel length sigma_k must be positive");

    for (std::int64_t i = 0; i < m_0.size(); ++i)
        if (m_0[i] < -1e-12)
            throw std::invalid_argument("MfgProblem: m_0 must be nonnegative");
    const double mass = integrate(m_0, Region::Omega);
    if (std::abs(mass - 1.0) > 1e-8)
        throw std::invalid_argument(
            "MfgProblem: m_0 must integrate to 1 (got " + std::to_string(mass) +
            "); use normalize_mass");
    require_bc_compliance(v_T, BoundaryCondition::Neumann0);
    require_bc_compliance(m_0, BoundaryCondition::Neumann0);

    for (std::int64_t i = 0; i < kappa.size(); ++i) kappa2_[i] = kappa[i] * kappa[i];

    double sup_grad = 0.0;
    for (int ax = 0; ax < grid->dim(); ++ax)
        sup_grad = std::max(sup_grad, one_sided_axis_derivative(kappa, ax).max_abs());
    kappa_c1_ = kappa.max_abs() + sup_grad;

    const auto& g = *grid;
    node_coords_.resize(static_cast<std::size_t>(g.space_size() * g.dim()));
    std::vector<int> idx(g.dim());
    for (std::int64_t sp = 0; sp < g.space_size(); ++sp) {
        g.decode(sp, idx);
        for (int d = 0; d < g.dim(); ++d)
            node_coords_[static_cast<std::size_t>(sp * g.dim() + d)] =
                g.coordinate(d, idx[d]);
    }

    if (kernel.k0 != 0.0 && g.space_size() <= kKernelCacheLimit) {
        const std::int64_t n = g.space_size();
        const auto& w = g.spatial_weights();
        kernel_matrix_.resize(static_cast<std::size_t>(n * n));
        const double inv2s = 1.0 / (2.0 * kernel.sigma_k * kernel.sigma_k);
        for (std::int64_t x = 0; x < n; ++x) {
            for (std::int64_t y = 0; y < n; ++y) {
                double d2 = 0.0;
                for (int d = 0; d < g.dim(); ++d) {
                    const double dx = node_coords_[static_cast<std::size_t>(x * g.dim() + d)] -
                                      node_coords_[static_cast<std::size_t>(y * g.dim() + d)];
                    d2 += dx * dx;
                }
                kernel_matrix_[static_cast<std::size_t>(x * n + y)] =
                    kernel.k0 * std::exp(-d2 * inv2s) * w[static_cast<std::size_t>(y)];
            }
        }
    }
}

void MfgProblem::apply_kernel(std::span<const double> m_slice, std::span<double> out) const {
    const auto& g = *grid;
    const std::int64_t n = g.space_size();
    if (kernel.k0 == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (!kernel_matrix_.empty()) {
        for (std::int64_t x = 0; x < n; ++x) {
            double acc = 0.0;
            const double* row = kernel_matrix_.data() + x * n;
            for (std::int64_t y = 0; y < n; ++y) acc += row[y] * m_slice[static_cast<std::size_t>(y)];
            out[static_cast<std::size_t>(x)] = acc;
        }
        return;
    }
    const auto& w = g.spatial_weights();
    const double inv2s = 1.0 / (2.0 * kernel.sigma_k * kernel.sigma_k);
    for (std::int64_t x = 0; x < n; ++x) {
        double acc = 0.0;
        for (std::int64_t y = 0; y < n; ++y) {
            double d2 = 0.0;
            for (int d = 0; d < g.dim(); ++d) {
                const double dx = node_coords_[static_cast<std::size_t>(x * g.dim() + d)] -
                                  node_coords_[static_cast<std::size_t>(y * g.dim() + d)];
                d2 += dx * dx;
            }
            acc += std::exp(-d2 * inv2s) * w[static_cast<std::size_t>(y)] *
                   m_slice[static_cast<std::size_t>(y)];
        }
        out[static_cast<std::size_t>(x)] = kernel.k0 * acc;
    }
}

void normalize_mass(ScalarField& density) {
    const double mass = integrate(density, Region::Omega);
    if (!(mass > 0.0))
        throw std::invalid_argument("normalize_mass: field has nonpositive mass");
    for (std::int64_t i = 0; i < density.size(); ++i) density[i] /= mass;
}

namespace {

/// Conjugate gradients on the symmetrized Neumann system
/// W (I - c lap) u = W b, where W is the trapezoid weight diagonal. W lap is
/// symmetric negative semidefinite, so the system matrix is SPD.
class HelmholtzSolver {
public:
    HelmholtzSolver(const SpaceTimeGrid& g, double c, double rel_tol)
        : g_(g), c_(c), rel_tol_(rel_tol) {
        for (int ax = 0; ax < g.dim(); ++ax)
            ops_.push_back(LineOp::second_derivative(g.nodes(ax), g.spacing(ax),
                                                     GhostRule::neumann_even));
        const std::size_t n = static_cast<std::size_t>(g.space_size());
        lap_.resize(n);
        tmp_.resize(n);
        r_.resize(n);
        p_.resize(n);
        ap_.resize(n);
        z_.resize(n);
        double diag_lap = 0.0;
        for (int ax = 0; ax < g.dim(); ++ax)
            diag_lap += 2.0 / (g.spacing(ax) * g.spacing(ax));
        inv_diag_.resize(n);
        const auto& w = g.spatial_weights();
        for (std::size_t i = 0; i < n; ++i)
            inv_diag_[i] = 1.0 / (w[i] * (1.0 + c_ * diag_lap));
    }

    void spatial_laplacian(const double* in, double* out) const {
        const std::size_t n = static_cast<std::size_t>(g_.space_size());
        std::fill(out, out + n, 0.0);
        for (int ax = 0; ax < g_.dim(); ++ax) {
            const std::int64_t stride = g_.stride(ax);
            const std::int64_t block = stride * g_.nodes(ax);
            const std::int64_t n_outer = g_.space_size() / block;
            for (std::int64_t outer = 0; outer < n_outer; ++outer) {
                for (std::int64_t inner = 0; inner < stride; ++inner) {
                    const std::int64_t base = outer * block + inner;
                    ops_[static_cast<std::size_t>(ax)].apply(in + base, stride,
                                                             tmp_.data() + base, stride);
                }
            }
            for (std::size_t i = 0; i < n; ++i) out[i] += tmp_[i];
        }
    }

    // out = W (in - c lap in)
    void apply(const double* in, double* out) const {
        spatial_laplacian(in, lap_.data());
        const auto& w = g_.spatial_weights();
        const std::size_t n = static_cast<std::size_t>(g_.space_size());
        for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * (in[i] - c_ * lap_[i]);
    }

    int solve(std::span<const double> b, std::span<double> u) const {
        const std::size_t n = static_cast<std::size_t>(g_.space_size());
        const auto& w = g_.spatial_weights();

        apply(u.data(), ap_.data());
        double bnorm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wb = w[i] * b[i];
            r_[i] = wb - ap_[i];
            bnorm2 += wb * wb;
        }
        const double target2 = rel_tol_ * rel_tol_ * std::max(bnorm2, 1e-300);

        double rz = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            z_[i] = inv_diag_[i] * r_[i];
            p_[i] = z_[i];
            rz += r_[i] * z_[i];
        }

        const int max_iter = 40 * static_cast<int>(n) + 100;
        for (int it = 0; it < max_iter; ++it) {
            double rr = 0.0;
            for (std::size_t i = 0; i < n; ++i) rr += r_[i] * r_[i];
            if (rr <= target2) return it;

            apply(p_.data(), ap_.data());
            double pap = 0.0;
            for (std::size_t i = 0; i < n; ++i) pap += p_[i] * ap_[i];
            if (pap <= 0.0)
                throw std::runtime_error("HelmholtzSolver: lost positive definiteness");
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < n; ++i) {
                u[i] += alpha * p_[i];
                r_[i] -= alpha * ap_[i];
            }
            double rz_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                z_[i] = inv_diag_[i] * r_[i];
                rz_new += r_[i] * z_[i];
            }
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p_[i] = z_[i] + beta * p_[i];
        }
        throw std::runtime_error("HelmholtzSolver: conjugate gradients did not reach "
                                 "the requested residual");
    }

private:
    const SpaceTimeGrid& g_;
    double c_;
    double rel_tol_;
    std::vector<LineOp> ops_;
    mutable std::vector<double> lap_, tmp_, r_, p_, ap_, z_;
    std::vector<double> inv_diag_;
};

void check_finite_slice(std::span<const double> s, const char* what, int step) {
    for (double v : s)
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << what << ": non-finite value at time step " << step;
            throw std::runtime_error(os.str());
        }
}

/// kappa2 |grad v|^2 / 2 on one slice, Neumann centered differences.
void hamiltonian_slice(const SpaceTimeGrid& g, const std::vector<LineOp>& grad_ops,
                       const double* v_slice, const double* kappa2,
                       std::vector<double>& tmp, std::vector<double>& out) {
    const std::size_t n = static_cast<std::size_t>(g.space_size());
    std::fill(out.begin(), out.end(), 0.0);
    for (int ax = 0; ax < g.dim(); ++ax) {
        const std::int64_t stride = g.stride(ax);
        const std::int64_t block = stride * g.nodes(ax);
        const std::int64_t n_outer = g.space_size() / block;
        for (std::int64_t outer = 0; outer < n_outer; ++outer)
            for (std::int64_t inner = 0; inner < stride; ++inner) {
                const std::int64_t base = outer * block + inner;
                grad_ops[static_cast<std::size_t>(ax)].apply(v_slice + base, stride,
                                                             tmp.data() + base, stride);
            }
        for (std::size_t i = 0; i < n; ++i) out[i] += tmp[i] * tmp[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] *= 0.5 * kappa2[i];
}

/// F(x, t_k, (K m)(x), m(x)) on one slice.
void interaction_slice(const MfgProblem& prob, int level, const double* m_slice,
                       std::vector<double>& kernel_buf, std::vector<double>& out) {
    const auto& g = *prob.grid;
    const std::size_t n = static_cast<std::size_t>(g.space_size());
    const auto& inter = prob.interaction;
    if (inter.c1 != 0.0)
        prob.apply_kernel({m_slice, n}, kernel_buf);
    for (std::size_t i = 0; i < n; ++i) {
        double f = 0.0;
        if (inter.g0) f += inter.g0->at(level, static_cast<std::int64_t>(i));
        if (inter.c1 != 0.0) f += inter.c1 * std::tanh(kernel_buf[i] / inter.s1);
        if (inter.c2 != 0.0) f += inter.c2 * std::tanh(m_slice[i] / inter.s2);
        out[i] = f;
    }
}

std::vector<LineOp> neumann_gradient_ops(const SpaceTimeGrid& g) {
    std::vector<LineOp> ops;
    for (int ax = 0; ax < g.dim(); ++ax)
        ops.push_back(LineOp::first_derivative(g.nodes(ax), g.spacing(ax),
                                               GhostRule::neumann_even));
    return ops;
}

/// -div(kappa2 m grad v) on one slice, conservative face fluxes.
void advection_slice(const SpaceTimeGrid& g, const double* m_slice, const double* v_slice,
                     const double* kappa2, FluxScheme scheme, std::vector<double>& out) {
    const std::size_t n = static_cast<std::size_t>(g.space_size());
    std::fill(out.begin(), out.end(), 0.0);
    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        const std::int64_t stride = g.stride(ax);
        const std::int64_t block = stride * n_ax;
        const std::int64_t n_outer = g.space_size() / block;
        for (std::int64_t outer = 0; outer < n_outer; ++outer) {
            for (std::int64_t inner = 0; inner < stride; ++inner) {
                const std::int64_t base = outer * block + inner;
                for (int k = 0; k + 1 < n_ax; ++k) {
                    const std::int64_t l = base + k * stride;
                    const std::int64_t r = l + stride;
                    const double a = 0.5 * (kappa2[l] + kappa2[r]);
                    const double gv = (v_slice[r] - v_slice[l]) / h;
                    const double mf = scheme == FluxScheme::centered
                                          ? 0.5 * (m_slice[l] + m_slice[r])
                                          : (a * gv > 0.0 ? m_slice[l] : m_slice[r]);
                    const double flux = a * mf * gv;
                    const double wl = (k == 0) ? 0.5 * h : h;
                    const double wr = (k + 2 == n_ax) ? 0.5 * h : h;
                    out[static_cast<std::size_t>(l)] -= flux / wl;
                    out[static_cast<std::size_t>(r)] += flux / wr;
                }
            }
        }
    }
}

double slice_cfl_speed(const SpaceTimeGrid& g, const double* v_slice, const double* kappa2) {
    double speed = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) {
        const double h = g.spacing(ax);
        const int n_ax = g.nodes(ax);
        const std::int64_t stride = g.stride(ax);
        const std::int64_t block = stride * n_ax;
        const std::int64_t n_outer = g.space_size() / block;
        for (std::int64_t outer = 0; outer < n_outer; ++outer)
            for (std::int64_t inner = 0; inner < stride; ++inner) {
                const std::int64_t base = outer * block + inner;
                for (int k = 0; k + 1 < n_ax; ++k) {
                    const std::int64_t l = base + k * stride;
                    const double a = 0.5 * (kappa2[l] + kappa2[l + stride]);
                    speed = std::max(speed, std::abs(a * (v_slice[l + stride] - v_slice[l]) / h));
                }
            }
    }
    return speed;
}

} // namespace

ScalarField solve_bellman_backward(const ScalarField& m, const MfgProblem& problem,
                                   const SolverOptions& opts) {
    const auto& g = *problem.grid;
    if (m.spatial() || !m.grid().same_layout(g))
        throw std::invalid_argument("solve_bellman_backward: m must be space-time on the problem grid");
    if (!m.all_finite())
        throw std::invalid_argument("solve_bellman_backward: m contains non-finite values");

    const int K = g.time_steps();
    const double dt = g.dt();
    const std::size_t n = static_cast<std::size_t>(g.space_size());

    ScalarField v(problem.grid, FieldKind::spacetime);
    auto vT = problem.v_T.values();
    std::copy(vT.begin(), vT.end(), v.slice(K).begin());

    HelmholtzSolver full(g, dt * problem.beta, opts.cg_tol_bellman);
    HelmholtzSolver half(g, 0.5 * dt * problem.beta, opts.cg_tol_bellman);
    auto grad_ops = neumann_gradient_ops(g);

    std::vector<double> ham(n), inter(n), kernel_buf(n), tmp(n), rhs(n), lap_prev(n);
    std::vector<double> ham_star(n), inter_star(n), nstar(n);

    auto explicit_terms = [&](const double* v_slice, int level, std::vector<double>& out) {
        hamiltonian_slice(g, grad_ops, v_slice, problem.kappa2().values().data(), tmp, out);
        interaction_slice(problem, level, m.slice(level).data(), kernel_buf, inter);
        for (std::size_t i = 0; i < n; ++i) out[i] += inter[i];
    };

    for (int k = K - 1; k >= 0; --k) {
        const double* v_next = v.slice(k + 1).data();
        explicit_terms(v_next, k + 1, ham);

        if (opts.scheme == TimeScheme::imex_euler) {
            for (std::size_t i = 0; i < n; ++i) rhs[i] = v_next[i] + dt * ham[i];
            auto target = v.slice(k);
            std::copy(v_next, v_next + n, target.begin());
            full.solve(rhs, target);
        } else {
            // predictor: one implicit-Euler step; corrector: trapezoid on the
            // explicit terms with the diffusion split half implicit
            std::vector<double>& vstar = nstar;
            for (std::size_t i = 0; i < n; ++i) rhs[i] = v_next[i] + dt * ham[i];
            std::copy(v_next, v_next + n, vstar.begin());
            full.solve(rhs, vstar);

            explicit_terms(vstar.data(), k, ham_star);
            full.spatial_laplacian(v_next, lap_prev.data());
            for (std::size_t i = 0; i < n; ++i)
                rhs[i] = v_next[i] + 0.5 * dt *
                                         (problem.beta * lap_prev[i] + ham[i] + ham_star[i]);
            auto target = v.slice(k);
            std::copy(vstar.begin(), vstar.end(), target.begin());
            half.solve(rhs, target);
        }
        check_finite_slice(v.slice(k), "solve_bellman_backward", k);
    }
    return v;
}

ScalarField solve_fokker_planck_forward(const ScalarField& v, const MfgProblem& problem,
                                        const SolverOptions& opts) {
    const auto& g = *problem.grid;
    if (v.spatial() || !v.grid().same_layout(g))
        throw std::invalid_argument("solve_fokker_planck_forward: v must be space-time on the problem grid");
    if (!v.all_finite())
        throw std::invalid_argument("solve_fokker_planck_forward: v contains non-finite values");

    const int K = g.time_steps();
    const double dt = g.dt();
    const std::size_t n = static_cast<std::size_t>(g.space_size());
    const double* kappa2 = problem.kappa2().values().data();

    ScalarField m(problem.grid, FieldKind::spacetime);
    auto m0 = problem.m_0.values();
    std::copy(m0.begin(), m0.end(), m.slice(0).begin());

    HelmholtzSolver full(g, dt * problem.beta, opts.cg_tol_fp);
    HelmholtzSolver half(g, 0.5 * dt * problem.beta, opts.cg_tol_fp);

    std::vector<double> adv(n), adv_star(n), rhs(n), lap_prev(n), mstar(n);

    for (int k = 0; k < K; ++k) {
        const double* m_cur = m.slice(k).data();
        const double* v_cur = v.slice(k).data();

        const double speed = slice_cfl_speed(g, v_cur, kappa2);
        if (dt * speed / g.min_spacing() > 1.0 && !opts.allow_cfl_violation) {
            std::ostringstream os;
            os << "solve_fokker_planck_forward: CFL violation at step " << k
               << " (dt*max|kappa^2 dv|/h = " << dt * speed / g.min_spacing()
               << " > 1); refine the grid or set allow_cfl_violation";
            throw std::runtime_error(os.str());
        }

        advection_slice(g, m_cur, v_cur, kappa2, opts.flux, adv);

        if (opts.scheme == TimeScheme::imex_euler) {
            for (std::size_t i = 0; i < n; ++i) rhs[i] = m_cur[i] + dt * adv[i];
            auto target = m.slice(k + 1);
            std::copy(m_cur, m_cur + n, target.begin());
            full.solve(rhs, target);
        } else {
            for (std::size_t i = 0; i < n; ++i) rhs[i] = m_cur[i] + dt * adv[i];
            std::copy(m_cur, m_cur + n, mstar.begin());
            full.solve(rhs, mstar);

            advection_slice(g, mstar.data(), v.slice(k + 1).data(), kappa2, opts.flux,
                            adv_star);
            full.spatial_laplacian(m_cur, lap_prev.data());
            for (std::size_t i = 0; i < n; ++i)
                rhs[i] = m_cur[i] + 0.5 * dt *
                                        (problem.beta * lap_prev[i] + adv[i] + adv_star[i]);
            auto target = m.slice(k + 1);
            std::copy(mstar.begin(), mstar.end(), target.begin());
            half.solve(rhs, target);
        }
        check_finite_slice(m.slice(k + 1), "solve_fokker_planck_forward", k + 1);
    }
    return m;
}

SolutionPair picard_solve(const MfgProblem& problem, const SolverOptions& opts) {
    if (!(opts.picard_damping > 0.0 && opts.picard_damping <= 1.0))
        throw std::invalid_argument("picard_solve: damping must lie in (0, 1]");
    if (!(opts.picard_tol > 0.0) || opts.picard_max_iter <= 0)
        throw std::invalid_argument("picard_solve: tol and max_iter must be positive");

    const auto& g = *problem.grid;
    // initial guess: m frozen at the initial density on every level
    ScalarField m(problem.grid, FieldKind::spacetime);
    for (int k = 0; k < g.time_levels(); ++k) {
        auto s = m.slice(k);
        auto m0 = problem.m_0.values();
        std::copy(m0.begin(), m0.end(), s.begin());
    }

    SolutionPair out{ScalarField(problem.grid, FieldKind::spacetime), std::move(m)};
    for (int it = 1; it <= opts.picard_max_iter; ++it) {
        out.v = solve_bellman_backward(out.m, problem, opts);
        ScalarField m_new = solve_fokker_planck_forward(out.v, problem, opts);
        const double change = max_abs_difference(m_new, out.m);
        out.update_trace.push_back(change);
        out.m = blend(opts.picard_damping, m_new, out.m);
        out.picard_iterations = it;
        out.final_update_norm = change;
        if (change <= opts.picard_tol) {
            out.residual_norms = system_residual(out.v, out.m, problem);
            return out;
        }
    }

    std::ostringstream os;
    os << "picard-diverged: no fixed point within " << opts.picard_max_iter
       << " iterations; update trace:";
    for (double u : out.update_trace) os << " " << u;
    throw std::runtime_error(os.str());
}

std::pair<double, double> system_residual(const ScalarField& v, const ScalarField& m,
                                          const MfgProblem& problem) {
    const auto& g = *problem.grid;
    if (v.spatial() || m.spatial())
        throw std::invalid_argument("system_residual: fields must be space-time");

    const std::size_t n = static_cast<std::size_t>(g.space_size());
    auto vt = time_derivative(v);
    auto lap_v = laplacian(v, BoundaryCondition::Neumann0);
    auto grads = gradient(v, BoundaryCondition::Neumann0);

    ScalarField r1(problem.grid, FieldKind::spacetime);
    std::vector<double> kernel_buf(n), inter(n);
    const double* kappa2 = problem.kappa2().values().data();
    for (int k = 0; k < g.time_levels(); ++k) {
        interaction_slice(problem, k, m.slice(k).data(), kernel_buf, inter);
        auto r = r1.slice(k);
        auto vts = vt.slice(k);
        auto lvs = lap_v.slice(k);
        for (std::size_t i = 0; i < n; ++i) {
            double grad_sq = 0.0;
            for (const auto& comp : grads) {
                const double gi = comp.at(k, static_cast<std::int64_t>(i));
                grad_sq += gi * gi;
            }
            r[i] = vts[i] + problem.beta * lvs[i] + 0.5 * kappa2[i] * grad_sq + inter[i];
        }
    }

    auto mt = time_derivative(m);
    auto lap_m = laplacian(m, BoundaryCondition::Neumann0);
    auto div = divergence_of_flux(m, v, problem.kappa2(), FluxScheme::centered);
    ScalarField r2(problem.grid, FieldKind::spacetime);
    for (std::int64_t i = 0; i < r2.size(); ++i)
        r2[i] = mt[i] - problem.beta * lap_m[i] + div[i];

    return {norm(r1, NormKind::L2_QT), norm(r2, NormKind::L2_QT)};
}

BoundsReport check_bounds(const SolutionPair& pair, const AprioriBounds& bounds) {
    BoundsReport rep;
    rep.sup_v = pair.v.max_abs();
    rep.sup_m = pair.m.max_abs();
    rep.sup_lap_v = laplacian(pair.v, BoundaryCondition::Neumann0).max_abs();

    auto grad_sup = [&](const ScalarField& f) {
        auto comps = gradient(f, BoundaryCondition::Neumann0);
        double sup = 0.0;
        for (std::int64_t i = 0; i < f.size(); ++i) {
            double s = 0.0;
            for (const auto& c : comps) s += c[i] * c[i];
            sup = std::max(sup, s);
        }
        return std::sqrt(sup);
    };
    rep.sup_grad_v = grad_sup(pair.v);
    rep.sup_grad_m = grad_sup(pair.m);

    rep.v_in_B3 = rep.sup_v <= bounds.M3 && rep.sup_grad_v <= bounds.M3 &&
                  rep.sup_lap_v <= bounds.M3;
    rep.m_in_B4 = rep.sup_m <= bounds.M4 && rep.sup_grad_m <= bounds.M4;
    return rep;
}

} // namespace mfglab
