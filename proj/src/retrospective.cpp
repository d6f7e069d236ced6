#include "mfglab/retrospective.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>
#include <thread>

#include "mfglab/line_op.hpp"
#include "mfglab/quadrature.hpp"

namespace mfglab {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ScalarField scaled_noise(GridPtr grid, std::uint64_t seed, NormKind kind, double delta) {
    CosineSeriesSpec spec;
    spec.decay = 1.0; // spread the noise across the admissible band
    auto series = random_cosine_series(grid->domain(), seed, spec, false);
    auto xi = series.sample_spatial(grid);
    const double n = norm(xi, kind);
    if (!(n > 0.0))
        throw std::runtime_error("perturb_data: degenerate noise draw");
    const double s = delta / n;
    for (std::int64_t i = 0; i < xi.size(); ++i) xi[i] *= s;
    return xi;
}

} // namespace

RetrospectiveData exact_data(const MfgProblem& problem, const SolutionPair& truth) {
    RetrospectiveData data{problem.v_T, problem.m_0,
                           ScalarField(problem.grid, FieldKind::spatial)};
    auto mT = truth.m.slice(problem.grid->time_steps());
    std::copy(mT.begin(), mT.end(), data.m_T.values().begin());
    return data;
}

RetrospectiveData perturb_data(const RetrospectiveData& exact, double delta,
                               std::uint64_t seed) {
    if (delta < 0.0) throw std::invalid_argument("perturb_data: delta must be >= 0");
    if (delta == 0.0) return exact;
    RetrospectiveData out = exact;
    out.noisy = true;
    out.delta = delta;
    out.seed = seed;
    axpy(1.0, scaled_noise(exact.v_T.grid_ptr(), mix_seed(seed, 1), NormKind::H1_Omega, delta),
         out.v_T);
    axpy(1.0, scaled_noise(exact.m_0.grid_ptr(), mix_seed(seed, 2), NormKind::H1_Omega, delta),
         out.m_0);
    axpy(1.0, scaled_noise(exact.m_T.grid_ptr(), mix_seed(seed, 3), NormKind::L2_Omega, delta),
         out.m_T);
    return out;
}

namespace {

/// Everything the objective evaluation reuses across calls.
struct ObjectiveWorkspace {
    const MfgProblem& problem;
    const WeightedObjective& obj;
    CarlemanWeight weight;          // T pinned to the grid horizon
    std::vector<double> qt_weight;  // per (level, node): tw * w_sp * phi_t
    std::vector<LineOp> grad_ops;

    ObjectiveWorkspace(const MfgProblem& prob, const WeightedObjective& o)
        : problem(prob), obj(o), weight(o.weight) {
        const auto& g = *prob.grid;
        weight.T = g.time_horizon();
        if (!(weight.lambda > 0.0) || !(weight.nu > 2.0) || !(weight.a > 1.0))
            throw std::invalid_argument(
                "WeightedObjective: weight needs lambda > 0, nu > 2, a > 1");
        qt_weight.resize(static_cast<std::size_t>(g.spacetime_size()));
        const auto& wsp = g.spatial_weights();
        for (int k = 0; k < g.time_levels(); ++k) {
            const double wt = g.time_weight(k) * normalized_weight(weight, g.time(k));
            for (std::int64_t sp = 0; sp < g.space_size(); ++sp)
                qt_weight[static_cast<std::size_t>(k * g.space_size() + sp)] =
                    wt * wsp[static_cast<std::size_t>(sp)];
        }
        for (int ax = 0; ax < g.dim(); ++ax)
            grad_ops.push_back(LineOp::first_derivative(g.nodes(ax), g.spacing(ax),
                                                        GhostRule::neumann_even));
    }
};

/// H1(Omega) penalty of a slice difference; optionally accumulates its exact
/// gradient (scaled by alpha) into grad_out.
double h1_penalty(const ScalarField& e, double alpha, ScalarField* grad_out) {
    const auto& g = e.grid();
    double value = weighted_l2_omega_sq(e.values(), g);
    std::vector<ScalarField> ds;
    for (int ax = 0; ax < g.dim(); ++ax) {
        ds.push_back(one_sided_axis_derivative(e, ax));
        value += weighted_l2_omega_sq(ds.back().values(), g);
    }
    if (grad_out) {
        const auto& w = g.spatial_weights();
        for (std::int64_t i = 0; i < e.size(); ++i)
            (*grad_out)[i] += alpha * 2.0 * w[static_cast<std::size_t>(i)] * e[i];
        for (int ax = 0; ax < g.dim(); ++ax) {
            ScalarField tmp(e.grid_ptr(), FieldKind::spatial);
            const auto& d = ds[static_cast<std::size_t>(ax)];
            for (std::int64_t i = 0; i < e.size(); ++i)
                tmp[i] = alpha * 2.0 * w[static_cast<std::size_t>(i)] * d[i];
            auto op = LineOp::first_derivative(g.nodes(ax), g.spacing(ax), GhostRule::one_sided);
            apply_transpose_along_axis_add(op, tmp, *grad_out, ax);
        }
    }
    return alpha * value;
}

double l2_penalty(const ScalarField& e, double alpha, ScalarField* grad_out) {
    const auto& g = e.grid();
    const double value = weighted_l2_omega_sq(e.values(), g);
    if (grad_out) {
        const auto& w = g.spatial_weights();
        for (std::int64_t i = 0; i < e.size(); ++i)
            (*grad_out)[i] += alpha * 2.0 * w[static_cast<std::size_t>(i)] * e[i];
    }
    return alpha * value;
}

ScalarField slice_difference(const ScalarField& f, int level, const ScalarField& target) {
    ScalarField e(target.grid_ptr(), FieldKind::spatial);
    auto s = f.slice(level);
    for (std::int64_t i = 0; i < e.size(); ++i)
        e[i] = s[static_cast<std::size_t>(i)] - target[i];
    return e;
}

double evaluate(const ObjectiveWorkspace& ws, const ScalarField& v, const ScalarField& m,
                const RetrospectiveData& data, ScalarField* grad_v, ScalarField* grad_m) {
    const auto& problem = ws.problem;
    const auto& g = *problem.grid;
    const std::size_t nsp = static_cast<std::size_t>(g.space_size());
    const int K = g.time_steps();
    const auto& inter = problem.interaction;
    const double* kappa2 = problem.kappa2().values().data();

    // residual R1 of the Bellman equation, keeping reusable pieces
    auto vt = time_derivative(v);
    auto lap_v = laplacian(v, BoundaryCondition::Neumann0);
    auto grads_v = gradient(v, BoundaryCondition::Neumann0);

    ScalarField r1(problem.grid, FieldKind::spacetime);
    ScalarField kernel_avg(problem.grid, FieldKind::spacetime); // y = K m per slice
    for (int k = 0; k <= K; ++k) {
        if (inter.c1 != 0.0)
            problem.apply_kernel(m.slice(k), kernel_avg.slice(k));
        auto r = r1.slice(k);
        auto vts = vt.slice(k);
        auto lvs = lap_v.slice(k);
        auto ms = m.slice(k);
        auto ys = kernel_avg.slice(k);
        for (std::size_t i = 0; i < nsp; ++i) {
            double grad_sq = 0.0;
            for (const auto& comp : grads_v) {
                const double gi = comp.at(k, static_cast<std::int64_t>(i));
                grad_sq += gi * gi;
            }
            double f = 0.0;
            if (inter.g0) f += inter.g0->at(k, static_cast<std::int64_t>(i));
            if (inter.c1 != 0.0) f += inter.c1 * std::tanh(ys[i] / inter.s1);
            if (inter.c2 != 0.0) f += inter.c2 * std::tanh(ms[i] / inter.s2);
            r[i] = vts[i] + problem.beta * lvs[i] + 0.5 * kappa2[i] * grad_sq + f;
        }
    }

    // residual R2 of the Fokker-Planck equation
    auto mt = time_derivative(m);
    auto lap_m = laplacian(m, BoundaryCondition::Neumann0);
    auto div = divergence_of_flux(m, v, problem.kappa2(), FluxScheme::centered);
    ScalarField r2(problem.grid, FieldKind::spacetime);
    for (std::int64_t i = 0; i < r2.size(); ++i)
        r2[i] = mt[i] - problem.beta * lap_m[i] + div[i];

    if (!r1.all_finite() || !r2.all_finite())
        throw std::runtime_error("objective: non-finite residual");

    double J = 0.0;
    for (std::int64_t i = 0; i < r1.size(); ++i)
        J += ws.qt_weight[static_cast<std::size_t>(i)] * (r1[i] * r1[i] + r2[i] * r2[i]);

    if (grad_v) {
        ScalarField* pv = grad_v;
        ScalarField* pm = grad_m;
        std::fill(pv->values().begin(), pv->values().end(), 0.0);
        std::fill(pm->values().begin(), pm->values().end(), 0.0);
        ScalarField s1(problem.grid, FieldKind::spacetime);
        ScalarField s2(problem.grid, FieldKind::spacetime);
        for (std::int64_t i = 0; i < s1.size(); ++i) {
            s1[i] = 2.0 * ws.qt_weight[static_cast<std::size_t>(i)] * r1[i];
            s2[i] = 2.0 * ws.qt_weight[static_cast<std::size_t>(i)] * r2[i];
        }

        // dJ/dv from R1: D_t^T s1 + beta Lap^T s1 + sum_ax G_ax^T(kappa2 dv_ax s1)
        time_derivative_transpose_add(s1, *pv);
        ScalarField beta_s1 = s1;
        for (std::int64_t i = 0; i < beta_s1.size(); ++i) beta_s1[i] *= problem.beta;
        laplacian_transpose_add(beta_s1, *pv, BoundaryCondition::Neumann0);
        for (int ax = 0; ax < g.dim(); ++ax) {
            ScalarField chain(problem.grid, FieldKind::spacetime);
            const auto& dv = grads_v[static_cast<std::size_t>(ax)];
            for (std::int64_t i = 0; i < chain.size(); ++i)
                chain[i] = kappa2[static_cast<std::size_t>(i) % nsp] * dv[i] * s1[i];
            axis_derivative_transpose_add(chain, *pv, ax, BoundaryCondition::Neumann0);
        }
        // dJ/dv from R2: transpose of v -> div(kappa2 m grad v)
        flux_divergence_v_transpose_add(m, problem.kappa2(), s2, *pv);

        // dJ/dm from R1: interaction chain rules
        if (inter.c1 != 0.0 || inter.c2 != 0.0) {
            std::vector<double> gbuf(nsp), kbuf(nsp);
            const auto& w = g.spatial_weights();
            for (int k = 0; k <= K; ++k) {
                auto s1s = s1.slice(k);
                auto ms = m.slice(k);
                auto ys = kernel_avg.slice(k);
                auto gm = pm->slice(k);
                if (inter.c2 != 0.0) {
                    for (std::size_t i = 0; i < nsp; ++i) {
                        const double c = std::cosh(ms[i] / inter.s2);
                        gm[i] += inter.c2 / (inter.s2 * c * c) * s1s[i];
                    }
                }
                if (inter.c1 != 0.0) {
                    // transpose of the kernel quadrature: w .* K(g ./ w)
                    for (std::size_t i = 0; i < nsp; ++i) {
                        const double c = std::cosh(ys[i] / inter.s1);
                        gbuf[i] = (inter.c1 / (inter.s1 * c * c)) * s1s[i] / w[i];
                    }
                    problem.apply_kernel(gbuf, kbuf);
                    for (std::size_t i = 0; i < nsp; ++i) gm[i] += w[i] * kbuf[i];
                }
            }
        }
        // dJ/dm from R2
        time_derivative_transpose_add(s2, *pm);
        ScalarField mbeta_s2 = s2;
        for (std::int64_t i = 0; i < mbeta_s2.size(); ++i) mbeta_s2[i] *= -problem.beta;
        laplacian_transpose_add(mbeta_s2, *pm, BoundaryCondition::Neumann0);
        flux_divergence_m_transpose_add(v, problem.kappa2(), s2, *pm);
    }

    // data penalties
    {
        ScalarField e_vT = slice_difference(v, K, data.v_T);
        ScalarField gtmp(problem.grid, FieldKind::spatial);
        J += h1_penalty(e_vT, ws.obj.alpha_vT, grad_v ? &gtmp : nullptr);
        if (grad_v) {
            auto target = grad_v->slice(K);
            for (std::size_t i = 0; i < nsp; ++i)
                target[i] += gtmp[static_cast<std::int64_t>(i)];
        }
    }
    {
        ScalarField e_m0 = slice_difference(m, 0, data.m_0);
        ScalarField gtmp(problem.grid, FieldKind::spatial);
        J += h1_penalty(e_m0, ws.obj.alpha_m0, grad_m ? &gtmp : nullptr);
        if (grad_m) {
            auto target = grad_m->slice(0);
            for (std::size_t i = 0; i < nsp; ++i)
                target[i] += gtmp[static_cast<std::int64_t>(i)];
        }
    }
    {
        ScalarField e_mT = slice_difference(m, K, data.m_T);
        ScalarField gtmp(problem.grid, FieldKind::spatial);
        J += l2_penalty(e_mT, ws.obj.alpha_mT, grad_m ? &gtmp : nullptr);
        if (grad_m) {
            auto target = grad_m->slice(K);
            for (std::size_t i = 0; i < nsp; ++i)
                target[i] += gtmp[static_cast<std::int64_t>(i)];
        }
    }
    return J;
}

} // namespace

double objective_and_gradient(const ScalarField& v, const ScalarField& m,
                              const RetrospectiveData& data, const WeightedObjective& obj,
                              const MfgProblem& problem, ScalarField& grad_v,
                              ScalarField& grad_m) {
    ObjectiveWorkspace ws(problem, obj);
    return evaluate(ws, v, m, data, &grad_v, &grad_m);
}

double objective_value(const ScalarField& v, const ScalarField& m,
                       const RetrospectiveData& data, const WeightedObjective& obj,
                       const MfgProblem& problem) {
    ObjectiveWorkspace ws(problem, obj);
    return evaluate(ws, v, m, data, nullptr, nullptr);
}

ErrorBlock error_block(const ScalarField& v_hat, const ScalarField& m_hat,
                       const ScalarField& v_ref, const ScalarField& m_ref) {
    ScalarField dv = v_hat;
    axpy(-1.0, v_ref, dv);
    ScalarField dm = m_hat;
    axpy(-1.0, m_ref, dm);

    ErrorBlock e;
    e.v_dt_l2 = norm(one_sided_time_derivative(dv), NormKind::L2_QT);
    e.v_lap_l2 = norm(laplacian(dv, BoundaryCondition::Neumann0), NormKind::L2_QT);
    e.v_h10 = norm(dv, NormKind::H10_QT);
    e.v_block = e.v_dt_l2 + e.v_lap_l2 + e.v_h10;
    e.v_h21 = norm(dv, NormKind::H21_QT);
    e.m_h10 = norm(dm, NormKind::H10_QT);
    return e;
}

namespace {

class LbfgsMinimizer {
public:
    LbfgsMinimizer(const ObjectiveWorkspace& ws, const RetrospectiveData& data,
                   GridPtr grid, const DescentOptions& opts)
        : ws_(ws), data_(data), grid_(std::move(grid)), opts_(opts),
          v_(grid_, FieldKind::spacetime), m_(grid_, FieldKind::spacetime),
          gv_(grid_, FieldKind::spacetime), gm_(grid_, FieldKind::spacetime) {}

    ReconstructionResult run(const ScalarField& v0, const ScalarField& m0) {
        const std::size_t n = static_cast<std::size_t>(v0.size());
        std::vector<double> x(2 * n), g(2 * n), x_new(2 * n), g_new(2 * n), d(2 * n);
        std::copy(v0.values().begin(), v0.values().end(), x.begin());
        std::copy(m0.values().begin(), m0.values().end(), x.begin() + n);

        ReconstructionResult res{ScalarField(grid_, FieldKind::spacetime),
                                 ScalarField(grid_, FieldKind::spacetime)};
        double J = eval(x, g);
        res.objective_trace.push_back(J);

        std::deque<std::vector<double>> s_hist, y_hist;
        std::deque<double> rho_hist;

        for (int it = 0; it < opts_.max_iter; ++it) {
            const double gnorm = norm2(g);
            res.gradient_norm = gnorm;
            res.iterations = it;
            if (gnorm <= opts_.grad_tol) {
                res.status = ReconStatus::converged;
                finish(res, x);
                return res;
            }

            direction(g, s_hist, y_hist, rho_hist, d);
            double slope = dot(d, g);
            if (!(slope < 0.0)) { // not a descent direction: steepest descent restart
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
                slope = -gnorm * gnorm;
            }

            double step = 1.0;
            bool accepted = false;
            double J_new = J;
            while (step >= opts_.min_step) {
                for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + step * d[i];
                J_new = eval(x_new, g_new);
                if (J_new <= J + opts_.armijo_c * step * slope) {
                    accepted = true;
                    break;
                }
                step *= opts_.backtrack;
            }
            if (!accepted) {
                res.status = ReconStatus::line_search_failure;
                res.message = "line search underflow at iteration " + std::to_string(it) +
                              ", gradient norm " + std::to_string(gnorm);
                finish(res, x);
                return res;
            }

            std::vector<double> s(x.size()), y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                s[i] = x_new[i] - x[i];
                y[i] = g_new[i] - g[i];
            }
            const double sy = dot(s, y);
            if (sy > 1e-14 * norm2(s) * norm2(y)) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(y));
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > opts_.lbfgs_memory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }

            x.swap(x_new);
            g.swap(g_new);
            J = J_new;
            res.objective_trace.push_back(J);
        }

        res.status = ReconStatus::iteration_cap;
        res.iterations = opts_.max_iter;
        res.gradient_norm = norm2(g);
        res.message = "iteration cap reached with gradient norm " +
                      std::to_string(res.gradient_norm);
        finish(res, x);
        return res;
    }

private:
    double eval(const std::vector<double>& x, std::vector<double>& grad) {
        unpack(x);
        const double J = evaluate(ws_, v_, m_, data_, &gv_, &gm_);
        const std::size_t n = static_cast<std::size_t>(v_.size());
        grad.resize(2 * n);
        std::memcpy(grad.data(), gv_.values().data(), n * sizeof(double));
        std::memcpy(grad.data() + n, gm_.values().data(), n * sizeof(double));
        return J;
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return acc;
    }
    static double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

    void direction(const std::vector<double>& g, const std::deque<std::vector<double>>& s,
                   const std::deque<std::vector<double>>& y, const std::deque<double>& rho,
                   std::vector<double>& d) const {
        d.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
        if (s.empty()) return;
        std::vector<double> alpha(s.size());
        for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
            const auto idx = static_cast<std::size_t>(i);
            alpha[idx] = rho[idx] * dot(s[idx], d);
            for (std::size_t j = 0; j < d.size(); ++j) d[j] -= alpha[idx] * y[idx][j];
        }
        const double gamma = dot(s.back(), y.back()) / dot(y.back(), y.back());
        for (std::size_t j = 0; j < d.size(); ++j) d[j] *= gamma;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double beta = rho[i] * dot(y[i], d);
            for (std::size_t j = 0; j < d.size(); ++j) d[j] += (alpha[i] - beta) * s[i][j];
        }
    }

    void unpack(const std::vector<double>& x) {
        const std::size_t n = static_cast<std::size_t>(v_.size());
        std::memcpy(v_.values().data(), x.data(), n * sizeof(double));
        std::memcpy(m_.values().data(), x.data() + n, n * sizeof(double));
    }
    void finish(ReconstructionResult& res, const std::vector<double>& x) {
        unpack(x);
        res.v_hat = v_;
        res.m_hat = m_;
    }

    const ObjectiveWorkspace& ws_;
    const RetrospectiveData& data_;
    GridPtr grid_;
    DescentOptions opts_;
    ScalarField v_, m_, gv_, gm_;
};

ScalarField interpolant_v(const RetrospectiveData& data, GridPtr grid) {
    ScalarField v(grid, FieldKind::spacetime);
    for (int k = 0; k < grid->time_levels(); ++k) {
        auto s = v.slice(k);
        for (std::int64_t i = 0; i < grid->space_size(); ++i)
            s[static_cast<std::size_t>(i)] = data.v_T[i];
    }
    return v;
}

ScalarField interpolant_m(const RetrospectiveData& data, GridPtr grid) {
    ScalarField m(grid, FieldKind::spacetime);
    const double T = grid->time_horizon();
    for (int k = 0; k < grid->time_levels(); ++k) {
        const double th = grid->time(k) / T;
        auto s = m.slice(k);
        for (std::int64_t i = 0; i < grid->space_size(); ++i)
            s[static_cast<std::size_t>(i)] = (1.0 - th) * data.m_0[i] + th * data.m_T[i];
    }
    return m;
}

FitResult fit_loglog(const std::vector<std::pair<double, double>>& pts) {
    FitResult fit;
    fit.points = static_cast<int>(pts.size());
    if (fit.points < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [ld, le] : pts) {
        sx += ld;
        sy += le;
        sxx += ld * ld;
        sxy += ld * le;
    }
    const double n = fit.points;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (auto [ld, le] : pts) {
        const double r = le - (fit.slope * ld + fit.intercept);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

template <typename Fn>
void run_cells(int count, int workers, Fn&& body) {
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(workers, count);
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace

ReconstructionResult reconstruct(const RetrospectiveData& data, const WeightedObjective& obj,
                                 const MfgProblem& problem, const DescentOptions& dopts,
                                 const ScalarField* v_init, const ScalarField* m_init,
                                 const SolutionPair* truth) {
    ObjectiveWorkspace ws(problem, obj);
    LbfgsMinimizer mini(ws, data, problem.grid, dopts);

    ScalarField v0 = v_init ? *v_init : interpolant_v(data, problem.grid);
    ScalarField m0 = m_init ? *m_init : interpolant_m(data, problem.grid);
    auto res = mini.run(v0, m0);
    if (truth)
        res.errors = error_block(res.v_hat, res.m_hat, truth->v, truth->m);
    return res;
}

StabilitySweep stability_sweep(const MfgProblem& problem, const SolutionPair& truth,
                               std::span<const double> delta_grid, int seeds_per_delta,
                               const WeightedObjective& obj, const DescentOptions& dopts,
                               std::uint64_t base_seed, int workers) {
    if (delta_grid.empty() || seeds_per_delta <= 0)
        throw std::invalid_argument("stability_sweep: empty grid or no seeds");

    StabilitySweep sweep;
    const auto data0 = exact_data(problem, truth);

    struct CellSpec {
        double delta;
        std::uint64_t seed;
    };
    std::vector<CellSpec> specs;
    for (double delta : delta_grid)
        for (int s = 0; s < seeds_per_delta; ++s)
            specs.push_back({delta, mix_seed(base_seed, specs.size())});
    sweep.cells.resize(specs.size());

    run_cells(static_cast<int>(specs.size()), workers, [&](int i) {
        const auto& spec = specs[static_cast<std::size_t>(i)];
        auto data = perturb_data(data0, spec.delta, spec.seed);

        SweepCell cell;
        cell.delta = spec.delta;
        cell.seed = spec.seed;
        {
            ScalarField dv = data.v_T, dm0 = data.m_0, dmT = data.m_T;
            axpy(-1.0, data0.v_T, dv);
            axpy(-1.0, data0.m_0, dm0);
            axpy(-1.0, data0.m_T, dmT);
            cell.data_norm = norm(dv, NormKind::H1_Omega) + norm(dmT, NormKind::L2_Omega) +
                             norm(dm0, NormKind::H1_Omega);
        }
        auto res = reconstruct(data, obj, problem, dopts, nullptr, nullptr, &truth);
        cell.errors = *res.errors;
        cell.status = res.status;
        cell.iterations = res.iterations;
        cell.final_objective = res.objective_trace.back();
        cell.gradient_norm = res.gradient_norm;
        sweep.cells[static_cast<std::size_t>(i)] = std::move(cell);
    });

    // per-delta averages of log errors over converged cells with delta > 0
    auto fit_of = [&](auto pick) {
        std::vector<std::pair<double, double>> pts;
        for (double delta : delta_grid) {
            if (!(delta > 0.0)) continue;
            double acc = 0.0;
            int n = 0;
            for (const auto& cell : sweep.cells) {
                if (cell.delta != delta || cell.status != ReconStatus::converged) continue;
                const double err = pick(cell.errors);
                if (err > 0.0) {
                    acc += std::log(err);
                    ++n;
                }
            }
            if (n > 0) pts.push_back({std::log(delta), acc / n});
        }
        return fit_loglog(pts);
    };
    sweep.fit_m_h10 = fit_of([](const ErrorBlock& e) { return e.m_h10; });
    sweep.fit_v_block = fit_of([](const ErrorBlock& e) { return e.v_block; });
    sweep.fit_v_h21 = fit_of([](const ErrorBlock& e) { return e.v_h21; });
    for (const auto& cell : sweep.cells)
        if (cell.status != ReconStatus::converged) ++sweep.excluded;

    AprioriBounds measured{problem.interaction.lipschitz_bound(),
                           std::max(problem.kernel.sup_bound(), problem.kappa_c1_norm()),
                           1.0, 1.0};
    sweep.truth_bounds = check_bounds(truth, measured);
    measured.M3 = std::max({sweep.truth_bounds.sup_v, sweep.truth_bounds.sup_grad_v,
                            sweep.truth_bounds.sup_lap_v});
    measured.M4 = std::max(sweep.truth_bounds.sup_m, sweep.truth_bounds.sup_grad_m);
    sweep.measured_M = measured.M();
    sweep.truth_residuals = truth.residual_norms;
    return sweep;
}

UniquenessReport uniqueness_check(const MfgProblem& problem, const SolutionPair& truth,
                                  const WeightedObjective& obj, int n_inits,
                                  const DescentOptions& dopts, std::uint64_t seed,
                                  int workers) {
    if (n_inits < 1) throw std::invalid_argument("uniqueness_check: need n_inits >= 1");
    const auto data = exact_data(problem, truth);

    UniquenessReport rep;
    rep.n_inits = n_inits;

    std::vector<std::optional<ReconstructionResult>> runs(static_cast<std::size_t>(n_inits));
    run_cells(n_inits, workers, [&](int i) {
        ScalarField v0 = interpolant_v(data, problem.grid);
        ScalarField m0 = interpolant_m(data, problem.grid);
        if (i > 0) { // init 0 is the plain interpolant, the rest are displaced
            CosineSeriesSpec spec;
            spec.decay = 1.5;
            auto dv = random_cosine_series(problem.grid->domain(),
                                           mix_seed(seed, 2 * static_cast<std::uint64_t>(i)),
                                           spec, true)
                          .sample_spacetime(problem.grid);
            auto dm = random_cosine_series(problem.grid->domain(),
                                           mix_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1),
                                           spec, true)
                          .sample_spacetime(problem.grid);
            const double scale_v =
                0.25 * std::max(1.0, v0.max_abs()) / std::max(1e-12, dv.max_abs());
            const double scale_m =
                0.25 * std::max(1.0, m0.max_abs()) / std::max(1e-12, dm.max_abs());
            axpy(scale_v, dv, v0);
            axpy(scale_m, dm, m0);
        }
        runs[static_cast<std::size_t>(i)] =
            reconstruct(data, obj, problem, dopts, &v0, &m0, &truth);
    });

    for (const auto& r : runs) {
        rep.final_objectives.push_back(r.objective_trace.back());
        if (r.status != ReconStatus::converged) ++rep.non_converged;
    }

    rep.solution_norm =
        norm(runs[0].v_hat, NormKind::H10_QT) + norm(runs[0].m_hat, NormKind::H10_QT);
    for (int i = 0; i < n_inits; ++i) {
        for (int j = i + 1; j < n_inits; ++j) {
            ScalarField dv = runs[static_cast<std::size_t>(i)].v_hat;
            axpy(-1.0, runs[static_cast<std::size_t>(j)].v_hat, dv);
            ScalarField dm = runs[static_cast<std::size_t>(i)].m_hat;
            axpy(-1.0, runs[static_cast<std::size_t>(j)].m_hat, dm);
            const double d = norm(dv, NormKind::H10_QT) + norm(dm, NormKind::H10_QT);
            rep.max_pairwise_h10 = std::max(rep.max_pairwise_h10, d);
        }
    }
    rep.relative = rep.max_pairwise_h10 / std::max(rep.solution_norm, 1e-300);
    return rep;
}

} // namespace mfglab
