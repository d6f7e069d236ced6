#include "mfglab/carleman.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mfglab/quadrature.hpp"

namespace mfglab {

double weight_log_value(const CarlemanWeight& w, double t) {
    if (t < -1e-12 || t > w.T * (1.0 + 1e-12))
        throw std::out_of_range("weight_log_value: t outside [0, T]");
    return 2.0 * w.lambda * std::pow(t + w.a, w.nu);
}

double normalized_weight(const CarlemanWeight& w, double t) {
    const double log_phi = weight_log_value(w, t);
    const double log_top = 2.0 * w.lambda * std::pow(w.T + w.a, w.nu);
    return std::exp(w.sigma * (log_phi - log_top));
}

namespace {

void validate_weight(const CarlemanWeight& w) {
    if (!(w.lambda > 0.0)) throw std::invalid_argument("CarlemanWeight: lambda must be > 0");
    if (!(w.nu > 2.0)) throw std::invalid_argument("CarlemanWeight: nu must be > 2");
    if (!(w.a > 1.0)) throw std::invalid_argument("CarlemanWeight: a must be > 1");
    if (w.sigma != 1 && w.sigma != 2)
        throw std::invalid_argument("CarlemanWeight: sigma must be 1 or 2");
}

std::string node_coords(const SpaceTimeGrid& g, std::int64_t sp) {
    std::vector<int> idx(g.dim());
    g.decode(sp, idx);
    std::ostringstream os;
    os << "(";
    for (int d = 0; d < g.dim(); ++d)
        os << (d ? ", " : "") << g.coordinate(d, idx[d]);
    os << ")";
    return os.str();
}

double slice_sq(std::span<const double> s, const SpaceTimeGrid& g) {
    return weighted_l2_omega_sq(s, g);
}

} // namespace

void require_bc_compliance(const ScalarField& u, BoundaryCondition bc, double tol_factor) {
    const auto& g = u.grid();
    double h_max = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) h_max = std::max(h_max, g.spacing(ax));
    const double tol = tol_factor * h_max * h_max * std::max(1.0, u.max_abs());

    double worst = 0.0;
    int worst_level = 0, worst_axis = 0, worst_side = -1;
    std::int64_t worst_node = 0;
    const int levels = u.spatial() ? 1 : g.time_levels();

    if (bc == BoundaryCondition::Neumann0) {
        for (int ax = 0; ax < g.dim(); ++ax) {
            auto d = one_sided_axis_derivative(u, ax);
            for (int k = 0; k < levels; ++k) {
                auto s = d.slice(k);
                for (int side : {-1, +1}) {
                    for (auto sp : g.face(ax, side)) {
                        const double v = std::abs(s[static_cast<std::size_t>(sp)]);
                        if (v > worst) {
                            worst = v;
                            worst_node = sp;
                            worst_level = k;
                            worst_axis = ax;
                            worst_side = side;
                        }
                    }
                }
            }
        }
    } else {
        for (int k = 0; k < levels; ++k) {
            auto s = u.slice(k);
            for (int ax = 0; ax < g.dim(); ++ax) {
                for (int side : {-1, +1}) {
                    for (auto sp : g.face(ax, side)) {
                        const double v = std::abs(s[static_cast<std::size_t>(sp)]);
                        if (v > worst) {
                            worst = v;
                            worst_node = sp;
                            worst_level = k;
                            worst_axis = ax;
                            worst_side = side;
                        }
                    }
                }
            }
        }
    }

    if (worst > tol) {
        std::ostringstream os;
        os << (bc == BoundaryCondition::Neumann0 ? "zero-Neumann" : "zero-Dirichlet")
           << " compliance violated: |"
           << (bc == BoundaryCondition::Neumann0 ? "d_n u" : "u") << "| = " << worst
           << " > tol " << tol << " at node " << node_coords(g, worst_node) << " on face x_"
           << worst_axis + 1 << (worst_side > 0 ? "=+A" : "=-A");
        if (!u.spatial()) os << ", time level " << worst_level;
        throw std::invalid_argument(os.str());
    }
}

IdentityReport verify_identity(const ScalarField& u, BoundaryCondition bc) {
    if (!u.spatial())
        throw std::invalid_argument("verify_identity: expects a spatial field");
    require_bc_compliance(u, bc);
    const auto& g = u.grid();

    IdentityReport rep;
    auto lap = laplacian(u, bc);
    ScalarField lap_sq(u.grid_ptr(), FieldKind::spatial);
    for (std::int64_t i = 0; i < lap.size(); ++i) lap_sq[i] = lap[i] * lap[i];
    rep.lhs = integrate(lap_sq, Region::Omega);

    for (int i = 0; i < g.dim(); ++i) {
        for (int j = 0; j < g.dim(); ++j) {
            auto d = mixed_second(u, i, j, bc);
            ScalarField d_sq(u.grid_ptr(), FieldKind::spatial);
            for (std::int64_t p = 0; p < d.size(); ++p) d_sq[p] = d[p] * d[p];
            rep.rhs += integrate(d_sq, Region::Omega);
        }
    }

    rep.relative_gap = std::abs(rep.lhs - rep.rhs) / std::max(rep.lhs, 1e-30);
    for (int ax = 0; ax < g.dim(); ++ax) rep.h = std::max(rep.h, g.spacing(ax));
    return rep;
}

double EstimateReport::margin(double C) const {
    if (kind == EstimateKind::forward)
        return lhs - principal - C * (gradient + zero_order) + boundary_T;
    return lhs - C * (gradient + zero_order) + boundary_T + boundary_0;
}

double EstimateReport::max_feasible_constant() const {
    const double num = margin(0.0);
    const double den = gradient + zero_order;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

std::string EstimateReport::which_name() const {
    if (kind == EstimateKind::backward) return "backward";
    return variant == EstimateVariant::mixed_form ? "forward_prism" : "forward";
}

namespace {

struct SliceIntegrals {
    std::vector<double> residual_sq; // (u_t +- beta lap u)^2 per slice
    std::vector<double> ut_sq;
    std::vector<double> principal; // beta^2 P per slice
    std::vector<double> grad_sq;
    std::vector<double> u_sq;
    double grad_sq_T = 0.0, u_sq_T = 0.0;
    double grad_sq_0 = 0.0, u_sq_0 = 0.0;
};

SliceIntegrals slice_integrals(const ScalarField& u, double beta, double sign_lap,
                               EstimateKind kind, EstimateVariant variant) {
    const auto& g = u.grid();
    const int K = g.time_levels();
    SliceIntegrals out;
    out.residual_sq.resize(K);
    out.ut_sq.resize(K);
    out.principal.assign(K, 0.0);
    out.grad_sq.assign(K, 0.0);
    out.u_sq.resize(K);

    auto ut = time_derivative(u);
    auto lap = laplacian(u, BoundaryCondition::Neumann0);

    ScalarField res(u.grid_ptr(), FieldKind::spacetime);
    for (std::int64_t i = 0; i < u.size(); ++i)
        res[i] = ut[i] + sign_lap * beta * lap[i];
    for (int k = 0; k < K; ++k) {
        out.residual_sq[k] = slice_sq(res.slice(k), g);
        out.ut_sq[k] = slice_sq(ut.slice(k), g);
        out.u_sq[k] = slice_sq(u.slice(k), g);
    }

    for (int ax = 0; ax < g.dim(); ++ax) {
        auto d = axis_derivative(u, ax, BoundaryCondition::Neumann0);
        for (int k = 0; k < K; ++k) out.grad_sq[k] += slice_sq(d.slice(k), g);
        out.grad_sq_T += slice_sq(d.slice(K - 1), g);
        out.grad_sq_0 += slice_sq(d.slice(0), g);
    }
    out.u_sq_T = out.u_sq[K - 1];
    out.u_sq_0 = out.u_sq[0];

    if (kind == EstimateKind::forward) {
        if (variant == EstimateVariant::laplacian_form) {
            for (int k = 0; k < K; ++k)
                out.principal[k] = beta * beta * slice_sq(lap.slice(k), g);
        } else {
            for (int i = 0; i < g.dim(); ++i) {
                for (int j = 0; j < g.dim(); ++j) {
                    auto d = mixed_second(u, i, j, BoundaryCondition::Neumann0);
                    for (int k = 0; k < K; ++k)
                        out.principal[k] += beta * beta * slice_sq(d.slice(k), g);
                }
            }
        }
    }
    return out;
}

double weighted_time_sum(const std::vector<double>& slice_vals, const SpaceTimeGrid& g,
                         const CarlemanWeight& w) {
    double acc = 0.0;
    for (int k = 0; k < g.time_levels(); ++k)
        acc += g.time_weight(k) * normalized_weight(w, g.time(k)) * slice_vals[k];
    return acc;
}

EstimateReport estimate_terms(const ScalarField& u, const CarlemanWeight& w_in,
                              double beta, EstimateKind kind, EstimateVariant variant) {
    if (u.spatial())
        throw std::invalid_argument("estimate terms: expects a space-time field");
    CarlemanWeight w = w_in;
    w.T = u.grid().time_horizon();
    validate_weight(w);
    require_bc_compliance(u, BoundaryCondition::Neumann0);

    const auto& g = u.grid();
    const double sign_lap = kind == EstimateKind::forward ? +1.0 : -1.0;
    auto si = slice_integrals(u, beta, sign_lap, kind, variant);

    EstimateReport rep;
    rep.kind = kind;
    rep.variant = variant;
    rep.lambda = w.lambda;
    rep.nu = w.nu;
    rep.a = w.a;
    rep.sigma = w.sigma;
    rep.log_common_factor = w.sigma * 2.0 * w.lambda * std::pow(w.T + w.a, w.nu);

    rep.lhs = weighted_time_sum(si.residual_sq, g, w);

    const double lam = w.lambda, nu = w.nu;
    if (kind == EstimateKind::forward) {
        std::vector<double> prin(si.principal.size());
        for (std::size_t k = 0; k < prin.size(); ++k)
            prin[k] = 0.25 * si.ut_sq[k] + si.principal[k];
        rep.principal = weighted_time_sum(prin, g, w);
        rep.gradient = lam * nu * weighted_time_sum(si.grad_sq, g, w);
        rep.zero_order = lam * lam * nu * nu * weighted_time_sum(si.u_sq, g, w);
        // production of phi^sigma at t = T; its normalized factor is exactly 1
        rep.boundary_T = si.grad_sq_T + lam * nu * std::pow(w.T + w.a, nu) * si.u_sq_T;
    } else {
        rep.gradient = std::sqrt(nu) * beta * weighted_time_sum(si.grad_sq, g, w);
        rep.zero_order = lam * nu * nu * weighted_time_sum(si.u_sq, g, w);
        rep.boundary_T = lam * nu * std::pow(w.T + w.a, nu - 1.0) * si.u_sq_T;
        // phi^sigma(0) over the common factor; underflow to zero only drops
        // a nonnegative add-back, which tightens the check
        const double log_ratio =
            w.sigma * 2.0 * lam * (std::pow(w.a, nu) - std::pow(w.T + w.a, nu));
        rep.boundary_0 = std::exp(log_ratio) * (si.grad_sq_0 + std::sqrt(nu) * si.u_sq_0);
    }
    return rep;
}

} // namespace

EstimateReport forward_estimate_terms(const ScalarField& u, const CarlemanWeight& w,
                                      double beta, EstimateVariant variant) {
    return estimate_terms(u, w, beta, EstimateKind::forward, variant);
}

EstimateReport backward_estimate_terms(const ScalarField& u, const CarlemanWeight& w,
                                       double beta) {
    return estimate_terms(u, w, beta, EstimateKind::backward,
                          EstimateVariant::laplacian_form);
}

CalibrationResult calibrate_constant(EstimateKind kind, EstimateVariant variant,
                                     std::span<const ScalarField> family,
                                     std::span<const double> lambda_grid, double nu,
                                     double a, int sigma, double beta) {
    if (family.empty())
        throw std::invalid_argument("calibrate_constant: empty family");
    if (lambda_grid.empty())
        throw std::invalid_argument("calibrate_constant: empty lambda grid");

    CalibrationResult result;
    for (std::size_t mi = 0; mi < family.size(); ++mi) {
        for (double lam : lambda_grid) {
            CarlemanWeight w{lam, nu, a, family[mi].grid().time_horizon(), sigma};
            EstimateReport rep = kind == EstimateKind::forward
                                     ? forward_estimate_terms(family[mi], w, beta, variant)
                                     : backward_estimate_terms(family[mi], w, beta);
            result.reports.push_back(rep);
            result.report_member.push_back(static_cast<int>(mi));
            result.report_lambda.push_back(lam);
        }
    }

    constexpr double kUpperBracket = 1e15;
    double scale = 0.0;
    for (const auto& rep : result.reports)
        scale = std::max(scale, rep.gradient + rep.zero_order);
    if (scale <= 1e-300) {
        result.degenerate = true;
        result.constant = kUpperBracket;
        result.lambda_star = lambda_grid.front();
        return result;
    }

    // smallest lambda threshold that admits some C > 0 on {lambda >= lambda*}
    for (std::size_t start = 0; start < lambda_grid.size(); ++start) {
        const double lambda_star = lambda_grid[start];
        double bound = std::numeric_limits<double>::infinity();
        int binding = -1;
        for (std::size_t r = 0; r < result.reports.size(); ++r) {
            if (result.report_lambda[r] < lambda_star) continue;
            const double c = result.reports[r].max_feasible_constant();
            if (c < bound) {
                bound = c;
                binding = static_cast<int>(r);
            }
        }
        if (!(bound > 0.0)) continue;

        auto feasible = [&](double C) {
            for (std::size_t r = 0; r < result.reports.size(); ++r) {
                if (result.report_lambda[r] < lambda_star) continue;
                if (result.reports[r].margin(C) < 0.0) return false;
            }
            return true;
        };

        double lo = 0.0, hi = 1.0;
        while (hi < kUpperBracket && feasible(hi)) {
            lo = hi;
            hi *= 2.0;
        }
        if (hi >= kUpperBracket) {
            lo = kUpperBracket;
        } else {
            while (hi - lo > 1e-3 * hi) {
                const double mid = 0.5 * (lo + hi);
                (feasible(mid) ? lo : hi) = mid;
            }
        }

        result.constant = lo;
        result.lambda_star = lambda_star;
        result.binding_member =
            binding >= 0 ? result.report_member[static_cast<std::size_t>(binding)] : -1;
        result.binding_lambda =
            binding >= 0 ? result.report_lambda[static_cast<std::size_t>(binding)] : 0.0;
        return result;
    }

    throw std::runtime_error(
        "calibrate_constant: no C > 0 satisfies the estimate on any lambda "
        "threshold; this signals a discretization defect rather than a "
        "property of the estimate");
}

} // namespace mfglab
