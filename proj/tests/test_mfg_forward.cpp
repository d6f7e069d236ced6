#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfglab/mfg.hpp"
#include "mfglab/quadrature.hpp"

using namespace mfglab;

namespace {
constexpr double kPi = std::numbers::pi;

GridPtr make_grid(std::vector<double> half, double T, std::vector<int> nodes, int steps) {
    return std::make_shared<SpaceTimeGrid>(PrismDomain(std::move(half)), T,
                                           std::move(nodes), steps);
}

ScalarField uniform_density(GridPtr g) {
    ScalarField m0(g, FieldKind::spatial, 1.0);
    normalize_mass(m0);
    return m0;
}

MfgProblem heat_problem(GridPtr g, double beta,
                        const std::function<double(std::span<const double>)>& vT) {
    return MfgProblem(g, beta, ScalarField(g, FieldKind::spatial, 0.0), InteractionSpec{},
                      KernelSpec{}, ScalarField::sample_spatial(g, vT),
                      uniform_density(g));
}

} // namespace

TEST_CASE("bellman: constants are fixed points of the heat flow") {
    auto g = make_grid({1.0}, 1.0, {17}, 8);
    auto prob = heat_problem(g, 1.0, [](std::span<const double>) { return 3.25; });
    ScalarField m(g, FieldKind::spacetime, 1.0);
    auto v = solve_bellman_backward(m, prob);
    for (std::int64_t i = 0; i < v.size(); ++i)
        CHECK(v[i] == doctest::Approx(3.25).epsilon(1e-10));
}

TEST_CASE("bellman: heat kernel decay of a Neumann mode") {
    // oracle: with kappa = 0, F = 0 the equation is v_t + beta v_xx = 0 run
    // backward from v_T = cos(pi x), so v(x,t) = exp(-beta pi^2 (T-t)) cos(pi x)
    const double beta = 1.0, T = 0.25;
    double prev = 0.0, order = 0.0;
    for (int level = 0; level < 2; ++level) {
        const int n = level == 0 ? 33 : 65;
        const int steps = level == 0 ? 32 : 128; // dt ~ h^2 refinement
        auto g = make_grid({1.0}, T, {n}, steps);
        auto prob = heat_problem(
            g, beta, [](std::span<const double> x) { return std::cos(kPi * x[0]); });
        ScalarField m(g, FieldKind::spacetime, 0.5);
        auto v = solve_bellman_backward(m, prob);

        auto exact = ScalarField::sample_spacetime(g, [&](std::span<const double> x, double t) {
            return std::exp(-beta * kPi * kPi * (T - t)) * std::cos(kPi * x[0]);
        });
        const double err = max_abs_difference(v, exact);
        if (level) order = std::log2(prev / err);
        prev = err;
        CHECK(err <= 0.05);
    }
    CHECK(order >= 1.7); // dt ~ h^2 joint refinement of the first-order scheme
}

TEST_CASE("bellman: manufactured solution with Hamiltonian, time order >= 0.9") {
    // v*(x,t) = cos(pi x)(1+t)^2, kappa = 0.6 + 0.2 cos(pi x);
    // g0 = -(v*_t + beta lap v* + kappa^2 |grad v*|^2 / 2)
    const double beta = 0.7, T = 0.5;
    auto vstar = [](double x, double t) { return std::cos(kPi * x) * (1.0 + t) * (1.0 + t); };
    auto kappa_fn = [](double x) { return 0.6 + 0.2 * std::cos(kPi * x); };

    double prev = 0.0, order = 0.0;
    const int n = 257; // fine space so the dt error dominates
    for (int steps : {8, 16, 32}) {
        auto g = make_grid({1.0}, T, {n}, steps);
        auto kappa = ScalarField::sample_spatial(
            g, [&](std::span<const double> x) { return kappa_fn(x[0]); });
        InteractionSpec inter;
        inter.g0 = ScalarField::sample_spacetime(g, [&](std::span<const double> xs, double t) {
            const double x = xs[0];
            const double A = (1.0 + t) * (1.0 + t);
            const double vt = std::cos(kPi * x) * 2.0 * (1.0 + t);
            const double lap = -kPi * kPi * std::cos(kPi * x) * A;
            const double gsq = kPi * kPi * std::sin(kPi * x) * std::sin(kPi * x) * A * A;
            const double k2 = kappa_fn(x) * kappa_fn(x);
            return -(vt + beta * lap + 0.5 * k2 * gsq);
        });
        MfgProblem prob(g, beta, kappa, std::move(inter), KernelSpec{},
                        ScalarField::sample_spatial(
                            g, [&](std::span<const double> x) { return vstar(x[0], T); }),
                        uniform_density(g));
        ScalarField m(g, FieldKind::spacetime, 0.5);
        auto v = solve_bellman_backward(m, prob);
        auto exact = ScalarField::sample_spacetime(
            g, [&](std::span<const double> x, double t) { return vstar(x[0], t); });
        const double err = max_abs_difference(v, exact);
        if (prev > 0.0) order = std::log2(prev / err);
        prev = err;
    }
    CHECK(order >= 0.9);
}

TEST_CASE("bellman: manufactured solution, spatial order >= 1.8 with the heun scheme") {
    const double beta = 0.7, T = 0.5;
    auto vstar = [](double x, double t) { return std::cos(kPi * x) * (1.0 + 0.5 * t * t); };
    auto kappa_fn = [](double x) { return 0.6 + 0.2 * std::cos(kPi * x); };
    SolverOptions opts;
    opts.scheme = TimeScheme::imex_heun;

    double prev = 0.0, order = 0.0;
    for (int level = 0; level < 2; ++level) {
        const int n = level == 0 ? 33 : 65;
        const int steps = level == 0 ? 16 : 32; // dt ~ h, second order in both
        auto g = make_grid({1.0}, T, {n}, steps);
        auto kappa = ScalarField::sample_spatial(
            g, [&](std::span<const double> x) { return kappa_fn(x[0]); });
        InteractionSpec inter;
        inter.g0 = ScalarField::sample_spacetime(g, [&](std::span<const double> xs, double t) {
            const double x = xs[0];
            const double A = 1.0 + 0.5 * t * t;
            const double vt = std::cos(kPi * x) * t;
            const double lap = -kPi * kPi * std::cos(kPi * x) * A;
            const double gsq = kPi * kPi * std::sin(kPi * x) * std::sin(kPi * x) * A * A;
            const double k2 = kappa_fn(x) * kappa_fn(x);
            return -(vt + beta * lap + 0.5 * k2 * gsq);
        });
        MfgProblem prob(g, beta, kappa, std::move(inter), KernelSpec{},
                        ScalarField::sample_spatial(
                            g, [&](std::span<const double> x) { return vstar(x[0], T); }),
                        uniform_density(g));
        ScalarField m(g, FieldKind::spacetime, 0.5);
        auto v = solve_bellman_backward(m, prob, opts);
        auto exact = ScalarField::sample_spacetime(
            g, [&](std::span<const double> x, double t) { return vstar(x[0], t); });
        const double err = max_abs_difference(v, exact);
        if (prev > 0.0) order = std::log2(prev / err);
        prev = err;
    }
    CHECK(order >= 1.8);
}

TEST_CASE("fokker-planck: uniform density is stationary under constant v") {
    auto g = make_grid({1.0, 1.0}, 1.0, {9, 9}, 8);
    auto prob = heat_problem(g, 0.5, [](std::span<const double>) { return 1.0; });
    ScalarField v(g, FieldKind::spacetime, 2.0);
    auto m = solve_fokker_planck_forward(v, prob);
    for (std::int64_t i = 0; i < m.size(); ++i)
        CHECK(m[i] == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("fokker-planck: Neumann heat modes decay at the analytic rate") {
    const double beta = 0.3, T = 0.5;
    auto g = make_grid({1.0}, T, {65}, 64);
    auto vT = [](std::span<const double>) { return 1.0; };
    ScalarField m0 = ScalarField::sample_spatial(g, [](std::span<const double> x) {
        return 0.5 * (1.0 + 0.1 * std::cos(kPi * x[0]));
    });
    MfgProblem prob(g, beta, ScalarField(g, FieldKind::spatial, 0.0), InteractionSpec{},
                    KernelSpec{}, ScalarField::sample_spatial(g, vT), m0);
    SolverOptions opts;
    opts.scheme = TimeScheme::imex_heun;
    ScalarField v(g, FieldKind::spacetime, 1.0);
    auto m = solve_fokker_planck_forward(v, prob, opts);

    auto exact = ScalarField::sample_spacetime(g, [&](std::span<const double> x, double t) {
        return 0.5 * (1.0 + 0.1 * std::exp(-beta * kPi * kPi * t) * std::cos(kPi * x[0]));
    });
    CHECK(max_abs_difference(m, exact) <= 2e-4);
}

TEST_CASE("fokker-planck: exact mass conservation in a coupled run") {
    auto g = make_grid({1.0}, 1.0, {33}, 32);
    auto kappa = ScalarField::sample_spatial(
        g, [](std::span<const double> x) { return 0.5 + 0.2 * std::cos(kPi * x[0]); });
    ScalarField m0 = ScalarField::sample_spatial(g, [](std::span<const double> x) {
        return 1.0 + 0.3 * std::cos(kPi * x[0]);
    });
    normalize_mass(m0);
    MfgProblem prob(g, 0.5, kappa, InteractionSpec{}, KernelSpec{},
                    ScalarField::sample_spatial(
                        g, [](std::span<const double> x) { return 0.4 * std::cos(kPi * x[0]); }),
                    m0);
    auto v = solve_bellman_backward(ScalarField(g, FieldKind::spacetime, 0.5), prob);
    auto m = solve_fokker_planck_forward(v, prob);

    const double mass0 = integrate_time_slice(m, 0);
    for (int k = 0; k <= g->time_steps(); ++k)
        CHECK(std::abs(integrate_time_slice(m, k) - mass0) <= 1e-12);

    // upwind flux with CFL satisfied keeps the density nonnegative
    double min_m = 1e300;
    for (std::int64_t i = 0; i < m.size(); ++i) min_m = std::min(min_m, m[i]);
    CHECK(min_m >= -1e-12);
}

TEST_CASE("fokker-planck: CFL guard refuses wild advection unless overridden") {
    auto g = make_grid({1.0}, 1.0, {17}, 4); // dt = 0.25, h = 0.125
    auto kappa = ScalarField(g, FieldKind::spatial, 2.0);
    ScalarField m0 = uniform_density(g);
    MfgProblem prob(g, 0.1, kappa, InteractionSpec{}, KernelSpec{},
                    ScalarField(g, FieldKind::spatial, 0.0), m0);
    auto v = ScalarField::sample_spacetime(g, [](std::span<const double> x, double) {
        return 3.0 * std::cos(kPi * x[0]);
    });
    CHECK_THROWS_WITH_AS(solve_fokker_planck_forward(v, prob),
                         doctest::Contains("CFL"), std::runtime_error);
    SolverOptions opts;
    opts.allow_cfl_violation = true;
    CHECK_NOTHROW(solve_fokker_planck_forward(v, prob, opts));
}

TEST_CASE("picard: decoupled problem converges in at most two sweeps") {
    auto g = make_grid({1.0}, 0.5, {33}, 16);
    auto prob = heat_problem(
        g, 1.0, [](std::span<const double> x) { return std::cos(kPi * x[0]); });
    SolverOptions opts;
    opts.picard_tol = 1e-12;
    auto pair = picard_solve(prob, opts);
    CHECK(pair.picard_iterations <= 2);
    CHECK(pair.final_update_norm <= 1e-12);
    // residual of the fixed point sits at time-truncation level, O(dt)
    CHECK(pair.residual_norms.first <= 0.5);
    CHECK(pair.residual_norms.second <= 0.5);

    SolverOptions fine = opts;
    fine.scheme = TimeScheme::imex_heun;
    auto pair2 = picard_solve(prob, fine);
    CHECK(pair2.residual_norms.first <= 0.2 * pair.residual_norms.first);
    CHECK(pair2.residual_norms.second <= 0.5);
}

TEST_CASE("picard: weak coupling contracts geometrically and ignores damping") {
    auto g = make_grid({1.0}, 0.5, {33}, 32);
    auto kappa = ScalarField::sample_spatial(
        g, [](std::span<const double> x) { return 0.5 + 0.2 * std::cos(kPi * x[0]); });
    ScalarField m0 = ScalarField::sample_spatial(g, [](std::span<const double> x) {
        return 1.0 + 0.2 * std::cos(kPi * x[0]);
    });
    normalize_mass(m0);
    InteractionSpec inter;
    inter.c1 = 0.05;
    inter.c2 = 0.05;
    KernelSpec kern{0.5, 1.0};
    MfgProblem prob(g, 0.5, kappa, inter, kern,
                    ScalarField::sample_spatial(
                        g, [](std::span<const double> x) { return 0.3 * std::cos(kPi * x[0]); }),
                    m0);

    SolverOptions full_step;
    full_step.picard_damping = 1.0;
    full_step.picard_tol = 1e-10;
    auto pair1 = picard_solve(prob, full_step);
    const auto& trace = pair1.update_trace;
    REQUIRE(trace.size() >= 3);
    for (std::size_t i = 1; i + 1 < trace.size(); ++i)
        CHECK(trace[i + 1] <= 0.9 * trace[i] + 1e-14);

    SolverOptions damped = full_step;
    damped.picard_damping = 0.5;
    auto pair2 = picard_solve(prob, damped);
    CHECK(max_abs_difference(pair1.m, pair2.m) <= 1e-8);
    CHECK(max_abs_difference(pair1.v, pair2.v) <= 1e-8);
}

TEST_CASE("system residual: zero problem and first-order perturbation response") {
    auto g = make_grid({1.0}, 0.5, {17}, 8);
    auto prob = heat_problem(g, 1.0, [](std::span<const double>) { return 0.0; });
    ScalarField zero(g, FieldKind::spacetime);
    auto r = system_residual(zero, zero, prob);
    CHECK(r.first == 0.0);
    CHECK(r.second == 0.0);

    SolverOptions opts;
    opts.picard_tol = 1e-12;
    auto heat = heat_problem(
        g, 1.0, [](std::span<const double> x) { return 0.5 * std::cos(kPi * x[0]); });
    auto pair = picard_solve(heat, opts);
    const auto base = system_residual(pair.v, pair.m, heat);

    auto bump = ScalarField::sample_spacetime(g, [](std::span<const double> x, double t) {
        return std::cos(kPi * x[0]) * (1.0 + t);
    });
    double prev_growth = 0.0;
    for (double eps : {1e-3, 5e-4}) {
        ScalarField v_pert = pair.v;
        axpy(eps, bump, v_pert);
        auto r_pert = system_residual(v_pert, pair.m, heat);
        const double growth = r_pert.first - base.first;
        CHECK(growth > 0.0);
        if (prev_growth > 0.0)
            CHECK(prev_growth / growth == doctest::Approx(2.0).epsilon(0.35));
        prev_growth = growth;
    }
}

TEST_CASE("manufactured coupled pair: residual norms shrink under refinement") {
    const double beta = 0.7, T = 0.5;
    auto kappa_fn = [](double x) { return 0.6 + 0.2 * std::cos(kPi * x); };
    double prev = 0.0, order = 0.0;
    for (int level = 0; level < 2; ++level) {
        const int n = level == 0 ? 33 : 65;
        const int steps = level == 0 ? 32 : 128;
        auto g = make_grid({1.0}, T, {n}, steps);
        auto kappa = ScalarField::sample_spatial(
            g, [&](std::span<const double> x) { return kappa_fn(x[0]); });
        InteractionSpec inter;
        inter.g0 = ScalarField::sample_spacetime(g, [&](std::span<const double> xs, double t) {
            const double x = xs[0];
            const double A = 1.0 + 0.5 * t * t;
            const double vt = std::cos(kPi * x) * t;
            const double lap = -kPi * kPi * std::cos(kPi * x) * A;
            const double gsq = kPi * kPi * std::sin(kPi * x) * std::sin(kPi * x) * A * A;
            const double k2 = kappa_fn(x) * kappa_fn(x);
            return -(vt + beta * lap + 0.5 * k2 * gsq);
        });
        MfgProblem prob(g, beta, kappa, std::move(inter), KernelSpec{},
                        ScalarField::sample_spatial(
                            g, [&](std::span<const double> x) {
                                return std::cos(kPi * x[0]) * (1.0 + 0.5 * T * T);
                            }),
                        uniform_density(g));
        auto v = ScalarField::sample_spacetime(g, [&](std::span<const double> x, double t) {
            return std::cos(kPi * x[0]) * (1.0 + 0.5 * t * t);
        });
        auto m = solve_fokker_planck_forward(v, prob);
        auto r = system_residual(v, m, prob);
        const double total = r.first + r.second;
        if (prev > 0.0) order = std::log2(prev / total);
        prev = total;
    }
    CHECK(order >= 0.9);
}

TEST_CASE("check_bounds reports suprema and memberships") {
    auto g = make_grid({1.0}, 1.0, {17}, 8);
    AprioriBounds bounds{1.0, 1.0, 1.0, 1.0};
    SolutionPair zero{ScalarField(g, FieldKind::spacetime),
                      ScalarField(g, FieldKind::spacetime)};
    auto rep = check_bounds(zero, bounds);
    CHECK(rep.v_in_B3);
    CHECK(rep.m_in_B4);

    SolutionPair big{ScalarField(g, FieldKind::spacetime, 2.0),
                     ScalarField(g, FieldKind::spacetime)};
    auto rep2 = check_bounds(big, bounds);
    CHECK_FALSE(rep2.v_in_B3);
    CHECK(rep2.sup_v == doctest::Approx(2.0));
    CHECK(rep2.m_in_B4);
}

TEST_CASE("problem construction guards") {
    auto g = make_grid({1.0}, 1.0, {17}, 8);
    ScalarField bad_m0(g, FieldKind::spatial, 1.0); // mass 2, not normalized
    CHECK_THROWS(MfgProblem(g, 1.0, ScalarField(g, FieldKind::spatial, 0.0),
                            InteractionSpec{}, KernelSpec{},
                            ScalarField(g, FieldKind::spatial, 0.0), bad_m0));
    CHECK_THROWS(MfgProblem(g, -1.0, ScalarField(g, FieldKind::spatial, 0.0),
                            InteractionSpec{}, KernelSpec{},
                            ScalarField(g, FieldKind::spatial, 0.0),
                            uniform_density(g)));
    CHECK_THROWS(MfgProblem(g, 1.0, ScalarField(g, FieldKind::spatial, 0.0),
                            InteractionSpec{}, KernelSpec{},
                            ScalarField::sample_spatial(
                                g, [](std::span<const double> x) { return x[0]; }),
                            uniform_density(g)));
}
