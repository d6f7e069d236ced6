#include "mfglab/cosine_field.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mfglab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kAnchorCount = 4;
} // namespace

double CosineSeries::value(const PrismDomain& dom, std::span<const double> x,
                           double t) const {
    double acc = 0.0;
    for (const auto& term : terms) {
        double prod = term.coeff;
        for (std::size_t i = 0; i < term.k.size(); ++i) {
            const double a = dom.half_widths[i];
            prod *= std::cos(term.k[i] * kPi * (x[i] + a) / (2.0 * a));
        }
        if (envelope_amp != 0.0)
            prod *= 1.0 + envelope_amp * std::sin(term.omega * t + term.theta);
        acc += prod;
    }
    return acc;
}

ScalarField CosineSeries::sample_spatial(GridPtr grid) const {
    const PrismDomain& dom = grid->domain();
    return ScalarField::sample_spatial(
        grid, [&](std::span<const double> x) { return value(dom, x, 0.0); });
}

ScalarField CosineSeries::sample_spacetime(GridPtr grid) const {
    const PrismDomain& dom = grid->domain();
    return ScalarField::sample_spacetime(
        grid, [&](std::span<const double> x, double t) { return value(dom, x, t); });
}

CosineSeries random_cosine_series(const PrismDomain& dom, std::uint64_t seed,
                                  const CosineSeriesSpec& spec, bool time_modulated) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uomega(spec.min_omega, spec.max_omega);
    std::uniform_real_distribution<double> utheta(0.0, 2.0 * kPi);

    const int n = dom.dim();
    const int modes_per_axis = spec.max_even_mode / 2 + 1;
    std::vector<int> mode_idx(n, 0);
    CosineSeries series;
    series.envelope_amp = time_modulated ? spec.envelope_amp : 0.0;

    bool done = false;
    while (!done) {
        CosineSeries::Term term;
        term.k.resize(n);
        double ksq = 0.0;
        for (int i = 0; i < n; ++i) {
            term.k[i] = 2 * mode_idx[i];
            ksq += static_cast<double>(term.k[i]) * term.k[i];
        }
        term.coeff = gauss(rng) / std::pow(1.0 + ksq, spec.decay);
        term.omega = uomega(rng);
        term.theta = utheta(rng);
        series.terms.push_back(std::move(term));

        done = true;
        for (int i = n - 1; i >= 0; --i) {
            if (++mode_idx[i] < modes_per_axis) {
                done = false;
                break;
            }
            mode_idx[i] = 0;
        }
    }
    return series;
}

std::vector<CosineSeries> carleman_family(const PrismDomain& dom, double T, int count,
                                          std::uint64_t seed, bool with_anchors) {
    std::vector<CosineSeries> family;
    family.reserve(static_cast<std::size_t>(count));
    CosineSeriesSpec spec; // random members stay at modes <= 4

    if (with_anchors && count > kAnchorCount) {
        const double amp = spec.envelope_amp;
        const double omega = spec.max_omega;
        // theta_T maximizing env'(T)/env(T) for env = 1 + amp*sin:
        // sin(theta_T) = -amp at the maximizing branch with cos > 0.
        const double theta_growth = std::asin(-amp);
        const double theta_small_end = -kPi / 2.0;

        // The high-mode amplitude 0.6 is the largest that still clears the
        // 10 h^2 compliance gate at 33 nodes per axis.
        auto anchor = [&](double c_high, double om, double theta_at_T, bool modulated) {
            CosineSeries s;
            s.envelope_amp = modulated ? amp : 0.0;
            CosineSeries::Term low;
            low.k.assign(static_cast<std::size_t>(dom.dim()), 2);
            low.coeff = 1.0;
            low.omega = om;
            low.theta = theta_at_T - om * T;
            s.terms.push_back(low);
            if (c_high != 0.0) {
                CosineSeries::Term high;
                high.k.assign(static_cast<std::size_t>(dom.dim()), spec.max_even_mode);
                high.coeff = c_high;
                high.omega = om;
                high.theta = theta_at_T - om * T;
                s.terms.push_back(high);
            }
            return s;
        };

        family.push_back(anchor(0.0, omega, 0.0, false));              // pure resolvable mode
        family.push_back(anchor(0.6, omega, 0.0, false));              // gradient-dominated mix
        family.push_back(anchor(0.6, omega, theta_growth, true));      // steep growth at t = T
        family.push_back(anchor(0.6, omega, theta_small_end, true));   // small terminal slice
    }

    std::uint64_t member_seed = seed;
    while (family.size() < static_cast<std::size_t>(count))
        family.push_back(random_cosine_series(dom, member_seed++, spec, true));
    return family;
}

} // namespace mfglab
