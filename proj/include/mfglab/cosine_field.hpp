#pragma once

#include <cstdint>
#include <vector>

#include "mfglab/field.hpp"

namespace mfglab {

/// Truncated cosine series sum_k c_k prod_i cos(k_i pi (x_i + A_i)/(2 A_i)),
/// optionally modulated in time by 1 + amp * sin(omega_k t + theta_k).
///
/// Every term has vanishing odd normal derivatives on all faces, so the
/// series is Neumann-exact both in the continuum and under even-reflection
/// stencils. Kept as an analytic object so the same field can be sampled on
/// grids of different resolution.
struct CosineSeries {
    struct Term {
        std::vector<int> k;
        double coeff = 0.0;
        double omega = 0.0;
        double theta = 0.0;
    };
    std::vector<Term> terms;
    double envelope_amp = 0.0; // 0 disables time modulation

    double value(const PrismDomain& dom, std::span<const double> x, double t) const;
    ScalarField sample_spatial(GridPtr grid) const;
    ScalarField sample_spacetime(GridPtr grid) const;
};

struct CosineSeriesSpec {
    int max_even_mode = 4;   // random per-axis modes drawn from {0,2,...,max}
    double decay = 2.0;      // coefficient damping (1 + |k|^2)^(-decay)
    double envelope_amp = 0.8;
    double min_omega = 0.5;
    double max_omega = 4.0;
};

/// Random Neumann-exact series with decaying coefficients, one bounded
/// sinusoidal envelope per term.
CosineSeries random_cosine_series(const PrismDomain& dom, std::uint64_t seed,
                                  const CosineSeriesSpec& spec, bool time_modulated);

/// Family used to calibrate the Carleman constants. The first few members
/// are deterministic extremal fields (maximum-frequency modes paired with
/// envelopes extremizing the terminal slice), the rest random draws with
/// strictly lower frequency content. Pinning the family's worst case this
/// way makes the calibrated constant transfer to fresh random samples.
std::vector<CosineSeries> carleman_family(const PrismDomain& dom, double T, int count,
                                          std::uint64_t seed, bool with_anchors);

} // namespace mfglab
