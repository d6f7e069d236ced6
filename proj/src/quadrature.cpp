#include "mfglab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "mfglab/line_op.hpp"

namespace mfglab {

double integrate_time_slice(const ScalarField& f, int level) {
    const auto& g = f.grid();
    if (f.spatial())
        throw std::invalid_argument("integrate_time_slice: field is spatial");
    if (level < 0 || level >= g.time_levels())
        throw std::out_of_range("integrate_time_slice: level out of range");
    auto s = f.slice(level);
    const auto& w = g.spatial_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * s[i];
    return acc;
}

double integrate(const ScalarField& f, Region region) {
    const auto& g = f.grid();
    if (region == Region::Omega) {
        if (!f.spatial())
            throw std::invalid_argument("integrate: Omega region needs a spatial field");
        const auto& w = g.spatial_weights();
        auto s = f.values();
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * s[i];
        return acc;
    }
    if (f.spatial())
        throw std::invalid_argument("integrate: QT region needs a space-time field");
    double acc = 0.0;
    for (int k = 0; k < g.time_levels(); ++k)
        acc += g.time_weight(k) * integrate_time_slice(f, k);
    return acc;
}

ScalarField one_sided_axis_derivative(const ScalarField& f, int axis) {
    const auto& g = f.grid();
    ScalarField out(f.grid_ptr(), f.kind());
    auto op = LineOp::first_derivative(g.nodes(axis), g.spacing(axis), GhostRule::one_sided);
    apply_along_axis(op, f, out, axis);
    return out;
}

ScalarField one_sided_second_derivative(const ScalarField& f, int axis_i, int axis_j) {
    const auto& g = f.grid();
    if (axis_i == axis_j) {
        ScalarField out(f.grid_ptr(), f.kind());
        auto op = LineOp::second_derivative(g.nodes(axis_i), g.spacing(axis_i),
                                            GhostRule::one_sided);
        apply_along_axis(op, f, out, axis_i);
        return out;
    }
    return one_sided_axis_derivative(one_sided_axis_derivative(f, axis_i), axis_j);
}

ScalarField one_sided_time_derivative(const ScalarField& f) {
    const auto& g = f.grid();
    if (f.spatial())
        throw std::invalid_argument("one_sided_time_derivative: field is spatial");
    ScalarField out(f.grid_ptr(), f.kind());
    auto op = LineOp::first_derivative(g.time_levels(), g.dt(), GhostRule::one_sided);
    apply_along_time(op, f, out);
    return out;
}

double weighted_l2_omega_sq(std::span<const double> values, const SpaceTimeGrid& g) {
    const auto& w = g.spatial_weights();
    if (values.size() != w.size())
        throw std::invalid_argument("weighted_l2_omega_sq: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += w[i] * values[i] * values[i];
    return acc;
}

namespace {

double l2_sq(const ScalarField& f, Region region) {
    ScalarField sq(f.grid_ptr(), f.kind());
    auto in = f.values();
    auto out = sq.values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * in[i];
    return integrate(sq, region);
}

} // namespace

double norm(const ScalarField& f, NormKind kind) {
    const auto& g = f.grid();
    const bool wants_spatial = kind == NormKind::L2_Omega || kind == NormKind::H1_Omega;
    if (wants_spatial && !f.spatial())
        throw std::invalid_argument("norm: spatial norm applied to space-time field");
    if (!wants_spatial && f.spatial())
        throw std::invalid_argument("norm: space-time norm applied to spatial field");
    const Region region = wants_spatial ? Region::Omega : Region::QT;

    double acc = l2_sq(f, region);
    if (kind == NormKind::L2_Omega || kind == NormKind::L2_QT)
        return std::sqrt(acc);

    for (int ax = 0; ax < g.dim(); ++ax)
        acc += l2_sq(one_sided_axis_derivative(f, ax), region);
    if (kind == NormKind::H1_Omega || kind == NormKind::H10_QT)
        return std::sqrt(acc);

    // H21_QT
    acc += l2_sq(one_sided_time_derivative(f), region);
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j)
            acc += l2_sq(one_sided_second_derivative(f, i, j), region);
    return std::sqrt(acc);
}

} // namespace mfglab
