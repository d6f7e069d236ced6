#include "mfglab/field.hpp"

#include <cmath>
#include <stdexcept>

namespace mfglab {

ScalarField::ScalarField(GridPtr grid, FieldKind kind, double fill)
    : grid_(std::move(grid)), kind_(kind) {
    if (!grid_) throw std::invalid_argument("ScalarField: null grid");
    const std::int64_t n =
        kind_ == FieldKind::spatial ? grid_->space_size() : grid_->spacetime_size();
    values_.assign(static_cast<std::size_t>(n), fill);
}

std::span<double> ScalarField::slice(int level) {
    const std::int64_t n = grid_->space_size();
    const std::int64_t off = spatial() ? 0 : level * n;
    return {values_.data() + off, static_cast<std::size_t>(n)};
}

std::span<const double> ScalarField::slice(int level) const {
    const std::int64_t n = grid_->space_size();
    const std::int64_t off = spatial() ? 0 : level * n;
    return {values_.data() + off, static_cast<std::size_t>(n)};
}

bool ScalarField::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

ScalarField ScalarField::sample_spatial(
    GridPtr grid, const std::function<double(std::span<const double>)>& f) {
    ScalarField out(grid, FieldKind::spatial);
    const auto& g = out.grid();
    std::vector<int> idx(g.dim());
    std::vector<double> x(g.dim());
    for (std::int64_t sp = 0; sp < g.space_size(); ++sp) {
        g.decode(sp, idx);
        for (int d = 0; d < g.dim(); ++d) x[d] = g.coordinate(d, idx[d]);
        out[sp] = f(x);
    }
    return out;
}

ScalarField ScalarField::sample_spacetime(
    GridPtr grid, const std::function<double(std::span<const double>, double)>& f) {
    ScalarField out(grid, FieldKind::spacetime);
    const auto& g = out.grid();
    std::vector<int> idx(g.dim());
    std::vector<double> x(g.dim());
    for (int k = 0; k < g.time_levels(); ++k) {
        const double t = g.time(k);
        auto s = out.slice(k);
        for (std::int64_t sp = 0; sp < g.space_size(); ++sp) {
            g.decode(sp, idx);
            for (int d = 0; d < g.dim(); ++d) x[d] = g.coordinate(d, idx[d]);
            s[static_cast<std::size_t>(sp)] = f(x, t);
        }
    }
    return out;
}

void axpy(double a, const ScalarField& x, ScalarField& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
    auto xs = x.values();
    auto ys = y.values();
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += a * xs[i];
}

ScalarField blend(double theta, const ScalarField& x, const ScalarField& y) {
    if (x.size() != y.size()) throw std::invalid_argument("blend: size mismatch");
    ScalarField out = x;
    auto os = out.values();
    auto ys = y.values();
    for (std::size_t i = 0; i < os.size(); ++i)
        os[i] = theta * os[i] + (1.0 - theta) * ys[i];
    return out;
}

double max_abs_difference(const ScalarField& a, const ScalarField& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_difference: size mismatch");
    double m = 0.0;
    auto as = a.values();
    auto bs = b.values();
    for (std::size_t i = 0; i < as.size(); ++i) m = std::max(m, std::abs(as[i] - bs[i]));
    return m;
}

} // namespace mfglab
