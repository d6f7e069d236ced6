#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mfglab/domain.hpp"

namespace mfglab {

enum class FieldKind { spatial, spacetime };

using GridPtr = std::shared_ptr<const SpaceTimeGrid>;

/// Real-valued function sampled on grid nodes; the carrier for u, v, m.
///
/// Spatial fields hold one value per spatial node, space-time fields one
/// value per (time level, spatial node) with the time level outermost.
class ScalarField {
public:
    ScalarField(GridPtr grid, FieldKind kind, double fill = 0.0);

    const SpaceTimeGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    FieldKind kind() const { return kind_; }
    bool spatial() const { return kind_ == FieldKind::spatial; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

    double& at(int level, std::int64_t sp) { return values_[static_cast<std::size_t>(level * grid_->space_size() + sp)]; }
    double at(int level, std::int64_t sp) const { return values_[static_cast<std::size_t>(level * grid_->space_size() + sp)]; }

    /// View of one time level of a space-time field (level 0 of a spatial one).
    std::span<double> slice(int level);
    std::span<const double> slice(int level) const;

    bool all_finite() const;
    double max_abs() const;

    /// Sample f(x) at every spatial node.
    static ScalarField sample_spatial(GridPtr grid,
                                      const std::function<double(std::span<const double>)>& f);
    /// Sample f(x, t) at every space-time node.
    static ScalarField sample_spacetime(GridPtr grid,
                                        const std::function<double(std::span<const double>, double)>& f);

private:
    GridPtr grid_;
    FieldKind kind_;
    std::vector<double> values_;
};

/// y += a*x, elementwise over matching fields.
void axpy(double a, const ScalarField& x, ScalarField& y);
/// Pointwise linear blend: theta*x + (1-theta)*y.
ScalarField blend(double theta, const ScalarField& x, const ScalarField& y);
double max_abs_difference(const ScalarField& a, const ScalarField& b);

} // namespace mfglab
