#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfglab {

/// Axis-aligned box Omega = prod_i (-A_i, A_i).
///
/// The boundary decomposes into the 2n faces where one coordinate sits at
/// +-A_i; face indexing everywhere in this project is (axis, side) with
/// side = -1 for x_i = -A_i and side = +1 for x_i = +A_i.
struct PrismDomain {
    std::vector<double> half_widths;

    explicit PrismDomain(std::vector<double> half_widths_);

    int dim() const { return static_cast<int>(half_widths.size()); }
    double extent(int axis) const { return 2.0 * half_widths.at(axis); }
    /// Product of per-axis extents.
    double volume() const;
};

/// Uniform tensor-product grid on PrismDomain x [0,T].
///
/// Node counts are the stored parametrization; spacings are always derived
/// as h_i = 2 A_i / (n_i - 1) and dt = T / time_steps so no module can
/// disagree about them. Nodes include both endpoints of every axis, so the
/// faces Gamma_i^+- are node sets. Spatial layout is row major with axis 0
/// slowest; space-time fields store whole spatial slices per time level,
/// level k at offset k * space_size.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(PrismDomain domain, double T, std::vector<int> nodes_per_axis,
                  int time_steps);

    const PrismDomain& domain() const { return domain_; }
    int dim() const { return domain_.dim(); }
    double time_horizon() const { return T_; }
    int time_steps() const { return time_steps_; }
    /// Number of time levels, time_steps + 1 (t_0 = 0 .. t_K = T).
    int time_levels() const { return time_steps_ + 1; }
    double dt() const { return dt_; }

    int nodes(int axis) const { return nodes_per_axis_.at(axis); }
    const std::vector<int>& nodes_per_axis() const { return nodes_per_axis_; }
    double spacing(int axis) const { return spacings_.at(axis); }
    double min_spacing() const;

    std::int64_t space_size() const { return space_size_; }
    std::int64_t spacetime_size() const { return space_size_ * time_levels(); }
    std::int64_t stride(int axis) const { return strides_.at(axis); }

    double coordinate(int axis, int node) const {
        return -domain_.half_widths[axis] + spacings_[axis] * node;
    }
    double time(int level) const { return dt_ * level; }

    /// Decode flat spatial index into per-axis node indices.
    void decode(std::int64_t flat, std::vector<int>& idx) const;
    std::int64_t encode(const std::vector<int>& idx) const;

    /// Flat spatial indices of the face x_axis = -A (side=-1) or +A (side=+1).
    const std::vector<std::int64_t>& face(int axis, int side) const;

    /// Tensor-product trapezoid weight of each spatial node (sums to |Omega|).
    const std::vector<double>& spatial_weights() const { return quad_weights_; }
    double spatial_weight(std::int64_t sp) const { return quad_weights_[static_cast<std::size_t>(sp)]; }
    /// Trapezoid weight of time level k (sums to T).
    double time_weight(int level) const {
        return (level == 0 || level == time_steps_) ? 0.5 * dt_ : dt_;
    }

    bool same_layout(const SpaceTimeGrid& other) const;

private:
    PrismDomain domain_;
    double T_;
    std::vector<int> nodes_per_axis_;
    int time_steps_;
    double dt_;
    std::vector<double> spacings_;
    std::vector<std::int64_t> strides_;
    std::int64_t space_size_;
    // faces_[2*axis + (side>0)]
    std::vector<std::vector<std::int64_t>> faces_;
    std::vector<double> quad_weights_;
};

} // namespace mfglab
