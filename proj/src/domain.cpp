#include "mfglab/domain.hpp"

#include <algorithm>

namespace mfglab {

PrismDomain::PrismDomain(std::vector<double> half_widths_)
    : half_widths(std::move(half_widths_)) {
    if (half_widths.empty())
        throw std::invalid_argument("PrismDomain: dimension must be >= 1");
    for (std::size_t i = 0; i < half_widths.size(); ++i) {
        if (!(half_widths[i] > 0.0))
            throw std::invalid_argument("PrismDomain: half width A_" +
                                        std::to_string(i + 1) + " must be positive");
    }
}

double PrismDomain::volume() const {
    double v = 1.0;
    for (double a : half_widths) v *= 2.0 * a;
    return v;
}

SpaceTimeGrid::SpaceTimeGrid(PrismDomain domain, double T,
                             std::vector<int> nodes_per_axis, int time_steps)
    : domain_(std::move(domain)), T_(T), nodes_per_axis_(std::move(nodes_per_axis)),
      time_steps_(time_steps) {
    if (!(T_ > 0.0)) throw std::invalid_argument("SpaceTimeGrid: T must be positive");
    if (static_cast<int>(nodes_per_axis_.size()) != domain_.dim())
        throw std::invalid_argument("SpaceTimeGrid: nodes_per_axis size != dim");
    if (time_steps_ < 2)
        throw std::invalid_argument("SpaceTimeGrid: need at least 2 time steps");
    for (int n : nodes_per_axis_)
        if (n < 3)
            throw std::invalid_argument("SpaceTimeGrid: need at least 3 nodes per axis");

    dt_ = T_ / time_steps_;
    const int n = domain_.dim();
    spacings_.resize(n);
    for (int i = 0; i < n; ++i)
        spacings_[i] = 2.0 * domain_.half_widths[i] / (nodes_per_axis_[i] - 1);

    strides_.assign(n, 1);
    for (int i = n - 2; i >= 0; --i)
        strides_[i] = strides_[i + 1] * nodes_per_axis_[i + 1];
    space_size_ = strides_[0] * nodes_per_axis_[0];

    faces_.resize(2 * static_cast<std::size_t>(n));
    quad_weights_.resize(static_cast<std::size_t>(space_size_));
    std::vector<int> idx(n, 0);
    for (std::int64_t flat = 0; flat < space_size_; ++flat) {
        decode(flat, idx);
        double w = 1.0;
        for (int ax = 0; ax < n; ++ax) {
            const bool edge = idx[ax] == 0 || idx[ax] == nodes_per_axis_[ax] - 1;
            w *= edge ? 0.5 * spacings_[ax] : spacings_[ax];
            if (idx[ax] == 0) faces_[2 * ax].push_back(flat);
            if (idx[ax] == nodes_per_axis_[ax] - 1) faces_[2 * ax + 1].push_back(flat);
        }
        quad_weights_[static_cast<std::size_t>(flat)] = w;
    }
}

double SpaceTimeGrid::min_spacing() const {
    return *std::min_element(spacings_.begin(), spacings_.end());
}

void SpaceTimeGrid::decode(std::int64_t flat, std::vector<int>& idx) const {
    const int n = dim();
    idx.resize(n);
    for (int i = 0; i < n; ++i) {
        idx[i] = static_cast<int>(flat / strides_[i]);
        flat -= idx[i] * strides_[i];
    }
}

std::int64_t SpaceTimeGrid::encode(const std::vector<int>& idx) const {
    std::int64_t flat = 0;
    for (int i = 0; i < dim(); ++i) flat += idx[i] * strides_[i];
    return flat;
}

const std::vector<std::int64_t>& SpaceTimeGrid::face(int axis, int side) const {
    if (axis < 0 || axis >= dim())
        throw std::out_of_range("SpaceTimeGrid::face: axis out of range");
    return faces_[2 * axis + (side > 0 ? 1 : 0)];
}

bool SpaceTimeGrid::same_layout(const SpaceTimeGrid& other) const {
    return nodes_per_axis_ == other.nodes_per_axis_ &&
           time_steps_ == other.time_steps_ &&
           domain_.half_widths == other.domain_.half_widths && T_ == other.T_;
}

} // namespace mfglab
