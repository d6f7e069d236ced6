#pragma once

#include <string>

#include "mfglab/field.hpp"

namespace mfglab {

/// Flat binary field container: magic, dim, kind, per-axis node counts and
/// half widths, time steps, horizon, then row-major doubles (time level
/// outermost). Values round-trip bit exactly.
void write_field_binary(const ScalarField& f, const std::string& path);
ScalarField read_field_binary(const std::string& path);

/// One row per node: x1,...,xn[,t],value. For inspection, not round-trips.
void write_field_csv(const ScalarField& f, const std::string& path);

} // namespace mfglab
