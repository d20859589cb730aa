#pragma once

#include <iosfwd>
#include <string>

#include "lcn/geometry.hpp"

namespace lcn {

// Text format: first line `n d`, then n lines of d whitespace-separated
// decimal floats. Lines starting with `#` are ignored.
// Binary format: magic `LCNPTS1`, u64-LE n, u64-LE d, then n*d f64-LE.

PointSet read_points_text(std::istream& in, const std::string& id = {});
void write_points_text(std::ostream& out, const PointSet& points);

PointSet read_points_binary(std::istream& in, const std::string& id = {});
void write_points_binary(std::ostream& out, const PointSet& points);

// Sniffs the binary magic, falls back to the text reader.
PointSet read_points_file(const std::string& path);
void write_points_file(const std::string& path, const PointSet& points, bool binary);

}  // namespace lcn
