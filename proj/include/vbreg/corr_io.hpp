#pragma once

#include <filesystem>
#include <iosfwd>

#include "vbreg/geometry.hpp"

namespace vbreg {

// Text format:
//   VBREG-CORR v1 N=<n> D=<descriptor dim> [EPS=<epsilon>]
//   x0 x1 x2 y0 y1 y2 [d_1 .. d_D] [label]
// Either every row carries a 0/1 label or none does.

void write_correspondences(std::ostream& os, const CorrespondenceSet& set);
CorrespondenceSet read_correspondences(std::istream& is);

void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& set);
CorrespondenceSet read_correspondences(const std::filesystem::path& path);

}  // namespace vbreg
