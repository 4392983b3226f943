#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "nnbdd/bdd.hpp"

namespace nnbdd {

/// Binary image in raster (row-major) order; pixel (r, c) is variable r * width + c.
struct Bitmap {
  std::size_t width = 0;
  std::size_t height = 0;
  Instance pixels;
};

/// PBM plain format (P1). Comments and unseparated bits are accepted.
Bitmap read_pbm(std::istream& in);
Bitmap load_pbm_file(const std::string& path);
void write_pbm(std::ostream& out, const Bitmap& image);
void save_pbm_file(const std::string& path, const Bitmap& image);

/// Plain PGM (P2) heatmap. Values are min-max rescaled to 0..255, for display
/// only; a constant grid maps to mid-gray.
void write_pgm_heatmap(std::ostream& out, std::size_t width, std::size_t height, std::span<const double> values);

}  // namespace nnbdd
