#include "nnbdd/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "nnbdd/error.hpp"

namespace nnbdd {

namespace {

void skip_space_and_comments(std::istream& in) {
  for (int ch = in.peek(); ch != EOF; ch = in.peek()) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
}

std::size_t read_dimension(std::istream& in) {
  skip_space_and_comments(in);
  long long v = -1;
  if (!(in >> v) || v <= 0) throw ParseError("pbm: bad dimension");
  return static_cast<std::size_t>(v);
}

}  // namespace

Bitmap read_pbm(std::istream& in) {
  skip_space_and_comments(in);
  std::string magic(2, '\0');
  if (!in.read(magic.data(), 2) || magic != "P1") throw ParseError("pbm: expected plain 'P1' magic");
  Bitmap img;
  img.width = read_dimension(in);
  img.height = read_dimension(in);
  std::vector<std::uint8_t> bits;
  bits.reserve(img.width * img.height);
  while (bits.size() < img.width * img.height) {
    skip_space_and_comments(in);
    const int ch = in.get();
    if (ch == EOF) throw ParseError("pbm: raster ended early");
    if (ch != '0' && ch != '1') throw ParseError(std::string("pbm: unexpected character '") + char(ch) + "'");
    bits.push_back(ch == '1' ? 1 : 0);
  }
  img.pixels = Instance(std::move(bits));
  return img;
}

Bitmap load_pbm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_pbm(in);
}

void write_pbm(std::ostream& out, const Bitmap& image) {
  if (image.pixels.size() != image.width * image.height) throw ArgumentError("pbm: pixel count differs from size");
  out << "P1\n" << image.width << ' ' << image.height << '\n';
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      out << (c ? " " : "") << (image.pixels[r * image.width + c] ? '1' : '0');
    }
    out << '\n';
  }
}

void save_pbm_file(const std::string& path, const Bitmap& image) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_pbm(out, image);
}

void write_pgm_heatmap(std::ostream& out, std::size_t width, std::size_t height, std::span<const double> values) {
  if (values.size() != width * height) throw ArgumentError("pgm: value count differs from size");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = values.empty() ? 0.0 : *lo_it;
  const double hi = values.empty() ? 0.0 : *hi_it;
  out << "P2\n# min-max rescaled for display\n" << width << ' ' << height << "\n255\n";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double v = values[r * width + c];
      const int level = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 128;
      out << (c ? " " : "") << level;
    }
    out << '\n';
  }
}

}  // namespace nnbdd
