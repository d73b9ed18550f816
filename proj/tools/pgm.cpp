#include "pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "faseg/error.hpp"

namespace faseg::cli {

std::string encode_pgm(const std::vector<double>& values, int width, int height) {
  if (width < 1 || height < 1 ||
      values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw ShapeError("encode_pgm: value count does not match grid");
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it, mx = *mx_it;
  const double span = mx - mn;

  std::string out = "P2\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (int y = 0; y < height; ++y) {
    if (y > 0) out += '\n';
    for (int x = 0; x < width; ++x) {
      const double v = values[static_cast<std::size_t>(y) * width + x];
      const long g = span > 0.0 ? std::lround((v - mn) / span * 255.0) : 0;
      if (x > 0) out += ' ';
      out += std::to_string(g);
    }
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace faseg::cli
