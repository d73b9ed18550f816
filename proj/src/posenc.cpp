#include "faseg/posenc.hpp"

#include <cmath>

#include "faseg/kernels.hpp"

namespace faseg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void fill_axis(double frac, int d_axis, double* out) {
  const double p = frac * kTwoPi;
  for (int j = 0; j < d_axis; ++j) {
    const double omega = std::pow(10000.0, 2.0 * (j / 2) / static_cast<double>(d_axis));
    out[j] = (j % 2 == 0) ? std::sin(p / omega) : std::cos(p / omega);
  }
}
}  // namespace

Mat sinusoidal_point(double x_frac, double y_frac, int d) {
  if (d % 4 != 0) throw ParamError("sinusoidal encoding needs d divisible by 4, got " + std::to_string(d));
  Mat row(1, d);
  fill_axis(y_frac, d / 2, row.row(0));
  fill_axis(x_frac, d / 2, row.row(0) + d / 2);
  return row;
}

PosEncoding sinusoidal_pe(int h, int w, int d) {
  if (d % 4 != 0) throw ParamError("sinusoidal_pe needs d divisible by 4, got " + std::to_string(d));
  Mat data(h * w, d);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* out = data.row(y * w + x);
      fill_axis((y + 0.5) / h, d / 2, out);
      fill_axis((x + 0.5) / w, d / 2, out + d / 2);
    }
  }
  return PosEncoding(h, w, d, PeKind::kSinusoidal, std::move(data));
}

PosEncoding learnable_pe(int h, int w, int d, std::uint64_t seed) {
  Rng rng(seed);
  Mat data(h * w, d);
  for (std::size_t i = 0; i < data.size(); ++i) data.data()[i] = rng.uniform(-0.02, 0.02);
  return PosEncoding(h, w, d, PeKind::kLearnableAbsolute, std::move(data));
}

PosEncoding conditional_pe(const FeatureMap& f, const Mat& kernels) {
  Mat data = depthwise_conv3x3(f.data, f.h, f.w, kernels);
  return PosEncoding(f.h, f.w, f.d, PeKind::kConditional, std::move(data));
}

Mat peg_kernels(int d, std::uint64_t seed) {
  Rng rng(seed);
  Mat k(d, 9);
  for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] = rng.uniform(-0.02, 0.02);
  return k;
}

}  // namespace faseg
