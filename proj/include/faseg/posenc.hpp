#pragma once

#include <cstdint>

#include "faseg/types.hpp"

namespace faseg {

/// Sinusoidal encoding of one fractional point (x_frac, y_frac) in the unit
/// square, as a 1 x d row. First d/2 channels encode y, last d/2 encode x.
/// Per axis, p = frac * 2*pi and channel pair j uses frequency
/// 10000^(2*floor(j/2)/(d/2)); even channel sin(p/w_j), odd cos(p/w_j).
Mat sinusoidal_point(double x_frac, double y_frac, int d);

/// Absolute sinusoidal grid encoding; pixel (y, x) is embedded at fractions
/// ((x+0.5)/w, (y+0.5)/h). Requires d divisible by 4.
PosEncoding sinusoidal_pe(int h, int w, int d);

/// Seeded i.i.d. uniform [-0.02, 0.02] entries, deterministic per seed.
PosEncoding learnable_pe(int h, int w, int d, std::uint64_t seed);

/// Conditional encoding: one depthwise 3x3 convolution of the features
/// (zero padding, no residual). `kernels` is d x 9.
PosEncoding conditional_pe(const FeatureMap& f, const Mat& kernels);

/// Seeded depthwise kernel bank (d x 9), initialized once per run and frozen.
Mat peg_kernels(int d, std::uint64_t seed);

}  // namespace faseg
