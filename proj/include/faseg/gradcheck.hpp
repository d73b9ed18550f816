#pragma once

#include <string>
#include <vector>

namespace faseg {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckOptions {
  double step = 1e-5;       // central-difference step
  double tolerance = 1e-4;  // max relative error, denominator floor 1e-8
  bool inject_fault = false;  // corrupt one analytic gradient; harness self-test
};

/// Analytic backward vs central finite differences on every tape primitive,
/// on the dynamic positional-query path, on dense/masked/omega-restricted
/// cross-attention, and end-to-end from a scalar readout of the final mask
/// logits back to the positional-query bias parameters. f64 throughout.
std::vector<GradCheckCase> run_gradient_suite(const GradCheckOptions& opts = {});

}  // namespace faseg
