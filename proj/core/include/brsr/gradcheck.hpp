#pragma once

#include <functional>
#include <string>
#include <vector>

#include "brsr/tensor.hpp"

namespace brsr {

// One finite-difference comparison case: `build` constructs a scalar loss
// from the current contents of `params` and `inputs`; the harness perturbs
// every element of both and compares central differences against the
// analytic gradients from one backward pass. Gradient checks are only
// meaningful at 64-bit precision.
struct GradCheckCase {
  std::string name;
  std::function<Tensor<double>()> build;
  std::vector<Parameter<double>*> params;
  std::vector<Tensor<double>> inputs;  // leaf tensors, perturbed in place
};

struct GradCheckIssue {
  std::string leaf;  // parameter name or input slot
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t elements_checked = 0;
  bool passed = false;
  GradCheckIssue worst;  // the slice with the largest relative error
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double fd_step = 1e-4;  // scaled by max(1, |x|) per element
};

GradCheckResult run_gradient_check(const GradCheckCase& check,
                                   const GradCheckOptions& options = {});

// The suite exercised by the `gradcheck` CLI subcommand and the acceptance
// gate: every primitive op, Self-ONN layers at Q in {1,2,3}, one residual
// down block, one residual up block, the full discriminator, and the complete
// generator objective including the spectrogram path.
std::vector<GradCheckCase> standard_gradient_suite(std::uint64_t seed);

std::vector<GradCheckResult> run_standard_gradient_suite(
    std::uint64_t seed, const GradCheckOptions& options = {},
    const std::string& name_filter = "");

}  // namespace brsr
