#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpd/nn/network.hpp"

namespace gpd::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Per-tensor cap on checked entries (0 = all). Entries are drawn with `sample_seed`.
  std::size_t max_params_per_tensor = 0;
  std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  /// Entries whose ±epsilon probes change a ReLU state or pool choice: the loss is
  /// not differentiable within the probe interval, so they are reported, not failed.
  std::vector<std::string> excluded;
};

/// |g - ĝ| / max(|g|, |ĝ|, 1e-8) with ĝ the central difference (f(θ+ε) - f(θ-ε)) / 2ε.
double relative_error(double analytic, double numeric);

/// Compares backward() against central finite differences of the softmax
/// cross-entropy loss, parameter by parameter.
GradCheckReport grad_check(const Network<double>& net, const std::vector<Tensor<double>>& inputs, int label,
                           const GradCheckOptions& options = {});

}  // namespace gpd::nn
