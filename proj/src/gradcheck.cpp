#include "gpd/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpd/random.hpp"

namespace gpd::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const Network<double>& net_in, const std::vector<Tensor<double>>& inputs, int label,
                           const GradCheckOptions& options) {
  Network<double> net = net_in;
  auto grads = Gradients<double>::zeros_like(net);
  ForwardTrace<double> trace;
  backward(net, inputs, label, grads, &trace);
  const auto base_pattern = activation_pattern(net, trace);

  auto probe = [&](double& slot, double value, std::vector<std::uint32_t>& pattern) {
    const double saved = slot;
    slot = value;
    ForwardTrace<double> t;
    const Tensor<double> out = forward(net, inputs, &t);
    pattern = activation_pattern(net, t);
    slot = saved;
    return cross_entropy<double>(out.data, label);
  };

  GradCheckReport report;
  Rng rng(options.sample_seed);
  auto params = net.params();
  std::vector<std::uint32_t> plus_pattern, minus_pattern;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].values;
    std::vector<std::size_t> indices(values.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_params_per_tensor > 0 && indices.size() > options.max_params_per_tensor) {
      rng.shuffle(indices);
      indices.resize(options.max_params_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      const double theta = values[i];
      const double f_plus = probe(values[i], theta + options.epsilon, plus_pattern);
      const double f_minus = probe(values[i], theta - options.epsilon, minus_pattern);
      const std::string name = params[k].name + "[" + std::to_string(i) + "]";
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        report.excluded.push_back(name);
        continue;
      }
      const double numeric = (f_plus - f_minus) / (2.0 * options.epsilon);
      const double err = relative_error(grads.values[k][i], numeric);
      ++report.checked;
      if (err > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(err, report.max_rel_error);
        if (err >= report.max_rel_error) report.worst_param = name;
      }
    }
  }
  return report;
}

}  // namespace gpd::nn
