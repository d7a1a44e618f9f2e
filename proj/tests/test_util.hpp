#pragma once

#include <torch/torch.h>

#include <functional>
#include <vector>

namespace textface::testing {

/// Norm-based relative error between autograd and central-difference
/// gradients of a scalar function, over every input.
inline double gradient_error(const std::function<torch::Tensor(const std::vector<torch::Tensor>&)>& f,
                             std::vector<torch::Tensor> inputs, double eps = 1e-6) {
  for (auto& x : inputs) x = x.detach().to(torch::kFloat64).clone().requires_grad_(true);
  auto out = f(inputs);
  auto analytic = torch::autograd::grad({out}, inputs);
  double diff = 0.0, scale = 0.0;
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto flat = inputs[i].view({-1});
    auto numeric = torch::zeros_like(flat);
    for (int64_t j = 0; j < flat.numel(); ++j) {
      const double saved = flat[j].item<double>();
      flat[j] = saved + eps;
      const double up = f(inputs).item<double>();
      flat[j] = saved - eps;
      const double down = f(inputs).item<double>();
      flat[j] = saved;
      numeric[j] = (up - down) / (2 * eps);
    }
    auto a = analytic[i].reshape({-1});
    diff += (a - numeric).pow(2).sum().item<double>();
    scale += std::max(a.pow(2).sum().item<double>(), numeric.pow(2).sum().item<double>());
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

}  // namespace textface::testing
