#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <functional>

// Central finite-difference gradient check in double precision. `f` must return a scalar and
// read `x` (a leaf tensor with requires_grad) on every call.
struct GradCheckResult {
  int64_t total = 0;
  int64_t passed = 0;
  double worst = 0.0;
  double pass_rate() const { return total ? static_cast<double>(passed) / total : 1.0; }
};

inline GradCheckResult gradcheck(const std::function<torch::Tensor()>& f, torch::Tensor x, double eps = 1e-6,
                                 double rtol = 1e-3, double atol = 1e-7) {
  x.mutable_grad() = torch::Tensor();
  f().backward();
  auto analytic = x.grad().detach().clone().reshape({-1});
  GradCheckResult r;
  auto flat = x.detach().view({-1});
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    double plus, minus;
    {
      torch::NoGradGuard g;
      flat[i] = orig + eps;
      plus = f().item<double>();
      flat[i] = orig - eps;
      minus = f().item<double>();
      flat[i] = orig;
    }
    const double numeric = (plus - minus) / (2 * eps);
    const double a = analytic[i].item<double>();
    const double diff = std::abs(a - numeric);
    const double rel = diff / std::max({std::abs(a), std::abs(numeric), 1e-30});
    ++r.total;
    if (diff < atol || rel < rtol) {
      ++r.passed;
    } else {
      r.worst = std::max(r.worst, rel);
    }
  }
  return r;
}
