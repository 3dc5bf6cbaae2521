#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/nn/model.hpp"

namespace ecg::nn {

struct GradCheckOptions {
  std::size_t batch = 2;
  std::size_t length = 512;
  double step = 1e-5;  // smaller steps let rounding noise swamp the zero-gradient conv biases before batchnorm
  std::size_t samples_per_tensor = 6;
  double dropout_rate = 0.0;
};

struct GroupError {
  std::string group;  // conv, batchnorm, linear, residual, loss
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_rel_error = 0.0;
};

/// Tiny model used by the verification suite: 2 blocks, 8 filters.
ModelConfig gradcheck_config();

/// Central differences against the analytic gradient on the 64-bit path.
/// BN runs in train mode without touching running statistics and the
/// dropout mask is frozen by a fixed seed.
GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& opts = {});

/// Single conv layer against its finite-difference gradient.
GradCheckReport conv_gradient_check(std::uint64_t seed, double step = 1e-6);

/// Loss-only check: dL/dlogits of cross-entropy.
GradCheckReport loss_gradient_check(std::uint64_t seed, double step = 1e-6);

double relative_error(double analytic, double numeric);

}  // namespace ecg::nn
