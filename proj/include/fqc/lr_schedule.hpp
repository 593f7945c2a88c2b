#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "fqc/error.hpp"

namespace fqc {

/// Per-epoch cosine annealing: lr_max * (1 + cos(pi * t / total)) / 2.
inline double cosine_lr(int t, int total_epochs, double lr_max) {
  if (total_epochs < 1) fail(Errc::invalid_schedule, "total_epochs must be positive");
  if (t < 0 || t >= total_epochs)
    fail(Errc::invalid_schedule, "epoch " + std::to_string(t) + " outside [0," + std::to_string(total_epochs) + ")");
  if (!(lr_max > 0.0)) fail(Errc::invalid_schedule, "lr_max must be positive");
  return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * t / total_epochs));
}

}  // namespace fqc
