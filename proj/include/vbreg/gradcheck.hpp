#pragma once

#include <functional>

#include "vbreg/autodiff.hpp"
#include "vbreg/params.hpp"

namespace vbreg {

/// Builds a scalar loss on the given tape from the parameters.
using LossBuilder = std::function<ad::Var(ad::Tape&, const ParamStore&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
  std::size_t scalars_checked = 0;
};

/// Central finite differences (step epsilon_fd) against reverse mode over every
/// parameter scalar. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const LossBuilder& loss, const ParamStore& params, double epsilon_fd,
                           double floor = 1e-6);

}  // namespace vbreg
