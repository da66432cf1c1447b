#pragma once

#include <functional>
#include <map>
#include <string>

#include "motionsynth/vtln.hpp"

namespace motionsynth {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::map<std::string, double> per_tensor;  // max relative error per tensor

  bool passes(double tolerance) const { return max_rel_err <= tolerance; }
};

// Compares analytic gradients against central finite differences of the loss
// closure. The closure must be deterministic (it is evaluated twice at the
// base point and must agree bitwise); relative error uses
// |a - fd| / max(|a|, |fd|, 1e-8) elementwise.
GradCheckReport grad_check(const std::function<double(const VtlnParams&)>& loss, const VtlnParams& params,
                           const VtlnParams& analytic, double fd_step = 1e-5);

}  // namespace motionsynth
