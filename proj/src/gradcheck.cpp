#include "motionsynth/gradcheck.hpp"

#include <cmath>

namespace motionsynth {

GradCheckReport grad_check(const std::function<double(const VtlnParams&)>& loss, const VtlnParams& params,
                           const VtlnParams& analytic, double fd_step) {
  require(fd_step > 0.0, Err::bad_config, "finite-difference step must be positive");

  const double base_a = loss(params);
  const double base_b = loss(params);
  require(base_a == base_b, Err::non_deterministic_closure,
          "loss closure returned different values for identical parameters");

  // Mutating copy; the closure sees perturbed parameters tensor by tensor.
  VtlnParams work = params;
  std::vector<std::tuple<std::string, double*, Eigen::Index>> tensors;
  work.visit([&](const std::string& name, double* d, Eigen::Index r, Eigen::Index c) {
    tensors.emplace_back(name, d, r * c);
  });
  std::vector<std::pair<const double*, Eigen::Index>> grads;
  analytic.visit(
      [&](const std::string&, const double* d, Eigen::Index r, Eigen::Index c) { grads.push_back({d, r * c}); });
  require(tensors.size() == grads.size(), Err::dimension_mismatch, "analytic gradient set is not shape-congruent");

  GradCheckReport report;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    auto& [name, data, n] = tensors[k];
    require(n == grads[k].second, Err::dimension_mismatch, "tensor " + name + " has mismatched gradient shape");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double saved = data[i];
      data[i] = saved + fd_step;
      const double up = loss(work);
      data[i] = saved - fd_step;
      const double down = loss(work);
      data[i] = saved;
      const double fd = (up - down) / (2.0 * fd_step);
      const double a = grads[k].first[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
    report.per_tensor[name] = worst;
    if (worst > report.max_rel_err) {
      report.max_rel_err = worst;
      report.worst_param = name;
    }
  }
  return report;
}

}  // namespace motionsynth
