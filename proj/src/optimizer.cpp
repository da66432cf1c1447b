#include "motionsynth/optimizer.hpp"

#include <cmath>

namespace motionsynth {

void LrSchedule::validate() const {
  require(initial > 0.0, Err::bad_schedule, "initial learning rate must be positive");
  require(decay > 0.0 && decay <= 1.0, Err::bad_schedule, "decay must be in (0, 1]");
  require(interval >= 1, Err::bad_schedule, "decay interval must be >= 1");
  require(cutoff >= 0, Err::bad_schedule, "cutoff must be non-negative");
}

LrSchedule short_term_lr_schedule() { return LrSchedule{1e-4, 0.8, 5000, 60000}; }

LrSchedule long_term_lr_schedule() { return LrSchedule{2e-4, 0.6, 2000, std::numeric_limits<long>::max()}; }

double lr_schedule(long iteration, const LrSchedule& spec) {
  spec.validate();
  require(iteration >= 0, Err::bad_schedule, "iteration must be non-negative");
  const long effective = std::min(iteration, spec.cutoff);
  return spec.initial * std::pow(spec.decay, static_cast<double>(effective / spec.interval));
}

double clip_gradients(VtlnParams& grads, double max_norm) {
  require(max_norm > 0.0, Err::bad_config, "max_norm must be positive");
  double sumsq = 0.0;
  grads.visit([&](const std::string& name, const double* d, Eigen::Index r, Eigen::Index c) {
    for (Eigen::Index i = 0; i < r * c; ++i) {
      require(std::isfinite(d[i]), Err::non_finite, "non-finite gradient in tensor " + name);
      sumsq += d[i] * d[i];
    }
  });
  const double norm = std::sqrt(sumsq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.visit([&](const std::string&, double* d, Eigen::Index r, Eigen::Index c) {
      for (Eigen::Index i = 0; i < r * c; ++i) d[i] *= scale;
    });
  }
  return norm;
}

RmspropState RmspropState::init(const VtlnConfig& cfg) {
  RmspropState s;
  s.acc = VtlnParams::zeros(cfg);
  return s;
}

void rmsprop_step(VtlnParams& params, const VtlnParams& grads, RmspropState& state, double lr) {
  struct Slot {
    double* theta;
    Eigen::Index n;
  };
  std::vector<Slot> slots;
  params.visit([&](const std::string&, double* d, Eigen::Index r, Eigen::Index c) { slots.push_back({d, r * c}); });

  std::vector<std::pair<const double*, Eigen::Index>> gslots;
  grads.visit(
      [&](const std::string&, const double* d, Eigen::Index r, Eigen::Index c) { gslots.push_back({d, r * c}); });
  std::vector<std::pair<double*, Eigen::Index>> aslots;
  state.acc.visit([&](const std::string&, double* d, Eigen::Index r, Eigen::Index c) { aslots.push_back({d, r * c}); });

  require(slots.size() == gslots.size() && slots.size() == aslots.size(), Err::dimension_mismatch,
          "optimizer state does not match the parameter set");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    require(slots[k].n == gslots[k].second && slots[k].n == aslots[k].second, Err::dimension_mismatch,
            "optimizer tensor shapes disagree");
    double* theta = slots[k].theta;
    const double* g = gslots[k].first;
    double* acc = aslots[k].first;
    for (Eigen::Index i = 0; i < slots[k].n; ++i) {
      acc[i] = state.rho * acc[i] + (1.0 - state.rho) * g[i] * g[i];
      theta[i] -= lr * g[i] / (std::sqrt(acc[i]) + state.eps);
    }
  }
}

}  // namespace motionsynth
