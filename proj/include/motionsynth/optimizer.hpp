#pragma once

#include <limits>
#include <string>

#include "motionsynth/vtln.hpp"

namespace motionsynth {

// lr = lr0 * decay^floor(min(iter, cutoff) / interval)
struct LrSchedule {
  double initial = 1e-4;
  double decay = 1.0;
  long interval = 1;
  long cutoff = std::numeric_limits<long>::max();

  void validate() const;
};

// Presets from the experimental recipes: short-term decays by 0.8 every 5000
// iterations until 60k; long-term decays by 0.6 every 2000.
LrSchedule short_term_lr_schedule();
LrSchedule long_term_lr_schedule();

double lr_schedule(long iteration, const LrSchedule& spec);

// Global-norm clipping over every tensor in the set; scales in place and
// returns the pre-clip norm. Non-finite gradients name the offending tensor.
double clip_gradients(VtlnParams& grads, double max_norm);

struct RmspropState {
  VtlnParams acc;  // squared-gradient accumulator, shape-congruent
  double rho = 0.9;
  double eps = 1e-8;
  long iteration = 0;

  static RmspropState init(const VtlnConfig& cfg);
};

// acc <- rho*acc + (1-rho)*g^2;  theta <- theta - lr * g / (sqrt(acc) + eps)
void rmsprop_step(VtlnParams& params, const VtlnParams& grads, RmspropState& state, double lr);

}  // namespace motionsynth
