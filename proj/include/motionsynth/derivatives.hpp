#pragma once

#include <deque>
#include <vector>

#include "motionsynth/pose.hpp"

namespace motionsynth {

// Backward-difference feature blocks appended to each frame:
//   block n at frame t = sum_{i=0..n} (-1)^i C(n,i) f(t - i*h)
// with replicate-first-frame padding, so every derivative at t = 0 is zero.
struct DerivativeOptions {
  std::vector<int> orders = {1, 2, 3};  // ascending, distinct
  int spacing = 1;                      // h
  bool allow_high_orders = false;       // orders > 3 are rejected unless set

  int max_order() const { return orders.empty() ? 0 : orders.back(); }
  void validate() const;
};

// T x D frames -> T x (1+|orders|)*D: [x | grad^{n1} | grad^{n2} | ...].
Mat augment_with_derivatives(const Mat& frames, const DerivativeOptions& opts = {});

// Streaming counterpart. Feeding frames one by one reproduces the batch
// augmentation row of the same index exactly; the internal history keeps the
// trailing max_order*h + 1 frames and replicates the oldest one while the
// sequence is shorter than that.
class DerivativeStepper {
 public:
  DerivativeStepper(Eigen::Index dim, DerivativeOptions opts = {});

  // Returns the augmented row for the newly appended frame.
  Vec step(const Vec& frame);

  // Batched variant: columns are independent streams (D x B in, W x B out).
  Mat step(const Mat& frames);

  void reset();
  Eigen::Index input_dim() const { return dim_; }
  Eigen::Index output_dim() const { return dim_ * static_cast<Eigen::Index>(1 + opts_.orders.size()); }
  const DerivativeOptions& options() const { return opts_; }

 private:
  Eigen::Index dim_;
  Eigen::Index batch_ = -1;  // fixed by the first step
  DerivativeOptions opts_;
  std::deque<Mat> history_;  // newest at back, holds <= max_order*h + 1 frames
};

// C(n, i) for the small orders used here.
long binomial(int n, int i);

}  // namespace motionsynth
