#pragma once

#include <vector>

#include "motionsynth/pose.hpp"

namespace motionsynth {

// Piecewise-constant, right-continuous weight schedule for the closed-loop
// loss term; starts at zero and never decreases.
struct LambdaStep {
  long iteration = 0;
  double value = 0.0;
};

struct LossConfig {
  std::vector<LambdaStep> lambda_schedule;  // ascending iterations
  long open_steps = 0;    // T: open-loop predictions per window
  long closed_steps = 0;  // T': closed-loop horizon

  void validate() const;
};

// Six equal steps from 0 to 1 at iteration fractions 0, 1/6 .. 5/6.
std::vector<LambdaStep> default_lambda_schedule(long total_iterations);

double lambda_schedule(long iteration, const LossConfig& cfg);

// L = (1/T) sum_t |open_t - y_t|^2 + (lambda/T') sum_t |closed_t - y'_t|^2
// with per-frame squared Euclidean norms over D. Frames are rows.
double multi_objective_loss(const Mat& open_pred, const Mat& open_truth, const Mat& closed_pred,
                            const Mat& closed_truth, double lambda);

// Batched variant over per-step column blocks (each D x B); predictions and
// truths index the same steps. Returns {open_term, closed_term} averaged over
// the batch.
struct LossParts {
  double open = 0.0;
  double closed = 0.0;
  double total(double lambda) const { return open + lambda * closed; }
};

LossParts multi_objective_loss_batch(const std::vector<Mat>& open_pred, const std::vector<Mat>& open_truth,
                                     const std::vector<Mat>& closed_pred, const std::vector<Mat>& closed_truth,
                                     double lambda);

}  // namespace motionsynth
