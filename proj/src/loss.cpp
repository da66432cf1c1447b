#include "motionsynth/loss.hpp"

#include <cmath>

namespace motionsynth {

void LossConfig::validate() const {
  require(!lambda_schedule.empty(), Err::bad_schedule, "lambda schedule is empty");
  require(lambda_schedule.front().iteration == 0 && lambda_schedule.front().value == 0.0, Err::bad_schedule,
          "lambda schedule must start at (0, 0)");
  for (std::size_t i = 1; i < lambda_schedule.size(); ++i) {
    require(lambda_schedule[i].iteration > lambda_schedule[i - 1].iteration, Err::bad_schedule,
            "lambda thresholds must be strictly increasing");
    require(lambda_schedule[i].value >= lambda_schedule[i - 1].value, Err::bad_schedule,
            "lambda values must be non-decreasing");
  }
  for (const auto& s : lambda_schedule)
    require(s.value >= 0.0, Err::negative_lambda, "lambda must be non-negative");
}

std::vector<LambdaStep> default_lambda_schedule(long total_iterations) {
  require(total_iterations >= 1, Err::bad_schedule, "total iterations must be positive");
  std::vector<LambdaStep> steps;
  for (int k = 0; k < 6; ++k)
    steps.push_back({k * total_iterations / 6, static_cast<double>(k) / 5.0});
  // Degenerate totals (< 6) can collapse thresholds; keep the first of each.
  std::vector<LambdaStep> dedup;
  for (const auto& s : steps)
    if (dedup.empty() || s.iteration > dedup.back().iteration) dedup.push_back(s);
    else dedup.back().value = std::max(dedup.back().value, s.value);
  if (!dedup.empty() && dedup.front().iteration == 0) dedup.front().value = 0.0;
  return dedup;
}

double lambda_schedule(long iteration, const LossConfig& cfg) {
  cfg.validate();
  require(iteration >= 0, Err::bad_schedule, "iteration must be non-negative");
  double value = 0.0;
  for (const auto& s : cfg.lambda_schedule) {
    if (iteration >= s.iteration) value = s.value;
    else break;
  }
  return value;
}

double multi_objective_loss(const Mat& open_pred, const Mat& open_truth, const Mat& closed_pred,
                            const Mat& closed_truth, double lambda) {
  require(lambda >= 0.0, Err::negative_lambda, "lambda must be non-negative");
  require(open_pred.rows() == open_truth.rows() && open_pred.cols() == open_truth.cols(), Err::dimension_mismatch,
          "open-loop prediction/truth shapes disagree");
  require(closed_pred.rows() == closed_truth.rows() && closed_pred.cols() == closed_truth.cols(),
          Err::dimension_mismatch, "closed-loop prediction/truth shapes disagree");
  double open = (open_pred - open_truth).array().square().sum() / static_cast<double>(open_pred.rows());
  double closed = closed_pred.rows() > 0
                      ? (closed_pred - closed_truth).array().square().sum() / static_cast<double>(closed_pred.rows())
                      : 0.0;
  return open + lambda * closed;
}

LossParts multi_objective_loss_batch(const std::vector<Mat>& open_pred, const std::vector<Mat>& open_truth,
                                     const std::vector<Mat>& closed_pred, const std::vector<Mat>& closed_truth,
                                     double lambda) {
  require(lambda >= 0.0, Err::negative_lambda, "lambda must be non-negative");
  require(open_pred.size() == open_truth.size() && closed_pred.size() == closed_truth.size(),
          Err::dimension_mismatch, "prediction/truth step counts disagree");
  LossParts parts;
  if (!open_pred.empty()) {
    const double batch = static_cast<double>(open_pred.front().cols());
    for (std::size_t t = 0; t < open_pred.size(); ++t)
      parts.open += (open_pred[t] - open_truth[t]).array().square().sum();
    parts.open /= static_cast<double>(open_pred.size()) * batch;
  }
  if (!closed_pred.empty()) {
    const double batch = static_cast<double>(closed_pred.front().cols());
    for (std::size_t t = 0; t < closed_pred.size(); ++t)
      parts.closed += (closed_pred[t] - closed_truth[t]).array().square().sum();
    parts.closed /= static_cast<double>(closed_pred.size()) * batch;
  }
  return parts;
}

}  // namespace motionsynth
