#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionsynth/loss.hpp"
#include "motionsynth/optimizer.hpp"
#include "motionsynth/vtln.hpp"

namespace motionsynth {

enum class TrainMode { multi_objective, auto_conditioning };

struct TrainOptions {
  long iterations = 10000;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  LrSchedule lr = long_term_lr_schedule();
  std::vector<LambdaStep> lambda;  // empty: six equal steps over `iterations`
  TrainMode mode = TrainMode::multi_objective;
  int condition_length = 5;
  bool stop_feedback_gradients = false;
  int threads = 1;
  bool standardize = true;

  void validate() const;
};

struct TrainLogRow {
  long iteration = 0;
  double lambda = 0.0;
  double lr = 0.0;
  double open_loss = 0.0;
  double closed_loss = 0.0;
  double total_loss = 0.0;
};

std::string train_log_to_csv(const std::vector<TrainLogRow>& log);

struct TrainingData {
  std::vector<Mat> sequences;  // frames as rows, already in model space
  std::vector<int> actions;
  double fps = 25.0;
};

struct TrainResult {
  VtlnModel model;
  NormStats stats;
  RmspropState opt;
  std::vector<TrainLogRow> log;
  std::string rng_state;
};

// One training window evaluated end to end: guides from the reparameterized
// noise process, a teacher-forced pass over the full window and a closed-loop
// pass primed on the seed frames. Window frames are D x B column blocks.
struct WindowForward {
  GuideCache guide_cache;
  std::vector<Mat> guides;
  RolloutCache open;
  RolloutCache closed;
  std::vector<Mat> open_preds;     // steps 0..N-1, predicting frames 1..N
  std::vector<Mat> closed_preds;   // horizon predictions, frames S..L-1
  std::vector<Mat> open_targets;
  std::vector<Mat> closed_targets;
  LossParts loss;
  Mat eps;
  Mat onehot;
  int seed_steps = 0;
};

WindowForward run_window_forward(const VtlnConfig& cfg, const VtlnParams& params, const std::vector<Mat>& window,
                                 const Mat& eps, const Mat& onehot, double lambda, RolloutMode mode = {});

// Full-model BPTT for one window: both rollouts, the feedback path through
// self-fed inputs and their recomputed derivative blocks, the guide chain,
// and the reparameterized initial state. Loss gradients are batch-mean
// scaled, matching WindowForward::loss.
VtlnParams backward_window(const VtlnConfig& cfg, const VtlnParams& params, const WindowForward& fwd, double lambda,
                           bool stop_feedback_gradients = false);

// Auto-conditioned alternative (one pass, MSE over every step).
struct AutocondForward {
  GuideCache guide_cache;
  std::vector<Mat> guides;
  RolloutCache rollout;
  std::vector<Mat> preds;
  std::vector<Mat> targets;
  double loss = 0.0;
  Mat eps;
  Mat onehot;
  int condition_length = 5;
};

AutocondForward run_autocond_forward(const VtlnConfig& cfg, const VtlnParams& params, const std::vector<Mat>& window,
                                     const Mat& eps, const Mat& onehot, int condition_length, RolloutMode mode = {});

VtlnParams backward_autocond(const VtlnConfig& cfg, const VtlnParams& params, const AutocondForward& fwd);

TrainResult train(const VtlnConfig& cfg, const TrainOptions& opts, const TrainingData& data);

}  // namespace motionsynth
