#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motionsynth/derivatives.hpp"
#include "motionsynth/gru.hpp"

namespace motionsynth {

struct VtlnConfig {
  int hidden_top = 512;
  int hidden_body = 512;
  int dim = 54;                             // joint-angle width D
  std::vector<int> derivative_orders = {1, 2, 3};
  int derivative_spacing = 1;
  int actions = 1;                          // one-hot width of the noise process input
  bool residual_output = true;
  bool use_bias = true;
  int seed_frames = 50;
  int horizon = 100;
  double dropout = 0.3;

  int input_width() const { return dim * (1 + static_cast<int>(derivative_orders.size())); }
  DerivativeOptions derivative_options() const {
    DerivativeOptions o;
    o.orders = derivative_orders;
    o.spacing = derivative_spacing;
    return o;
  }
  void validate() const;
};

// Every learnable tensor of the model. The same struct doubles as a gradient
// or optimizer accumulator since those are shape-congruent by construction.
struct VtlnParams {
  GruParams noise;   // backward-time noise process, input = one-hot action
  Vec mu, log_sigma; // reparameterized initial state of the noise process
  BodyGruParams body;
  DecoderParams dec;

  static VtlnParams zeros(const VtlnConfig& cfg);
  static VtlnParams init(const VtlnConfig& cfg, Rng& rng);

  // Visits every trainable tensor in a fixed order (biases skipped when
  // use_bias is off). The mutable overload allows in-place updates.
  void visit(const std::function<void(const std::string&, double*, Eigen::Index, Eigen::Index)>& f);
  void visit(const std::function<void(const std::string&, const double*, Eigen::Index, Eigen::Index)>& f) const;

  long scalar_count() const;
  void check_finite() const;
};

struct VtlnModel {
  VtlnConfig config;
  VtlnParams params;

  static VtlnModel init(const VtlnConfig& cfg, Rng& rng);
};

// Exact count of trainable scalars for a configuration, computed from the
// size formula; tested against the sum of visited tensor sizes.
long count_parameters(const VtlnConfig& cfg);

// z_phi = mu + exp(log_sigma) . eps. Batched: eps columns are independent
// draws.
Vec sample_initial_state(const Vec& mu, const Vec& log_sigma, const Vec& eps);
Mat sample_initial_state_batch(const Vec& mu, const Vec& log_sigma, const Mat& eps);

struct GuideCache {
  Mat z_phi;   // H_top x B
  Mat eps;     // H_top x B
  Mat onehot;  // A x B
  std::vector<GruCache> steps;  // K cell caches, update order
  std::vector<Mat> states;      // s_1..s_K, update order
};

// Runs the noise process for K updates from z_phi, feeding the same one-hot
// action at every step, and returns the guides in forward body time:
// guides[t-1] = p_t = s_{K-t+1}, so the most-processed state conditions the
// first body step.
std::vector<Mat> generate_guide_vectors(const GruParams& noise, const Mat& z_phi, const Mat& onehot, int K,
                                        GuideCache* cache = nullptr);

Mat one_hot(int action, int actions);  // A x 1
Mat one_hot_batch(const std::vector<int>& actions_per_column, int actions);

// Train-time dropout configuration for rollouts; inference leaves rng null.
struct RolloutMode {
  double dropout = 0.0;
  Rng* rng = nullptr;
  bool active() const { return rng != nullptr && dropout > 0.0; }
};

struct RolloutCache {
  std::vector<GruCache> cells;
  std::vector<DecoderCache> decs;     // empty entries where no decode happened
  std::vector<Mat> inputs_raw;        // pre-dropout augmented inputs, I x B
  std::vector<Mat> outputs;           // predictions, D x B (empty where skipped)
  std::vector<Mat> states;            // h after each step, H x B
  int seed_steps = 0;
  bool closed_loop = false;
};

// Teacher-forced pass over pre-augmented inputs; one prediction per step.
// Body state starts at zero; aborts with NonFinite if a state or output
// leaves [-1e6, 1e6].
std::vector<Mat> open_loop_rollout(const VtlnConfig& cfg, const VtlnParams& params,
                                   const std::vector<Mat>& aug_inputs, const std::vector<Mat>& guides,
                                   RolloutCache* cache = nullptr, RolloutMode mode = {});

// Primes on `seed_frames` ground-truth frames (raw joint angles, D x B each),
// then self-feeds for the remaining steps with derivatives recomputed on the
// fly. Returns the `horizon` post-seed predictions. Steps total
// seed + horizon - 1; guides must cover at least that many.
std::vector<Mat> closed_loop_rollout(const VtlnConfig& cfg, const VtlnParams& params,
                                     const std::vector<Mat>& seed_frames, int horizon,
                                     const std::vector<Mat>& guides, RolloutCache* cache = nullptr,
                                     RolloutMode mode = {});

// Alternates condition_length teacher-forced steps with condition_length
// self-fed steps, starting teacher-forced; returns one prediction per step.
std::vector<Mat> auto_conditioning_rollout(const VtlnConfig& cfg, const VtlnParams& params,
                                           const std::vector<Mat>& gt_frames, int condition_length,
                                           const std::vector<Mat>& guides, RolloutCache* cache = nullptr,
                                           RolloutMode mode = {});

// Single-sequence conveniences over the batched cores; sequences are rows.
Mat open_loop_forward(const VtlnModel& model, const Mat& aug_inputs_rows, const std::vector<Mat>& guides);
Mat closed_loop_forward(const VtlnModel& model, const Mat& seed_rows, int horizon, const std::vector<Mat>& guides);

}  // namespace motionsynth
