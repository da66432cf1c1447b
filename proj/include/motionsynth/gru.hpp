#pragma once

#include <optional>

#include "motionsynth/pose.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {

// Gate layout follows the usual reset/update/candidate split:
//   r = sigmoid(W_r x + U_r h + b_r)
//   z = sigmoid(W_z x + U_z h + b_z)
//   c = tanh(W_c x + U_c (r . h) + b_c)
//   h' = z . h + (1 - z) . c        (z gates the previous state)
struct GruParams {
  Mat W_r, W_z, W_c;  // H x I
  Mat U_r, U_z, U_c;  // H x H
  Vec b_r, b_z, b_c;  // H
  bool use_bias = true;

  Eigen::Index hidden_size() const { return W_r.rows(); }
  Eigen::Index input_size() const { return W_r.cols(); }

  static GruParams zeros(Eigen::Index hidden, Eigen::Index input, bool use_bias = true);
  void check_finite(const std::string& who) const;
};

// Body cell: adds guide-vector projections V_* p into every gate
// pre-activation. With V_* = 0 it reduces exactly to the standard cell.
struct BodyGruParams : GruParams {
  Mat V_r, V_z, V_c;  // H x P

  Eigen::Index guide_size() const { return V_r.cols(); }

  static BodyGruParams zeros(Eigen::Index hidden, Eigen::Index input, Eigen::Index guide, bool use_bias = true);
};

struct DecoderParams {
  Mat W_out;  // D x H
  Vec b_out;  // D
  bool residual_output = true;

  Eigen::Index output_size() const { return W_out.rows(); }

  static DecoderParams zeros(Eigen::Index out, Eigen::Index hidden, bool residual = true);
};

// Everything the analytic backward pass needs from one cell step. Columns are
// independent batch elements throughout.
struct GruCache {
  Mat x;       // input as used (post-dropout), I x B
  Mat h_prev;  // H x B
  Mat p;       // P x B; empty for the standard cell
  Mat r, z, c; // gate activations, H x B
  Mat drop_mask;  // scaled inverted-dropout mask on x, empty when unused
};

struct DecoderCache {
  Mat h;          // decoder input as used (post-dropout), H x B
  Mat x_joint;    // D x B (empty when residual is off)
  Mat drop_mask;  // mask on h, empty when unused
};

// drop_mask, when given, must already carry the 1/keep scale (see
// Rng::dropout_mask); it is applied to x before the gate products.
Mat gru_cell_forward(const GruParams& p, const Mat& x, const Mat& h_prev, GruCache* cache = nullptr,
                     const Mat* drop_mask = nullptr);

Mat body_gru_cell_forward(const BodyGruParams& p, const Mat& x, const Mat& h_prev, const Mat& guide,
                          GruCache* cache = nullptr, const Mat* drop_mask = nullptr);

// y = W_out h + b_out (+ x_joint when residual); x_joint is the raw
// joint-angle block of the step input, never the dropped one.
Mat decoder_forward(const DecoderParams& d, const Mat& h, const Mat& x_joint, DecoderCache* cache = nullptr,
                    const Mat* drop_mask = nullptr);

// Gradients of one step. dx is w.r.t. the raw (pre-dropout) input.
// Parameter gradients accumulate into `grads` (same shapes as the params).
void gru_cell_backward(const GruParams& p, const GruCache& cache, const Mat& dh_new, GruParams& grads, Mat& dx,
                       Mat& dh_prev);

void body_gru_cell_backward(const BodyGruParams& p, const GruCache& cache, const Mat& dh_new, BodyGruParams& grads,
                            Mat& dx, Mat& dh_prev, Mat& dp);

void decoder_backward(const DecoderParams& d, const DecoderCache& cache, const Mat& dy, DecoderParams& grads, Mat& dh,
                      Mat& dx_joint);

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
GruParams init_gru(Eigen::Index hidden, Eigen::Index input, Rng& rng, bool use_bias = true);
BodyGruParams init_body_gru(Eigen::Index hidden, Eigen::Index input, Eigen::Index guide, Rng& rng,
                            bool use_bias = true);
DecoderParams init_decoder(Eigen::Index out, Eigen::Index hidden, Rng& rng, bool residual = true);

}  // namespace motionsynth
