#include "motionsynth/gru.hpp"

#include <cmath>

namespace motionsynth {

namespace {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

void check_cell_dims(const GruParams& p, const Mat& x, const Mat& h_prev) {
  require(x.rows() == p.input_size(), Err::dimension_mismatch,
          "input width " + std::to_string(x.rows()) + " != " + std::to_string(p.input_size()));
  require(h_prev.rows() == p.hidden_size(), Err::dimension_mismatch, "hidden state width mismatch");
  require(x.cols() == h_prev.cols(), Err::dimension_mismatch, "batch width mismatch between x and h_prev");
}

// Shared forward for both cell flavours; `guide` may be empty.
Mat cell_forward(const GruParams& p, const Mat* V_r, const Mat* V_z, const Mat* V_c, const Mat& x_raw,
                 const Mat& h_prev, const Mat& guide, GruCache* cache, const Mat* drop_mask) {
  check_cell_dims(p, x_raw, h_prev);
  require(x_raw.allFinite() && h_prev.allFinite(), Err::non_finite, "cell inputs are not finite");

  Mat x = x_raw;
  if (drop_mask != nullptr) {
    require(drop_mask->rows() == x.rows() && drop_mask->cols() == x.cols(), Err::dimension_mismatch,
            "dropout mask shape mismatch");
    x = x.cwiseProduct(*drop_mask);
  }

  Mat a_r = p.W_r * x + p.U_r * h_prev;
  Mat a_z = p.W_z * x + p.U_z * h_prev;
  if (V_r != nullptr) {
    require(guide.rows() == V_r->cols(), Err::dimension_mismatch, "guide width mismatch");
    require(guide.cols() == x.cols(), Err::dimension_mismatch, "batch width mismatch between x and guide");
    a_r.noalias() += *V_r * guide;
    a_z.noalias() += *V_z * guide;
  }
  if (p.use_bias) {
    a_r.colwise() += p.b_r;
    a_z.colwise() += p.b_z;
  }
  Mat r = sigmoid(a_r.array());
  Mat z = sigmoid(a_z.array());

  Mat a_c = p.W_c * x + p.U_c * r.cwiseProduct(h_prev);
  if (V_c != nullptr) a_c.noalias() += *V_c * guide;
  if (p.use_bias) a_c.colwise() += p.b_c;
  Mat c = a_c.array().tanh();

  Mat h_new = z.cwiseProduct(h_prev) + (Mat::Ones(z.rows(), z.cols()) - z).cwiseProduct(c);
  require(h_new.allFinite(), Err::non_finite, "cell output is not finite");

  if (cache != nullptr) {
    cache->x = std::move(x);
    cache->h_prev = h_prev;
    cache->p = guide;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->c = std::move(c);
    cache->drop_mask = drop_mask != nullptr ? *drop_mask : Mat();
  }
  return h_new;
}

// Shared backward; writes dp only when V_* are present.
void cell_backward(const GruParams& p, const Mat* V_r, const Mat* V_z, const Mat* V_c, const GruCache& cache,
                   const Mat& dh_new, GruParams& grads, Mat* gV_r, Mat* gV_z, Mat* gV_c, Mat& dx, Mat& dh_prev,
                   Mat* dp) {
  require(cache.x.rows() == p.input_size() && cache.h_prev.rows() == p.hidden_size(), Err::stale_cache,
          "cache does not match the cell parameters");
  require(dh_new.rows() == p.hidden_size() && dh_new.cols() == cache.x.cols(), Err::dimension_mismatch,
          "dh_new shape mismatch");

  const Mat& r = cache.r;
  const Mat& z = cache.z;
  const Mat& c = cache.c;
  const Mat& h_prev = cache.h_prev;

  // h' = z.h + (1-z).c
  Mat dc = dh_new.cwiseProduct(Mat::Ones(z.rows(), z.cols()) - z);
  Mat dz = dh_new.cwiseProduct(h_prev - c);
  dh_prev = dh_new.cwiseProduct(z);

  // candidate: c = tanh(a_c)
  Mat da_c = dc.array() * (1.0 - c.array().square());
  grads.W_c.noalias() += da_c * cache.x.transpose();
  grads.U_c.noalias() += da_c * r.cwiseProduct(h_prev).transpose();
  if (p.use_bias) grads.b_c += da_c.rowwise().sum();
  dx = p.W_c.transpose() * da_c;
  Mat d_rh = p.U_c.transpose() * da_c;
  Mat dr = d_rh.cwiseProduct(h_prev);
  dh_prev.noalias() += d_rh.cwiseProduct(r);

  // update gate: z = sigmoid(a_z)
  Mat da_z = dz.array() * z.array() * (1.0 - z.array());
  grads.W_z.noalias() += da_z * cache.x.transpose();
  grads.U_z.noalias() += da_z * h_prev.transpose();
  if (p.use_bias) grads.b_z += da_z.rowwise().sum();
  dx.noalias() += p.W_z.transpose() * da_z;
  dh_prev.noalias() += p.U_z.transpose() * da_z;

  // reset gate: r = sigmoid(a_r)
  Mat da_r = dr.array() * r.array() * (1.0 - r.array());
  grads.W_r.noalias() += da_r * cache.x.transpose();
  grads.U_r.noalias() += da_r * h_prev.transpose();
  if (p.use_bias) grads.b_r += da_r.rowwise().sum();
  dx.noalias() += p.W_r.transpose() * da_r;
  dh_prev.noalias() += p.U_r.transpose() * da_r;

  if (V_r != nullptr) {
    gV_r->noalias() += da_r * cache.p.transpose();
    gV_z->noalias() += da_z * cache.p.transpose();
    gV_c->noalias() += da_c * cache.p.transpose();
    *dp = V_r->transpose() * da_r;
    dp->noalias() += V_z->transpose() * da_z;
    dp->noalias() += V_c->transpose() * da_c;
  }

  // Undo the dropout scaling so dx refers to the raw input.
  if (cache.drop_mask.size() > 0) dx = dx.cwiseProduct(cache.drop_mask);
}

Mat uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  return rng.uniform_matrix(rows, cols, -bound, bound);
}

}  // namespace

GruParams GruParams::zeros(Eigen::Index hidden, Eigen::Index input, bool use_bias) {
  GruParams p;
  p.W_r = Mat::Zero(hidden, input);
  p.W_z = Mat::Zero(hidden, input);
  p.W_c = Mat::Zero(hidden, input);
  p.U_r = Mat::Zero(hidden, hidden);
  p.U_z = Mat::Zero(hidden, hidden);
  p.U_c = Mat::Zero(hidden, hidden);
  p.b_r = Vec::Zero(hidden);
  p.b_z = Vec::Zero(hidden);
  p.b_c = Vec::Zero(hidden);
  p.use_bias = use_bias;
  return p;
}

void GruParams::check_finite(const std::string& who) const {
  const bool ok = W_r.allFinite() && W_z.allFinite() && W_c.allFinite() && U_r.allFinite() && U_z.allFinite() &&
                  U_c.allFinite() && b_r.allFinite() && b_z.allFinite() && b_c.allFinite();
  require(ok, Err::non_finite, who + ": parameters are not finite");
}

BodyGruParams BodyGruParams::zeros(Eigen::Index hidden, Eigen::Index input, Eigen::Index guide, bool use_bias) {
  BodyGruParams p;
  static_cast<GruParams&>(p) = GruParams::zeros(hidden, input, use_bias);
  p.V_r = Mat::Zero(hidden, guide);
  p.V_z = Mat::Zero(hidden, guide);
  p.V_c = Mat::Zero(hidden, guide);
  return p;
}

DecoderParams DecoderParams::zeros(Eigen::Index out, Eigen::Index hidden, bool residual) {
  DecoderParams d;
  d.W_out = Mat::Zero(out, hidden);
  d.b_out = Vec::Zero(out);
  d.residual_output = residual;
  return d;
}

Mat gru_cell_forward(const GruParams& p, const Mat& x, const Mat& h_prev, GruCache* cache, const Mat* drop_mask) {
  return cell_forward(p, nullptr, nullptr, nullptr, x, h_prev, Mat(), cache, drop_mask);
}

Mat body_gru_cell_forward(const BodyGruParams& p, const Mat& x, const Mat& h_prev, const Mat& guide, GruCache* cache,
                          const Mat* drop_mask) {
  return cell_forward(p, &p.V_r, &p.V_z, &p.V_c, x, h_prev, guide, cache, drop_mask);
}

Mat decoder_forward(const DecoderParams& d, const Mat& h, const Mat& x_joint, DecoderCache* cache,
                    const Mat* drop_mask) {
  require(h.rows() == d.W_out.cols(), Err::dimension_mismatch, "decoder input width mismatch");
  Mat h_used = h;
  if (drop_mask != nullptr) {
    require(drop_mask->rows() == h.rows() && drop_mask->cols() == h.cols(), Err::dimension_mismatch,
            "decoder dropout mask shape mismatch");
    h_used = h_used.cwiseProduct(*drop_mask);
  }
  Mat y = d.W_out * h_used;
  y.colwise() += d.b_out;
  if (d.residual_output) {
    require(x_joint.rows() == d.output_size() && x_joint.cols() == h.cols(), Err::dimension_mismatch,
            "residual joint block shape mismatch");
    y += x_joint;
  }
  if (cache != nullptr) {
    cache->h = std::move(h_used);
    cache->x_joint = d.residual_output ? x_joint : Mat();
    cache->drop_mask = drop_mask != nullptr ? *drop_mask : Mat();
  }
  return y;
}

void gru_cell_backward(const GruParams& p, const GruCache& cache, const Mat& dh_new, GruParams& grads, Mat& dx,
                       Mat& dh_prev) {
  cell_backward(p, nullptr, nullptr, nullptr, cache, dh_new, grads, nullptr, nullptr, nullptr, dx, dh_prev, nullptr);
}

void body_gru_cell_backward(const BodyGruParams& p, const GruCache& cache, const Mat& dh_new, BodyGruParams& grads,
                            Mat& dx, Mat& dh_prev, Mat& dp) {
  require(cache.p.rows() == p.guide_size(), Err::stale_cache, "cache guide width does not match the parameters");
  cell_backward(p, &p.V_r, &p.V_z, &p.V_c, cache, dh_new, grads, &grads.V_r, &grads.V_z, &grads.V_c, dx, dh_prev,
                &dp);
}

void decoder_backward(const DecoderParams& d, const DecoderCache& cache, const Mat& dy, DecoderParams& grads, Mat& dh,
                      Mat& dx_joint) {
  require(cache.h.rows() == d.W_out.cols(), Err::stale_cache, "decoder cache does not match the parameters");
  grads.W_out.noalias() += dy * cache.h.transpose();
  grads.b_out += dy.rowwise().sum();
  dh = d.W_out.transpose() * dy;
  if (cache.drop_mask.size() > 0) dh = dh.cwiseProduct(cache.drop_mask);
  dx_joint = d.residual_output ? dy : Mat::Zero(dy.rows(), dy.cols());
}

GruParams init_gru(Eigen::Index hidden, Eigen::Index input, Rng& rng, bool use_bias) {
  require(hidden >= 1 && input >= 1, Err::bad_config, "cell sizes must be positive");
  GruParams p = GruParams::zeros(hidden, input, use_bias);
  p.W_r = uniform_fan_in(hidden, input, rng);
  p.W_z = uniform_fan_in(hidden, input, rng);
  p.W_c = uniform_fan_in(hidden, input, rng);
  p.U_r = uniform_fan_in(hidden, hidden, rng);
  p.U_z = uniform_fan_in(hidden, hidden, rng);
  p.U_c = uniform_fan_in(hidden, hidden, rng);
  return p;
}

BodyGruParams init_body_gru(Eigen::Index hidden, Eigen::Index input, Eigen::Index guide, Rng& rng, bool use_bias) {
  require(guide >= 1, Err::bad_config, "guide size must be positive");
  BodyGruParams p = BodyGruParams::zeros(hidden, input, guide, use_bias);
  static_cast<GruParams&>(p) = init_gru(hidden, input, rng, use_bias);
  p.V_r = uniform_fan_in(hidden, guide, rng);
  p.V_z = uniform_fan_in(hidden, guide, rng);
  p.V_c = uniform_fan_in(hidden, guide, rng);
  return p;
}

DecoderParams init_decoder(Eigen::Index out, Eigen::Index hidden, Rng& rng, bool residual) {
  require(out >= 1 && hidden >= 1, Err::bad_config, "decoder sizes must be positive");
  DecoderParams d = DecoderParams::zeros(out, hidden, residual);
  d.W_out = uniform_fan_in(out, hidden, rng);
  return d;
}

}  // namespace motionsynth
