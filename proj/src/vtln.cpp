#include "motionsynth/vtln.hpp"

#include <cmath>

namespace motionsynth {

namespace {

constexpr double kDivergenceLimit = 1e6;

void guard_divergence(const Mat& m, const char* what) {
  require(m.allFinite() && m.cwiseAbs().maxCoeff() <= kDivergenceLimit, Err::non_finite,
          std::string(what) + " diverged beyond " + std::to_string(kDivergenceLimit));
}

}  // namespace

void VtlnConfig::validate() const {
  require(hidden_top >= 1 && hidden_body >= 1 && dim >= 1 && actions >= 1, Err::bad_config,
          "model sizes must be positive");
  require(horizon >= 1, Err::bad_config, "horizon must be >= 1");
  derivative_options().validate();
  const int need = derivative_orders.empty() ? 1 : derivative_orders.back() * derivative_spacing + 1;
  require(seed_frames >= need, Err::bad_config,
          "seed_frames must cover the derivative history (need >= " + std::to_string(need) + ")");
  require(dropout >= 0.0 && dropout < 1.0, Err::bad_config, "dropout must be in [0, 1)");
}

VtlnParams VtlnParams::zeros(const VtlnConfig& cfg) {
  cfg.validate();
  VtlnParams p;
  p.noise = GruParams::zeros(cfg.hidden_top, cfg.actions, cfg.use_bias);
  p.mu = Vec::Zero(cfg.hidden_top);
  p.log_sigma = Vec::Zero(cfg.hidden_top);
  p.body = BodyGruParams::zeros(cfg.hidden_body, cfg.input_width(), cfg.hidden_top, cfg.use_bias);
  p.dec = DecoderParams::zeros(cfg.dim, cfg.hidden_body, cfg.residual_output);
  return p;
}

VtlnParams VtlnParams::init(const VtlnConfig& cfg, Rng& rng) {
  cfg.validate();
  VtlnParams p;
  p.noise = init_gru(cfg.hidden_top, cfg.actions, rng, cfg.use_bias);
  p.mu = Vec::Zero(cfg.hidden_top);
  // Start with a small noise scale; sigma = exp(-2.3) ~ 0.1.
  p.log_sigma = Vec::Constant(cfg.hidden_top, std::log(0.1));
  p.body = init_body_gru(cfg.hidden_body, cfg.input_width(), cfg.hidden_top, rng, cfg.use_bias);
  p.dec = init_decoder(cfg.dim, cfg.hidden_body, rng, cfg.residual_output);
  return p;
}

VtlnModel VtlnModel::init(const VtlnConfig& cfg, Rng& rng) { return VtlnModel{cfg, VtlnParams::init(cfg, rng)}; }

namespace {

template <typename Params, typename F>
void visit_impl(Params& p, F&& f) {
  auto mat = [&](const char* name, auto& m) { f(name, m.data(), m.rows(), m.cols()); };
  mat("noise.W_r", p.noise.W_r);
  mat("noise.W_z", p.noise.W_z);
  mat("noise.W_c", p.noise.W_c);
  mat("noise.U_r", p.noise.U_r);
  mat("noise.U_z", p.noise.U_z);
  mat("noise.U_c", p.noise.U_c);
  if (p.noise.use_bias) {
    mat("noise.b_r", p.noise.b_r);
    mat("noise.b_z", p.noise.b_z);
    mat("noise.b_c", p.noise.b_c);
  }
  mat("mu", p.mu);
  mat("log_sigma", p.log_sigma);
  mat("body.W_r", p.body.W_r);
  mat("body.W_z", p.body.W_z);
  mat("body.W_c", p.body.W_c);
  mat("body.U_r", p.body.U_r);
  mat("body.U_z", p.body.U_z);
  mat("body.U_c", p.body.U_c);
  mat("body.V_r", p.body.V_r);
  mat("body.V_z", p.body.V_z);
  mat("body.V_c", p.body.V_c);
  if (p.body.use_bias) {
    mat("body.b_r", p.body.b_r);
    mat("body.b_z", p.body.b_z);
    mat("body.b_c", p.body.b_c);
  }
  mat("dec.W_out", p.dec.W_out);
  mat("dec.b_out", p.dec.b_out);
}

}  // namespace

void VtlnParams::visit(const std::function<void(const std::string&, double*, Eigen::Index, Eigen::Index)>& f) {
  visit_impl(*this, [&](const char* name, double* d, Eigen::Index r, Eigen::Index c) { f(name, d, r, c); });
}

void VtlnParams::visit(const std::function<void(const std::string&, const double*, Eigen::Index, Eigen::Index)>& f) const {
  visit_impl(*this, [&](const char* name, const double* d, Eigen::Index r, Eigen::Index c) { f(name, d, r, c); });
}

long VtlnParams::scalar_count() const {
  long n = 0;
  visit([&](const std::string&, const double*, Eigen::Index r, Eigen::Index c) { n += static_cast<long>(r * c); });
  return n;
}

void VtlnParams::check_finite() const {
  visit([&](const std::string& name, const double* d, Eigen::Index r, Eigen::Index c) {
    for (Eigen::Index i = 0; i < r * c; ++i)
      require(std::isfinite(d[i]), Err::non_finite, "tensor " + name + " is not finite");
  });
}

long count_parameters(const VtlnConfig& cfg) {
  cfg.validate();
  const long ht = cfg.hidden_top, hb = cfg.hidden_body, d = cfg.dim, a = cfg.actions;
  const long in = cfg.input_width();
  long n = 0;
  n += 3 * ht * a + 3 * ht * ht + (cfg.use_bias ? 3 * ht : 0);  // noise cell
  n += 2 * ht;                                                  // mu, log_sigma
  n += 3 * hb * in + 3 * hb * hb + 3 * hb * ht + (cfg.use_bias ? 3 * hb : 0);  // body cell
  n += d * hb + d;                                              // decoder
  return n;
}

Vec sample_initial_state(const Vec& mu, const Vec& log_sigma, const Vec& eps) {
  return sample_initial_state_batch(mu, log_sigma, Mat(eps)).col(0);
}

Mat sample_initial_state_batch(const Vec& mu, const Vec& log_sigma, const Mat& eps) {
  require(mu.size() == log_sigma.size() && eps.rows() == mu.size(), Err::dimension_mismatch,
          "initial-state dimensions disagree");
  Mat z = eps.array().colwise() * log_sigma.array().exp();
  z.colwise() += mu;
  return z;
}

Mat one_hot(int action, int actions) {
  require(action >= 0 && action < actions, Err::bad_config, "action id out of range");
  Mat v = Mat::Zero(actions, 1);
  v(action, 0) = 1.0;
  return v;
}

Mat one_hot_batch(const std::vector<int>& actions_per_column, int actions) {
  Mat m = Mat::Zero(actions, static_cast<Eigen::Index>(actions_per_column.size()));
  for (std::size_t b = 0; b < actions_per_column.size(); ++b) {
    require(actions_per_column[b] >= 0 && actions_per_column[b] < actions, Err::bad_config, "action id out of range");
    m(actions_per_column[b], static_cast<Eigen::Index>(b)) = 1.0;
  }
  return m;
}

std::vector<Mat> generate_guide_vectors(const GruParams& noise, const Mat& z_phi, const Mat& onehot, int K,
                                        GuideCache* cache) {
  require(K >= 1, Err::bad_config, "guide count must be >= 1");
  require(z_phi.rows() == noise.hidden_size(), Err::dimension_mismatch, "z_phi width mismatch");
  require(onehot.rows() == noise.input_size() && onehot.cols() == z_phi.cols(), Err::dimension_mismatch,
          "one-hot action shape mismatch");

  std::vector<Mat> states;
  states.reserve(static_cast<std::size_t>(K));
  if (cache != nullptr) {
    cache->z_phi = z_phi;
    cache->onehot = onehot;
    cache->steps.resize(static_cast<std::size_t>(K));
  }
  Mat h = z_phi;
  for (int m = 0; m < K; ++m) {
    h = gru_cell_forward(noise, onehot, h, cache != nullptr ? &cache->steps[static_cast<std::size_t>(m)] : nullptr);
    states.push_back(h);
  }
  if (cache != nullptr) cache->states = states;

  // Forward-time alignment: the last update feeds t = 1.
  std::vector<Mat> guides(static_cast<std::size_t>(K));
  for (int t = 1; t <= K; ++t) guides[static_cast<std::size_t>(t - 1)] = states[static_cast<std::size_t>(K - t)];
  return guides;
}

namespace {

// Shared body step: optional dropout on the cell input and the decoder input.
struct StepRunner {
  const VtlnConfig& cfg;
  const VtlnParams& params;
  const std::vector<Mat>& guides;
  RolloutCache* cache;
  RolloutMode mode;
  Eigen::Index batch;
  Mat h;

  StepRunner(const VtlnConfig& c, const VtlnParams& p, const std::vector<Mat>& g, RolloutCache* rc, RolloutMode m,
             Eigen::Index b, int steps)
      : cfg(c), params(p), guides(g), cache(rc), mode(m), batch(b) {
    require(static_cast<int>(guides.size()) >= steps, Err::dimension_mismatch,
            "need " + std::to_string(steps) + " guide vectors, have " + std::to_string(guides.size()));
    h = Mat::Zero(cfg.hidden_body, batch);
    if (cache != nullptr) {
      cache->cells.resize(static_cast<std::size_t>(steps));
      cache->decs.resize(static_cast<std::size_t>(steps));
      cache->inputs_raw.resize(static_cast<std::size_t>(steps));
      cache->outputs.resize(static_cast<std::size_t>(steps));
      cache->states.resize(static_cast<std::size_t>(steps));
    }
  }

  // Advances the hidden state on augmented input `aug` (step index n,
  // 0-based); decodes only when `decode` is set.
  Mat advance(int n, const Mat& aug, bool decode) {
    const auto un = static_cast<std::size_t>(n);
    Mat in_mask, dec_mask;
    const Mat* in_mask_ptr = nullptr;
    if (mode.active()) {
      in_mask = mode.rng->dropout_mask(aug.rows(), batch, mode.dropout);
      in_mask_ptr = &in_mask;
    }
    GruCache* cell_cache = cache != nullptr ? &cache->cells[un] : nullptr;
    h = body_gru_cell_forward(params.body, aug, h, guides[un], cell_cache, in_mask_ptr);
    guard_divergence(h, "body state");
    if (cache != nullptr) {
      cache->inputs_raw[un] = aug;
      cache->states[un] = h;
    }
    if (!decode) return Mat();

    const Mat* dec_mask_ptr = nullptr;
    if (mode.active()) {
      dec_mask = mode.rng->dropout_mask(h.rows(), batch, mode.dropout);
      dec_mask_ptr = &dec_mask;
    }
    DecoderCache* dec_cache = cache != nullptr ? &cache->decs[un] : nullptr;
    Mat y = decoder_forward(params.dec, h, aug.topRows(cfg.dim), dec_cache, dec_mask_ptr);
    guard_divergence(y, "prediction");
    if (cache != nullptr) cache->outputs[un] = y;
    return y;
  }
};

}  // namespace

std::vector<Mat> open_loop_rollout(const VtlnConfig& cfg, const VtlnParams& params, const std::vector<Mat>& aug_inputs,
                                   const std::vector<Mat>& guides, RolloutCache* cache, RolloutMode mode) {
  require(!aug_inputs.empty(), Err::empty, "open-loop rollout needs at least one input");
  const int steps = static_cast<int>(aug_inputs.size());
  const Eigen::Index batch = aug_inputs.front().cols();
  StepRunner run(cfg, params, guides, cache, mode, batch, steps);
  if (cache != nullptr) {
    cache->seed_steps = steps;
    cache->closed_loop = false;
  }
  std::vector<Mat> outputs;
  outputs.reserve(aug_inputs.size());
  for (int n = 0; n < steps; ++n) {
    require(aug_inputs[static_cast<std::size_t>(n)].rows() == cfg.input_width(), Err::dimension_mismatch,
            "augmented input width mismatch");
    outputs.push_back(run.advance(n, aug_inputs[static_cast<std::size_t>(n)], true));
  }
  return outputs;
}

std::vector<Mat> closed_loop_rollout(const VtlnConfig& cfg, const VtlnParams& params,
                                     const std::vector<Mat>& seed_frames, int horizon,
                                     const std::vector<Mat>& guides, RolloutCache* cache, RolloutMode mode) {
  const int S = static_cast<int>(seed_frames.size());
  const int need = cfg.derivative_orders.empty() ? 1 : cfg.derivative_orders.back() * cfg.derivative_spacing + 1;
  require(S >= need, Err::bad_config, "seed must cover the derivative history");
  require(horizon >= 1, Err::bad_config, "horizon must be >= 1");
  const Eigen::Index batch = seed_frames.front().cols();
  const int steps = S + horizon - 1;

  StepRunner run(cfg, params, guides, cache, mode, batch, steps);
  if (cache != nullptr) {
    cache->seed_steps = S;
    cache->closed_loop = true;
  }
  DerivativeStepper stepper(cfg.dim, cfg.derivative_options());

  std::vector<Mat> horizon_preds;
  horizon_preds.reserve(static_cast<std::size_t>(horizon));
  Mat prev_pred;
  for (int n = 0; n < steps; ++n) {
    Mat frame;  // absolute frame index n feeding this step
    if (n < S) {
      frame = seed_frames[static_cast<std::size_t>(n)];
      require(frame.rows() == cfg.dim && frame.cols() == batch, Err::dimension_mismatch, "seed frame shape mismatch");
    } else {
      frame = prev_pred;
    }
    Mat aug = stepper.step(frame);
    const bool decode = n >= S - 1;  // predictions of frames S .. S+horizon-1
    Mat y = run.advance(n, aug, decode);
    if (decode) {
      horizon_preds.push_back(y);
      prev_pred = std::move(y);
    }
  }
  return horizon_preds;
}

std::vector<Mat> auto_conditioning_rollout(const VtlnConfig& cfg, const VtlnParams& params,
                                           const std::vector<Mat>& gt_frames, int condition_length,
                                           const std::vector<Mat>& guides, RolloutCache* cache, RolloutMode mode) {
  require(condition_length >= 1, Err::bad_config, "condition length must be >= 1");
  require(!gt_frames.empty(), Err::empty, "auto-conditioning rollout needs input frames");
  const int steps = static_cast<int>(gt_frames.size());
  const Eigen::Index batch = gt_frames.front().cols();

  StepRunner run(cfg, params, guides, cache, mode, batch, steps);
  if (cache != nullptr) {
    cache->seed_steps = condition_length;
    cache->closed_loop = true;
  }
  DerivativeStepper stepper(cfg.dim, cfg.derivative_options());

  std::vector<Mat> outputs;
  outputs.reserve(static_cast<std::size_t>(steps));
  for (int n = 0; n < steps; ++n) {
    const bool teacher = ((n / condition_length) % 2) == 0;
    const Mat& frame = teacher ? gt_frames[static_cast<std::size_t>(n)] : outputs[static_cast<std::size_t>(n - 1)];
    Mat aug = stepper.step(frame);
    outputs.push_back(run.advance(n, aug, true));
  }
  return outputs;
}

namespace {

std::vector<Mat> rows_to_columns(const Mat& rows) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index t = 0; t < rows.rows(); ++t) out.push_back(rows.row(t).transpose());
  return out;
}

Mat columns_to_rows(const std::vector<Mat>& cols) {
  require(!cols.empty(), Err::empty, "no outputs");
  Mat out(static_cast<Eigen::Index>(cols.size()), cols.front().rows());
  for (std::size_t t = 0; t < cols.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = cols[t].col(0).transpose();
  return out;
}

}  // namespace

Mat open_loop_forward(const VtlnModel& model, const Mat& aug_inputs_rows, const std::vector<Mat>& guides) {
  return columns_to_rows(open_loop_rollout(model.config, model.params, rows_to_columns(aug_inputs_rows), guides));
}

Mat closed_loop_forward(const VtlnModel& model, const Mat& seed_rows, int horizon, const std::vector<Mat>& guides) {
  return columns_to_rows(
      closed_loop_rollout(model.config, model.params, rows_to_columns(seed_rows), horizon, guides));
}

}  // namespace motionsynth
