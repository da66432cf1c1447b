#include "motionsynth/trainer.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <thread>

namespace motionsynth {

namespace {

// Adds every visited tensor of `src` into `dst`.
void accumulate(VtlnParams& dst, const VtlnParams& src) {
  std::vector<std::pair<double*, Eigen::Index>> d;
  dst.visit([&](const std::string&, double* p, Eigen::Index r, Eigen::Index c) { d.push_back({p, r * c}); });
  std::size_t k = 0;
  src.visit([&](const std::string&, const double* p, Eigen::Index r, Eigen::Index c) {
    for (Eigen::Index i = 0; i < r * c; ++i) d[k].first[i] += p[i];
    ++k;
  });
}

std::vector<Mat> augment_window(const VtlnConfig& cfg, const std::vector<Mat>& frames, int steps) {
  DerivativeStepper stepper(cfg.dim, cfg.derivative_options());
  std::vector<Mat> aug;
  aug.reserve(static_cast<std::size_t>(steps));
  for (int n = 0; n < steps; ++n) aug.push_back(stepper.step(frames[static_cast<std::size_t>(n)]));
  return aug;
}

// Distributes the gradient of one step's raw augmented input onto the frames
// it was assembled from. `sink(j)` returns the accumulator for predicted
// frame j, or nullptr when that frame is a constant (ground truth or
// stop-gradient).
void scatter_input_gradient(const VtlnConfig& cfg, int step, const Mat& dx,
                            const std::function<Mat*(int)>& sink) {
  const Eigen::Index D = cfg.dim;
  if (Mat* acc = sink(step)) acc->noalias() += dx.topRows(D);
  const int h = cfg.derivative_spacing;
  for (std::size_t b = 0; b < cfg.derivative_orders.size(); ++b) {
    const int order = cfg.derivative_orders[b];
    const auto block = dx.middleRows(D * static_cast<Eigen::Index>(1 + b), D);
    for (int i = 0; i <= order; ++i) {
      const int j = std::max(step - i * h, 0);
      if (Mat* acc = sink(j)) {
        const double coef = (i % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(binomial(order, i));
        acc->noalias() += coef * block;
      }
    }
  }
}

// Reverse pass over one body rollout. dy_by_step[n] is the loss gradient on
// the step-n output (empty when that step produced no scored output);
// `frame_is_pred(j)` says whether absolute frame j was a self-fed prediction.
// Guide gradients accumulate into dguides (forward-time order).
void rollout_backward(const VtlnConfig& cfg, const VtlnParams& params, const RolloutCache& cache,
                      const std::vector<Mat>& dy_by_step, const std::function<bool(int)>& frame_is_pred,
                      bool stop_feedback, VtlnParams& grads, std::vector<Mat>& dguides) {
  const int steps = static_cast<int>(cache.cells.size());
  const Eigen::Index batch = steps > 0 ? cache.cells[0].h_prev.cols() : 0;
  const Eigen::Index D = cfg.dim;

  // dpred[j]: accumulated gradient on the prediction of frame j (produced at
  // step j-1). Feedback contributions land here before step j-1 is reached.
  std::vector<Mat> dpred(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n < steps; ++n) {
    if (dy_by_step[static_cast<std::size_t>(n)].size() > 0)
      dpred[static_cast<std::size_t>(n + 1)] = dy_by_step[static_cast<std::size_t>(n)];
  }
  auto sink = [&](int j) -> Mat* {
    if (stop_feedback || !frame_is_pred(j)) return nullptr;
    Mat& acc = dpred[static_cast<std::size_t>(j)];
    if (acc.size() == 0) acc = Mat::Zero(D, batch);
    return &acc;
  };

  Mat dh_next = Mat::Zero(cfg.hidden_body, batch);
  for (int n = steps - 1; n >= 0; --n) {
    const auto un = static_cast<std::size_t>(n);
    Mat dh = dh_next;
    Mat dx_joint_dec;
    const bool decoded = cache.decs[un].h.size() > 0;
    if (decoded && dpred[un + 1].size() > 0) {
      Mat dh_dec;
      decoder_backward(params.dec, cache.decs[un], dpred[un + 1], grads.dec, dh_dec, dx_joint_dec);
      dh += dh_dec;
    }
    Mat dx, dh_prev, dp;
    body_gru_cell_backward(params.body, cache.cells[un], dh, grads.body, dx, dh_prev, dp);
    Mat& dg = dguides[un];
    if (dg.size() == 0)
      dg = dp;
    else
      dg += dp;
    if (dx_joint_dec.size() > 0) dx.topRows(D) += dx_joint_dec;
    scatter_input_gradient(cfg, n, dx, sink);
    dh_next = std::move(dh_prev);
  }
}

// Backward through the noise process and the reparameterized initial state.
void guides_backward(const VtlnParams& params, const GuideCache& guide_cache, const std::vector<Mat>& dguides,
                     VtlnParams& grads) {
  const int K = static_cast<int>(guide_cache.states.size());
  const Eigen::Index batch = guide_cache.z_phi.cols();
  Mat dh_carry = Mat::Zero(params.noise.hidden_size(), batch);
  for (int m = K - 1; m >= 0; --m) {
    // states[m] was exported as the guide for forward time t = K - m.
    Mat dh = dh_carry;
    const Mat& dg = dguides[static_cast<std::size_t>(K - 1 - m)];
    if (dg.size() > 0) dh += dg;
    Mat dx, dh_prev;
    gru_cell_backward(params.noise, guide_cache.steps[static_cast<std::size_t>(m)], dh, grads.noise, dx, dh_prev);
    dh_carry = std::move(dh_prev);
  }
  // z_phi = mu + exp(log_sigma) . eps
  grads.mu += dh_carry.rowwise().sum();
  grads.log_sigma +=
      (dh_carry.array() * guide_cache.eps.array()).matrix().rowwise().sum().cwiseProduct(params.log_sigma.array().exp().matrix());
}

}  // namespace

WindowForward run_window_forward(const VtlnConfig& cfg, const VtlnParams& params, const std::vector<Mat>& window,
                                 const Mat& eps, const Mat& onehot, double lambda, RolloutMode mode) {
  const int L = static_cast<int>(window.size());
  const int S = cfg.seed_frames;
  require(L == S + cfg.horizon, Err::dimension_mismatch,
          "window must hold seed + horizon frames (" + std::to_string(S + cfg.horizon) + ")");
  const int steps = L - 1;

  WindowForward fwd;
  fwd.eps = eps;
  fwd.onehot = onehot;
  fwd.seed_steps = S;
  fwd.guide_cache.eps = eps;

  Mat z_phi = sample_initial_state_batch(params.mu, params.log_sigma, eps);
  fwd.guides = generate_guide_vectors(params.noise, z_phi, onehot, L, &fwd.guide_cache);

  std::vector<Mat> aug = augment_window(cfg, window, steps);
  fwd.open_preds = open_loop_rollout(cfg, params, aug, fwd.guides, &fwd.open, mode);

  std::vector<Mat> seed(window.begin(), window.begin() + S);
  fwd.closed_preds = closed_loop_rollout(cfg, params, seed, cfg.horizon, fwd.guides, &fwd.closed, mode);

  fwd.open_targets.assign(window.begin() + 1, window.end());
  fwd.closed_targets.assign(window.begin() + S, window.end());
  fwd.loss = multi_objective_loss_batch(fwd.open_preds, fwd.open_targets, fwd.closed_preds, fwd.closed_targets,
                                        lambda);
  return fwd;
}

VtlnParams backward_window(const VtlnConfig& cfg, const VtlnParams& params, const WindowForward& fwd, double lambda,
                           bool stop_feedback_gradients) {
  require(lambda >= 0.0, Err::negative_lambda, "lambda must be non-negative");
  VtlnParams grads = VtlnParams::zeros(cfg);
  const int steps = static_cast<int>(fwd.open_preds.size());
  const double batch = static_cast<double>(fwd.open_preds.front().cols());
  const int S = fwd.seed_steps;

  std::vector<Mat> dguides(fwd.guides.size());

  // Open-loop pass: every step is scored, no feedback.
  {
    std::vector<Mat> dy(static_cast<std::size_t>(steps));
    const double scale = 2.0 / (static_cast<double>(steps) * batch);
    for (int n = 0; n < steps; ++n)
      dy[static_cast<std::size_t>(n)] =
          scale * (fwd.open_preds[static_cast<std::size_t>(n)] - fwd.open_targets[static_cast<std::size_t>(n)]);
    rollout_backward(cfg, params, fwd.open, dy, [](int) { return false; }, false, grads, dguides);
  }

  // Closed-loop pass: only the horizon outputs are scored; frames >= S were
  // self-fed. Zero lambda contributes nothing, so skip the sweep entirely.
  if (lambda != 0.0) {
    const int horizon = static_cast<int>(fwd.closed_preds.size());
    std::vector<Mat> dy(static_cast<std::size_t>(steps));
    const double scale = 2.0 * lambda / (static_cast<double>(horizon) * batch);
    for (int k = 0; k < horizon; ++k) {
      const int n = S - 1 + k;  // step that produced the prediction of frame S+k
      dy[static_cast<std::size_t>(n)] =
          scale * (fwd.closed_preds[static_cast<std::size_t>(k)] - fwd.closed_targets[static_cast<std::size_t>(k)]);
    }
    rollout_backward(cfg, params, fwd.closed, dy, [S](int j) { return j >= S; }, stop_feedback_gradients, grads,
                     dguides);
  }

  guides_backward(params, fwd.guide_cache, dguides, grads);
  return grads;
}

AutocondForward run_autocond_forward(const VtlnConfig& cfg, const VtlnParams& params, const std::vector<Mat>& window,
                                     const Mat& eps, const Mat& onehot, int condition_length, RolloutMode mode) {
  const int L = static_cast<int>(window.size());
  require(L >= 2, Err::data_too_short, "window too short");
  const int steps = L - 1;

  AutocondForward fwd;
  fwd.eps = eps;
  fwd.onehot = onehot;
  fwd.condition_length = condition_length;
  fwd.guide_cache.eps = eps;

  Mat z_phi = sample_initial_state_batch(params.mu, params.log_sigma, eps);
  fwd.guides = generate_guide_vectors(params.noise, z_phi, onehot, L, &fwd.guide_cache);

  std::vector<Mat> inputs(window.begin(), window.begin() + steps);
  fwd.preds = auto_conditioning_rollout(cfg, params, inputs, condition_length, fwd.guides, &fwd.rollout, mode);
  fwd.targets.assign(window.begin() + 1, window.end());

  const double batch = static_cast<double>(fwd.preds.front().cols());
  double sum = 0.0;
  for (int n = 0; n < steps; ++n)
    sum += (fwd.preds[static_cast<std::size_t>(n)] - fwd.targets[static_cast<std::size_t>(n)]).array().square().sum();
  fwd.loss = sum / (static_cast<double>(steps) * batch);
  return fwd;
}

VtlnParams backward_autocond(const VtlnConfig& cfg, const VtlnParams& params, const AutocondForward& fwd) {
  VtlnParams grads = VtlnParams::zeros(cfg);
  const int steps = static_cast<int>(fwd.preds.size());
  const double batch = static_cast<double>(fwd.preds.front().cols());
  const int cl = fwd.condition_length;

  std::vector<Mat> dguides(fwd.guides.size());
  std::vector<Mat> dy(static_cast<std::size_t>(steps));
  const double scale = 2.0 / (static_cast<double>(steps) * batch);
  for (int n = 0; n < steps; ++n)
    dy[static_cast<std::size_t>(n)] =
        scale * (fwd.preds[static_cast<std::size_t>(n)] - fwd.targets[static_cast<std::size_t>(n)]);
  auto is_pred = [cl](int j) { return ((j / cl) % 2) == 1; };
  rollout_backward(cfg, params, fwd.rollout, dy, is_pred, false, grads, dguides);
  guides_backward(params, fwd.guide_cache, dguides, grads);
  return grads;
}

void TrainOptions::validate() const {
  require(iterations >= 1, Err::bad_config, "iterations must be >= 1");
  require(batch_size >= 1, Err::bad_config, "batch size must be >= 1");
  require(clip_norm > 0.0, Err::bad_config, "clip norm must be positive");
  require(threads >= 1, Err::bad_config, "threads must be >= 1");
  require(condition_length >= 1, Err::bad_config, "condition length must be >= 1");
  lr.validate();
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& log) {
  std::string out = "iteration,lambda,lr,open_loss,closed_loss,total_loss\n";
  char buf[64];
  auto append_double = [&](double v, char tail) {
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
    out.push_back(tail);
  };
  for (const auto& row : log) {
    out += std::to_string(row.iteration);
    out.push_back(',');
    append_double(row.lambda, ',');
    append_double(row.lr, ',');
    append_double(row.open_loss, ',');
    append_double(row.closed_loss, ',');
    append_double(row.total_loss, '\n');
  }
  return out;
}

namespace {

struct BatchWindows {
  std::vector<Mat> frames;  // L entries of D x B
  std::vector<int> actions;
};

BatchWindows sample_windows(const std::vector<Mat>& sequences, const std::vector<int>& actions,
                            const std::vector<std::size_t>& eligible, int window, int batch, Rng& rng) {
  const Eigen::Index D = sequences.front().cols();
  BatchWindows out;
  out.frames.assign(static_cast<std::size_t>(window), Mat(D, batch));
  out.actions.resize(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const std::size_t s = eligible[static_cast<std::size_t>(rng.uniform() * static_cast<double>(eligible.size()))];
    const Mat& seq = sequences[s];
    const long max_start = seq.rows() - window;
    const long start = static_cast<long>(rng.uniform() * static_cast<double>(max_start + 1));
    for (int l = 0; l < window; ++l)
      out.frames[static_cast<std::size_t>(l)].col(b) = seq.row(start + l).transpose();
    out.actions[static_cast<std::size_t>(b)] = actions[s];
  }
  return out;
}

struct BlockResult {
  VtlnParams grads;
  LossParts loss;
  double autocond_loss = 0.0;
};

}  // namespace

TrainResult train(const VtlnConfig& cfg, const TrainOptions& opts, const TrainingData& data) {
  cfg.validate();
  opts.validate();
  require(data.sequences.size() == data.actions.size(), Err::dimension_mismatch,
          "sequence/action counts disagree");
  require(!data.sequences.empty(), Err::data_too_short, "training data is empty");
  for (int a : data.actions)
    require(a >= 0 && a < cfg.actions, Err::bad_config, "action label outside the configured range");

  const int window = cfg.seed_frames + cfg.horizon;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    require(data.sequences[i].cols() == cfg.dim, Err::dimension_mismatch, "sequence width does not match config");
    if (data.sequences[i].rows() >= window) eligible.push_back(i);
  }
  require(!eligible.empty(), Err::data_too_short,
          "no training sequence is long enough for a " + std::to_string(window) + "-frame window");

  // Standardization statistics come from the training sequences only.
  NormStats stats = opts.standardize ? NormStats::fit(data.sequences) : NormStats::identity(cfg.dim);
  std::vector<Mat> sequences;
  sequences.reserve(data.sequences.size());
  for (const Mat& s : data.sequences) sequences.push_back(standardize(s, stats));

  LossConfig loss_cfg;
  loss_cfg.lambda_schedule = opts.lambda.empty() ? default_lambda_schedule(opts.iterations) : opts.lambda;
  loss_cfg.open_steps = window - 1;
  loss_cfg.closed_steps = cfg.horizon;
  loss_cfg.validate();

  Rng init_rng(derive_seed(opts.seed, 0));
  Rng sample_rng(derive_seed(opts.seed, 1));
  VtlnModel model = VtlnModel::init(cfg, init_rng);
  RmspropState opt = RmspropState::init(cfg);

  const int threads = std::min<int>(opts.threads, opts.batch_size);
  std::vector<TrainLogRow> log;
  log.reserve(static_cast<std::size_t>(opts.iterations));

  for (long it = 0; it < opts.iterations; ++it) {
    const double lambda = lambda_schedule(it, loss_cfg);
    const double lr = lr_schedule(it, opts.lr);
    BatchWindows batch = sample_windows(sequences, data.actions, eligible, window, opts.batch_size, sample_rng);

    // Contiguous column blocks; grads reduce in block order so results are
    // deterministic for a fixed thread count.
    std::vector<BlockResult> results(static_cast<std::size_t>(threads));
    auto run_block = [&](int blk) {
      const int b0 = blk * opts.batch_size / threads;
      const int b1 = (blk + 1) * opts.batch_size / threads;
      const int width = b1 - b0;
      std::vector<Mat> window_block(batch.frames.size());
      for (std::size_t l = 0; l < batch.frames.size(); ++l)
        window_block[l] = batch.frames[l].middleCols(b0, width);
      std::vector<int> action_block(batch.actions.begin() + b0, batch.actions.begin() + b1);
      Mat onehot = one_hot_batch(action_block, cfg.actions);

      Rng block_rng(derive_seed(opts.seed, 2 + static_cast<std::uint64_t>(blk), static_cast<std::uint64_t>(it)));
      Mat eps = block_rng.normal_matrix(cfg.hidden_top, width);
      RolloutMode mode;
      mode.dropout = cfg.dropout;
      mode.rng = &block_rng;

      BlockResult res;
      const double frac = static_cast<double>(width) / static_cast<double>(opts.batch_size);
      if (opts.mode == TrainMode::multi_objective) {
        WindowForward fwd = run_window_forward(cfg, model.params, window_block, eps, onehot, lambda, mode);
        res.grads = backward_window(cfg, model.params, fwd, lambda, opts.stop_feedback_gradients);
        res.loss.open = fwd.loss.open * frac;
        res.loss.closed = fwd.loss.closed * frac;
      } else {
        AutocondForward fwd = run_autocond_forward(cfg, model.params, window_block, eps, onehot,
                                                   opts.condition_length, mode);
        res.grads = backward_autocond(cfg, model.params, fwd);
        res.autocond_loss = fwd.loss * frac;
      }
      // Per-block loss gradients were normalized by the block width; rescale
      // so that summing blocks yields the full-batch mean.
      res.grads.visit([&](const std::string&, double* d, Eigen::Index r, Eigen::Index c) {
        for (Eigen::Index i = 0; i < r * c; ++i) d[i] *= frac;
      });
      results[static_cast<std::size_t>(blk)] = std::move(res);
    };

    try {
      if (threads == 1) {
        run_block(0);
      } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int blk = 0; blk < threads; ++blk)
          pool.emplace_back([&, blk] {
            try {
              run_block(blk);
            } catch (...) {
              errors[static_cast<std::size_t>(blk)] = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        for (const auto& err : errors)
          if (err) std::rethrow_exception(err);
      }
    } catch (const Error& e) {
      if (e.code() == Err::non_finite)
        fail(Err::diverged_loss, "training diverged at iteration " + std::to_string(it) + ": " + e.what());
      throw;
    }

    VtlnParams grads = VtlnParams::zeros(cfg);
    LossParts loss;
    double autocond_loss = 0.0;
    for (const auto& res : results) {
      accumulate(grads, res.grads);
      loss.open += res.loss.open;
      loss.closed += res.loss.closed;
      autocond_loss += res.autocond_loss;
    }

    TrainLogRow row;
    row.iteration = it;
    row.lr = lr;
    if (opts.mode == TrainMode::multi_objective) {
      row.lambda = lambda;
      row.open_loss = loss.open;
      row.closed_loss = loss.closed;
      row.total_loss = loss.total(lambda);
    } else {
      row.open_loss = autocond_loss;
      row.total_loss = autocond_loss;
    }
    require(std::isfinite(row.total_loss), Err::diverged_loss,
            "loss became non-finite at iteration " + std::to_string(it));
    log.push_back(row);

    clip_gradients(grads, opts.clip_norm);
    rmsprop_step(model.params, grads, opt, lr);
    opt.iteration = it + 1;
  }

  TrainResult out;
  out.model = std::move(model);
  out.stats = std::move(stats);
  out.opt = std::move(opt);
  out.log = std::move(log);
  out.rng_state = sample_rng.state();
  return out;
}

}  // namespace motionsynth
