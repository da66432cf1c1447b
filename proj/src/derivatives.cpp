#include "motionsynth/derivatives.hpp"

namespace motionsynth {

long binomial(int n, int i) {
  if (i < 0 || i > n) return 0;
  long v = 1;
  for (int k = 1; k <= i; ++k) v = v * (n - k + 1) / k;
  return v;
}

void DerivativeOptions::validate() const {
  require(spacing >= 1, Err::bad_spacing, "derivative spacing must be >= 1");
  int prev = 0;
  for (int n : orders) {
    require(n >= 1, Err::bad_order, "derivative order must be >= 1");
    require(n > prev, Err::bad_order, "derivative orders must be ascending and distinct");
    require(n <= 3 || allow_high_orders, Err::bad_order,
            "order " + std::to_string(n) + " needs allow_high_orders");
    prev = n;
  }
}

Mat augment_with_derivatives(const Mat& frames, const DerivativeOptions& opts) {
  opts.validate();
  require(frames.rows() >= 1, Err::empty, "cannot augment an empty sequence");
  const Eigen::Index T = frames.rows(), D = frames.cols();
  const Eigen::Index blocks = static_cast<Eigen::Index>(opts.orders.size());
  Mat out(T, D * (1 + blocks));
  out.leftCols(D) = frames;
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const int n = opts.orders[static_cast<std::size_t>(b)];
    auto block = out.middleCols(D * (1 + b), D);
    block.setZero();
    for (int i = 0; i <= n; ++i) {
      const double coef = (i % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(binomial(n, i));
      for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Index src = std::max<Eigen::Index>(t - static_cast<Eigen::Index>(i) * opts.spacing, 0);
        block.row(t) += coef * frames.row(src);
      }
    }
  }
  return out;
}

DerivativeStepper::DerivativeStepper(Eigen::Index dim, DerivativeOptions opts) : dim_(dim), opts_(std::move(opts)) {
  opts_.validate();
  require(dim_ >= 1, Err::dimension_mismatch, "dimension must be positive");
}

void DerivativeStepper::reset() {
  history_.clear();
  batch_ = -1;
}

Mat DerivativeStepper::step(const Mat& frames) {
  require(frames.rows() == dim_, Err::dimension_mismatch,
          "frame has " + std::to_string(frames.rows()) + " rows, stepper expects " + std::to_string(dim_));
  if (batch_ < 0) batch_ = frames.cols();
  require(frames.cols() == batch_, Err::dimension_mismatch, "batch width changed mid-stream");

  const std::size_t cap = static_cast<std::size_t>(opts_.max_order() * opts_.spacing) + 1;
  history_.push_back(frames);
  if (history_.size() > cap) history_.pop_front();

  Mat out(output_dim(), batch_);
  out.topRows(dim_) = frames;
  const Eigen::Index last = static_cast<Eigen::Index>(history_.size()) - 1;
  for (std::size_t b = 0; b < opts_.orders.size(); ++b) {
    const int n = opts_.orders[b];
    auto block = out.middleRows(dim_ * static_cast<Eigen::Index>(1 + b), dim_);
    block.setZero();
    for (int i = 0; i <= n; ++i) {
      const double coef = (i % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(binomial(n, i));
      const Eigen::Index idx = std::max<Eigen::Index>(last - static_cast<Eigen::Index>(i) * opts_.spacing, 0);
      block += coef * history_[static_cast<std::size_t>(idx)];
    }
  }
  return out;
}

Vec DerivativeStepper::step(const Vec& frame) { return step(Mat(frame)).col(0); }

}  // namespace motionsynth
