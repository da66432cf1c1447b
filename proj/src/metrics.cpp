#include "motionsynth/metrics.hpp"

#include <cmath>

#include "motionsynth/rotation.hpp"

namespace motionsynth {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace

void EvalSet::validate() const {
  require(!pairs.empty(), Err::empty, "evaluation set is empty");
  require(fps > 0.0, Err::bad_config, "fps must be positive");
  for (const auto& p : pairs) {
    require(p.truth.rows() == p.pred.rows() && p.truth.cols() == p.pred.cols(), Err::dimension_mismatch,
            "truth/prediction shapes disagree");
    require(p.truth.rows() >= 1 && p.truth.cols() >= 1, Err::empty, "empty sequence in evaluation set");
  }
}

Vec power_spectrum(const Vec& signal, bool remove_dc) {
  const Eigen::Index T = signal.size();
  require(T >= 2, Err::too_short, "power spectrum needs at least 2 samples");
  Vec x = signal;
  if (remove_dc) x.array() -= x.mean();

  const Eigen::Index bins = T / 2 + 1;
  Vec power(bins);
  for (Eigen::Index f = 0; f < bins; ++f) {
    double re = 0.0, im = 0.0;
    const double w = -2.0 * kPi * static_cast<double>(f) / static_cast<double>(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      re += x[t] * std::cos(w * static_cast<double>(t));
      im += x[t] * std::sin(w * static_cast<double>(t));
    }
    power[f] = re * re + im * im;
  }
  return power;
}

NpssReport npss(const EvalSet& set, int start_frame, int end_frame, const NpssOptions& opts) {
  set.validate();
  NpssReport report;
  report.start_frame = start_frame;

  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const Mat& truth = set.pairs[i].truth;
    const Mat& pred = set.pairs[i].pred;
    const int T = static_cast<int>(truth.rows());
    const int end = end_frame < 0 ? T : end_frame;
    require(start_frame >= 0 && end <= T && end - start_frame >= 2, Err::window_out_of_range,
            "window [" + std::to_string(start_frame) + ", " + std::to_string(end) + ") does not fit a length-" +
                std::to_string(T) + " sequence");
    report.end_frame = end;
    const int len = end - start_frame;

    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
      Vec xs = power_spectrum(truth.col(j).segment(start_frame, len), opts.remove_dc);
      Vec ys = power_spectrum(pred.col(j).segment(start_frame, len), opts.remove_dc);
      const double px = xs.sum();
      const double py = ys.sum();
      if (px <= 0.0) continue;  // no ground-truth power: pair carries no weight

      double emd;
      if (py <= 0.0) {
        // All spectral mass is missing from the prediction.
        emd = 2.0;
      } else {
        emd = ((xs / px) - (ys / py)).cwiseAbs().sum();
      }
      const double weight = opts.normalized_weights ? 1.0 : px;
      report.pairs.push_back({static_cast<int>(i), static_cast<int>(j), emd, weight});
      weighted_sum += weight * emd;
      weight_total += weight;
    }
  }
  require(weight_total > 0.0, Err::degenerate_eval_set, "every channel has zero ground-truth power");
  report.npss = weighted_sum / weight_total;
  return report;
}

std::vector<NpssReport> npss_windowed(const EvalSet& set, const std::vector<std::pair<double, double>>& windows_s,
                                      const NpssOptions& opts) {
  set.validate();
  std::vector<NpssReport> reports;
  reports.reserve(windows_s.size());
  for (const auto& [start_s, end_s] : windows_s) {
    require(end_s > start_s && start_s >= 0.0, Err::window_out_of_range, "bad window bounds");
    const int start = static_cast<int>(std::llround(start_s * set.fps));
    const int end = static_cast<int>(std::llround(end_s * set.fps));
    reports.push_back(npss(set, start, end, opts));
  }
  return reports;
}

std::vector<SliceResult> euler_mse_at_slices(const EvalSet& set, const std::vector<double>& slices_ms, bool wrap) {
  set.validate();
  std::vector<SliceResult> results;
  results.reserve(slices_ms.size());
  for (double ms : slices_ms) {
    const double exact = ms * set.fps / 1000.0;
    const double rounded = std::round(exact);
    require(std::abs(exact - rounded) <= 1e-9, Err::frame_rate_mismatch,
            std::to_string(ms) + " ms is not an integer frame at " + std::to_string(set.fps) + " fps");
    const int frame = static_cast<int>(rounded);
    require(frame >= 1, Err::slice_out_of_range, "slice before the first predicted frame");

    double total = 0.0;
    for (const auto& p : set.pairs) {
      require(frame <= p.pred.rows(), Err::slice_out_of_range,
              "slice " + std::to_string(ms) + " ms needs frame " + std::to_string(frame) + " of " +
                  std::to_string(p.pred.rows()));
      Vec d = expmap_frame_to_euler(p.pred.row(frame - 1).transpose()) -
              expmap_frame_to_euler(p.truth.row(frame - 1).transpose());
      if (wrap)
        for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = wrap_angle(d[k]);
      total += d.norm();
    }
    results.push_back({ms, frame, total / static_cast<double>(set.pairs.size())});
  }
  return results;
}

Mat zero_velocity_predict(const Vec& last_seed_frame, int horizon) {
  require(horizon >= 1, Err::bad_config, "horizon must be >= 1");
  return last_seed_frame.transpose().replicate(horizon, 1);
}

}  // namespace motionsynth
