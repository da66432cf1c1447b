#pragma once

#include <utility>
#include <vector>

#include "motionsynth/pose.hpp"

namespace motionsynth {

// One action class worth of (truth, prediction) pairs; per pair the shapes
// must agree.
struct EvalPair {
  Mat truth;  // T x D, exp-map coordinates
  Mat pred;
};

struct EvalSet {
  std::vector<EvalPair> pairs;
  double fps = 25.0;

  void validate() const;
};

// One-sided squared-magnitude DFT, bins 0..floor(T/2). The per-window mean is
// subtracted first unless remove_dc is off. Direct evaluation; fine at the
// sequence lengths used here.
Vec power_spectrum(const Vec& signal, bool remove_dc = true);

struct NpssPairResult {
  int seq = 0;
  int feature = 0;
  double emd = 0.0;     // L1 between normalized spectra, in [0, 2]
  double weight = 0.0;  // unnormalized ground-truth power
};

struct NpssReport {
  double npss = 0.0;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  std::vector<NpssPairResult> pairs;
};

struct NpssOptions {
  bool remove_dc = true;
  // Weight by raw ground-truth power (the default) or by normalized power,
  // which reduces the aggregate to an unweighted mean.
  bool normalized_weights = false;
};

// Power-weighted mean of per-(sequence, feature) L1 distances between
// normalized power spectra over [start_frame, end_frame). end_frame = -1
// spans the whole sequence. Pairs whose ground-truth power is zero are
// excluded; a zero-power prediction against nonzero truth scores the maximum
// distance 2.
NpssReport npss(const EvalSet& set, int start_frame = 0, int end_frame = -1, const NpssOptions& opts = {});

// Windows are in seconds, converted to frame ranges at set.fps; spectra are
// recomputed per window.
std::vector<NpssReport> npss_windowed(const EvalSet& set, const std::vector<std::pair<double, double>>& windows_s,
                                      const NpssOptions& opts = {});

struct SliceResult {
  double slice_ms = 0.0;
  int frame_index = 0;  // 1-based index into the prediction
  double mean_distance = 0.0;
};

// Mean Euclidean distance between per-frame Euler-angle vectors at the given
// millisecond slices. Slice times must land on integer frame indices at
// set.fps. Differences are plain by default; `wrap` folds them into
// (-pi, pi].
std::vector<SliceResult> euler_mse_at_slices(const EvalSet& set, const std::vector<double>& slices_ms,
                                             bool wrap = false);

// Repeats the last seed frame for the whole horizon.
Mat zero_velocity_predict(const Vec& last_seed_frame, int horizon);

}  // namespace motionsynth
