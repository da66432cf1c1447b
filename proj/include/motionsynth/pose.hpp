#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "motionsynth/errors.hpp"

namespace motionsynth {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// One action clip: frames are rows, columns are exponential-map coordinates
// (3 per joint), all in radians.
struct PoseSequence {
  Mat frames;                   // T x D
  int action = 0;
  double frame_rate_hz = 25.0;

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

// Strict CSV: one frame per line, comma-separated decimals, uniform column
// count, no header. Rejects NaN/Inf tokens and ragged rows.
PoseSequence parse_sequence_csv(std::string_view text, double frame_rate_hz = 25.0);

// Shortest round-trip decimals, '.' separator, '\n' line ends, no header.
std::string write_sequence_csv(const Mat& frames);

PoseSequence read_sequence_file(const std::filesystem::path& path, double frame_rate_hz = 25.0);
void write_sequence_file(const std::filesystem::path& path, const Mat& frames);

// Per-dimension standardization statistics, fit on the training split only.
struct NormStats {
  Vec mean;
  Vec stddev;  // >= kStdFloor; near-constant dimensions are left unscaled

  static constexpr double kStdFloor = 1e-8;

  static NormStats identity(Eigen::Index dim);
  // Pools frames across all sequences.
  static NormStats fit(const std::vector<Mat>& sequences);
};

Mat standardize(const Mat& frames, const NormStats& stats);
Mat destandardize(const Mat& frames, const NormStats& stats);

}  // namespace motionsynth
