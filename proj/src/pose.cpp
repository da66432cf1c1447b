#include "motionsynth/pose.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace motionsynth {

namespace {

double parse_token(std::string_view tok, Eigen::Index row) {
  // Trim spaces and an optional trailing '\r'.
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (tok.empty()) fail(Err::parse, "empty value in row " + std::to_string(row));
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    fail(Err::parse, "bad numeric token '" + std::string(tok) + "' in row " + std::to_string(row));
  if (!std::isfinite(v))
    fail(Err::non_finite, "non-finite value in row " + std::to_string(row));
  return v;
}

}  // namespace

PoseSequence parse_sequence_csv(std::string_view text, double frame_rate_hz) {
  std::vector<std::vector<double>> rows;
  Eigen::Index cols = -1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view tok = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      row.push_back(parse_token(tok, static_cast<Eigen::Index>(rows.size())));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0)
      cols = static_cast<Eigen::Index>(row.size());
    else if (static_cast<Eigen::Index>(row.size()) != cols)
      fail(Err::ragged_rows, "row " + std::to_string(rows.size()) + " has " + std::to_string(row.size()) +
                                 " columns, expected " + std::to_string(cols));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(Err::empty, "sequence has zero rows");

  PoseSequence seq;
  seq.frame_rate_hz = frame_rate_hz;
  seq.frames.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index r = 0; r < seq.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) seq.frames(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return seq;
}

std::string write_sequence_csv(const Mat& frames) {
  std::string out;
  out.reserve(static_cast<std::size_t>(frames.size()) * 12);
  char buf[64];
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof buf, frames(r, c));
      out.append(buf, res.ptr);
      out.push_back(c + 1 == frames.cols() ? '\n' : ',');
    }
  }
  return out;
}

PoseSequence read_sequence_file(const std::filesystem::path& path, double frame_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io_error, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_sequence_csv(text, frame_rate_hz);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_sequence_file(const std::filesystem::path& path, const Mat& frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::io_error, "cannot write " + path.string());
  out << write_sequence_csv(frames);
  if (!out) fail(Err::io_error, "short write to " + path.string());
}

NormStats NormStats::identity(Eigen::Index dim) {
  NormStats s;
  s.mean = Vec::Zero(dim);
  s.stddev = Vec::Ones(dim);
  return s;
}

NormStats NormStats::fit(const std::vector<Mat>& sequences) {
  require(!sequences.empty(), Err::empty, "no sequences to fit statistics on");
  const Eigen::Index dim = sequences.front().cols();
  double count = 0;
  Vec sum = Vec::Zero(dim);
  Vec sumsq = Vec::Zero(dim);
  for (const Mat& m : sequences) {
    require(m.cols() == dim, Err::dimension_mismatch, "sequences disagree on dimension");
    sum += m.colwise().sum().transpose();
    sumsq += m.array().square().colwise().sum().matrix().transpose();
    count += static_cast<double>(m.rows());
  }
  NormStats s;
  s.mean = sum / count;
  s.stddev.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double var = std::max(0.0, sumsq[j] / count - s.mean[j] * s.mean[j]);
    const double sd = std::sqrt(var);
    // Near-constant dimensions pass through unscaled.
    s.stddev[j] = sd < kStdFloor ? 1.0 : sd;
  }
  return s;
}

Mat standardize(const Mat& frames, const NormStats& stats) {
  require(frames.cols() == stats.mean.size() && frames.cols() == stats.stddev.size(), Err::dimension_mismatch,
          "stats dimension does not match frames");
  return (frames.rowwise() - stats.mean.transpose()).array().rowwise() / stats.stddev.transpose().array();
}

Mat destandardize(const Mat& frames, const NormStats& stats) {
  require(frames.cols() == stats.mean.size() && frames.cols() == stats.stddev.size(), Err::dimension_mismatch,
          "stats dimension does not match frames");
  return (frames.array().rowwise() * stats.stddev.transpose().array()).matrix().rowwise() + stats.mean.transpose();
}

}  // namespace motionsynth
