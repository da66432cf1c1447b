#include "motionsynth/synthgen.hpp"

#include <cmath>
#include <complex>

#include "motionsynth/pose.hpp"

namespace motionsynth {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void SynthActionSpec::validate() const {
  require(frames >= 2, Err::bad_spec, "need at least 2 frames");
  require(!channels.empty(), Err::bad_spec, "need at least one channel");
  require(noise_std >= 0.0, Err::bad_spec, "noise std must be non-negative");
  for (const auto& ch : channels)
    for (const auto& h : ch.harmonics) {
      require(h.bin >= 1 && h.bin <= frames / 2, Err::bad_spec,
              "bin " + std::to_string(h.bin) + " outside [1, " + std::to_string(frames / 2) + "]");
      require(h.amplitude >= 0.0, Err::bad_spec, "amplitude must be non-negative");
    }
}

PoseSequence generate_action(const SynthActionSpec& spec, Rng& rng) {
  spec.validate();
  const int T = spec.frames;
  const Eigen::Index D = static_cast<Eigen::Index>(spec.channels.size());
  PoseSequence seq;
  seq.action = spec.action;
  seq.frame_rate_hz = spec.fps;
  seq.frames.resize(T, D);
  for (Eigen::Index j = 0; j < D; ++j) {
    const ChannelSpec& ch = spec.channels[static_cast<std::size_t>(j)];
    for (int t = 0; t < T; ++t) {
      double v = ch.offset;
      for (const Harmonic& h : ch.harmonics)
        v += h.amplitude * std::sin(2.0 * kPi * h.bin * t / static_cast<double>(T) + h.phase);
      seq.frames(t, j) = v;
    }
  }
  if (spec.noise_std > 0.0)
    for (Eigen::Index j = 0; j < D; ++j)
      for (int t = 0; t < T; ++t) seq.frames(t, j) += spec.noise_std * rng.normal();
  return seq;
}

Vec analytic_spectrum(const SynthActionSpec& spec, int channel) {
  spec.validate();
  require(spec.noise_std == 0.0, Err::noise_not_zero, "analytic spectrum is defined for noise-free specs");
  require(channel >= 0 && channel < static_cast<int>(spec.channels.size()), Err::bad_spec, "channel out of range");

  const int T = spec.frames;
  const Eigen::Index bins = T / 2 + 1;
  // Same-bin harmonics combine coherently: the equivalent sinusoid has the
  // complex amplitude sum.
  std::vector<std::complex<double>> amp(static_cast<std::size_t>(bins), 0.0);
  for (const Harmonic& h : spec.channels[static_cast<std::size_t>(channel)].harmonics)
    amp[static_cast<std::size_t>(h.bin)] += std::polar(h.amplitude, h.phase);

  Vec power = Vec::Zero(bins);
  for (Eigen::Index f = 1; f < bins; ++f) {
    const std::complex<double>& c = amp[static_cast<std::size_t>(f)];
    if (2 * f == T) {
      // Nyquist: samples collapse to (-1)^t Im(c).
      power[f] = c.imag() * c.imag();
    } else {
      power[f] = std::norm(c) / 4.0;
    }
  }
  const double total = power.sum();
  if (total > 0.0) power /= total;
  return power;
}

SynthActionSpec action_spec_for(const MakeDatasetOptions& opts, int action) {
  require(opts.actions >= 1 && action >= 0 && action < opts.actions, Err::bad_spec, "action out of range");
  require(opts.channels >= 1 && opts.frames >= 8, Err::bad_spec, "bad dataset geometry");

  // Disjoint bin pools per action: action a owns bins {a+2, a+2+A, ...}
  // within a band of plausibly paced motion.
  std::vector<int> pool;
  const int lo = 2;
  const int hi = std::min(opts.frames / 2 - 1, 30);
  require(hi >= lo + opts.actions, Err::bad_spec, "not enough spectral room for the requested action count");
  for (int b = lo + action; b <= hi; b += opts.actions) pool.push_back(b);

  Rng rng(derive_seed(opts.seed, 10, static_cast<std::uint64_t>(action)));
  SynthActionSpec spec;
  spec.frames = opts.frames;
  spec.noise_std = opts.noise_std;
  spec.action = action;
  spec.fps = opts.fps;
  spec.channels.resize(static_cast<std::size_t>(opts.channels));
  for (auto& ch : spec.channels) {
    ch.offset = rng.uniform(-0.5, 0.5);
    const int harmonics = 1 + static_cast<int>(rng.uniform() * 2.0);  // 1 or 2
    for (int h = 0; h < harmonics; ++h) {
      Harmonic harm;
      harm.bin = pool[static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size()))];
      harm.amplitude = rng.uniform(0.3, 0.9);
      harm.phase = rng.uniform(0.0, 2.0 * kPi);
      ch.harmonics.push_back(harm);
    }
  }
  return spec;
}

DatasetManifest make_dataset(const MakeDatasetOptions& opts, const std::filesystem::path& out_dir) {
  require(opts.seqs_per_action >= 1, Err::bad_spec, "need at least one sequence per action");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(Err::io_error, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.fps = opts.fps;
  for (int a = 0; a < opts.actions; ++a) {
    SynthActionSpec base = action_spec_for(opts, a);
    for (int s = 0; s < opts.seqs_per_action; ++s) {
      SynthActionSpec spec = base;
      // Fresh phases per sequence; the bin signature stays the action's.
      Rng phase_rng(derive_seed(opts.seed, 11, static_cast<std::uint64_t>(a * opts.seqs_per_action + s)));
      for (auto& ch : spec.channels)
        for (auto& h : ch.harmonics) h.phase = phase_rng.uniform(0.0, 2.0 * kPi);

      Rng noise_rng(derive_seed(opts.seed, 12, static_cast<std::uint64_t>(a * opts.seqs_per_action + s)));
      PoseSequence seq = generate_action(spec, noise_rng);

      const std::string name = "a" + std::to_string(a) + "_s" + std::to_string(s) + ".csv";
      write_sequence_file(out_dir / name, seq.frames);

      ManifestEntry entry;
      entry.file = name;
      entry.subject = s;
      entry.action = a;
      if (opts.seqs_per_action >= 3 && s == opts.seqs_per_action - 1)
        entry.split = "test";
      else if (opts.seqs_per_action >= 3 && s == opts.seqs_per_action - 2)
        entry.split = "val";
      else
        entry.split = "train";
      manifest.entries.push_back(std::move(entry));
    }
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace motionsynth
