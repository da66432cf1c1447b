#pragma once

#include <filesystem>

#include "motionsynth/manifest.hpp"
#include "motionsynth/pose.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {

// Harmonics sit exactly on DFT bins, so generated signals have closed-form
// spectra and the metric oracles are exact.
struct Harmonic {
  int bin = 1;          // cycles over the full clip, in [1, frames/2]
  double amplitude = 1.0;
  double phase = 0.0;
};

struct ChannelSpec {
  double offset = 0.0;
  std::vector<Harmonic> harmonics;
};

struct SynthActionSpec {
  std::vector<ChannelSpec> channels;
  int frames = 256;
  double noise_std = 0.0;
  int action = 0;
  double fps = 25.0;

  void validate() const;
};

// x_j[t] = offset_j + sum_h a_h sin(2 pi f_h t / T + phi_h) + noise
PoseSequence generate_action(const SynthActionSpec& spec, Rng& rng);

// Expected normalized power spectrum of one channel (DC removed), defined
// for noise-free specs only: mass a_h^2/2 at each occupied bin.
Vec analytic_spectrum(const SynthActionSpec& spec, int channel);

struct MakeDatasetOptions {
  int actions = 4;
  int seqs_per_action = 8;
  int frames = 256;
  int channels = 54;
  double noise_std = 0.0;
  double fps = 25.0;
  std::uint64_t seed = 0;
};

// Draws a distinct harmonic signature per pseudo-action (disjoint bin pools),
// writes one CSV per sequence plus a manifest, and splits each action's
// sequences (last index -> test, second to last -> val, rest train).
DatasetManifest make_dataset(const MakeDatasetOptions& opts, const std::filesystem::path& out_dir);

// The per-action spec used by make_dataset (phases vary per sequence).
SynthActionSpec action_spec_for(const MakeDatasetOptions& opts, int action);

}  // namespace motionsynth
