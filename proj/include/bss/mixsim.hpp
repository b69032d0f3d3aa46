#pragma once

#include <cstdint>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/signal.hpp"

namespace bss {

// Recipe for a synthetic reverberant scene: N point sources picked up by M
// microphones through generated impulse responses.
struct SyntheticSceneConfig {
  int channels = 2;  // M
  int sources = 2;   // N; determined case, N = M
  double sample_rate = 16000.0;
  double t60_ms = 300.0;
  // Direct-to-reverberant energy ratio of each impulse response.
  double drr_db = 0.0;
  // 0 means "just long enough": max delay + T60 + 1. Explicit values must
  // cover the T60 tail.
  int rir_length_samples = 0;
  // Early reflections arrive from similar directions at nearby mics, so the
  // tail starts coherent across channels and decays to diffuse. This is the
  // crossfade time constant; <= 0 makes every tail fully independent.
  double tail_coherence_ms = 40.0;
  // delays[n][m] in samples; empty selects a built-in spread pattern.
  std::vector<std::vector<int>> direct_delay_samples;
  std::uint64_t seed = 0;
};

// A generated mixture with its ground truth: per-source spatial images at
// the microphones, their sum as the observed mixture, and the impulse
// responses that produced them. rirs[n][m][t].
struct MixtureScene {
  Waveform mixture;
  std::vector<Waveform> ground_truth_images;
  std::vector<std::vector<std::vector<double>>> rirs;
};

// Synthetic impulse responses: a unit impulse at the configured delay plus a
// seeded white-noise tail with amplitude envelope 10^(-3 t / T60) (-60 dB at
// exactly T60), scaled to the configured direct-to-reverberant ratio.
// The tail noise blends a per-source stream (shared across mics, indexed
// relative to each mic's direct arrival) into a per-mic stream with weight
// exp(-t / tail_coherence), so early reflections are coherent between
// channels and the late tail is diffuse; the envelope is unchanged by this.
// T60 = 0 yields a pure delayed delta. Deterministic in cfg.seed; the direct
// path does not depend on the seed.
std::vector<std::vector<std::vector<double>>> synth_rir(
    const SyntheticSceneConfig& cfg);

// Convolves dry sources with the impulse responses, rescales the sources so
// per-source image powers at the microphones sit at the requested ratio
// (snr_db = 0 means equal power; for N > 2 every later source is held at
// that ratio against the first), truncates images to the dry length, and
// sums them into the mixture. Throws LengthMismatch on ragged input.
MixtureScene convolve_mix(const std::vector<Waveform>& sources,
                          const std::vector<std::vector<std::vector<double>>>& rirs,
                          double snr_db);

// Frequency-domain instantaneous mixing x_ij = A_i s_ij; the test fixture
// for the rank-1 spatial model. `sources` carries one channel per source.
// Throws SingularMixing when any A_i is not invertible.
Spectrogram rank1_scene(const std::vector<CMat>& mixing,
                        const Spectrogram& sources);

// Seeded dry material for the simulator: instrument-like monophonic parts.
// Each source plays sustained harmonic notes from a small per-source pitch
// inventory, with sources in adjacent fundamental registers (bass under
// melody) whose upper harmonics still overlap. Notes reuse fixed spectral
// recipes, so the material is genuinely low rank, and parts sound together
// rather than taking turns. A faint noise floor keeps every time-frequency
// cell nonzero.
struct DrySourceConfig {
  int sources = 2;
  double duration_s = 5.0;
  double sample_rate = 16000.0;
  std::uint64_t seed = 0;
};
std::vector<Waveform> synth_dry_sources(const DrySourceConfig& cfg);

// Dry synthesis + RIR generation + convolution in one call. The dry config
// inherits source count and sample rate from the scene config. When the
// scene config leaves direct_delay_samples empty, a seeded compact-array
// geometry is drawn: each source gets a propagation delay plus a small
// angle-driven inter-mic delay, with source directions kept close together
// (but never coincident) so separation has to work for it.
MixtureScene make_scene(const SyntheticSceneConfig& cfg, double duration_s,
                        double snr_db = 0.0);

}  // namespace bss
