#include "bss/mixsim.hpp"

#include <cmath>

#include "bss/rng.hpp"

namespace bss {

namespace {

constexpr double kPi = 3.14159265358979323846;

int default_delay(int n, int m) {
  // Small per-pair spread so the frequency responses stay well conditioned.
  return 32 + 13 * n + 9 * m + 4 * ((n * m) % 2);
}

double power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace

std::vector<std::vector<std::vector<double>>> synth_rir(
    const SyntheticSceneConfig& cfg) {
  const int n_src = cfg.sources;
  const int n_mic = cfg.channels;
  const double t60_samples = cfg.t60_ms * cfg.sample_rate / 1000.0;

  int max_delay = 0;
  auto delay_of = [&](int n, int m) {
    if (!cfg.direct_delay_samples.empty())
      return cfg.direct_delay_samples[n][m];
    return default_delay(n, m);
  };
  for (int n = 0; n < n_src; ++n)
    for (int m = 0; m < n_mic; ++m) max_delay = std::max(max_delay, delay_of(n, m));

  const int needed = max_delay + static_cast<int>(std::ceil(t60_samples)) + 1;
  int length = cfg.rir_length_samples;
  if (length == 0) length = needed;
  if (length < needed)
    throw ConfigMismatch("synth_rir: rir_length_samples does not cover T60");

  const double tau_c = cfg.tail_coherence_ms * cfg.sample_rate / 1000.0;
  std::vector<std::vector<std::vector<double>>> rirs(
      n_src, std::vector<std::vector<double>>(n_mic, std::vector<double>(length, 0.0)));
  for (int n = 0; n < n_src; ++n) {
    // One noise stream per source, indexed relative to each mic's direct
    // arrival so the coherent part lines up across channels.
    std::vector<double> shared(length, 0.0);
    Rng srng(derive_seed(cfg.seed, 500 + static_cast<std::uint64_t>(n)));
    for (int t = 0; t < length; ++t) shared[t] = srng.gaussian();

    for (int m = 0; m < n_mic; ++m) {
      std::vector<double>& h = rirs[n][m];
      const int delay = delay_of(n, m);
      h[delay] = 1.0;
      if (t60_samples <= 0.0) continue;

      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(n) * n_mic + m));
      double tail_energy = 0.0;
      for (int t = delay + 1; t < length; ++t) {
        const double tau = static_cast<double>(t - delay);
        const double env = std::pow(10.0, -3.0 * tau / t60_samples);
        // Unit-variance blend of the shared and the per-mic stream; the
        // envelope is the same either way.
        const double a = tau_c > 0.0 ? std::exp(-tau / tau_c) : 0.0;
        const double mix =
            a * shared[t - delay - 1] + std::sqrt(1.0 - a * a) * rng.gaussian();
        h[t] = mix * env;
        tail_energy += h[t] * h[t];
      }
      if (tail_energy > 0.0) {
        // Direct energy is 1, so the tail carries 10^(-drr/10).
        const double target = std::pow(10.0, -cfg.drr_db / 10.0);
        const double gain = std::sqrt(target / tail_energy);
        for (int t = delay + 1; t < length; ++t) h[t] *= gain;
      }
    }
  }
  return rirs;
}

MixtureScene convolve_mix(const std::vector<Waveform>& sources,
                          const std::vector<std::vector<std::vector<double>>>& rirs,
                          double snr_db) {
  const int n_src = static_cast<int>(sources.size());
  if (n_src == 0) throw EmptySignal("convolve_mix: no sources");
  if (static_cast<int>(rirs.size()) != n_src)
    throw LengthMismatch("convolve_mix: source count != RIR rows");
  const int n_mic = static_cast<int>(rirs[0].size());
  const size_t len = sources[0].num_samples();
  const double sr = sources[0].sample_rate;
  for (const Waveform& s : sources) {
    if (s.num_channels() != 1)
      throw LengthMismatch("convolve_mix: dry sources must be single channel");
    if (s.num_samples() != len)
      throw LengthMismatch("convolve_mix: dry sources differ in length");
    if (s.sample_rate != sr)
      throw LengthMismatch("convolve_mix: dry sources differ in sample rate");
  }

  MixtureScene scene;
  scene.rirs = rirs;
  scene.ground_truth_images.assign(n_src, Waveform{});

  // Full convolution truncated to the dry length.
  for (int n = 0; n < n_src; ++n) {
    Waveform& img = scene.ground_truth_images[n];
    img.sample_rate = sr;
    img.channels.assign(n_mic, std::vector<double>(len, 0.0));
    const std::vector<double>& dry = sources[n].channels[0];
    for (int m = 0; m < n_mic; ++m) {
      const std::vector<double>& h = rirs[n][m];
      std::vector<double>& y = img.channels[m];
      for (size_t k = 0; k < h.size(); ++k) {
        const double hk = h[k];
        if (hk == 0.0) continue;
        const size_t last = len > k ? len - k : 0;
        for (size_t t = 0; t < last; ++t) y[t + k] += hk * dry[t];
      }
    }
  }

  // Source 1 keeps its level; each later source is scaled so its mean image
  // power over channels sits snr_db below source 1's.
  std::vector<double> img_power(n_src, 0.0);
  for (int n = 0; n < n_src; ++n) {
    for (int m = 0; m < n_mic; ++m)
      img_power[n] += power(scene.ground_truth_images[n].channels[m]);
    img_power[n] /= n_mic;
  }
  for (int n = 1; n < n_src; ++n) {
    if (img_power[n] <= 0.0) continue;  // silent source stays silent
    const double target = img_power[0] * std::pow(10.0, -snr_db / 10.0);
    const double gain = std::sqrt(target / img_power[n]);
    for (int m = 0; m < n_mic; ++m)
      for (double& v : scene.ground_truth_images[n].channels[m]) v *= gain;
  }

  scene.mixture.sample_rate = sr;
  scene.mixture.channels.assign(n_mic, std::vector<double>(len, 0.0));
  for (int m = 0; m < n_mic; ++m)
    for (int n = 0; n < n_src; ++n)
      for (size_t t = 0; t < len; ++t)
        scene.mixture.channels[m][t] += scene.ground_truth_images[n].channels[m][t];
  return scene;
}

Spectrogram rank1_scene(const std::vector<CMat>& mixing,
                        const Spectrogram& sources) {
  if (static_cast<int>(mixing.size()) != sources.bins)
    throw ConfigMismatch("rank1_scene: one mixing matrix per bin required");
  const int n_src = sources.channels;
  Spectrogram x(sources.bins, sources.frames, n_src);
  for (int i = 0; i < sources.bins; ++i) {
    const CMat& a = mixing[i];
    double amax = 0.0;
    for (int r = 0; r < n_src; ++r)
      for (int c = 0; c < n_src; ++c) amax = std::max(amax, std::abs(a(r, c)));
    if (std::abs(det(a)) <= 1e-13 * std::max(1.0, amax))
      throw SingularMixing("rank1_scene: mixing matrix not invertible");
    for (int j = 0; j < sources.frames; ++j) {
      const cdouble* s = sources.cell(i, j);
      cdouble* out = x.cell(i, j);
      for (int m = 0; m < n_src; ++m) {
        cdouble acc = 0.0;
        for (int n = 0; n < n_src; ++n) acc += a(m, n) * s[n];
        out[m] = acc;
      }
    }
  }
  return x;
}

std::vector<Waveform> synth_dry_sources(const DrySourceConfig& cfg) {
  const size_t len = static_cast<size_t>(cfg.duration_s * cfg.sample_rate);
  const double sr = cfg.sample_rate;
  // Instrument-like material: each source plays a monophonic part built from
  // a small inventory of harmonic notes and holds them, so the parts overlap
  // in time instead of taking turns. Sources sit in adjacent pitch registers
  // (bass under melody), and a repeated pitch always brings back the same
  // harmonic recipe -- a few spectral templates with common amplitude
  // modulation, which is exactly what a low-rank variance model can tie a
  // source's bins together with.
  std::vector<Waveform> out(cfg.sources);
  const int n_src = std::max(1, cfg.sources);
  // Fundamental-frequency registers partition [75, 600] Hz geometrically,
  // one band per source; upper harmonics still overlap across sources.
  const double reg_lo = 75.0, reg_hi = 600.0;
  for (int n = 0; n < cfg.sources; ++n) {
    Rng rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(n)));
    Waveform& w = out[n];
    w.sample_rate = sr;
    w.channels.assign(1, std::vector<double>(len, 0.0));
    std::vector<double>& x = w.channels[0];

    const double span = reg_hi / reg_lo;
    const double f_lo = reg_lo * std::pow(span, double(n) / n_src);
    const double f_hi = reg_lo * std::pow(span, double(n + 1) / n_src);

    // Note inventory: a handful of pitches, each with a fixed harmonic
    // recipe, reused across the part the way a motif reuses its notes.
    constexpr int kNotes = 6;
    constexpr int kMaxHarmonics = 24;
    double pitch[kNotes];
    double amp[kNotes][kMaxHarmonics];
    int harmonics[kNotes];
    for (int p = 0; p < kNotes; ++p) {
      pitch[p] = f_lo * std::pow(f_hi / f_lo, rng.uniform(0.0, 1.0));
      const double tilt = rng.uniform(1.1, 1.9);       // spectral rolloff
      const double even_gain = rng.uniform(0.4, 1.0);  // odd/even timbre
      int count = static_cast<int>(7000.0 / pitch[p]);  // keep under Nyquist
      if (count > kMaxHarmonics) count = kMaxHarmonics;
      if (count < 1) count = 1;
      harmonics[p] = count;
      double norm = 0.0;
      for (int h = 0; h < count; ++h) {
        double a = std::pow(h + 1.0, -tilt);
        if ((h + 1) % 2 == 0) a *= even_gain;
        amp[p][h] = a;
        norm += a * a;
      }
      norm = std::sqrt(norm);
      for (int h = 0; h < count; ++h) amp[p][h] /= norm;
    }

    // A steady tone through a fixed room filter is still a steady tone, so
    // perfectly constant notes would give the frame-varying power models
    // nothing to latch onto. Played notes breathe: a slow amplitude wander
    // (tremolo) and a slight vibrato put genuine frame-to-frame variation
    // into every bin a note touches.
    const double attack_s = 0.020, release_s = 0.040;  // de-click ramps
    const double wander_pole = std::exp(-1.0 / (0.080 * sr));  // ~80 ms
    const double wander_mix =
        std::sqrt(1.0 - wander_pole * wander_pole) * 0.35;  // ~3 dB swing
    size_t t = 0;
    while (t < len) {
      if (rng.uniform(0.0, 1.0) < 0.08) {  // an occasional short rest
        t += static_cast<size_t>(rng.uniform(0.080, 0.200) * sr);
        continue;
      }
      int p = static_cast<int>(rng.uniform(0.0, double(kNotes)));
      if (p >= kNotes) p = kNotes - 1;
      const size_t dur = static_cast<size_t>(rng.uniform(0.18, 0.55) * sr);
      const double gain = rng.uniform(0.6, 1.0);
      double phase[kMaxHarmonics];
      for (int h = 0; h < harmonics[p]; ++h)
        phase[h] = rng.uniform(0.0, 2.0 * kPi);
      const double w0 = 2.0 * kPi * pitch[p] / sr;
      const double vib_step = 2.0 * kPi * rng.uniform(4.0, 6.5) / sr;
      const double vib_depth = rng.uniform(0.002, 0.006);
      double vib_phase = rng.uniform(0.0, 2.0 * kPi);
      double carrier = 0.0;   // common phase track for all harmonics
      double wander = 0.0;    // log-amplitude tremolo state
      const size_t note_end = std::min(len, t + dur);
      const size_t count = note_end - t;
      for (size_t k = 0; k < count; ++k) {
        double env = 1.0;
        const double since_on = double(k) / sr;
        if (since_on < attack_s) env = since_on / attack_s;
        const double until_off = double(count - 1 - k) / sr;
        if (until_off < release_s) env = std::min(env, until_off / release_s);
        wander = wander_pole * wander + wander_mix * rng.gaussian();
        double s = 0.0;
        for (int h = 0; h < harmonics[p]; ++h)
          s += amp[p][h] * std::sin((h + 1) * carrier + phase[h]);
        x[t + k] = gain * env * std::exp(wander) * s;
        carrier += w0 * (1.0 + vib_depth * std::sin(vib_phase));
        vib_phase += vib_step;
      }
      t = note_end;
    }

    // Normalize to a fixed rms, then add a -45 dB noise floor so every
    // time-frequency cell keeps a little energy.
    const double rms = std::sqrt(power(x));
    const double target_rms = 0.1;
    if (rms > 0.0)
      for (double& v : x) v *= target_rms / rms;
    const double floor_rms = target_rms * std::pow(10.0, -45.0 / 20.0);
    for (double& v : x) v += floor_rms * rng.gaussian();
  }
  return out;
}

MixtureScene make_scene(const SyntheticSceneConfig& cfg, double duration_s,
                        double snr_db) {
  SyntheticSceneConfig scene_cfg = cfg;
  if (scene_cfg.direct_delay_samples.empty()) {
    // Compact two-mic array, sources at nearby directions. Each source gets
    // a random propagation delay (base) and an angle-driven inter-mic delay
    // of at most kTdoaSpan samples (~+-17 cm path difference at 16 kHz);
    // direction sines are redrawn until all pairs sit within the window
    // below -- close enough to be hard, apart enough to be solvable.
    constexpr double kTdoaSpan = 16.0;
    constexpr double kSepMin = 0.15;
    constexpr double kSepMax = 0.4;
    Rng geo(derive_seed(cfg.seed, 11));
    std::vector<double> sines(scene_cfg.sources);
    for (int n = 0; n < scene_cfg.sources; ++n) {
      for (int tries = 0;; ++tries) {
        const double s = geo.uniform(-1.0, 1.0);
        bool ok = true;
        for (int p = 0; p < n; ++p) {
          const double d = std::abs(s - sines[p]);
          if (d < kSepMin || d > kSepMax) {
            ok = false;
            break;
          }
        }
        if (ok || tries > 256) {
          sines[n] = s;
          break;
        }
      }
    }
    scene_cfg.direct_delay_samples.assign(scene_cfg.sources,
                                          std::vector<int>(scene_cfg.channels, 0));
    for (int n = 0; n < scene_cfg.sources; ++n) {
      const int base = 24 + static_cast<int>(geo.uniform(0.0, 40.0));
      const int tdoa = static_cast<int>(std::lround(kTdoaSpan * sines[n]));
      for (int m = 0; m < scene_cfg.channels; ++m)
        scene_cfg.direct_delay_samples[n][m] = base + tdoa * m;
    }
  }

  DrySourceConfig dry;
  dry.sources = scene_cfg.sources;
  dry.duration_s = duration_s;
  dry.sample_rate = scene_cfg.sample_rate;
  dry.seed = derive_seed(scene_cfg.seed, 7);
  const std::vector<Waveform> sources = synth_dry_sources(dry);
  const auto rirs = synth_rir(scene_cfg);
  return convolve_mix(sources, rirs, snr_db);
}

}  // namespace bss
