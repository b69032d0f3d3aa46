#include "bss/signal.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace bss {

namespace {

constexpr double kPi = 3.14159265358979323846;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

int StftConfig::window_length(double sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int StftConfig::hop_length(double sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

int StftConfig::fft_size(double sample_rate) const {
  return next_pow2(window_length(sample_rate));
}

int StftConfig::bins(double sample_rate) const {
  return fft_size(sample_rate) / 2 + 1;
}

Fft::Fft(int n) : n_(n), rev_(n), tw_(n / 2) {
  // Bit-reversal permutation table.
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (1 << b)) r |= 1 << (bits - 1 - b);
    rev_[i] = r;
  }
  for (int k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * kPi * k / n;
    tw_[k] = {std::cos(ang), std::sin(ang)};
  }
}

void Fft::transform(cdouble* x, bool inv) const {
  for (int i = 0; i < n_; ++i) {
    const int r = rev_[i];
    if (i < r) std::swap(x[i], x[r]);
  }
  for (int len = 2; len <= n_; len <<= 1) {
    const int half = len >> 1;
    const int step = n_ / len;
    for (int base = 0; base < n_; base += len) {
      for (int k = 0; k < half; ++k) {
        const cdouble w = inv ? std::conj(tw_[k * step]) : tw_[k * step];
        const cdouble t = w * x[base + k + half];
        x[base + k + half] = x[base + k] - t;
        x[base + k] += t;
      }
    }
  }
}

void Fft::inverse(cdouble* x) const {
  transform(x, true);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) x[i] *= scale;
}

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(length);
  switch (kind) {
    case WindowKind::hamming:
      for (int t = 0; t < length; ++t)
        w[t] = 0.54 - 0.46 * std::cos(2.0 * kPi * t / length);
      break;
  }
  return w;
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  if (w.num_channels() == 0 || w.num_samples() == 0)
    throw EmptySignal("stft: empty waveform");
  const double sr = w.sample_rate;
  const int win = cfg.window_length(sr);
  const int hop = cfg.hop_length(sr);
  const int fft_n = cfg.fft_size(sr);
  const int bins = cfg.bins(sr);
  if (hop <= 0 || win <= 0) throw ConfigMismatch("stft: nonpositive window/hop");
  if (win % hop != 0)
    throw ConfigMismatch("stft: hop must divide window length");
  const int len = static_cast<int>(w.num_samples());
  if (len < win) throw EmptySignal("stft: waveform shorter than one window");

  const std::vector<double> window = make_window(cfg.window_kind, win);
  const int pad = fft_n / 2;
  const int frames = (len + pad + hop - 1) / hop;
  const int channels = w.num_channels();

  Spectrogram out(bins, frames, channels);
  Fft fft(fft_n);
  std::vector<cdouble> buf(fft_n);
  for (int m = 0; m < channels; ++m) {
    const std::vector<double>& x = w.channels[m];
    for (int j = 0; j < frames; ++j) {
      std::fill(buf.begin(), buf.end(), cdouble(0.0));
      const int start = j * hop - pad;
      for (int t = 0; t < win; ++t) {
        const int idx = start + t;
        if (idx >= 0 && idx < len) buf[t] = x[idx] * window[t];
      }
      fft.forward(buf.data());
      for (int i = 0; i < bins; ++i) out.at(i, j, m) = buf[i];
    }
  }
  return out;
}

Waveform istft(const Spectrogram& s, const StftConfig& cfg, double sample_rate,
               size_t length) {
  const int win = cfg.window_length(sample_rate);
  const int hop = cfg.hop_length(sample_rate);
  const int fft_n = cfg.fft_size(sample_rate);
  if (s.bins != fft_n / 2 + 1)
    throw ConfigMismatch("istft: bin count inconsistent with config");

  const std::vector<double> window = make_window(cfg.window_kind, win);
  const int pad = fft_n / 2;
  const int total = (s.frames - 1) * hop + fft_n;

  Waveform out;
  out.sample_rate = sample_rate;
  out.channels.assign(s.channels, std::vector<double>(length, 0.0));

  Fft fft(fft_n);
  std::vector<cdouble> buf(fft_n);
  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);
  for (int j = 0; j < s.frames; ++j) {
    const int start = j * hop;
    for (int t = 0; t < win; ++t) norm[start + t] += window[t] * window[t];
  }
  for (int m = 0; m < s.channels; ++m) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = 0; j < s.frames; ++j) {
      for (int i = 0; i < s.bins; ++i) buf[i] = s.at(i, j, m);
      for (int i = s.bins; i < fft_n; ++i) buf[i] = std::conj(s.at(fft_n - i, j, m));
      fft.inverse(buf.data());
      const int start = j * hop;
      for (int t = 0; t < win; ++t) acc[start + t] += window[t] * buf[t].real();
    }
    std::vector<double>& ch = out.channels[m];
    for (size_t t = 0; t < length; ++t) {
      const size_t idx = pad + t;
      if (idx >= static_cast<size_t>(total)) break;
      if (norm[idx] >= 1e-6) ch[t] = acc[idx] / norm[idx];
    }
  }
  return out;
}

double normalize_power(Spectrogram& s) {
  if (s.v.empty()) return 1.0;
  double mean = 0.0;
  for (const cdouble& x : s.v) mean += std::norm(x);
  mean /= static_cast<double>(s.v.size());
  if (mean <= 0.0) return 1.0;
  const double scale = 1.0 / std::sqrt(mean);
  for (cdouble& x : s.v) x *= scale;
  return scale;
}

void write_spectrogram_dump(const std::string& path, const Spectrogram& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("write_spectrogram_dump: cannot open " + path);
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(s.bins),
                                   static_cast<std::uint32_t>(s.frames),
                                   static_cast<std::uint32_t>(s.channels)};
  f.write(reinterpret_cast<const char*>(header), sizeof(header));
  // Storage order is already (i, j, m) with interleaved re/im doubles.
  f.write(reinterpret_cast<const char*>(s.v.data()),
          static_cast<std::streamsize>(s.v.size() * sizeof(cdouble)));
  if (!f) throw Error("write_spectrogram_dump: short write to " + path);
}

Spectrogram read_spectrogram_dump(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("read_spectrogram_dump: cannot open " + path);
  std::uint32_t header[3];
  f.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!f) throw CorruptHeader("read_spectrogram_dump: truncated header");
  Spectrogram s(static_cast<int>(header[0]), static_cast<int>(header[1]),
                static_cast<int>(header[2]));
  f.read(reinterpret_cast<char*>(s.v.data()),
         static_cast<std::streamsize>(s.v.size() * sizeof(cdouble)));
  if (!f) throw CorruptHeader("read_spectrogram_dump: truncated payload");
  return s;
}

}  // namespace bss
