#pragma once

#include <complex>
#include <string>
#include <vector>

#include "bss/errors.hpp"

namespace bss {

using cdouble = std::complex<double>;

// Multichannel time-domain signal. channels[m][t]; every channel has the
// same length.
struct Waveform {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  int num_channels() const { return static_cast<int>(channels.size()); }
  size_t num_samples() const { return channels.empty() ? 0 : channels[0].size(); }
};

enum class WindowKind { hamming };

// Analysis/synthesis configuration. Durations are in milliseconds so the
// same config serves any sample rate; sizes in samples are derived.
struct StftConfig {
  double window_ms = 64.0;
  double hop_ms = 16.0;
  WindowKind window_kind = WindowKind::hamming;

  int window_length(double sample_rate) const;
  int hop_length(double sample_rate) const;
  // Smallest power of two that holds one window.
  int fft_size(double sample_rate) const;
  // One-sided bin count I = fft_size/2 + 1.
  int bins(double sample_rate) const;
};

// Complex time-frequency tensor, indexed (bin i, frame j, channel m) with
// the channel index fastest. Also reused for per-source tensors, in which
// case `channels` counts sources.
struct Spectrogram {
  int bins = 0;
  int frames = 0;
  int channels = 0;
  std::vector<cdouble> v;

  Spectrogram() = default;
  Spectrogram(int i, int j, int m)
      : bins(i), frames(j), channels(m),
        v(static_cast<size_t>(i) * j * m) {}

  cdouble& at(int i, int j, int m) {
    return v[(static_cast<size_t>(i) * frames + j) * channels + m];
  }
  cdouble at(int i, int j, int m) const {
    return v[(static_cast<size_t>(i) * frames + j) * channels + m];
  }
  // Contiguous channel vector of one (bin, frame) cell.
  cdouble* cell(int i, int j) {
    return v.data() + (static_cast<size_t>(i) * frames + j) * channels;
  }
  const cdouble* cell(int i, int j) const {
    return v.data() + (static_cast<size_t>(i) * frames + j) * channels;
  }
};

// Iterative radix-2 FFT with precomputed twiddles. Size must be a power of
// two; inverse includes the 1/n factor.
class Fft {
 public:
  explicit Fft(int n);
  int size() const { return n_; }
  void forward(cdouble* x) const { transform(x, false); }
  void inverse(cdouble* x) const;

 private:
  void transform(cdouble* x, bool inv) const;

  int n_ = 0;
  std::vector<int> rev_;
  std::vector<cdouble> tw_;  // exp(-2 pi i k / n), k < n/2
};

// Periodic (DFT-symmetric) window of the requested kind.
std::vector<double> make_window(WindowKind kind, int length);

// Forward transform. Frames start every hop samples on a signal padded with
// half an FFT frame of zeros at both ends, so the frame count depends only
// on the input length: J = ceil((len + pad) / hop).
// Throws EmptySignal for signals shorter than one window and ConfigMismatch
// when the hop does not divide the window length.
Spectrogram stft(const Waveform& w, const StftConfig& cfg);

// Weighted overlap-add inverse, normalized by the frame-summed squared
// window and trimmed to `length` samples. Regions where the normalizer
// falls below 1e-6 are emitted as zero. Throws ConfigMismatch when the bin
// count is inconsistent with cfg.
Waveform istft(const Spectrogram& s, const StftConfig& cfg, double sample_rate,
               size_t length);

// Scales the tensor in place to unit mean squared magnitude and returns the
// multiplier that was applied (1 when the tensor is all zero). Separation
// outputs derived from the scaled tensor divide by this factor to restore
// the original level.
double normalize_power(Spectrogram& s);

// Binary debug dump: header {I, J, M} as 32-bit little-endian unsigned,
// then interleaved re/im 64-bit floats in (i, j, m) order.
void write_spectrogram_dump(const std::string& path, const Spectrogram& s);
Spectrogram read_spectrogram_dump(const std::string& path);

}  // namespace bss
