#include "bss/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace bss {

namespace {

// RIFF tags and the two encodings handled here.
constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

void put_u16(std::vector<char>& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_tag(std::vector<char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint16_t get_u16(const std::vector<char>& d, size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(d[at]) |
                                    (static_cast<unsigned char>(d[at + 1]) << 8));
}

std::uint32_t get_u32(const std::vector<char>& d, size_t at) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b)
    v = (v << 8) | static_cast<unsigned char>(d[at + b]);
  return v;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("read_wav: cannot open " + path);
  std::vector<char> d((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  if (d.size() < 12 || std::memcmp(d.data(), "RIFF", 4) != 0 ||
      std::memcmp(d.data() + 8, "WAVE", 4) != 0)
    throw CorruptHeader("read_wav: not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  size_t data_at = 0, data_size = 0;

  size_t at = 12;
  while (at + 8 <= d.size()) {
    const char* tag = d.data() + at;
    const std::uint32_t size = get_u32(d, at + 4);
    const size_t body = at + 8;
    if (body + size > d.size())
      throw CorruptHeader("read_wav: truncated chunk in " + path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw CorruptHeader("read_wav: fmt chunk too small");
      format = get_u16(d, body);
      channels = get_u16(d, body + 2);
      sample_rate = get_u32(d, body + 4);
      bits = get_u16(d, body + 14);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_at = body;
      data_size = size;
    }
    at = body + size + (size & 1);  // chunks are word aligned
  }
  if (!have_fmt || data_at == 0)
    throw CorruptHeader("read_wav: missing fmt or data chunk in " + path);
  if (channels == 0 || sample_rate == 0)
    throw CorruptHeader("read_wav: zero channels or sample rate in " + path);

  const bool pcm16 = (format == kFormatPcm && bits == 16);
  const bool f32 = (format == kFormatFloat && bits == 32);
  if (!pcm16 && !f32)
    throw UnsupportedFormat("read_wav: only PCM16 and float32 supported: " + path);

  const size_t bytes_per = bits / 8;
  const size_t frame_bytes = bytes_per * channels;
  if (data_size % frame_bytes != 0)
    throw CorruptHeader("read_wav: data size not a whole number of frames");
  const size_t frames = data_size / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<double>(sample_rate);
  w.channels.assign(channels, std::vector<double>(frames));
  for (size_t t = 0; t < frames; ++t) {
    for (int m = 0; m < channels; ++m) {
      const size_t p = data_at + (t * channels + m) * bytes_per;
      if (pcm16) {
        std::int16_t s;
        std::memcpy(&s, d.data() + p, 2);
        w.channels[m][t] = static_cast<double>(s) / 32767.0;
      } else {
        float s;
        std::memcpy(&s, d.data() + p, 4);
        w.channels[m][t] = static_cast<double>(s);
      }
    }
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat format) {
  const int channels = w.num_channels();
  const size_t frames = w.num_samples();
  if (channels == 0) throw EmptySignal("write_wav: no channels");
  for (const auto& ch : w.channels)
    if (ch.size() != frames) throw LengthMismatch("write_wav: ragged channels");

  const bool f32 = (format == WavFormat::float32);
  const std::uint16_t bits = f32 ? 32 : 16;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(frames * block);

  std::vector<char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, f32 ? kFormatFloat : kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, rate);
  put_u32(out, rate * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);

  for (size_t t = 0; t < frames; ++t) {
    for (int m = 0; m < channels; ++m) {
      const double x = w.channels[m][t];
      if (f32) {
        const float s = static_cast<float>(x);
        const char* p = reinterpret_cast<const char*>(&s);
        out.insert(out.end(), p, p + 4);
      } else {
        double q = std::round(x * 32767.0);
        if (q > 32767.0) q = 32767.0;
        if (q < -32767.0) q = -32767.0;
        const std::int16_t s = static_cast<std::int16_t>(q);
        const char* p = reinterpret_cast<const char*>(&s);
        out.insert(out.end(), p, p + 2);
      }
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("write_wav: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write_wav: short write to " + path);
}

}  // namespace bss
