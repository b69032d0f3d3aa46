#pragma once

#include <string>

#include "bss/signal.hpp"

namespace bss {

enum class WavFormat { pcm16, float32 };

// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
// PCM16 samples map to [-1, 1] with scale 32767 (matching write_wav, so a
// write/read pair bounds the error by half a quantization step). Unknown
// chunks are skipped. Throws CorruptHeader on malformed files and
// UnsupportedFormat on any other encoding.
Waveform read_wav(const std::string& path);

// Writes a RIFF/WAVE file. float32 is lossless for float-valued samples;
// pcm16 quantizes by rounding (no dither) and clips to full scale.
void write_wav(const std::string& path, const Waveform& w,
               WavFormat format = WavFormat::float32);

}  // namespace bss
