#pragma once

#include <filesystem>
#include <span>

#include "freqrise/transforms.hpp"

namespace freqrise {

// RIFF/WAVE, 16-bit PCM, mono. Samples are scaled by 1/32768.
TimeSeries load_wav(const std::filesystem::path& path);
TimeSeries parse_wav(std::span<const unsigned char> bytes);

// Writes 16-bit PCM mono; samples are clipped to [-1, 32767/32768].
void write_wav(const TimeSeries& x, const std::filesystem::path& path);

struct PreprocessConfig {
  double target_rate = 8000.0;
  std::size_t target_length = 8000;
  bool peak_normalize = false;
};

// Kaiser-windowed sinc interpolation with the cutoff at the lower of the two
// Nyquist frequencies; 64 taps at the output rate.
TimeSeries resample(const TimeSeries& x, double target_rate);

// Resample to the target rate and right-pad with zeros to the target length.
// Throws TooLong when the resampled signal exceeds the target length.
TimeSeries preprocess_audio(const TimeSeries& x, const PreprocessConfig& cfg = {});

}  // namespace freqrise
