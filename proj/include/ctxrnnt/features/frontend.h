// ctxrnnt/features/frontend.h
//
// Log mel filterbank frontend plus left-context frame stacking with
// downsampling. Defaults: 25 ms Hann window, 10 ms hop, 64 filters spanning
// 20 Hz to Nyquist on the magnitude-squared spectrum, 2 frames of left
// context, keep every third frame (30 ms output rate).

#ifndef CTXRNNT_FEATURES_FRONTEND_H_
#define CTXRNNT_FEATURES_FRONTEND_H_

#include <span>
#include <string>
#include <vector>

#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

struct FeatureConfig {
  double sample_rate = 16000.0;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t num_filters = 64;
  std::size_t stack_left = 2;
  std::size_t downsample = 3;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  double energy_floor = 1e-10;

  std::size_t window_length() const;
  std::size_t hop_length() const;
  std::size_t fft_size() const;  // next power of two >= window
  double upper_freq() const { return high_freq > 0 ? high_freq : sample_rate / 2; }
  std::size_t stacked_dim() const { return num_filters * (stack_left + 1); }
  double output_frame_ms() const { return hop_ms * static_cast<double>(downsample); }

  // Throws ValidationError on inconsistent values.
  void validate() const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequency (Hz) of each triangular filter.
std::vector<double> mel_filter_centers(const FeatureConfig& cfg);

// Number of frames produced for a signal of `num_samples`:
// 1 + floor((N - win) / hop). Throws if the signal is shorter than a window.
std::size_t num_frames(std::size_t num_samples, const FeatureConfig& cfg);

// [T x num_filters] log filterbank energies, floored at cfg.energy_floor.
Tensor log_filterbank(std::span<const Real> samples, const FeatureConfig& cfg);

// [T x F] -> [ceil(T / downsample) x F * (stack_left + 1)]. Output frame t'
// ends at input frame min(downsample * t' + downsample - 1, T - 1) and holds
// that frame preceded by its stack_left predecessors in time order; indices
// before 0 replicate frame 0.
Tensor stack_downsample(const Tensor& frames, const FeatureConfig& cfg);

// 16-bit PCM mono WAV reader; samples scaled to [-1, 1).
struct WavData {
  double sample_rate = 0.0;
  std::vector<Real> samples;
};
WavData read_wav(const std::string& path);

}  // namespace ctxrnnt

#endif  // CTXRNNT_FEATURES_FRONTEND_H_
