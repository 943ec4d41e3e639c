#include "ctxrnnt/features/frontend.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Triangular weights on the mel axis, [num_bins x num_filters].
std::vector<std::vector<double>> filter_weights(const FeatureConfig& cfg) {
  const std::size_t n_fft = cfg.fft_size();
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.low_freq);
  const double mel_hi = hz_to_mel(cfg.upper_freq());
  const double step = (mel_hi - mel_lo) / static_cast<double>(cfg.num_filters + 1);
  std::vector<std::vector<double>> w(cfg.num_filters, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < cfg.num_filters; ++m) {
    const double left = mel_lo + step * static_cast<double>(m);
    const double center = left + step;
    const double right = center + step;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = cfg.sample_rate * static_cast<double>(k) / static_cast<double>(n_fft);
      const double mel = hz_to_mel(hz);
      if (mel > left && mel < right) {
        w[m][k] = mel <= center ? (mel - left) / (center - left)
                                : (right - mel) / (right - center);
      }
    }
  }
  return w;
}

}  // namespace

std::size_t FeatureConfig::window_length() const {
  return static_cast<std::size_t>(std::lround(sample_rate * window_ms / 1000.0));
}

std::size_t FeatureConfig::hop_length() const {
  return static_cast<std::size_t>(std::lround(sample_rate * hop_ms / 1000.0));
}

std::size_t FeatureConfig::fft_size() const {
  std::size_t n = 1;
  while (n < window_length()) n <<= 1;
  return n;
}

void FeatureConfig::validate() const {
  if (!(sample_rate > 0)) throw ValidationError("sample_rate must be positive");
  if (window_length() < 2) throw ValidationError("window shorter than 2 samples");
  if (hop_length() < 1) throw ValidationError("hop shorter than 1 sample");
  if (num_filters < 1) throw ValidationError("num_filters must be >= 1");
  if (downsample < 1) throw ValidationError("downsample must be >= 1");
  if (!(low_freq >= 0 && low_freq < upper_freq() && upper_freq() <= sample_rate / 2)) {
    throw ValidationError("mel band edges must satisfy 0 <= low < high <= Nyquist");
  }
  if (!(energy_floor > 0)) throw ValidationError("energy_floor must be positive");
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

std::vector<double> mel_filter_centers(const FeatureConfig& cfg) {
  const double mel_lo = hz_to_mel(cfg.low_freq);
  const double mel_hi = hz_to_mel(cfg.upper_freq());
  const double step = (mel_hi - mel_lo) / static_cast<double>(cfg.num_filters + 1);
  std::vector<double> centers(cfg.num_filters);
  for (std::size_t m = 0; m < cfg.num_filters; ++m) {
    centers[m] = mel_to_hz(mel_lo + step * static_cast<double>(m + 1));
  }
  return centers;
}

std::size_t num_frames(std::size_t num_samples, const FeatureConfig& cfg) {
  const std::size_t win = cfg.window_length();
  if (num_samples < win) {
    throw ValidationError("signal of " + std::to_string(num_samples) +
                          " samples is shorter than one window (" +
                          std::to_string(win) + ")");
  }
  return 1 + (num_samples - win) / cfg.hop_length();
}

Tensor log_filterbank(std::span<const Real> samples, const FeatureConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw ValidationError("empty signal");
  const std::size_t frames = num_frames(samples.size(), cfg);
  const std::size_t win = cfg.window_length();
  const std::size_t hop = cfg.hop_length();
  const std::size_t n_fft = cfg.fft_size();
  const std::size_t n_bins = n_fft / 2 + 1;

  std::vector<double> window(win);
  for (std::size_t n = 0; n < win; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                     static_cast<double>(win - 1));
  }
  const auto weights = filter_weights(cfg);

  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(n_bins);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in, out, FFTW_ESTIMATE);
  }

  Tensor feats({frames, cfg.num_filters});
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(in, in + n_fft, 0.0);
    const Real* frame = samples.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) in[n] = frame[n] * window[n];
    fftw_execute(plan);
    for (std::size_t k = 0; k < n_bins; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    for (std::size_t m = 0; m < cfg.num_filters; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) e += weights[m][k] * power[k];
      feats.at(t, m) = std::log(std::max(e, cfg.energy_floor));
    }
  }

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return feats;
}

Tensor stack_downsample(const Tensor& frames, const FeatureConfig& cfg) {
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw ValidationError("stack_downsample needs a non-empty [T x F] matrix");
  }
  const std::size_t t_in = frames.rows();
  const std::size_t dim = frames.cols();
  const std::size_t step = cfg.downsample;
  const std::size_t span = cfg.stack_left + 1;
  const std::size_t t_out = (t_in + step - 1) / step;
  Tensor out({t_out, dim * span});
  for (std::size_t t = 0; t < t_out; ++t) {
    const std::size_t last = std::min(step * t + step - 1, t_in - 1);
    for (std::size_t s = 0; s < span; ++s) {
      const long idx = static_cast<long>(last) - static_cast<long>(cfg.stack_left - s);
      const std::size_t src = idx < 0 ? 0 : static_cast<std::size_t>(idx);
      std::span<const Real> from = frames.row(src);
      std::copy(from.begin(), from.end(), out.row(t).begin() + static_cast<long>(s * dim));
    }
  }
  return out;
}

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto u32 = [&](std::size_t off) {
    if (off + 4 > bytes.size()) throw ValidationError(path + ": truncated wav");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[off + i]);
    return v;
  };
  auto u16 = [&](std::size_t off) {
    if (off + 2 > bytes.size()) throw ValidationError(path + ": truncated wav");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[off]) |
                                      (static_cast<unsigned char>(bytes[off + 1]) << 8));
  };
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw ValidationError(path + ": not a RIFF/WAVE file");
  }
  WavData wav;
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = u32(pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      const std::uint16_t format = u16(body);
      const std::uint16_t channels = u16(body + 2);
      wav.sample_rate = u32(body + 4);
      const std::uint16_t bits = u16(body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw ValidationError(path + ": only 16-bit PCM mono wav is supported");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ValidationError(path + ": data chunk before fmt");
      const std::size_t n = std::min<std::size_t>(len, bytes.size() - body) / 2;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(u16(body + 2 * i));
        wav.samples[i] = static_cast<Real>(raw) / 32768.0;
      }
      return wav;
    }
    pos = body + len + (len & 1);
  }
  throw ValidationError(path + ": no data chunk");
}

}  // namespace ctxrnnt
