#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <filesystem>

namespace daf::signal {

inline constexpr double kSampleRate = 44100.0;
inline constexpr double kMagnitudeFloor = 1e-10;

/// Two-channel time-domain signal. Amplitudes are dimensionless in [-1, 1].
struct Waveform {
  std::array<Eigen::ArrayXd, 2> samples;
  double sample_rate = kSampleRate;

  Eigen::Index length() const { return samples[0].size(); }
  const Eigen::ArrayXd& channel(int c) const { return samples[c]; }
  Eigen::ArrayXd& channel(int c) { return samples[c]; }

  /// Throws std::invalid_argument if the channel lengths differ or the
  /// signal is shorter than 512 samples.
  void validate() const;
};

/// Complex one-sided spectra, one matrix per channel, frames x (fft/2 + 1).
struct Stft {
  std::array<Eigen::MatrixXcd, 2> channels;
  int win = 512;
  int hop = 128;
  int fft = 512;
  double sample_rate = kSampleRate;

  Eigen::Index frames() const { return channels[0].rows(); }
  Eigen::Index bins() const { return channels[0].cols(); }
};

/// Log-magnitude spectrogram: ln(max(|X|, 1e-10)) per cell.
struct LogStft {
  std::array<Eigen::MatrixXd, 2> channels;
  double sample_rate = kSampleRate;

  Eigen::Index frames() const { return channels[0].rows(); }
  Eigen::Index bins() const { return channels[0].cols(); }
};

/// Welch power spectral density, one vector per channel (amplitude^2 / Hz).
struct PsdVector {
  Eigen::VectorXd left;
  Eigen::VectorXd right;
  double sample_rate = kSampleRate;

  Eigen::Index dim() const { return left.size() + right.size(); }

  /// [left; right] as one column vector of dimension d.
  Eigen::VectorXd stacked() const;
};

/// w[i] = 0.5 * (1 - cos(2*pi*i / (n-1))). Symmetric, zero at the endpoints.
Eigen::ArrayXd hann_window(int n);

Stft stft(const Waveform& w, int win = 512, int hop = 128, int fft = 512);

LogStft log_magnitude(const Stft& s);

PsdVector welch_psd(const Waveform& w, int win = 256, int overlap = 128,
                    int fft = 256);

/// ln(psd + 1e-10), stacked over both channels.
Eigen::VectorXd log_psd(const PsdVector& psd);

/// Raw 16-bit little-endian PCM, two channels interleaved.
Waveform read_pcm16(const std::filesystem::path& path,
                    double sample_rate = kSampleRate);
void write_pcm16(const std::filesystem::path& path, const Waveform& w);

/// In-memory PCM quantization round trip; dataset blobs store exactly this.
std::vector<std::int16_t> quantize_pcm16(const Waveform& w);
Waveform dequantize_pcm16(const std::vector<std::int16_t>& interleaved,
                          double sample_rate = kSampleRate);

}  // namespace daf::signal
