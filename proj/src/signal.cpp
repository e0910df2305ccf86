#include "daf/signal.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace daf::signal {

namespace {

/// Iterative radix-2 complex FFT on split re/im arrays with precomputed
/// twiddles. Sizes here are small powers of two (256, 512), so a flat
/// table-driven implementation is plenty.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw std::invalid_argument("Fft: size must be a power of two");
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    rev_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      rev_[static_cast<size_t>(i)] = r;
    }
    tw_re_.resize(static_cast<size_t>(n));
    tw_im_.resize(static_cast<size_t>(n));
    int off = 0;
    for (int len = 2; len <= n; len <<= 1) {
      for (int j = 0; j < len / 2; ++j) {
        const double ang = -2.0 * std::numbers::pi * j / len;
        tw_re_[static_cast<size_t>(off + j)] = std::cos(ang);
        tw_im_[static_cast<size_t>(off + j)] = std::sin(ang);
      }
      off += len / 2;
    }
  }

  void forward(double* re, double* im) const {
    for (int i = 0; i < n_; ++i) {
      const int r = rev_[static_cast<size_t>(i)];
      if (r > i) {
        std::swap(re[i], re[r]);
        std::swap(im[i], im[r]);
      }
    }
    int off = 0;
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len / 2;
      const double* wr = tw_re_.data() + off;
      const double* wi = tw_im_.data() + off;
      for (int base = 0; base < n_; base += len) {
        double* ra = re + base;
        double* ia = im + base;
        double* rb = ra + half;
        double* ib = ia + half;
        for (int j = 0; j < half; ++j) {
          const double xr = rb[j] * wr[j] - ib[j] * wi[j];
          const double xi = rb[j] * wi[j] + ib[j] * wr[j];
          rb[j] = ra[j] - xr;
          ib[j] = ia[j] - xi;
          ra[j] += xr;
          ia[j] += xi;
        }
      }
      off += half;
    }
  }

  /// Transforms `batch` signals at once; element i of signal t lives at
  /// index i*batch + t, already in bit-reversed row order (see rev()).
  /// The inner loops then run contiguously across the batch.
  void forward_batch(double* re, double* im, int batch) const {
    int off = 0;
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len / 2;
      const double* wr = tw_re_.data() + off;
      const double* wi = tw_im_.data() + off;
      for (int base = 0; base < n_; base += len) {
        for (int j = 0; j < half; ++j) {
          double* ra = re + static_cast<std::ptrdiff_t>(base + j) * batch;
          double* ia = im + static_cast<std::ptrdiff_t>(base + j) * batch;
          double* rb = ra + static_cast<std::ptrdiff_t>(half) * batch;
          double* ib = ia + static_cast<std::ptrdiff_t>(half) * batch;
          const double cwr = wr[j], cwi = wi[j];
          for (int t = 0; t < batch; ++t) {
            const double xr = rb[t] * cwr - ib[t] * cwi;
            const double xi = rb[t] * cwi + ib[t] * cwr;
            rb[t] = ra[t] - xr;
            ib[t] = ia[t] - xi;
            ra[t] += xr;
            ia[t] += xi;
          }
        }
      }
      off += half;
    }
  }

  int size() const { return n_; }
  int rev(int i) const { return rev_[static_cast<size_t>(i)]; }

 private:
  int n_;
  std::vector<int> rev_;
  std::vector<double> tw_re_, tw_im_;
};

const Fft& fft_plan(int n) {
  thread_local std::map<int, Fft> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Fft(n)).first;
  return it->second;
}

const Eigen::ArrayXd& hann_cached(int n) {
  thread_local std::map<int, Eigen::ArrayXd> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, hann_window(n)).first;
  return it->second;
}

/// Untangles the spectrum of (left + i*right) into the two one-sided
/// channel spectra at bin k. S must hold the full n-point transform.
inline void untangle(const double* sre, const double* sim, int n, int k,
                     std::complex<double>& left, std::complex<double>& right) {
  const int kk = k == 0 ? 0 : n - k;
  const double ar = sre[k], ai = sim[k];
  const double br = sre[kk], bi = sim[kk];
  left = {0.5 * (ar + br), 0.5 * (ai - bi)};
  right = {0.5 * (ai + bi), 0.5 * (br - ar)};
}

}  // namespace

void Waveform::validate() const {
  if (samples[0].size() != samples[1].size())
    throw std::invalid_argument(
        "Waveform: channel lengths differ (" +
        std::to_string(samples[0].size()) + " vs " +
        std::to_string(samples[1].size()) + ")");
  if (length() < 512)
    throw std::invalid_argument("Waveform: need at least 512 samples, got " +
                                std::to_string(length()));
}

Eigen::VectorXd PsdVector::stacked() const {
  Eigen::VectorXd out(dim());
  out.head(left.size()) = left;
  out.tail(right.size()) = right;
  return out;
}

Eigen::ArrayXd hann_window(int n) {
  if (n < 2) throw std::invalid_argument("hann_window: n must be >= 2");
  Eigen::ArrayXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  return w;
}

Stft stft(const Waveform& w, int win, int hop, int fft) {
  if (hop < 1) throw std::invalid_argument("stft: hop must be >= 1");
  if (win > fft) throw std::invalid_argument("stft: win must be <= fft");
  if (w.samples[0].size() != w.samples[1].size())
    throw std::invalid_argument("stft: channel lengths differ");
  const Eigen::Index len = w.length();
  if (len < win)
    throw std::invalid_argument("stft: signal length " + std::to_string(len) +
                                " shorter than window " + std::to_string(win));

  const Eigen::Index frames = (len - win) / hop + 1;
  const Eigen::Index bins = fft / 2 + 1;
  const Eigen::ArrayXd& window = hann_cached(win);
  const Fft& plan = fft_plan(fft);

  Stft out;
  out.win = win;
  out.hop = hop;
  out.fft = fft;
  out.sample_rate = w.sample_rate;
  out.channels[0].resize(frames, bins);
  out.channels[1].resize(frames, bins);

  // Both channels ride through one complex transform per frame.
  std::vector<double> re(static_cast<size_t>(fft));
  std::vector<double> im(static_cast<size_t>(fft));
  for (Eigen::Index k = 0; k < frames; ++k) {
    const Eigen::Index s0 = k * hop;
    for (int i = 0; i < win; ++i) {
      re[static_cast<size_t>(i)] = w.samples[0][s0 + i] * window[i];
      im[static_cast<size_t>(i)] = w.samples[1][s0 + i] * window[i];
    }
    std::fill(re.begin() + win, re.end(), 0.0);
    std::fill(im.begin() + win, im.end(), 0.0);
    plan.forward(re.data(), im.data());
    for (Eigen::Index b = 0; b < bins; ++b) {
      std::complex<double> l, r;
      untangle(re.data(), im.data(), fft, static_cast<int>(b), l, r);
      out.channels[0](k, b) = l;
      out.channels[1](k, b) = r;
    }
  }
  return out;
}

LogStft log_magnitude(const Stft& s) {
  LogStft out;
  out.sample_rate = s.sample_rate;
  for (int c = 0; c < 2; ++c)
    out.channels[c] =
        s.channels[c].array().abs().max(kMagnitudeFloor).log().matrix();
  return out;
}

PsdVector welch_psd(const Waveform& w, int win, int overlap, int fft) {
  if (overlap < 0 || overlap >= win)
    throw std::invalid_argument("welch_psd: overlap must be in [0, win)");
  if (win > fft) throw std::invalid_argument("welch_psd: win must be <= fft");
  if (w.samples[0].size() != w.samples[1].size())
    throw std::invalid_argument("welch_psd: channel lengths differ");
  const Eigen::Index len = w.length();
  if (len < win)
    throw std::invalid_argument("welch_psd: signal length " +
                                std::to_string(len) + " shorter than window " +
                                std::to_string(win));

  const int hop = win - overlap;
  const Eigen::Index segments = (len - win) / hop + 1;
  const Eigen::Index bins = fft / 2 + 1;
  const Eigen::ArrayXd& window = hann_cached(win);
  const Fft& plan = fft_plan(fft);

  // All segments go through one batched transform: rows are transform
  // indices (written bit-reversed so no permute pass is needed), columns
  // are segments. Left and right channels ride the real/imag planes.
  const int nseg = static_cast<int>(segments);
  thread_local std::vector<double> re_buf, im_buf;
  re_buf.assign(static_cast<size_t>(fft) * nseg, 0.0);
  im_buf.assign(static_cast<size_t>(fft) * nseg, 0.0);
  const double* left = w.samples[0].data();
  const double* right = w.samples[1].data();
  for (int i = 0; i < win; ++i) {
    const double wi = window[i];
    double* rrow = re_buf.data() + static_cast<std::ptrdiff_t>(plan.rev(i)) * nseg;
    double* irow = im_buf.data() + static_cast<std::ptrdiff_t>(plan.rev(i)) * nseg;
    for (int t = 0; t < nseg; ++t) {
      rrow[t] = left[t * hop + i] * wi;
      irow[t] = right[t * hop + i] * wi;
    }
  }
  plan.forward_batch(re_buf.data(), im_buf.data(), nseg);

  Eigen::ArrayXd acc_l = Eigen::ArrayXd::Zero(bins);
  Eigen::ArrayXd acc_r = Eigen::ArrayXd::Zero(bins);
  for (Eigen::Index b = 0; b < bins; ++b) {
    const int kk = b == 0 ? 0 : fft - static_cast<int>(b);
    const double* ar = re_buf.data() + b * nseg;
    const double* ai = im_buf.data() + b * nseg;
    const double* br = re_buf.data() + static_cast<std::ptrdiff_t>(kk) * nseg;
    const double* bi = im_buf.data() + static_cast<std::ptrdiff_t>(kk) * nseg;
    double sl = 0.0, sr = 0.0;
    for (int t = 0; t < nseg; ++t) {
      const double lre = 0.5 * (ar[t] + br[t]);
      const double lim = 0.5 * (ai[t] - bi[t]);
      const double rre = 0.5 * (ai[t] + bi[t]);
      const double rim = 0.5 * (br[t] - ar[t]);
      sl += lre * lre + lim * lim;
      sr += rre * rre + rim * rim;
    }
    acc_l[b] = sl;
    acc_r[b] = sr;
  }

  const double norm = 1.0 / (w.sample_rate * window.square().sum() *
                             static_cast<double>(segments));
  acc_l *= norm;
  acc_r *= norm;
  // One-sided spectrum: double everything except DC and Nyquist.
  for (Eigen::Index b = 1; b + 1 < bins; ++b) {
    acc_l[b] *= 2.0;
    acc_r[b] *= 2.0;
  }

  PsdVector out;
  out.sample_rate = w.sample_rate;
  out.left = acc_l.matrix();
  out.right = acc_r.matrix();
  return out;
}

Eigen::VectorXd log_psd(const PsdVector& psd) {
  return (psd.stacked().array() + kMagnitudeFloor).log().matrix();
}

std::vector<std::int16_t> quantize_pcm16(const Waveform& w) {
  const Eigen::Index n = w.length();
  std::vector<std::int16_t> out(static_cast<size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      double v = std::clamp(w.samples[c][i], -1.0, 1.0) * 32767.0;
      out[static_cast<size_t>(2 * i + c)] =
          static_cast<std::int16_t>(std::lround(v));
    }
  }
  return out;
}

Waveform dequantize_pcm16(const std::vector<std::int16_t>& interleaved,
                          double sample_rate) {
  if (interleaved.size() % 2 != 0)
    throw std::invalid_argument("dequantize_pcm16: odd sample count");
  const Eigen::Index n = static_cast<Eigen::Index>(interleaved.size() / 2);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples[0].resize(n);
  w.samples[1].resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.samples[0][i] = interleaved[static_cast<size_t>(2 * i)] / 32768.0;
    w.samples[1][i] = interleaved[static_cast<size_t>(2 * i + 1)] / 32768.0;
  }
  return w;
}

Waveform read_pcm16(const std::filesystem::path& path, double sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pcm16: cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % 4 != 0)
    throw std::runtime_error("read_pcm16: " + path.string() +
                             " is not 2-channel 16-bit PCM");
  std::vector<std::int16_t> raw(bytes / 2);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(bytes));
  return dequantize_pcm16(raw, sample_rate);
}

void write_pcm16(const std::filesystem::path& path, const Waveform& w) {
  const auto raw = quantize_pcm16(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_pcm16: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::int16_t)));
}

}  // namespace daf::signal
