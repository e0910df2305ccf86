#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

// Test-only oracles, written independently of the library code paths they
// check.

namespace oracle {

/// Direct O(n^2) DFT of a real frame; one-sided bins.
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<double>& x, int fft) {
  const int bins = fft / 2 + 1;
  std::vector<std::complex<double>> out(static_cast<size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (int n = 0; n < static_cast<int>(x.size()); ++n) {
      const double ang = -2.0 * std::numbers::pi * k * n / fft;
      acc += x[static_cast<size_t>(n)] *
             std::complex<double>{std::cos(ang), std::sin(ang)};
    }
    out[static_cast<size_t>(k)] = acc;
  }
  return out;
}

/// Central finite difference of f at x, step h.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with an absolute floor for near-zero references.
inline double rel_err(double got, double want, double floor_ = 1e-8) {
  return std::abs(got - want) / std::max(std::abs(want), floor_);
}

/// Uniform-cost search over an 8-connected grid with the same movement
/// rule the planner specifies (unit/diagonal costs, no corner cutting).
inline double dijkstra_cost(
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& blocked,
    int sr, int sc, int gr, int gc) {
  const int nr = static_cast<int>(blocked.rows());
  const int nc = static_cast<int>(blocked.cols());
  const auto free = [&](int r, int c) {
    return r >= 0 && r < nr && c >= 0 && c < nc && blocked(r, c) == 0;
  };
  if (!free(sr, sc) || !free(gr, gc))
    return std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(nr * nc),
                           std::numeric_limits<double>::infinity());
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> open;
  dist[static_cast<size_t>(sr * nc + sc)] = 0.0;
  open.push({0.0, sr * nc + sc});
  constexpr int dr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  constexpr int dc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  while (!open.empty()) {
    const auto [d, ci] = open.top();
    open.pop();
    if (d > dist[static_cast<size_t>(ci)] + 1e-12) continue;
    const int r = ci / nc, c = ci % nc;
    if (r == gr && c == gc) return d;
    for (int k = 0; k < 8; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (!free(rr, cc)) continue;
      const bool diag = dr[k] != 0 && dc[k] != 0;
      if (diag && (!free(r + dr[k], c) || !free(r, c + dc[k]))) continue;
      const double nd = d + (diag ? std::numbers::sqrt2 : 1.0);
      const int ni = rr * nc + cc;
      if (nd < dist[static_cast<size_t>(ni)] - 1e-12) {
        dist[static_cast<size_t>(ni)] = nd;
        open.push({nd, ni});
      }
    }
  }
  return dist[static_cast<size_t>(gr * nc + gc)];
}

}  // namespace oracle
