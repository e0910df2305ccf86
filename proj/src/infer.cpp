#include "daf/infer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "daf/parallel.hpp"

namespace daf::infer {

std::pair<int, int> LossMap::argmin() const {
  int best_r = 0, best_c = 0;
  double best = values(0, 0);
  for (int r = 0; r < kCells; ++r)
    for (int c = 0; c < kCells; ++c)
      if (values(r, c) < best) {
        best = values(r, c);
        best_r = r;
        best_c = c;
      }
  return {best_r, best_c};
}

Eigen::VectorXd GeneratorSynthesizer::synthesize(
    const Eigen::Vector2d& p_ego, const Eigen::VectorXd& m_onehot,
    const Eigen::VectorXd& t_onehot, const Eigen::VectorXd& z) const {
  return model::generate(p_ego, m_onehot, t_onehot, z, *ckpt_);
}

OracleSynthesizer::OracleSynthesizer(const world::SceneSpec& scene,
                                     const world::ObjectClass& object,
                                     const world::MaterialClass& material,
                                     double impact_energy,
                                     const world::Pose& agent,
                                     std::uint64_t render_seed) {
  world::FallEvent event;
  event.type_id = object.type_id;
  event.material_id = material.material_id;
  event.position = agent.position;  // placeholder; the source ignores it
  event.impact_energy = impact_energy;
  source_ = world::make_impact_source(event, material, object, scene,
                                      render_seed);
  samples_ = source_.mono.size();
}

Eigen::VectorXd OracleSynthesizer::synthesize(
    const Eigen::Vector2d& p_ego, const Eigen::VectorXd& /*m_onehot*/,
    const Eigen::VectorXd& /*t_onehot*/,
    const Eigen::VectorXd& /*z*/) const {
  const double distance = std::max(p_ego.norm(), 1e-6);
  const double azimuth =
      p_ego.norm() > 1e-9 ? std::atan2(p_ego.y(), p_ego.x()) : 0.0;
  const auto wave =
      world::spatialize_source(source_, azimuth, distance, samples_);
  return signal::log_psd(signal::welch_psd(wave));
}

LossMap loss_map(const signal::LogStft& S,
                 const Eigen::VectorXd& target_log_psd,
                 const PsdSynthesizer& synth, const model::Checkpoint& ckpt,
                 const FrameTransform& tf, int workers) {
  // Encoder runs exactly once; class estimates and z = mu stay fixed
  // across the grid.
  const model::LatentFactors lf = model::encode(S, ckpt);
  const auto onehot_argmax = [](const Eigen::VectorXd& logits) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(logits.size());
    v[best] = 1.0;
    return v;
  };
  const Eigen::VectorXd m_onehot = onehot_argmax(lf.m_logits);
  const Eigen::VectorXd t_onehot = onehot_argmax(lf.t_logits);
  const Eigen::VectorXd& z = lf.mu;

  const double inv_d = 1.0 / static_cast<double>(target_log_psd.size());

  LossMap map;
  map.capture = tf;
  map.values.resize(LossMap::kCells, LossMap::kCells);

  parallel_for(LossMap::kCells, worker_count(workers), [&](long row) {
    for (int col = 0; col < LossMap::kCells; ++col) {
      const Eigen::Vector2d p =
          LossMap::cell_center_ego(static_cast<int>(row), col);
      Eigen::VectorXd pred;
      try {
        pred = synth.synthesize(p, m_onehot, t_onehot, z);
      } catch (const std::exception& e) {
        throw std::runtime_error("loss_map: synthesizer failed at cell (" +
                                 std::to_string(row) + ", " +
                                 std::to_string(col) + "): " + e.what());
      }
      if (pred.size() != target_log_psd.size())
        throw std::runtime_error(
            "loss_map: synthesizer returned " + std::to_string(pred.size()) +
            " values, target has " + std::to_string(target_log_psd.size()));
      map.values(row, col) = inv_d * (pred - target_log_psd).squaredNorm();
    }
  });
  return map;
}

std::vector<Minimum> local_minima(const LossMap& map, int count,
                                  double min_separation) {
  if (count < 1) throw std::invalid_argument("local_minima: count must be >= 1");
  constexpr int n = LossMap::kCells;
  std::vector<Minimum> candidates;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double v = map.values(r, c);
      bool is_min = true;
      for (int dr = -1; dr <= 1 && is_min; ++dr)
        for (int dc = -1; dc <= 1 && is_min; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
          if (map.values(rr, cc) < v) is_min = false;
        }
      if (is_min)
        candidates.push_back({map.cell_center_global(r, c), v, r, c});
    }

  std::sort(candidates.begin(), candidates.end(),
            [](const Minimum& a, const Minimum& b) {
              if (a.value != b.value) return a.value < b.value;
              if (a.row != b.row) return a.row < b.row;
              return a.col < b.col;
            });

  std::vector<Minimum> picked;
  for (const auto& cand : candidates) {
    if (static_cast<int>(picked.size()) >= count) break;
    const Eigen::Vector2d ego = LossMap::cell_center_ego(cand.row, cand.col);
    bool clear = true;
    for (const auto& p : picked) {
      const Eigen::Vector2d other = LossMap::cell_center_ego(p.row, p.col);
      if ((ego - other).norm() < min_separation) {
        clear = false;
        break;
      }
    }
    if (clear) picked.push_back(cand);
  }
  return picked;
}

void write_loss_map_csv(const std::filesystem::path& path, const LossMap& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_loss_map_csv: cannot open " +
                             path.string());
  out << "row,col,x_ego,y_ego,x_global,y_global,value\n";
  char line[256];
  for (int r = 0; r < LossMap::kCells; ++r)
    for (int c = 0; c < LossMap::kCells; ++c) {
      const Eigen::Vector2d ego = LossMap::cell_center_ego(r, c);
      const Eigen::Vector2d g = m.cell_center_global(r, c);
      std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    r, c, ego.x(), ego.y(), g.x(), g.y(), m.values(r, c));
      out << line;
    }
}

void write_loss_map_pgm(const std::filesystem::path& path, const LossMap& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_loss_map_pgm: cannot open " +
                             path.string());
  const double lo = m.values.minCoeff();
  const double hi = m.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P5\n" << LossMap::kCells << " " << LossMap::kCells << "\n255\n";
  for (int r = 0; r < LossMap::kCells; ++r)
    for (int c = 0; c < LossMap::kCells; ++c) {
      const double t = (m.values(r, c) - lo) / span;
      const unsigned char px =
          static_cast<unsigned char>(std::lround(255.0 * t));
      out.write(reinterpret_cast<const char*>(&px), 1);
    }
}

}  // namespace daf::infer
