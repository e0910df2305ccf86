#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "daf/frame.hpp"
#include "daf/model.hpp"
#include "daf/signal.hpp"
#include "daf/world.hpp"

namespace daf::infer {

/// Reconstruction-error grid over a 10 m x 10 m egocentric search space at
/// 0.1 m resolution. Row 0 is the far-left edge in y (y = +4.95); columns
/// run along egocentric x from -4.95 to +4.95.
struct LossMap {
  static constexpr int kCells = 100;
  static constexpr double kResolution = 0.1;
  static constexpr double kExtent = 5.0;

  Eigen::MatrixXd values;  // kCells x kCells
  FrameTransform capture;  // agent pose when the sound was heard

  static Eigen::Vector2d cell_center_ego(int row, int col) {
    return {-kExtent + kResolution * (col + 0.5),
            kExtent - kResolution * (row + 0.5)};
  }
  Eigen::Vector2d cell_center_global(int row, int col) const {
    return r2g(cell_center_ego(row, col), capture);
  }
  std::pair<int, int> argmin() const;
};

/// Anything that can produce a log-domain PSD for a candidate egocentric
/// position; implementations must be safe to call from multiple threads.
class PsdSynthesizer {
 public:
  virtual ~PsdSynthesizer() = default;
  virtual Eigen::VectorXd synthesize(const Eigen::Vector2d& p_ego,
                                     const Eigen::VectorXd& m_onehot,
                                     const Eigen::VectorXd& t_onehot,
                                     const Eigen::VectorXd& z) const = 0;
};

/// The trained generator as synthesizer.
class GeneratorSynthesizer final : public PsdSynthesizer {
 public:
  explicit GeneratorSynthesizer(const model::Checkpoint& ckpt)
      : ckpt_(&ckpt) {}
  Eigen::VectorXd synthesize(const Eigen::Vector2d& p_ego,
                             const Eigen::VectorXd& m_onehot,
                             const Eigen::VectorXd& t_onehot,
                             const Eigen::VectorXd& z) const override;

 private:
  const model::Checkpoint* ckpt_;
};

/// The ground-truth renderer as synthesizer: re-renders the episode's
/// event at the candidate position and takes ln(welch + 1e-10). Class and
/// latent arguments are ignored; the true material, type and scene are
/// used. The reverb tail is precomputed once since it does not depend on
/// the source position.
class OracleSynthesizer final : public PsdSynthesizer {
 public:
  OracleSynthesizer(const world::SceneSpec& scene,
                    const world::ObjectClass& object,
                    const world::MaterialClass& material,
                    double impact_energy, const world::Pose& agent,
                    std::uint64_t render_seed);
  Eigen::VectorXd synthesize(const Eigen::Vector2d& p_ego,
                             const Eigen::VectorXd& m_onehot,
                             const Eigen::VectorXd& t_onehot,
                             const Eigen::VectorXd& z) const override;

 private:
  world::ImpactSource source_;
  Eigen::Index samples_;
};

/// Builds the loss map: encodes S once to fix material/type one-hots and
/// z = mu, then evaluates the synthesizer at every one of the 100x100 cell
/// centers against the target. Exactly 10,000 synthesizer calls.
LossMap loss_map(const signal::LogStft& S,
                 const Eigen::VectorXd& target_log_psd,
                 const PsdSynthesizer& synth, const model::Checkpoint& ckpt,
                 const FrameTransform& tf, int workers = 0);

struct Minimum {
  Eigen::Vector2d global;
  double value;
  int row;
  int col;
};

/// Cells no greater than all 8 neighbors, ranked ascending by value (ties
/// by row, then column), greedily thinned to min_separation meters apart.
/// Returns at most `count` minima, converted to the global frame.
std::vector<Minimum> local_minima(const LossMap& map, int count = 3,
                                  double min_separation = 1.0);

void write_loss_map_csv(const std::filesystem::path& path, const LossMap& m);
/// 8-bit binary PGM, min value black, max white, row 0 at y = +4.95.
void write_loss_map_pgm(const std::filesystem::path& path, const LossMap& m);

}  // namespace daf::infer
