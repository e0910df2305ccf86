#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "daf/autodiff.hpp"
#include "daf/rng.hpp"
#include "daf/signal.hpp"
#include "daf/world.hpp"

namespace daf::model {

/// Which representation the generator reconstructs: the Welch PSD in log
/// domain, or the pooled log-STFT (the encoder's own input features).
enum class TargetKind { kPsd = 0, kStft = 1 };

struct ModelConfig {
  int T = 10;
  int M = 5;
  int k = 16;
  int feature_dim = 1024;  // 2 channels x 64 bands x 8 segments
  int enc_h1 = 512;
  int enc_h2 = 256;
  int gen_h1 = 256;
  int gen_h2 = 256;
  int psd_dim = 258;
  TargetKind target = TargetKind::kPsd;

  int generator_input() const { return 2 + M + T + k; }
  int output_dim() const {
    return target == TargetKind::kPsd ? psd_dim : feature_dim;
  }
};

/// MLP trunk with five heads: position, material logits, type logits,
/// posterior mean and log standard deviation. Biases are 1xN rows.
struct EncoderParams {
  Eigen::MatrixXd w1, b1;
  Eigen::MatrixXd w2, b2;
  Eigen::MatrixXd wp, bp;
  Eigen::MatrixXd wm, bm;
  Eigen::MatrixXd wt, bt;
  Eigen::MatrixXd wmu, bmu;
  Eigen::MatrixXd wls, bls;

  static EncoderParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<Eigen::MatrixXd*> params();
  std::vector<const Eigen::MatrixXd*> params() const;
};

struct GeneratorParams {
  Eigen::MatrixXd w1, b1;
  Eigen::MatrixXd w2, b2;
  Eigen::MatrixXd w3, b3;

  static GeneratorParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<Eigen::MatrixXd*> params();
  std::vector<const Eigen::MatrixXd*> params() const;
};

struct Checkpoint {
  ModelConfig config;
  EncoderParams encoder;
  GeneratorParams generator;
};

struct LatentFactors {
  Eigen::Vector2d p_hat = Eigen::Vector2d::Zero();
  Eigen::VectorXd m_logits;
  Eigen::VectorXd t_logits;
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;
  Eigen::VectorXd z;
};

struct Hyperparams {
  double alpha = 1.0;   // type cross-entropy
  double beta = 1.0;    // material cross-entropy
  double gamma = 1.0;   // position
  double delta = 1e-3;  // KL
  double eta = 1.0;     // reconstruction
  int k = 16;
  double lr = 1e-3;
  int epochs = 60;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

/// 2 x 64 x 8 block means over (channel, frequency band, time segment).
/// Requires at least 8 frames.
Eigen::VectorXd pool_features(const signal::LogStft& s);

/// Encoder forward pass. With an rng, z is sampled via the
/// reparameterization; without, z = mu.
LatentFactors encode(const signal::LogStft& s, const Checkpoint& ckpt,
                     Rng* rng = nullptr);

/// Generator forward pass; m_vec and t_vec are probability vectors or
/// one-hots, z has dimension k.
Eigen::VectorXd generate(const Eigen::Vector2d& p, const Eigen::VectorXd& m_vec,
                         const Eigen::VectorXd& t_vec,
                         const Eigen::VectorXd& z, const Checkpoint& ckpt);

/// Flat feature/target matrices for one dataset split.
struct TrainSet {
  Eigen::MatrixXd features;   // N x 1024, raw pooled log-STFT
  Eigen::MatrixXd psd_log;    // N x 258, ln(PSD + 1e-10)
  Eigen::MatrixXd positions;  // N x 2, egocentric meters
  Eigen::VectorXi types;
  Eigen::VectorXi materials;

  Eigen::Index size() const { return features.rows(); }
};

TrainSet build_train_set(
    const world::Dataset& ds, world::Split split,
    std::optional<world::SceneClass> scene_class = std::nullopt,
    int workers = 0);

struct Batch {
  Eigen::MatrixXd features;
  Eigen::MatrixXd target;  // reconstruction target, B x output_dim
  Eigen::MatrixXd positions;
  Eigen::VectorXi types;
  Eigen::VectorXi materials;
};

Batch gather_batch(const TrainSet& ts, const ModelConfig& cfg,
                   const std::vector<int>& rows);

struct LossBreakdown {
  double type_loss = 0.0;
  double material_loss = 0.0;
  double position_loss = 0.0;
  double kl = 0.0;
  double psd_loss = 0.0;
  double total = 0.0;
};

/// Graph-building composite objective; exposed so gradient checks can
/// differentiate through the exact training path. Leaves must come from
/// make_leaves in params() order.
struct TotalLossResult {
  ad::Tensor total;
  LossBreakdown parts;
};
std::vector<ad::Tensor> make_leaves(
    ad::Tape& tape, const std::vector<const Eigen::MatrixXd*>& params,
    bool requires_grad);
TotalLossResult total_loss(ad::Tape& tape, const Batch& batch,
                           const std::vector<ad::Tensor>& enc_leaves,
                           const std::vector<ad::Tensor>& gen_leaves,
                           const ModelConfig& cfg, const Hyperparams& hp,
                           Rng& noise);

/// Value-only convenience overload.
LossBreakdown total_loss(const Batch& batch, const EncoderParams& enc,
                         const GeneratorParams& gen, const ModelConfig& cfg,
                         const Hyperparams& hp, std::uint64_t noise_seed);

struct EpochLoss {
  int epoch = 0;
  LossBreakdown parts;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLoss> trace;
};

/// Minibatch Adam over the composite objective. Deterministic for a fixed
/// seed. Throws std::runtime_error naming epoch and batch if the loss
/// stops being finite.
TrainResult train(const TrainSet& ts, ModelConfig cfg, const Hyperparams& hp);

struct Prediction {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // egocentric
  std::vector<int> top_types;
  std::vector<int> top_materials;
  Eigen::VectorXd type_probs;
  Eigen::VectorXd material_probs;
};

/// Deterministic: the latent path uses mu, never a sample. Ties rank the
/// lower class index first; top_k above the class count is clamped.
Prediction predict(const signal::LogStft& s, const Checkpoint& ckpt,
                   int top_k);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<EpochLoss>& trace);

}  // namespace daf::model
