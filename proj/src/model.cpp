#include "daf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "daf/parallel.hpp"

namespace daf::model {

namespace {

// Fixed input conditioning: pooled log magnitudes live in roughly
// [-23, 2]; this centers them near zero at unit-ish scale.
constexpr double kFeatureShift = 12.0;
constexpr double kFeatureScale = 1.0 / 6.0;
constexpr double kLogSigmaClamp = 10.0;

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                double stddev, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& raw) {
  return ((raw.array() + kFeatureShift) * kFeatureScale).matrix();
}

}  // namespace

EncoderParams EncoderParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  EncoderParams p;
  Rng rng(sub_seed(seed, "encoder"));
  const auto he = [&](Eigen::Index in, Eigen::Index out) {
    return gaussian_matrix(in, out, std::sqrt(2.0 / static_cast<double>(in)),
                           rng);
  };
  const auto head = [&](Eigen::Index in, Eigen::Index out) {
    return gaussian_matrix(in, out, std::sqrt(1.0 / static_cast<double>(in)),
                           rng);
  };
  p.w1 = he(cfg.feature_dim, cfg.enc_h1);
  p.b1 = Eigen::MatrixXd::Zero(1, cfg.enc_h1);
  p.w2 = he(cfg.enc_h1, cfg.enc_h2);
  p.b2 = Eigen::MatrixXd::Zero(1, cfg.enc_h2);
  p.wp = head(cfg.enc_h2, 2);
  p.bp = Eigen::MatrixXd::Zero(1, 2);
  p.wm = head(cfg.enc_h2, cfg.M);
  p.bm = Eigen::MatrixXd::Zero(1, cfg.M);
  p.wt = head(cfg.enc_h2, cfg.T);
  p.bt = Eigen::MatrixXd::Zero(1, cfg.T);
  p.wmu = head(cfg.enc_h2, cfg.k);
  p.bmu = Eigen::MatrixXd::Zero(1, cfg.k);
  p.wls = head(cfg.enc_h2, cfg.k);
  // Start with small posterior sigma so the KL term does not swamp early
  // reconstruction gradients.
  p.bls = Eigen::MatrixXd::Constant(1, cfg.k, -2.0);
  return p;
}

std::vector<Eigen::MatrixXd*> EncoderParams::params() {
  return {&w1, &b1, &w2, &b2, &wp, &bp, &wm, &bm, &wt, &bt,
          &wmu, &bmu, &wls, &bls};
}

std::vector<const Eigen::MatrixXd*> EncoderParams::params() const {
  return {&w1, &b1, &w2, &b2, &wp, &bp, &wm, &bm, &wt, &bt,
          &wmu, &bmu, &wls, &bls};
}

GeneratorParams GeneratorParams::init(const ModelConfig& cfg,
                                      std::uint64_t seed) {
  GeneratorParams p;
  Rng rng(sub_seed(seed, "generator"));
  const auto he = [&](Eigen::Index in, Eigen::Index out) {
    return gaussian_matrix(in, out, std::sqrt(2.0 / static_cast<double>(in)),
                           rng);
  };
  p.w1 = he(cfg.generator_input(), cfg.gen_h1);
  p.b1 = Eigen::MatrixXd::Zero(1, cfg.gen_h1);
  p.w2 = he(cfg.gen_h1, cfg.gen_h2);
  p.b2 = Eigen::MatrixXd::Zero(1, cfg.gen_h2);
  p.w3 = gaussian_matrix(cfg.gen_h2, cfg.output_dim(),
                         std::sqrt(1.0 / cfg.gen_h2), rng);
  // Targets are log-domain spectra; keep the initial guess in their range.
  p.b3 = Eigen::MatrixXd::Constant(1, cfg.output_dim(), -15.0);
  return p;
}

std::vector<Eigen::MatrixXd*> GeneratorParams::params() {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

std::vector<const Eigen::MatrixXd*> GeneratorParams::params() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

Eigen::VectorXd pool_features(const signal::LogStft& s) {
  const Eigen::Index frames = s.frames();
  const Eigen::Index bins = s.bins();
  if (frames < 8)
    throw std::invalid_argument("pool_features: need >= 8 frames, got " +
                                std::to_string(frames));
  constexpr int kBands = 64;
  constexpr int kSegments = 8;
  Eigen::VectorXd out(2 * kBands * kSegments);
  for (int c = 0; c < 2; ++c) {
    const Eigen::MatrixXd& ch = s.channels[c];
    for (int b = 0; b < kBands; ++b) {
      const Eigen::Index b0 = b * bins / kBands;
      const Eigen::Index b1 = (b + 1) * bins / kBands;
      for (int g = 0; g < kSegments; ++g) {
        const Eigen::Index f0 = g * frames / kSegments;
        const Eigen::Index f1 = (g + 1) * frames / kSegments;
        out[c * kBands * kSegments + b * kSegments + g] =
            ch.block(f0, b0, f1 - f0, b1 - b0).mean();
      }
    }
  }
  return out;
}

namespace {

struct PlainEncoderOut {
  Eigen::RowVectorXd p, m, t, mu, ls;
};

PlainEncoderOut encoder_forward(const Eigen::RowVectorXd& features_raw,
                                const EncoderParams& e) {
  const Eigen::RowVectorXd x =
      ((features_raw.array() + kFeatureShift) * kFeatureScale).matrix();
  const Eigen::RowVectorXd h1 =
      ((x * e.w1 + e.b1).array().max(0.0)).matrix();
  const Eigen::RowVectorXd h2 =
      ((h1 * e.w2 + e.b2).array().max(0.0)).matrix();
  PlainEncoderOut out;
  out.p = h2 * e.wp + e.bp;
  out.m = h2 * e.wm + e.bm;
  out.t = h2 * e.wt + e.bt;
  out.mu = h2 * e.wmu + e.bmu;
  out.ls = (h2 * e.wls + e.bls)
               .array()
               .max(-kLogSigmaClamp)
               .min(kLogSigmaClamp)
               .matrix();
  return out;
}

}  // namespace

LatentFactors encode(const signal::LogStft& s, const Checkpoint& ckpt,
                     Rng* rng) {
  const Eigen::VectorXd pooled = pool_features(s);
  if (!pooled.allFinite())
    throw std::runtime_error("encode: non-finite features");
  const PlainEncoderOut fwd =
      encoder_forward(pooled.transpose(), ckpt.encoder);
  LatentFactors lf;
  lf.p_hat = {fwd.p[0], fwd.p[1]};
  lf.m_logits = fwd.m.transpose();
  lf.t_logits = fwd.t.transpose();
  lf.mu = fwd.mu.transpose();
  lf.log_sigma = fwd.ls.transpose();
  if (rng) {
    lf.z.resize(lf.mu.size());
    for (Eigen::Index i = 0; i < lf.z.size(); ++i)
      lf.z[i] = lf.mu[i] + std::exp(lf.log_sigma[i]) * rng->normal();
  } else {
    lf.z = lf.mu;
  }
  return lf;
}

Eigen::VectorXd generate(const Eigen::Vector2d& p, const Eigen::VectorXd& m_vec,
                         const Eigen::VectorXd& t_vec,
                         const Eigen::VectorXd& z, const Checkpoint& ckpt) {
  const ModelConfig& cfg = ckpt.config;
  if (m_vec.size() != cfg.M || t_vec.size() != cfg.T || z.size() != cfg.k)
    throw std::invalid_argument(
        "generate: input dims (" + std::to_string(m_vec.size()) + ", " +
        std::to_string(t_vec.size()) + ", " + std::to_string(z.size()) +
        ") do not match model (M=" + std::to_string(cfg.M) +
        ", T=" + std::to_string(cfg.T) + ", k=" + std::to_string(cfg.k) + ")");
  Eigen::RowVectorXd in(cfg.generator_input());
  in << p.x(), p.y(), m_vec.transpose(), t_vec.transpose(), z.transpose();
  const GeneratorParams& g = ckpt.generator;
  const Eigen::RowVectorXd h1 = ((in * g.w1 + g.b1).array().max(0.0)).matrix();
  const Eigen::RowVectorXd h2 = ((h1 * g.w2 + g.b2).array().max(0.0)).matrix();
  return (h2 * g.w3 + g.b3).transpose();
}

TrainSet build_train_set(const world::Dataset& ds, world::Split split,
                         std::optional<world::SceneClass> scene_class,
                         int workers) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
    const auto& e = ds.episodes[i];
    if (e.split != split) continue;
    if (scene_class && ds.scene_of(e).scene_class != *scene_class) continue;
    rows.push_back(static_cast<int>(i));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  TrainSet ts;
  ts.features.resize(n, 1024);
  ts.psd_log.resize(n, 258);
  ts.positions.resize(n, 2);
  ts.types.resize(n);
  ts.materials.resize(n);

  parallel_for(n, worker_count(workers), [&](long j) {
    const auto& e = ds.episodes[static_cast<size_t>(rows[j])];
    const auto wave = ds.load_waveform(static_cast<size_t>(rows[j]));
    const auto spec = signal::log_magnitude(signal::stft(wave));
    ts.features.row(j) = pool_features(spec).transpose();
    ts.psd_log.row(j) = signal::log_psd(signal::welch_psd(wave)).transpose();
    ts.positions.row(j) = e.relative_position.transpose();
    ts.types[j] = e.event.type_id;
    ts.materials[j] = e.event.material_id;
  });
  return ts;
}

Batch gather_batch(const TrainSet& ts, const ModelConfig& cfg,
                   const std::vector<int>& rows) {
  const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
  Batch out;
  out.features.resize(b, ts.features.cols());
  out.target.resize(b, cfg.output_dim());
  out.positions.resize(b, 2);
  out.types.resize(b);
  out.materials.resize(b);
  const Eigen::MatrixXd& target_src =
      cfg.target == TargetKind::kPsd ? ts.psd_log : ts.features;
  for (Eigen::Index i = 0; i < b; ++i) {
    out.features.row(i) = ts.features.row(rows[static_cast<size_t>(i)]);
    out.target.row(i) = target_src.row(rows[static_cast<size_t>(i)]);
    out.positions.row(i) = ts.positions.row(rows[static_cast<size_t>(i)]);
    out.types[i] = ts.types[rows[static_cast<size_t>(i)]];
    out.materials[i] = ts.materials[rows[static_cast<size_t>(i)]];
  }
  return out;
}

std::vector<ad::Tensor> make_leaves(
    ad::Tape& tape, const std::vector<const Eigen::MatrixXd*>& params,
    bool requires_grad) {
  std::vector<ad::Tensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(tape.leaf(*p, requires_grad));
  return out;
}

TotalLossResult total_loss(ad::Tape& tape, const Batch& batch,
                           const std::vector<ad::Tensor>& enc_leaves,
                           const std::vector<ad::Tensor>& gen_leaves,
                           const ModelConfig& cfg, const Hyperparams& hp,
                           Rng& noise) {
  if (batch.features.rows() == 0)
    throw std::invalid_argument("total_loss: empty batch");
  if (enc_leaves.size() != 14 || gen_leaves.size() != 6)
    throw std::invalid_argument("total_loss: wrong leaf count");
  if (batch.target.cols() != cfg.output_dim())
    throw std::invalid_argument(
        "total_loss: target dim " + std::to_string(batch.target.cols()) +
        " does not match model output " + std::to_string(cfg.output_dim()));
  const double inv_b = 1.0 / static_cast<double>(batch.features.rows());

  using namespace ad;
  const Tensor x = tape.leaf(normalize_features(batch.features));
  // Leaf order matches EncoderParams::params().
  const Tensor h1 = relu(add_bias(matmul(x, enc_leaves[0]), enc_leaves[1]));
  const Tensor h2 = relu(add_bias(matmul(h1, enc_leaves[2]), enc_leaves[3]));
  const Tensor p_hat = add_bias(matmul(h2, enc_leaves[4]), enc_leaves[5]);
  const Tensor m_logits = add_bias(matmul(h2, enc_leaves[6]), enc_leaves[7]);
  const Tensor t_logits = add_bias(matmul(h2, enc_leaves[8]), enc_leaves[9]);
  const Tensor mu = add_bias(matmul(h2, enc_leaves[10]), enc_leaves[11]);
  const Tensor log_sigma = clamp(
      add_bias(matmul(h2, enc_leaves[12]), enc_leaves[13]), -kLogSigmaClamp,
      kLogSigmaClamp);

  // Latent noise is keyed to each example's features rather than its row
  // index, so a batch's loss does not depend on episode order.
  const std::uint64_t noise_base = noise.next_u64();
  Eigen::MatrixXd eps(batch.features.rows(), cfg.k);
  for (Eigen::Index r = 0; r < eps.rows(); ++r) {
    const Eigen::RowVectorXd row = batch.features.row(r);
    Rng row_rng(mix_seed(
        noise_base,
        hash_bytes(row.data(), static_cast<size_t>(row.size()) *
                                   sizeof(double))));
    for (Eigen::Index c = 0; c < cfg.k; ++c) eps(r, c) = row_rng.normal();
  }
  const Tensor z = reparameterize_with(mu, log_sigma, std::move(eps));

  const Tensor m_probs = softmax_rows(m_logits);
  const Tensor t_probs = softmax_rows(t_logits);
  const Tensor gen_in = concat(concat(p_hat, m_probs), concat(t_probs, z));
  const Tensor g1 =
      relu(add_bias(matmul(gen_in, gen_leaves[0]), gen_leaves[1]));
  const Tensor g2 = relu(add_bias(matmul(g1, gen_leaves[2]), gen_leaves[3]));
  const Tensor recon = add_bias(matmul(g2, gen_leaves[4]), gen_leaves[5]);

  const Tensor l_type = softmax_cross_entropy(t_logits, batch.types);
  const Tensor l_material = softmax_cross_entropy(m_logits, batch.materials);
  const Tensor l_position =
      scale(mse(p_hat, tape.leaf(batch.positions), MseReduction::kHalfSum),
            inv_b);
  const Tensor kl = kl_diag_gaussian(mu, log_sigma);
  const Tensor l_psd =
      scale(mse(recon, tape.leaf(batch.target), MseReduction::kMeanOverDim),
            inv_b);

  const Tensor total =
      add(add(scale(l_type, hp.alpha), scale(l_material, hp.beta)),
          add(add(scale(l_position, hp.gamma), scale(kl, hp.delta)),
              scale(l_psd, hp.eta)));

  TotalLossResult result;
  result.total = total;
  result.parts.type_loss = l_type.scalar();
  result.parts.material_loss = l_material.scalar();
  result.parts.position_loss = l_position.scalar();
  result.parts.kl = kl.scalar();
  result.parts.psd_loss = l_psd.scalar();
  result.parts.total = total.scalar();
  return result;
}

LossBreakdown total_loss(const Batch& batch, const EncoderParams& enc,
                         const GeneratorParams& gen, const ModelConfig& cfg,
                         const Hyperparams& hp, std::uint64_t noise_seed) {
  ad::Tape tape;
  Rng noise(noise_seed);
  const auto enc_leaves = make_leaves(tape, enc.params(), false);
  const auto gen_leaves = make_leaves(tape, gen.params(), false);
  return total_loss(tape, batch, enc_leaves, gen_leaves, cfg, hp, noise).parts;
}

TrainResult train(const TrainSet& ts, ModelConfig cfg, const Hyperparams& hp) {
  if (ts.size() < 1)
    throw std::invalid_argument("train: need at least one episode");
  if (hp.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (hp.epochs < 1) throw std::invalid_argument("train: epochs < 1");
  cfg.k = hp.k;

  TrainResult result;
  result.checkpoint.config = cfg;
  result.checkpoint.encoder =
      EncoderParams::init(cfg, sub_seed(hp.seed, "init"));
  result.checkpoint.generator =
      GeneratorParams::init(cfg, sub_seed(hp.seed, "init"));

  auto enc_params = result.checkpoint.encoder.params();
  auto gen_params = result.checkpoint.generator.params();
  std::vector<Eigen::MatrixXd*> all_params = enc_params;
  all_params.insert(all_params.end(), gen_params.begin(), gen_params.end());

  ad::AdamState adam;
  adam.initialize(all_params);

  Rng shuffle_rng(sub_seed(hp.seed, "train/shuffle"));
  Rng noise(sub_seed(hp.seed, "train/noise"));

  const int n = static_cast<int>(ts.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[static_cast<size_t>(shuffle_rng.uniform_int(i + 1))]);

    LossBreakdown acc;
    int batch_index = 0;
    for (int lo = 0; lo < n; lo += hp.batch_size, ++batch_index) {
      const int hi = std::min(n, lo + hp.batch_size);
      const std::vector<int> rows(order.begin() + lo, order.begin() + hi);
      const Batch batch = gather_batch(ts, cfg, rows);

      ad::Tape tape;
      const Checkpoint& snap = result.checkpoint;
      const auto enc_leaves = make_leaves(tape, snap.encoder.params(), true);
      const auto gen_leaves = make_leaves(tape, snap.generator.params(), true);
      const TotalLossResult loss =
          total_loss(tape, batch, enc_leaves, gen_leaves, cfg, hp, noise);
      if (!std::isfinite(loss.parts.total))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_index));
      tape.backward(loss.total);

      std::vector<const Eigen::MatrixXd*> grads;
      grads.reserve(all_params.size());
      for (const auto& leaf : enc_leaves) grads.push_back(&leaf.grad());
      for (const auto& leaf : gen_leaves) grads.push_back(&leaf.grad());
      ad::adam_step(all_params, grads, adam, hp.lr);

      const double w = static_cast<double>(hi - lo) / n;
      acc.type_loss += w * loss.parts.type_loss;
      acc.material_loss += w * loss.parts.material_loss;
      acc.position_loss += w * loss.parts.position_loss;
      acc.kl += w * loss.parts.kl;
      acc.psd_loss += w * loss.parts.psd_loss;
      acc.total += w * loss.parts.total;
    }
    result.trace.push_back({epoch, acc});
  }
  return result;
}

namespace {

std::vector<int> ranked_classes(const Eigen::VectorXd& probs) {
  std::vector<int> order(static_cast<size_t>(probs.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  return order;
}

Eigen::VectorXd softmax_vec(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::ArrayXd e = (logits.array() - m).exp();
  return (e / e.sum()).matrix();
}

}  // namespace

Prediction predict(const signal::LogStft& s, const Checkpoint& ckpt,
                   int top_k) {
  if (top_k < 1) throw std::invalid_argument("predict: top_k must be >= 1");
  const LatentFactors lf = encode(s, ckpt);
  Prediction out;
  out.position = lf.p_hat;
  out.type_probs = softmax_vec(lf.t_logits);
  out.material_probs = softmax_vec(lf.m_logits);
  const auto t_order = ranked_classes(out.type_probs);
  const auto m_order = ranked_classes(out.material_probs);
  const int kt = std::min<int>(top_k, static_cast<int>(t_order.size()));
  const int km = std::min<int>(top_k, static_cast<int>(m_order.size()));
  out.top_types.assign(t_order.begin(), t_order.begin() + kt);
  out.top_materials.assign(m_order.begin(), m_order.begin() + km);
  return out;
}

namespace {

constexpr char kCheckpointMagic[] = "dafckpt-v1\n";

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), 8);
      m(r, c) = v;
    }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  out.write(kCheckpointMagic,
            static_cast<std::streamsize>(std::strlen(kCheckpointMagic)));
  const ModelConfig& cfg = c.config;
  for (std::uint32_t v :
       {static_cast<std::uint32_t>(cfg.target), static_cast<std::uint32_t>(cfg.T),
        static_cast<std::uint32_t>(cfg.M), static_cast<std::uint32_t>(cfg.k),
        static_cast<std::uint32_t>(cfg.feature_dim),
        static_cast<std::uint32_t>(cfg.enc_h1),
        static_cast<std::uint32_t>(cfg.enc_h2),
        static_cast<std::uint32_t>(cfg.gen_h1),
        static_cast<std::uint32_t>(cfg.gen_h2),
        static_cast<std::uint32_t>(cfg.psd_dim)})
    write_u32(out, v);
  for (const auto* m : c.encoder.params()) write_matrix(out, *m);
  for (const auto* m : c.generator.params()) write_matrix(out, *m);
  if (!out)
    throw std::runtime_error("save_checkpoint: write failed for " +
                             path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  std::string magic(std::strlen(kCheckpointMagic), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kCheckpointMagic)
    throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
  Checkpoint c;
  ModelConfig& cfg = c.config;
  cfg.target = static_cast<TargetKind>(read_u32(in));
  cfg.T = static_cast<int>(read_u32(in));
  cfg.M = static_cast<int>(read_u32(in));
  cfg.k = static_cast<int>(read_u32(in));
  cfg.feature_dim = static_cast<int>(read_u32(in));
  cfg.enc_h1 = static_cast<int>(read_u32(in));
  cfg.enc_h2 = static_cast<int>(read_u32(in));
  cfg.gen_h1 = static_cast<int>(read_u32(in));
  cfg.gen_h2 = static_cast<int>(read_u32(in));
  cfg.psd_dim = static_cast<int>(read_u32(in));
  for (auto* m : c.encoder.params()) *m = read_matrix(in);
  for (auto* m : c.generator.params()) *m = read_matrix(in);
  if (!in)
    throw std::runtime_error("load_checkpoint: truncated file " +
                             path.string());
  return c;
}

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<EpochLoss>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_loss_csv: cannot open " + path.string());
  out << "epoch,type,material,position,kl,psd,total\n";
  char line[256];
  for (const auto& e : trace) {
    std::snprintf(line, sizeof(line),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.parts.type_loss, e.parts.material_loss,
                  e.parts.position_loss, e.parts.kl, e.parts.psd_loss,
                  e.parts.total);
    out << line;
  }
}

}  // namespace daf::model
