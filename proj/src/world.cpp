#include "daf/world.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "daf/parallel.hpp"

namespace daf::world {

using json = nlohmann::ordered_json;

std::string to_string(SceneClass c) {
  return c == SceneClass::Kitchen ? "kitchen" : "study";
}

SceneClass scene_class_from_string(const std::string& s) {
  if (s == "kitchen") return SceneClass::Kitchen;
  if (s == "study") return SceneClass::Study;
  throw std::invalid_argument("unknown scene class: " + s);
}

bool SceneSpec::blocked_at(const Eigen::Vector2d& p) const {
  const auto [r, c] = cell_of(p);
  return blocked(r, c);
}

std::pair<int, int> SceneSpec::cell_of(const Eigen::Vector2d& p) const {
  return {static_cast<int>(std::floor(p.y() / resolution)),
          static_cast<int>(std::floor(p.x() / resolution))};
}

Eigen::Vector2d SceneSpec::cell_center(int r, int c) const {
  return {(c + 0.5) * resolution, (r + 0.5) * resolution};
}

namespace {

int count_reachable_free(const SceneSpec& s) {
  const int nr = s.rows(), nc = s.cols();
  int start_r = -1, start_c = -1, free_count = 0;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c)
      if (!s.blocked(r, c)) {
        ++free_count;
        if (start_r < 0) {
          start_r = r;
          start_c = c;
        }
      }
  if (free_count == 0) return 0;

  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(nr,
                                                                        nc);
  std::vector<std::pair<int, int>> stack{{start_r, start_c}};
  seen(start_r, start_c) = 1;
  int reached = 0;
  while (!stack.empty()) {
    auto [r, c] = stack.back();
    stack.pop_back();
    ++reached;
    constexpr int dr[4] = {1, -1, 0, 0};
    constexpr int dc[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (rr < 0 || rr >= nr || cc < 0 || cc >= nc) continue;
      if (s.blocked(rr, cc) || seen(rr, cc)) continue;
      seen(rr, cc) = 1;
      stack.emplace_back(rr, cc);
    }
  }
  return reached == free_count ? free_count : -1;
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 4.0 - 1e-9 || width > 12.0 + 1e-9 || height < 4.0 - 1e-9 ||
      height > 12.0 + 1e-9)
    throw std::invalid_argument("SceneSpec: size out of [4, 12] m");
  for (int c = 0; c < cols(); ++c)
    if (!blocked(0, c) || !blocked(rows() - 1, c))
      throw std::invalid_argument("SceneSpec: open border row");
  for (int r = 0; r < rows(); ++r)
    if (!blocked(r, 0) || !blocked(r, cols() - 1))
      throw std::invalid_argument("SceneSpec: open border column");
  if (count_reachable_free(*this) <= 0)
    throw std::invalid_argument(
        "SceneSpec: free cells empty or disconnected");
}

namespace {

// ~1.2 kHz one-pole; the rear-shading base.
Eigen::ArrayXd one_pole_lowpass(const Eigen::ArrayXd& x, double sample_rate) {
  const double alpha =
      std::exp(-2.0 * std::numbers::pi * 1200.0 / sample_rate);
  Eigen::ArrayXd y(x.size());
  double state = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    state = alpha * state + (1.0 - alpha) * x[i];
    y[i] = state;
  }
  return y;
}

}  // namespace

signal::Waveform spatialize_source(const ImpactSource& src, double azimuth,
                                   double distance, Eigen::Index out_samples,
                                   double sample_rate) {
  if (distance <= 0.0)
    throw std::invalid_argument("spatialize: distance must be > 0");

  const double sin_az = std::sin(azimuth);
  const double cos_az = std::cos(azimuth);

  // Interaural time difference from the extra path to each ear.
  const auto delay_samples = [&](double sign) {
    const double path = std::max(0.0, distance + sign * kHeadRadius * sin_az);
    return static_cast<Eigen::Index>(
        std::llround(path / kSpeedOfSound * sample_rate));
  };
  const Eigen::Index delay_left = delay_samples(-1.0);
  const Eigen::Index delay_right = delay_samples(+1.0);

  const double base_gain = 1.0 / std::max(distance, kGainDistanceFloor);
  const double gain_left =
      base_gain * (1.0 - kHeadShadow * std::max(0.0, -sin_az));
  const double gain_right =
      base_gain * (1.0 - kHeadShadow * std::max(0.0, sin_az));

  // Sources behind the head lose high frequencies; this is what makes a
  // rear position sound different from its mirrored front position.
  const double rear = std::max(0.0, -cos_az);
  Eigen::ArrayXd shaped;
  const Eigen::ArrayXd* s = &src.mono;
  if (rear > 0.0) {
    const double w = 0.6 * rear;
    shaped = (1.0 - w) * src.mono + w * src.mono_lp;
    s = &shaped;
  }

  const Eigen::Index n =
      out_samples >= 0
          ? out_samples
          : src.mono.size() + std::max(delay_left, delay_right);
  signal::Waveform out;
  out.sample_rate = sample_rate;
  out.samples[0] = Eigen::ArrayXd::Zero(n);
  out.samples[1] = Eigen::ArrayXd::Zero(n);
  const auto place = [&](int ch, Eigen::Index delay, double gain) {
    const Eigen::Index count = std::min(s->size(), n - delay);
    if (count > 0)
      out.samples[ch].segment(delay, count) = gain * s->head(count);
  };
  place(0, delay_left, gain_left);
  place(1, delay_right, gain_right);
  return out;
}

signal::Waveform spatialize(const Eigen::ArrayXd& mono, double azimuth,
                            double distance, double sample_rate) {
  ImpactSource src;
  src.mono = mono;
  if (std::cos(azimuth) < 0.0) src.mono_lp = one_pole_lowpass(mono, sample_rate);
  return spatialize_source(src, azimuth, distance, -1, sample_rate);
}

Eigen::ArrayXd make_reverb_tail(const SceneSpec& scene, std::uint64_t seed,
                                Eigen::Index samples, double sample_rate) {
  Rng rng(sub_seed(seed, "tail"));
  Eigen::ArrayXd noise(samples);
  for (Eigen::Index i = 0; i < samples; ++i) noise[i] = rng.normal();

  // Scene color: one-pole low-pass for negative tilt, first difference
  // pre-emphasis for positive tilt.
  const double tilt = scene.spectral_tilt;
  Eigen::ArrayXd colored(samples);
  if (tilt < 0.0) {
    const double alpha = std::min(0.95, -tilt / 10.0);
    double y = 0.0;
    for (Eigen::Index i = 0; i < samples; ++i) {
      y = alpha * y + (1.0 - alpha) * noise[i];
      colored[i] = y;
    }
  } else if (tilt > 0.0) {
    const double beta = std::min(0.9, tilt / 10.0);
    const double norm = 1.0 / std::sqrt(1.0 + beta * beta);
    double prev = 0.0;
    for (Eigen::Index i = 0; i < samples; ++i) {
      colored[i] = norm * (noise[i] - beta * prev);
      prev = noise[i];
    }
  } else {
    colored = noise;
  }

  // -60 dB at t60.
  const double decay = 6.91 / std::max(scene.reverb_t60, 1e-3);
  const double per_sample = std::exp(-decay / sample_rate);
  double env = 1.0;
  for (Eigen::Index i = 0; i < samples; ++i) {
    colored[i] *= 0.12 * env;
    env *= per_sample;
  }
  return colored;
}

ImpactSource make_impact_source(const FallEvent& event,
                                const MaterialClass& material,
                                const ObjectClass& object,
                                const Eigen::ArrayXd& reverb_tail) {
  if (object.base_modes.empty())
    throw std::invalid_argument("render_impact: object has no modes");
  for (const Mode& m : object.base_modes)
    if (m.freq_hz * material.freq_multiplier >= kNyquist)
      throw std::invalid_argument(
          "render_impact: mode at " + std::to_string(m.freq_hz) +
          " Hz exceeds Nyquist after material multiplier");

  const double fs = signal::kSampleRate;
  const Eigen::Index n = reverb_tail.size();

  // Sum of decaying modes. Each mode advances by a complex rotation per
  // sample; four interleaved recurrence chains keep the loop off the
  // multiply latency path.
  Eigen::ArrayXd mono = Eigen::ArrayXd::Zero(n);
  const double f0 = object.base_modes.front().freq_hz;
  const double rho = std::exp(-material.damping / fs);
  for (const Mode& m : object.base_modes) {
    const double omega =
        2.0 * std::numbers::pi * m.freq_hz * material.freq_multiplier / fs;
    const double octave = std::log2(m.freq_hz / f0);
    const double amp = m.amplitude * std::pow(material.brightness, octave) *
                       event.impact_energy;
    const std::complex<double> step{rho * std::cos(omega),
                                    rho * std::sin(omega)};
    const std::complex<double> step4 = (step * step) * (step * step);
    std::complex<double> z0{amp, 0.0};
    std::complex<double> z1 = z0 * step;
    std::complex<double> z2 = z1 * step;
    std::complex<double> z3 = z2 * step;
    double* out = mono.data();
    Eigen::Index i = 0;
    for (; i + 4 <= n; i += 4) {
      out[i] += z0.imag();
      out[i + 1] += z1.imag();
      out[i + 2] += z2.imag();
      out[i + 3] += z3.imag();
      z0 *= step4;
      z1 *= step4;
      z2 *= step4;
      z3 *= step4;
    }
    for (; i < n; ++i) {
      out[i] += z0.imag();
      z0 *= step;
    }
  }

  mono += reverb_tail;

  // Fixed pre-spatialization peak: loudness then encodes distance only.
  const double peak = mono.abs().maxCoeff();
  if (peak > 0.0) mono *= 0.5 / peak;

  ImpactSource src;
  src.mono_lp = one_pole_lowpass(mono, fs);
  src.mono = std::move(mono);
  return src;
}

ImpactSource make_impact_source(const FallEvent& event,
                                const MaterialClass& material,
                                const ObjectClass& object,
                                const SceneSpec& scene, std::uint64_t seed) {
  const Eigen::Index n = static_cast<Eigen::Index>(
      std::llround(kRenderSeconds * signal::kSampleRate));
  return make_impact_source(event, material, object,
                            make_reverb_tail(scene, seed, n));
}

signal::Waveform render_impact(const FallEvent& event,
                               const MaterialClass& material,
                               const ObjectClass& object,
                               const SceneSpec& /*scene*/, const Pose& agent,
                               std::uint64_t /*seed*/,
                               const Eigen::ArrayXd& reverb_tail) {
  const ImpactSource src =
      make_impact_source(event, material, object, reverb_tail);
  const Eigen::Vector2d ego = infer::g2r(event.position, agent.frame());
  const double distance = std::max(ego.norm(), 1e-6);
  const double azimuth =
      ego.norm() > 1e-9 ? std::atan2(ego.y(), ego.x()) : 0.0;
  return spatialize_source(src, azimuth, distance, reverb_tail.size());
}

signal::Waveform render_impact(const FallEvent& event,
                               const MaterialClass& material,
                               const ObjectClass& object,
                               const SceneSpec& scene, const Pose& agent,
                               std::uint64_t seed) {
  const Eigen::Index n = static_cast<Eigen::Index>(
      std::llround(kRenderSeconds * signal::kSampleRate));
  return render_impact(event, material, object, scene, agent, seed,
                       make_reverb_tail(scene, seed, n));
}

std::vector<ObjectClass> make_object_classes(int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_object_classes: count < 1");
  std::vector<ObjectClass> out;
  out.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) {
    Rng rng(sub_seed(seed, "object/" + std::to_string(t)));
    ObjectClass obj;
    obj.type_id = t;
    // Fundamentals log-spaced across types so classes occupy distinct bands.
    const double frac = count > 1 ? static_cast<double>(t) / (count - 1) : 0.0;
    const double f0 =
        200.0 * std::pow(2800.0 / 200.0, frac) * rng.uniform(0.97, 1.03);
    const int want = 4 + rng.uniform_int(5);  // 4..8
    double f = f0;
    double amp = 1.0;
    for (int j = 0; j < want && f * 1.3 < kNyquist * 0.95; ++j) {
      obj.base_modes.push_back({f, amp});
      f *= rng.uniform(1.25, 1.6);
      amp = rng.uniform(0.3, 1.0);
    }
    out.push_back(std::move(obj));
  }
  return out;
}

std::vector<MaterialClass> make_material_classes(int count,
                                                 std::uint64_t seed) {
  if (count < 1)
    throw std::invalid_argument("make_material_classes: count < 1");
  std::vector<MaterialClass> out;
  out.reserve(static_cast<size_t>(count));
  for (int m = 0; m < count; ++m) {
    Rng rng(sub_seed(seed, "material/" + std::to_string(m)));
    const double frac = count > 1 ? static_cast<double>(m) / (count - 1) : 0.0;
    MaterialClass mat;
    mat.material_id = m;
    mat.damping = 3.0 * std::pow(40.0 / 3.0, frac) * rng.uniform(0.9, 1.1);
    mat.freq_multiplier =
        std::clamp(0.8 + 0.5 * frac + rng.uniform(-0.03, 0.03), 0.8, 1.3);
    mat.brightness = rng.uniform(0.55, 1.1);
    out.push_back(mat);
  }
  return out;
}

SceneSpec make_scene(int scene_id, SceneClass scene_class,
                     std::uint64_t seed) {
  Rng rng(sub_seed(seed, "scene"));
  SceneSpec s;
  s.scene_id = scene_id;
  s.scene_class = scene_class;
  s.resolution = 0.25;

  const int nx = 16 + rng.uniform_int(33);  // 4..12 m
  const int ny = 16 + rng.uniform_int(33);
  s.width = nx * s.resolution;
  s.height = ny * s.resolution;

  if (scene_class == SceneClass::Kitchen) {
    s.reverb_t60 = rng.uniform(0.5, 0.9);
    s.spectral_tilt = rng.uniform(0.0, 3.0);
  } else {
    s.reverb_t60 = rng.uniform(0.08, 0.25);
    s.spectral_tilt = rng.uniform(-7.0, -3.0);
  }

  const int obstacle_count = scene_class == SceneClass::Kitchen
                                 ? 3 + rng.uniform_int(4)
                                 : 1 + rng.uniform_int(3);

  for (int attempt = 0; attempt < 50; ++attempt) {
    s.occupancy.setZero(ny, nx);
    s.occupancy.row(0).setOnes();
    s.occupancy.row(ny - 1).setOnes();
    s.occupancy.col(0).setOnes();
    s.occupancy.col(nx - 1).setOnes();
    for (int k = 0; k < obstacle_count; ++k) {
      const int w = 1 + rng.uniform_int(std::max(1, nx / 5));
      const int h = 1 + rng.uniform_int(std::max(1, ny / 5));
      const int c0 = 2 + rng.uniform_int(std::max(1, nx - w - 4));
      const int r0 = 2 + rng.uniform_int(std::max(1, ny - h - 4));
      s.occupancy.block(r0, c0, h, w).setOnes();
    }
    const int free_cells = count_reachable_free(s);
    if (free_cells > 0 &&
        free_cells >= static_cast<int>(0.5 * (nx - 2) * (ny - 2)))
      return s;
  }

  // Obstacle layout kept failing; an empty room is always valid.
  s.occupancy.setZero(ny, nx);
  s.occupancy.row(0).setOnes();
  s.occupancy.row(ny - 1).setOnes();
  s.occupancy.col(0).setOnes();
  s.occupancy.col(nx - 1).setOnes();
  return s;
}

namespace {

std::vector<std::pair<int, int>> free_cells(const SceneSpec& s) {
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c)
      if (!s.blocked(r, c)) cells.emplace_back(r, c);
  return cells;
}

json scene_to_json(const SceneSpec& s) {
  json j;
  j["id"] = s.scene_id;
  j["class"] = to_string(s.scene_class);
  j["width"] = s.width;
  j["height"] = s.height;
  j["resolution"] = s.resolution;
  j["t60"] = s.reverb_t60;
  j["tilt"] = s.spectral_tilt;
  std::vector<std::string> rows;
  rows.reserve(static_cast<size_t>(s.rows()));
  for (int r = 0; r < s.rows(); ++r) {
    std::string row(static_cast<size_t>(s.cols()), '.');
    for (int c = 0; c < s.cols(); ++c)
      if (s.occupancy(r, c)) row[static_cast<size_t>(c)] = '#';
    rows.push_back(std::move(row));
  }
  j["occupancy"] = rows;
  return j;
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.scene_id = j.at("id").get<int>();
  s.scene_class = scene_class_from_string(j.at("class").get<std::string>());
  s.width = j.at("width").get<double>();
  s.height = j.at("height").get<double>();
  s.resolution = j.at("resolution").get<double>();
  s.reverb_t60 = j.at("t60").get<double>();
  s.spectral_tilt = j.at("tilt").get<double>();
  const auto rows = j.at("occupancy").get<std::vector<std::string>>();
  const int nr = static_cast<int>(rows.size());
  const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
  s.occupancy.setZero(nr, nc);
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c)
      if (rows[static_cast<size_t>(r)][static_cast<size_t>(c)] == '#')
        s.occupancy(r, c) = 1;
  return s;
}

}  // namespace

const SceneSpec& Dataset::scene_of(const Episode& e) const {
  return scenes.at(static_cast<size_t>(e.scene_id));
}

std::size_t Dataset::count(Split split) const {
  std::size_t n = 0;
  for (const auto& e : episodes)
    if (e.split == split) ++n;
  return n;
}

signal::Waveform Dataset::load_waveform(std::size_t episode_index) const {
  const Episode& e = episodes.at(episode_index);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("dataset: cannot open " + path.string());
  std::uint32_t index_len = 0;
  in.read(reinterpret_cast<char*>(&index_len), 4);
  in.seekg(4 + static_cast<std::int64_t>(index_len) + e.pcm_offset,
           std::ios::beg);
  std::vector<std::int16_t> raw(static_cast<size_t>(2 * e.pcm_frames));
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * 2));
  if (!in)
    throw std::runtime_error("dataset: truncated PCM blob in " +
                             path.string());
  return signal::dequantize_pcm16(raw);
}

Dataset generate_dataset(const DatasetConfig& config,
                         const std::filesystem::path& path, int workers) {
  if (config.types < 2)
    throw std::invalid_argument("generate_dataset: T must be >= 2");
  if (config.materials < 2)
    throw std::invalid_argument("generate_dataset: M must be >= 2");
  if (config.episodes < 1)
    throw std::invalid_argument("generate_dataset: episodes must be >= 1");
  if (config.scene_count < 2)
    throw std::invalid_argument("generate_dataset: scene_count must be >= 2");

  Dataset ds;
  ds.config = config;
  ds.path = path;
  ds.objects = make_object_classes(config.types,
                                   sub_seed(config.seed, "objects"));
  ds.materials = make_material_classes(config.materials,
                                       sub_seed(config.seed, "materials"));
  ds.scenes.reserve(static_cast<size_t>(config.scene_count));
  for (int i = 0; i < config.scene_count; ++i) {
    ds.scenes.push_back(
        make_scene(i, i % 2 == 0 ? SceneClass::Kitchen : SceneClass::Study,
                   sub_seed(config.seed, "scene/" + std::to_string(i))));
    ds.scenes.back().validate();
  }

  std::vector<std::vector<std::pair<int, int>>> scene_free;
  scene_free.reserve(ds.scenes.size());
  for (const auto& s : ds.scenes) scene_free.push_back(free_cells(s));

  ds.episodes.resize(static_cast<size_t>(config.episodes));

  const auto sample_episode = [&](long i) {
    Rng rng(sub_seed(config.seed, "episode/" + std::to_string(i)));
    Episode ep;
    ep.scene_id = rng.uniform_int(config.scene_count);
    const SceneSpec& scene = ds.scenes[static_cast<size_t>(ep.scene_id)];
    const auto& cells = scene_free[static_cast<size_t>(ep.scene_id)];

    const auto sample_point = [&]() {
      const auto [r, c] = cells[static_cast<size_t>(
          rng.uniform_int(static_cast<int>(cells.size())))];
      return Eigen::Vector2d{(c + rng.uniform()) * scene.resolution,
                             (r + rng.uniform()) * scene.resolution};
    };

    ep.agent_start.position = sample_point();
    ep.agent_start.heading = rng.uniform_int(12) * std::numbers::pi / 6.0;
    const auto tf = ep.agent_start.frame();

    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const Eigen::Vector2d pos = sample_point();
      const Eigen::Vector2d ego = infer::g2r(pos, tf);
      if (std::abs(ego.x()) <= 4.8 && std::abs(ego.y()) <= 4.8 &&
          (pos - ep.agent_start.position).norm() >= 0.25) {
        ep.event.position = pos;
        ep.relative_position = ego;
        placed = true;
      }
    }
    if (!placed)
      throw std::runtime_error(
          "generate_dataset: placement failed in scene " +
          std::to_string(ep.scene_id));

    ep.event.type_id = rng.uniform_int(config.types);
    ep.event.material_id = rng.uniform_int(config.materials);
    ep.event.impact_energy = rng.uniform(0.5, 1.5);
    ep.render_seed = sub_seed(config.seed, "render/" + std::to_string(i));
    ep.split = (i % 10 == 9) ? Split::Test : Split::Train;
    return ep;
  };

  std::ofstream blob_out(path, std::ios::binary | std::ios::trunc);
  if (!blob_out)
    throw std::runtime_error("generate_dataset: cannot open " +
                             path.string());

  // Render in fixed-size batches: parallel synthesis, ordered writes.
  const int nw = worker_count(workers);
  const long total = config.episodes;
  const long batch = 64;
  std::int64_t offset = 0;
  std::vector<std::vector<std::int16_t>> pcm(static_cast<size_t>(batch));

  // The index goes first in the container, so blobs are staged in memory
  // and streamed out after it.
  std::vector<std::vector<std::int16_t>> all_pcm;
  all_pcm.reserve(static_cast<size_t>(total));

  for (long lo = 0; lo < total; lo += batch) {
    const long hi = std::min(total, lo + batch);
    parallel_for(hi - lo, nw, [&](long k) {
      const long i = lo + k;
      Episode ep = sample_episode(i);
      const SceneSpec& scene = ds.scenes[static_cast<size_t>(ep.scene_id)];
      const auto wave = render_impact(
          ep.event, ds.materials[static_cast<size_t>(ep.event.material_id)],
          ds.objects[static_cast<size_t>(ep.event.type_id)], scene,
          ep.agent_start, ep.render_seed);
      pcm[static_cast<size_t>(k)] = signal::quantize_pcm16(wave);
      ds.episodes[static_cast<size_t>(i)] = ep;
    });
    for (long k = 0; k < hi - lo; ++k) {
      auto& e = ds.episodes[static_cast<size_t>(lo + k)];
      e.pcm_offset = offset;
      e.pcm_frames =
          static_cast<std::int64_t>(pcm[static_cast<size_t>(k)].size() / 2);
      offset += static_cast<std::int64_t>(pcm[static_cast<size_t>(k)].size() *
                                          sizeof(std::int16_t));
      all_pcm.push_back(std::move(pcm[static_cast<size_t>(k)]));
    }
  }

  json index;
  index["format"] = "dafset-v1";
  index["config"] = {{"T", config.types},
                     {"M", config.materials},
                     {"scene_count", config.scene_count},
                     {"episodes", config.episodes},
                     {"seed", config.seed}};
  index["scenes"] = json::array();
  for (const auto& s : ds.scenes) index["scenes"].push_back(scene_to_json(s));
  index["objects"] = json::array();
  for (const auto& o : ds.objects) {
    json jo;
    jo["type_id"] = o.type_id;
    jo["modes"] = json::array();
    for (const auto& m : o.base_modes)
      jo["modes"].push_back({m.freq_hz, m.amplitude});
    index["objects"].push_back(jo);
  }
  index["materials"] = json::array();
  for (const auto& m : ds.materials)
    index["materials"].push_back({{"material_id", m.material_id},
                                  {"damping", m.damping},
                                  {"freq_multiplier", m.freq_multiplier},
                                  {"brightness", m.brightness}});
  index["episodes"] = json::array();
  for (const auto& e : ds.episodes) {
    json je;
    je["scene"] = e.scene_id;
    je["agent"] = {e.agent_start.position.x(), e.agent_start.position.y(),
                   e.agent_start.heading};
    je["event"] = {{"type", e.event.type_id},
                   {"material", e.event.material_id},
                   {"position", {e.event.position.x(), e.event.position.y()}},
                   {"energy", e.event.impact_energy}};
    je["relative"] = {e.relative_position.x(), e.relative_position.y()};
    je["split"] = e.split == Split::Test ? "test" : "train";
    je["render_seed"] = e.render_seed;
    je["pcm_offset"] = e.pcm_offset;
    je["pcm_frames"] = e.pcm_frames;
    index["episodes"].push_back(je);
  }

  const std::string index_str = index.dump();
  const std::uint32_t index_len =
      static_cast<std::uint32_t>(index_str.size());
  blob_out.write(reinterpret_cast<const char*>(&index_len), 4);
  blob_out.write(index_str.data(),
                 static_cast<std::streamsize>(index_str.size()));
  for (const auto& p : all_pcm)
    blob_out.write(reinterpret_cast<const char*>(p.data()),
                   static_cast<std::streamsize>(p.size() * 2));
  blob_out.close();
  if (!blob_out)
    throw std::runtime_error("generate_dataset: write failed for " +
                             path.string());
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " +
                                    path.string());
  std::uint32_t index_len = 0;
  in.read(reinterpret_cast<char*>(&index_len), 4);
  std::string index_str(index_len, '\0');
  in.read(index_str.data(), static_cast<std::streamsize>(index_len));
  if (!in)
    throw std::runtime_error("load_dataset: truncated index in " +
                             path.string());
  const json index = json::parse(index_str);
  if (index.at("format").get<std::string>() != "dafset-v1")
    throw std::runtime_error("load_dataset: unsupported format field");

  Dataset ds;
  ds.path = path;
  const auto& jc = index.at("config");
  ds.config.types = jc.at("T").get<int>();
  ds.config.materials = jc.at("M").get<int>();
  ds.config.scene_count = jc.at("scene_count").get<int>();
  ds.config.episodes = jc.at("episodes").get<int>();
  ds.config.seed = jc.at("seed").get<std::uint64_t>();

  for (const auto& js : index.at("scenes"))
    ds.scenes.push_back(scene_from_json(js));
  for (const auto& jo : index.at("objects")) {
    ObjectClass o;
    o.type_id = jo.at("type_id").get<int>();
    for (const auto& jm : jo.at("modes"))
      o.base_modes.push_back(
          {jm.at(0).get<double>(), jm.at(1).get<double>()});
    ds.objects.push_back(std::move(o));
  }
  for (const auto& jm : index.at("materials")) {
    MaterialClass m;
    m.material_id = jm.at("material_id").get<int>();
    m.damping = jm.at("damping").get<double>();
    m.freq_multiplier = jm.at("freq_multiplier").get<double>();
    m.brightness = jm.at("brightness").get<double>();
    ds.materials.push_back(m);
  }
  for (const auto& je : index.at("episodes")) {
    Episode e;
    e.scene_id = je.at("scene").get<int>();
    e.agent_start.position = {je.at("agent").at(0).get<double>(),
                              je.at("agent").at(1).get<double>()};
    e.agent_start.heading = je.at("agent").at(2).get<double>();
    e.event.type_id = je.at("event").at("type").get<int>();
    e.event.material_id = je.at("event").at("material").get<int>();
    e.event.position = {je.at("event").at("position").at(0).get<double>(),
                        je.at("event").at("position").at(1).get<double>()};
    e.event.impact_energy = je.at("event").at("energy").get<double>();
    e.relative_position = {je.at("relative").at(0).get<double>(),
                           je.at("relative").at(1).get<double>()};
    e.split = je.at("split").get<std::string>() == "test" ? Split::Test
                                                          : Split::Train;
    e.render_seed = je.at("render_seed").get<std::uint64_t>();
    e.pcm_offset = je.at("pcm_offset").get<std::int64_t>();
    e.pcm_frames = je.at("pcm_frames").get<std::int64_t>();
    ds.episodes.push_back(e);
  }
  return ds;
}

}  // namespace daf::world
