#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "daf/frame.hpp"
#include "daf/rng.hpp"
#include "daf/signal.hpp"

namespace daf::world {

inline constexpr double kSpeedOfSound = 343.0;   // m/s
inline constexpr double kHeadRadius = 0.0875;    // m
inline constexpr double kHeadShadow = 0.3;       // max interaural level drop
inline constexpr double kGainDistanceFloor = 0.5;
inline constexpr double kRenderSeconds = 1.0;
inline constexpr double kNyquist = 22050.0;

enum class SceneClass { Kitchen = 0, Study = 1 };

std::string to_string(SceneClass c);
SceneClass scene_class_from_string(const std::string& s);

/// Rectangular room on a 0.25 m occupancy grid. x runs along columns,
/// y along rows; cell (r, c) covers [c*res, (c+1)*res) x [r*res, (r+1)*res).
struct SceneSpec {
  double width = 0.0;
  double height = 0.0;
  double resolution = 0.25;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> occupancy;
  double reverb_t60 = 0.3;
  double spectral_tilt = 0.0;  // dB per octave
  int scene_id = 0;
  SceneClass scene_class = SceneClass::Kitchen;

  int rows() const { return static_cast<int>(occupancy.rows()); }
  int cols() const { return static_cast<int>(occupancy.cols()); }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < rows() && c >= 0 && c < cols();
  }
  bool blocked(int r, int c) const {
    return !in_bounds(r, c) || occupancy(r, c) != 0;
  }
  /// Blocked test in meters; out-of-room counts as blocked.
  bool blocked_at(const Eigen::Vector2d& p) const;
  std::pair<int, int> cell_of(const Eigen::Vector2d& p) const;
  Eigen::Vector2d cell_center(int r, int c) const;

  /// Border closed, free cells nonempty and one connected region.
  void validate() const;
};

struct Mode {
  double freq_hz;
  double amplitude;  // relative, in (0, 1]
};

struct ObjectClass {
  int type_id = 0;
  std::vector<Mode> base_modes;  // 4..8, strictly increasing frequency
};

struct MaterialClass {
  int material_id = 0;
  double damping = 10.0;        // 1/s
  double freq_multiplier = 1.0; // in [0.8, 1.3]
  double brightness = 1.0;      // gain per octave above the fundamental
};

struct FallEvent {
  int type_id = 0;
  int material_id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // global, meters
  double impact_energy = 1.0;                          // in [0.5, 1.5]
};

struct Pose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0.0;  // radians

  infer::FrameTransform frame() const {
    return infer::FrameTransform::make(position, heading);
  }
};

enum class Split { Train = 0, Test = 1 };

/// One labeled training/evaluation instance. The waveform itself lives in
/// the dataset container and is loaded on demand.
struct Episode {
  int scene_id = 0;
  Pose agent_start;
  FallEvent event;
  Eigen::Vector2d relative_position = Eigen::Vector2d::Zero();  // egocentric
  Split split = Split::Train;
  std::uint64_t render_seed = 0;
  std::int64_t pcm_offset = -1;  // bytes into the blob region
  std::int64_t pcm_frames = 0;   // per-channel sample count
};

/// Delays, attenuates and head-shadows a mono source into two ears.
/// Positive azimuth places the source on the left; rear sources get a mild
/// low-pass so that front/back positions are acoustically distinct.
signal::Waveform spatialize(const Eigen::ArrayXd& mono, double azimuth,
                            double distance,
                            double sample_rate = signal::kSampleRate);

/// Scene- and seed-dependent reverb tail, independent of source position.
Eigen::ArrayXd make_reverb_tail(const SceneSpec& scene, std::uint64_t seed,
                                Eigen::Index samples,
                                double sample_rate = signal::kSampleRate);

/// Everything about one event's sound that does not depend on where it
/// happened: the peak-normalized modal core plus reverb tail, and its
/// low-passed companion for rear shading. Grid searches re-render one
/// event at thousands of candidate positions, so this part is cached.
struct ImpactSource {
  Eigen::ArrayXd mono;
  Eigen::ArrayXd mono_lp;
};

ImpactSource make_impact_source(const FallEvent& event,
                                const MaterialClass& material,
                                const ObjectClass& object,
                                const SceneSpec& scene, std::uint64_t seed);
ImpactSource make_impact_source(const FallEvent& event,
                                const MaterialClass& material,
                                const ObjectClass& object,
                                const Eigen::ArrayXd& reverb_tail);

/// Binaural render of a prepared source at a given egocentric direction
/// and distance, cropped or padded to out_samples (-1 keeps the natural
/// length, source length plus the longest ear delay).
signal::Waveform spatialize_source(const ImpactSource& src, double azimuth,
                                   double distance,
                                   Eigen::Index out_samples = -1,
                                   double sample_rate = signal::kSampleRate);

/// Modal impact synthesis followed by binaural spatialization. Output is
/// exactly 1.0 s at 44.1 kHz with peak |amplitude| <= 1. Deterministic
/// given identical inputs and seed.
signal::Waveform render_impact(const FallEvent& event,
                               const MaterialClass& material,
                               const ObjectClass& object,
                               const SceneSpec& scene, const Pose& agent,
                               std::uint64_t seed);

/// Same with a precomputed make_reverb_tail(scene, seed, n) result;
/// bit-identical to the plain overload.
signal::Waveform render_impact(const FallEvent& event,
                               const MaterialClass& material,
                               const ObjectClass& object,
                               const SceneSpec& scene, const Pose& agent,
                               std::uint64_t seed,
                               const Eigen::ArrayXd& reverb_tail);

std::vector<ObjectClass> make_object_classes(int count, std::uint64_t seed);
std::vector<MaterialClass> make_material_classes(int count,
                                                 std::uint64_t seed);
SceneSpec make_scene(int scene_id, SceneClass scene_class, std::uint64_t seed);

struct DatasetConfig {
  int types = 10;
  int materials = 5;
  int scene_count = 16;
  int episodes = 1000;
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetConfig config;
  std::vector<SceneSpec> scenes;
  std::vector<ObjectClass> objects;
  std::vector<MaterialClass> materials;
  std::vector<Episode> episodes;
  std::filesystem::path path;  // container this dataset was loaded from

  const SceneSpec& scene_of(const Episode& e) const;
  signal::Waveform load_waveform(std::size_t episode_index) const;
  std::size_t count(Split split) const;
};

/// Samples scenes, events and agent poses, renders every episode and writes
/// a "dafset-v1" container: u32 index length, JSON index, then raw 16-bit
/// little-endian PCM blobs. Byte-identical for identical config.
Dataset generate_dataset(const DatasetConfig& config,
                         const std::filesystem::path& path, int workers = 0);

Dataset load_dataset(const std::filesystem::path& path);

}  // namespace daf::world
