#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <vector>

#include "daf/infer.hpp"
#include "daf/world.hpp"

namespace daf::plan {

/// Navigation world: one scene plus the fallen object's true position.
struct World {
  const world::SceneSpec* scene = nullptr;
  Eigen::Vector2d object = Eigen::Vector2d::Zero();
};

enum class Action { kForward, kRotateLeft, kRotateRight, kFound };

/// Heading is kept as an index into the 12 compass directions (30 deg
/// steps) so that full turns are exact.
struct AgentState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  int heading_index = 0;
  int steps_taken = 0;
  int collisions = 0;

  double heading() const;
  static int heading_index_of(double theta);
};

struct StepOutcome {
  AgentState state;
  bool collided = false;
};

/// Forward moves 0.25 m unless the destination cell is blocked (collision,
/// no motion). Rotations are +-30 deg. Every action counts one step.
StepOutcome step(const World& w, const AgentState& s, Action a);

/// 90 deg field of view, 8 m range, 0.05 m ray march against the grid.
bool visible(const world::SceneSpec& scene, const Eigen::Vector2d& from,
             double heading, const Eigen::Vector2d& point);

/// Line of sight without the field-of-view constraint (rotation is free).
bool line_of_sight(const world::SceneSpec& scene, const Eigen::Vector2d& from,
                   const Eigen::Vector2d& point);

/// Success rule: distance < 2 m, object visible, within the step cap.
bool check_found(const World& w, const AgentState& s);

inline constexpr int kStepCap = 200;
inline constexpr double kFoundRule = 2.0;
inline constexpr double kStepLength = 0.25;

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

using OccupancyGrid =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct PathResult {
  bool found = false;
  std::vector<Cell> cells;
  double cost = 0.0;  // in cell units: 1 per edge, sqrt(2) per diagonal
};

/// Cost-optimal 8-connected path; diagonals only when both orthogonal
/// neighbors are free; octile heuristic; f-score ties broken by smaller
/// (row, col).
PathResult astar(const OccupancyGrid& blocked, Cell start, Cell goal);

enum class PolicyKind { kFull, kNoLossMap, kRandom, kOracle };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kFull;
  int max_candidates = 3;
  double min_separation = 1.0;
  int step_cap = kStepCap;
  /// Found is issued below the 2 m rule by a margin so quantized motion
  /// cannot overshoot past the success boundary.
  double found_distance = 1.9;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
};

struct PlanQuery {
  Eigen::Vector2d predicted_global = Eigen::Vector2d::Zero();
  /// Whether the true object's type is within the predicted top-k
  /// candidates; the detector only recognizes candidate types.
  bool type_match = true;
};

using LossMapFn = std::function<infer::LossMap()>;

struct TrajPoint {
  int step;
  double x, y, theta;
  char action;  // F, L, R, D (found)
};

struct EpisodeResult {
  bool success = false;
  double path_length = 0.0;      // meters actually traveled
  double shortest_length = 0.0;  // oracle shortest, meters
  int action_count = 0;
  int min_actions = 0;  // oracle minimum action count
  bool steps_capped = false;
  int collisions = 0;
  std::vector<TrajPoint> trajectory;
};

struct OracleBounds {
  double shortest_length = 0.0;
  int min_actions = 1;
  bool reachable = false;
};

/// Shortest path length to any cell satisfying the success rule, and the
/// minimum action count over the (cell x 12 headings) graph plus Found.
OracleBounds oracle_shortest(const World& w, const world::Pose& start);

/// Runs one navigation episode under the given policy. Failure modes are
/// recorded in the result, never thrown.
EpisodeResult plan_episode(const World& w, const world::Pose& start,
                           const PlanQuery& query, const LossMapFn& lossmap_fn,
                           const PolicyConfig& cfg);

struct Metrics {
  double sr = 0.0;
  double spl = 0.0;
  double sna = 0.0;
  int episodes = 0;
};

Metrics compute_metrics(const std::vector<EpisodeResult>& results);

void write_results_json(const std::filesystem::path& path,
                        const std::vector<EpisodeResult>& results,
                        const Metrics& metrics);
void write_trajectory_csv(const std::filesystem::path& path,
                          const EpisodeResult& result);

}  // namespace daf::plan
