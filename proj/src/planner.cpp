#include "daf/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numbers>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "daf/rng.hpp"

namespace daf::plan {

namespace {
constexpr double kSector = std::numbers::pi / 6.0;  // 30 degrees
constexpr double kFovHalf = std::numbers::pi / 4.0;
constexpr double kVisionRange = 8.0;
constexpr double kRayStep = 0.05;
constexpr double kWaypointRadius = 0.26;
}  // namespace

double AgentState::heading() const {
  return infer::normalize_angle(heading_index * kSector);
}

int AgentState::heading_index_of(double theta) {
  const int idx =
      static_cast<int>(std::llround(infer::normalize_angle(theta) / kSector));
  return ((idx % 12) + 12) % 12;
}

StepOutcome step(const World& w, const AgentState& s, Action a) {
  StepOutcome out;
  out.state = s;
  out.state.steps_taken += 1;
  switch (a) {
    case Action::kForward: {
      const double h = s.heading();
      const Eigen::Vector2d dest =
          s.position + kStepLength * Eigen::Vector2d{std::cos(h), std::sin(h)};
      if (w.scene->blocked_at(dest)) {
        out.state.collisions += 1;
        out.collided = true;
      } else {
        out.state.position = dest;
      }
      break;
    }
    case Action::kRotateLeft:
      out.state.heading_index = (s.heading_index + 1) % 12;
      break;
    case Action::kRotateRight:
      out.state.heading_index = (s.heading_index + 11) % 12;
      break;
    case Action::kFound:
      break;
  }
  return out;
}

namespace {

bool ray_clear(const world::SceneSpec& scene, const Eigen::Vector2d& from,
               const Eigen::Vector2d& to) {
  const Eigen::Vector2d d = to - from;
  const double dist = d.norm();
  if (dist < 1e-12) return true;
  const Eigen::Vector2d dir = d / dist;
  for (double t = kRayStep; t < dist; t += kRayStep)
    if (scene.blocked_at(from + t * dir)) return false;
  return true;
}

}  // namespace

bool visible(const world::SceneSpec& scene, const Eigen::Vector2d& from,
             double heading, const Eigen::Vector2d& point) {
  const Eigen::Vector2d d = point - from;
  const double dist = d.norm();
  if (dist > kVisionRange) return false;
  if (dist < 1e-9) return true;
  const double bearing = std::atan2(d.y(), d.x());
  if (std::abs(infer::normalize_angle(bearing - heading)) > kFovHalf + 1e-12)
    return false;
  return ray_clear(scene, from, point);
}

bool line_of_sight(const world::SceneSpec& scene, const Eigen::Vector2d& from,
                   const Eigen::Vector2d& point) {
  return ray_clear(scene, from, point);
}

bool check_found(const World& w, const AgentState& s) {
  return (s.position - w.object).norm() < kFoundRule &&
         visible(*w.scene, s.position, s.heading(), w.object) &&
         s.steps_taken <= kStepCap;
}

PathResult astar(const OccupancyGrid& blocked, Cell start, Cell goal) {
  const int nr = static_cast<int>(blocked.rows());
  const int nc = static_cast<int>(blocked.cols());
  PathResult out;
  const auto in = [&](const Cell& c) {
    return c.row >= 0 && c.row < nr && c.col >= 0 && c.col < nc;
  };
  const auto is_free = [&](int r, int c) {
    return r >= 0 && r < nr && c >= 0 && c < nc && blocked(r, c) == 0;
  };
  if (!in(start) || !in(goal) || blocked(start.row, start.col) ||
      blocked(goal.row, goal.col))
    return out;

  constexpr double kSqrt2 = std::numbers::sqrt2;
  const auto octile = [&](const Cell& c) {
    const double dx = std::abs(c.col - goal.col);
    const double dy = std::abs(c.row - goal.row);
    return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
  };

  const auto idx = [&](const Cell& c) { return c.row * nc + c.col; };
  std::vector<double> g(static_cast<size_t>(nr * nc),
                        std::numeric_limits<double>::infinity());
  std::vector<int> parent(static_cast<size_t>(nr * nc), -1);
  std::vector<char> closed(static_cast<size_t>(nr * nc), 0);

  struct QEntry {
    double f;
    int row, col;
    bool operator>(const QEntry& o) const {
      if (f != o.f) return f > o.f;
      if (row != o.row) return row > o.row;
      return col > o.col;
    }
  };
  std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> open;
  g[static_cast<size_t>(idx(start))] = 0.0;
  open.push({octile(start), start.row, start.col});

  constexpr int dr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  constexpr int dc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

  while (!open.empty()) {
    const QEntry top = open.top();
    open.pop();
    const Cell cur{top.row, top.col};
    const int ci = idx(cur);
    if (closed[static_cast<size_t>(ci)]) continue;
    closed[static_cast<size_t>(ci)] = 1;
    if (cur == goal) break;

    for (int k = 0; k < 8; ++k) {
      const int rr = cur.row + dr[k];
      const int cc = cur.col + dc[k];
      if (!is_free(rr, cc)) continue;
      const bool diagonal = dr[k] != 0 && dc[k] != 0;
      if (diagonal &&
          (!is_free(cur.row + dr[k], cur.col) || !is_free(cur.row, cur.col + dc[k])))
        continue;  // no corner cutting
      const double cost = diagonal ? kSqrt2 : 1.0;
      const int ni = rr * nc + cc;
      const double cand = g[static_cast<size_t>(ci)] + cost;
      if (cand < g[static_cast<size_t>(ni)] - 1e-12) {
        g[static_cast<size_t>(ni)] = cand;
        parent[static_cast<size_t>(ni)] = ci;
        open.push({cand + octile({rr, cc}), rr, cc});
      }
    }
  }

  const int gi = idx(goal);
  if (!std::isfinite(g[static_cast<size_t>(gi)])) return out;
  out.found = true;
  out.cost = g[static_cast<size_t>(gi)];
  for (int i = gi; i != -1; i = parent[static_cast<size_t>(i)])
    out.cells.push_back({i / nc, i % nc});
  std::reverse(out.cells.begin(), out.cells.end());
  return out;
}

OracleBounds oracle_shortest(const World& w, const world::Pose& start) {
  const world::SceneSpec& scene = *w.scene;
  const int nr = scene.rows(), nc = scene.cols();
  OracleBounds out;

  const auto success_cell = [&](int r, int c) {
    const Eigen::Vector2d center = scene.cell_center(r, c);
    return (center - w.object).norm() < kFoundRule &&
           line_of_sight(scene, center, w.object);
  };

  // Shortest collision-free length to any success cell (rotations free).
  const auto [sr0, sc0] = scene.cell_of(start.position);
  {
    constexpr double kSqrt2 = std::numbers::sqrt2;
    std::vector<double> dist(static_cast<size_t>(nr * nc),
                             std::numeric_limits<double>::infinity());
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> open;
    if (!scene.blocked(sr0, sc0)) {
      dist[static_cast<size_t>(sr0 * nc + sc0)] = 0.0;
      open.push({0.0, sr0 * nc + sc0});
    }
    constexpr int dr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    constexpr int dc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    while (!open.empty()) {
      const auto [d, ci] = open.top();
      open.pop();
      if (d > dist[static_cast<size_t>(ci)] + 1e-12) continue;
      const int r = ci / nc, c = ci % nc;
      if (success_cell(r, c)) {
        out.reachable = true;
        out.shortest_length = d * scene.resolution;
        break;
      }
      for (int k = 0; k < 8; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= nr || cc < 0 || cc >= nc || scene.blocked(rr, cc))
          continue;
        const bool diag = dr[k] != 0 && dc[k] != 0;
        if (diag && (scene.blocked(r + dr[k], c) || scene.blocked(r, c + dc[k])))
          continue;
        const double nd = d + (diag ? kSqrt2 : 1.0);
        const int ni = rr * nc + cc;
        if (nd < dist[static_cast<size_t>(ni)] - 1e-12) {
          dist[static_cast<size_t>(ni)] = nd;
          open.push({nd, ni});
        }
      }
    }
  }

  // Minimum actions over (cell, heading) with Forward/Rotate edges plus
  // one Found.
  {
    const int states = nr * nc * 12;
    std::vector<int> dist(static_cast<size_t>(states), -1);
    const auto sid = [&](int r, int c, int h) { return (r * nc + c) * 12 + h; };
    const auto success_state = [&](int r, int c, int h) {
      const Eigen::Vector2d center = scene.cell_center(r, c);
      return (center - w.object).norm() < kFoundRule &&
             visible(scene, center, infer::normalize_angle(h * kSector),
                     w.object);
    };
    const int h0 = AgentState::heading_index_of(start.heading);
    std::deque<int> queue;
    if (!scene.blocked(sr0, sc0)) {
      dist[static_cast<size_t>(sid(sr0, sc0, h0))] = 0;
      queue.push_back(sid(sr0, sc0, h0));
    }
    int best = -1;
    while (!queue.empty()) {
      const int si = queue.front();
      queue.pop_front();
      const int h = si % 12;
      const int cell = si / 12;
      const int r = cell / nc, c = cell % nc;
      if (success_state(r, c, h)) {
        best = dist[static_cast<size_t>(si)];
        break;
      }
      const auto push = [&](int ni) {
        if (dist[static_cast<size_t>(ni)] < 0) {
          dist[static_cast<size_t>(ni)] = dist[static_cast<size_t>(si)] + 1;
          queue.push_back(ni);
        }
      };
      push(sid(r, c, (h + 1) % 12));
      push(sid(r, c, (h + 11) % 12));
      const double theta = infer::normalize_angle(h * kSector);
      const Eigen::Vector2d dest =
          scene.cell_center(r, c) +
          kStepLength * Eigen::Vector2d{std::cos(theta), std::sin(theta)};
      const auto [rr, cc] = scene.cell_of(dest);
      if (!scene.blocked(rr, cc)) push(sid(rr, cc, h));
    }
    out.min_actions = best >= 0 ? best + 1 : 1;
    if (best < 0) out.reachable = false;
  }
  return out;
}

namespace {

/// Nearest free cell center to a point, searched over an expanding square
/// ring up to max_radius meters; returns false if none.
bool snap_to_free(const world::SceneSpec& scene, const Eigen::Vector2d& p,
                  double max_radius, Eigen::Vector2d& snapped) {
  const auto [r0, c0] = scene.cell_of(p);
  const int max_ring =
      static_cast<int>(std::ceil(max_radius / scene.resolution));
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_point = p;
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int dr = -ring; dr <= ring; ++dr)
      for (int dc = -ring; dc <= ring; ++dc) {
        if (std::max(std::abs(dr), std::abs(dc)) != ring) continue;
        const int r = r0 + dr, c = c0 + dc;
        if (scene.blocked(r, c)) continue;
        const Eigen::Vector2d center = scene.cell_center(r, c);
        const double d = (center - p).norm();
        if (d < best && d <= max_radius) {
          best = d;
          best_point = center;
        }
      }
    if (std::isfinite(best)) break;  // nearest ring with a free cell wins
  }
  if (!std::isfinite(best)) return false;
  snapped = best_point;
  return true;
}

enum class PursueOutcome { kFoundIssued, kArrived, kUnreachable, kCapped, kSighted };

struct PursueContext {
  const World* w;
  const PolicyConfig* cfg;
  bool gate = true;
  bool chasing_object = false;
  bool success = false;
  double path_length = 0.0;
  std::vector<TrajPoint>* traj = nullptr;
};

void record(PursueContext& ctx, const AgentState& s, char action) {
  if (ctx.traj)
    ctx.traj->push_back(
        {s.steps_taken, s.position.x(), s.position.y(), s.heading(), action});
}

/// Walks toward `goal` along A* waypoints. May end early on sighting the
/// object (so the caller can retarget) or on issuing Found.
PursueOutcome pursue(PursueContext& ctx, AgentState& st,
                     const Eigen::Vector2d& goal) {
  const world::SceneSpec& scene = *ctx.w->scene;
  const auto try_found = [&]() -> bool {
    if (!ctx.gate) return false;
    if ((st.position - ctx.w->object).norm() >= ctx.cfg->found_distance)
      return false;
    if (!visible(scene, st.position, st.heading(), ctx.w->object))
      return false;
    const StepOutcome o = step(*ctx.w, st, Action::kFound);
    st = o.state;
    record(ctx, st, 'D');
    ctx.success = check_found(*ctx.w, st);
    return true;
  };

  for (int replans = 0; replans < 3; ++replans) {
    const auto [gr, gc] = scene.cell_of(goal);
    const auto [ar, ac] = scene.cell_of(st.position);
    const PathResult path = astar(scene.occupancy, {ar, ac}, {gr, gc});
    if (!path.found) return PursueOutcome::kUnreachable;

    std::size_t widx = 1;  // skip the agent's own cell
    int collisions_here = 0;
    int actions_since_advance = 0;
    while (true) {
      if (st.steps_taken >= ctx.cfg->step_cap) return PursueOutcome::kCapped;
      if (try_found())
        return PursueOutcome::kFoundIssued;
      if (!ctx.chasing_object && ctx.gate &&
          visible(scene, st.position, st.heading(), ctx.w->object))
        return PursueOutcome::kSighted;

      Eigen::Vector2d wp =
          widx < path.cells.size()
              ? scene.cell_center(path.cells[widx].row, path.cells[widx].col)
              : goal;
      if ((st.position - wp).norm() < kWaypointRadius) {
        if (widx < path.cells.size()) {
          ++widx;
          actions_since_advance = 0;
          continue;
        }
        return PursueOutcome::kArrived;
      }

      const Eigen::Vector2d d = wp - st.position;
      const double desired = std::atan2(d.y(), d.x());
      const double diff = infer::normalize_angle(desired - st.heading());
      if (std::abs(diff) > kSector / 2.0 + 1e-9) {
        const StepOutcome o = step(
            *ctx.w, st, diff > 0 ? Action::kRotateLeft : Action::kRotateRight);
        st = o.state;
        record(ctx, st, diff > 0 ? 'L' : 'R');
      } else {
        const StepOutcome o = step(*ctx.w, st, Action::kForward);
        st = o.state;
        record(ctx, st, 'F');
        if (o.collided) {
          if (++collisions_here >= 2) break;  // replan
        } else {
          ctx.path_length += kStepLength;
        }
      }
      if (++actions_since_advance > 40) break;  // stuck; replan
    }
  }
  return PursueOutcome::kUnreachable;
}

}  // namespace

EpisodeResult plan_episode(const World& w, const world::Pose& start,
                           const PlanQuery& query, const LossMapFn& lossmap_fn,
                           const PolicyConfig& cfg) {
  const world::SceneSpec& scene = *w.scene;
  EpisodeResult result;

  const OracleBounds bounds = oracle_shortest(w, start);
  result.shortest_length = bounds.shortest_length;
  result.min_actions = bounds.min_actions;

  AgentState st;
  st.position = start.position;
  st.heading_index = AgentState::heading_index_of(start.heading);

  PursueContext ctx;
  ctx.w = &w;
  ctx.cfg = &cfg;
  ctx.gate = (cfg.kind == PolicyKind::kFull ||
              cfg.kind == PolicyKind::kNoLossMap)
                 ? query.type_match
                 : true;
  if (cfg.record_trajectory) ctx.traj = &result.trajectory;
  record(ctx, st, 'S');

  Rng rng(sub_seed(cfg.seed, "policy"));
  std::vector<Eigen::Vector2d> visited;
  std::deque<Eigen::Vector2d> targets;
  bool fallback_used = cfg.kind == PolicyKind::kRandom ||
                       cfg.kind == PolicyKind::kOracle;

  const auto random_free_point = [&]() {
    for (int tries = 0; tries < 200; ++tries) {
      const int r = rng.uniform_int(scene.rows());
      const int c = rng.uniform_int(scene.cols());
      if (scene.blocked(r, c)) continue;
      const Eigen::Vector2d p = scene.cell_center(r, c);
      bool fresh = true;
      for (const auto& v : visited)
        if ((p - v).norm() < cfg.min_separation) fresh = false;
      if (fresh) return p;
    }
    return scene.cell_center(scene.rows() / 2, scene.cols() / 2);
  };

  switch (cfg.kind) {
    case PolicyKind::kOracle:
      targets.push_back(w.object);
      break;
    case PolicyKind::kRandom:
      targets.push_back(random_free_point());
      break;
    case PolicyKind::kFull:
    case PolicyKind::kNoLossMap:
      if (ctx.gate && visible(scene, st.position, st.heading(), w.object)) {
        targets.push_back(w.object);
        ctx.chasing_object = true;
      } else {
        targets.push_back(query.predicted_global);
      }
      break;
  }

  const auto push_fallback_candidates = [&]() {
    if (fallback_used) return;
    fallback_used = true;
    if (cfg.kind == PolicyKind::kFull && lossmap_fn) {
      const infer::LossMap map = lossmap_fn();
      for (const auto& m :
           local_minima(map, cfg.max_candidates, cfg.min_separation))
        targets.push_back(m.global);
    } else {
      for (int i = 0; i < cfg.max_candidates; ++i)
        targets.push_back(random_free_point());
    }
  };

  bool done = false;
  while (!done && st.steps_taken < cfg.step_cap) {
    if (targets.empty()) {
      if (cfg.kind == PolicyKind::kRandom) {
        targets.push_back(random_free_point());
      } else {
        push_fallback_candidates();
        if (targets.empty()) break;
      }
      continue;
    }
    const Eigen::Vector2d raw_target = targets.front();
    targets.pop_front();

    Eigen::Vector2d goal;
    if (!snap_to_free(scene, raw_target, 0.75, goal)) continue;
    bool already_visited = false;
    for (const auto& v : visited)
      if ((goal - v).norm() < cfg.min_separation) already_visited = true;
    if (already_visited && !ctx.chasing_object) continue;

    switch (pursue(ctx, st, goal)) {
      case PursueOutcome::kFoundIssued:
        done = true;
        break;
      case PursueOutcome::kSighted:
        ctx.chasing_object = true;
        targets.push_front(w.object);
        break;
      case PursueOutcome::kArrived:
      case PursueOutcome::kUnreachable:
        visited.push_back(goal);
        ctx.chasing_object = false;
        if (targets.empty() && cfg.kind != PolicyKind::kRandom)
          push_fallback_candidates();
        break;
      case PursueOutcome::kCapped:
        done = true;
        break;
    }
  }

  result.success = ctx.success;
  result.path_length = ctx.path_length;
  result.action_count = st.steps_taken;
  result.collisions = st.collisions;
  result.steps_capped = st.steps_taken >= cfg.step_cap && !ctx.success;
  return result;
}

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty())
    throw std::invalid_argument("compute_metrics: empty result set");
  Metrics m;
  m.episodes = static_cast<int>(results.size());
  for (const auto& r : results) {
    if (!r.success) continue;
    m.sr += 1.0;
    // A zero-length oracle path means the start already satisfied the
    // rule; full credit in that case.
    m.spl += r.shortest_length > 1e-12
                 ? r.shortest_length /
                       std::max(r.path_length, r.shortest_length)
                 : 1.0;
    const double na = static_cast<double>(std::max(r.action_count, 1));
    m.sna += static_cast<double>(r.min_actions) /
             std::max(na, static_cast<double>(r.min_actions));
  }
  m.sr /= m.episodes;
  m.spl /= m.episodes;
  m.sna /= m.episodes;
  return m;
}

void write_results_json(const std::filesystem::path& path,
                        const std::vector<EpisodeResult>& results,
                        const Metrics& metrics) {
  nlohmann::ordered_json j;
  j["episodes"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    j["episodes"].push_back({{"success", r.success},
                             {"path_length", r.path_length},
                             {"shortest_length", r.shortest_length},
                             {"action_count", r.action_count},
                             {"min_actions", r.min_actions},
                             {"steps_capped", r.steps_capped},
                             {"collisions", r.collisions}});
  }
  j["metrics"] = {{"sr", metrics.sr},
                  {"spl", metrics.spl},
                  {"sna", metrics.sna},
                  {"episodes", metrics.episodes}};
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_results_json: cannot open " +
                             path.string());
  out << j.dump(2) << "\n";
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const EpisodeResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_trajectory_csv: cannot open " +
                             path.string());
  out << "step,x,y,theta,action\n";
  char line[160];
  for (const auto& p : result.trajectory) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%c\n", p.step,
                  p.x, p.y, p.theta, p.action);
    out << line;
  }
}

}  // namespace daf::plan
