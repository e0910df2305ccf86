#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "daf/config.hpp"
#include "daf/infer.hpp"
#include "daf/model.hpp"
#include "daf/parallel.hpp"
#include "daf/planner.hpp"
#include "daf/signal.hpp"
#include "daf/world.hpp"

namespace daf::cli {

namespace {

using json = nlohmann::ordered_json;

std::optional<world::SceneClass> parse_class_filter(const std::string& s,
                                                    const char* key) {
  if (s == "any") return std::nullopt;
  if (s == "kitchen") return world::SceneClass::Kitchen;
  if (s == "study") return world::SceneClass::Study;
  throw UsageError("config: key " + std::string(key) +
                   " must be any|kitchen|study, got " + s);
}

model::Hyperparams hyper_from_config(const RunConfig& c) {
  model::Hyperparams hp;
  hp.alpha = c.get_double("alpha", 1.0);
  hp.beta = c.get_double("beta", 1.0);
  hp.gamma = c.get_double("gamma", 1.0);
  hp.delta = c.get_double("delta", 1e-3);
  hp.eta = c.get_double("eta", 1.0);
  hp.k = static_cast<int>(c.get_int("k", 16));
  hp.lr = c.get_double("lr", 1e-3);
  hp.epochs = static_cast<int>(c.get_int("epochs", 60));
  hp.batch_size = static_cast<int>(c.get_int("batch_size", 64));
  hp.seed = c.get_seed();
  return hp;
}

model::TargetKind target_from_config(const RunConfig& c) {
  const std::string t = c.get_string("target", "psd");
  if (t == "psd") return model::TargetKind::kPsd;
  if (t == "stft") return model::TargetKind::kStft;
  throw UsageError("config: key target must be psd|stft, got " + t);
}

const std::vector<std::string> kTrainKeys = {
    "seed", "out",   "dataset", "target",     "epochs", "batch_size",
    "lr",   "alpha", "beta",    "gamma",      "delta",  "eta",
    "k",    "train_class",      "checkpoint"};

model::TrainResult run_training(const RunConfig& c, const world::Dataset& ds,
                                std::optional<world::SceneClass> train_class) {
  const model::TrainSet ts =
      model::build_train_set(ds, world::Split::Train, train_class);
  if (ts.size() == 0)
    throw std::runtime_error("train: no train episodes after filtering");
  model::ModelConfig cfg;
  cfg.T = ds.config.types;
  cfg.M = ds.config.materials;
  cfg.target = target_from_config(c);
  return model::train(ts, cfg, hyper_from_config(c));
}

struct PropsSummary {
  double position_error_m = 0.0;
  double top1_acc = 0.0;
  double top3_acc = 0.0;
  double material_acc = 0.0;
  double random_cell_error_m = 0.0;
  int episodes = 0;
};

PropsSummary evaluate_props(const world::Dataset& ds,
                            const model::Checkpoint& ckpt, world::Split split,
                            std::optional<world::SceneClass> scene_class,
                            int top_k, std::uint64_t seed) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
    const auto& e = ds.episodes[i];
    if (e.split != split) continue;
    if (scene_class && ds.scene_of(e).scene_class != *scene_class) continue;
    rows.push_back(static_cast<int>(i));
  }
  if (rows.empty())
    throw std::runtime_error("eval: no episodes in the chosen split");

  const long n = static_cast<long>(rows.size());
  std::vector<double> pos_err(static_cast<size_t>(n));
  std::vector<int> top1(static_cast<size_t>(n)), top3(static_cast<size_t>(n)),
      mat1(static_cast<size_t>(n));
  parallel_for(n, worker_count(), [&](long j) {
    const auto& e = ds.episodes[static_cast<size_t>(rows[j])];
    const auto wave = ds.load_waveform(static_cast<size_t>(rows[j]));
    const auto spec = signal::log_magnitude(signal::stft(wave));
    const auto pred = model::predict(spec, ckpt, top_k);
    pos_err[static_cast<size_t>(j)] =
        (pred.position - e.relative_position).norm();
    top1[static_cast<size_t>(j)] =
        !pred.top_types.empty() && pred.top_types[0] == e.event.type_id;
    top3[static_cast<size_t>(j)] =
        std::find(pred.top_types.begin(), pred.top_types.end(),
                  e.event.type_id) != pred.top_types.end();
    mat1[static_cast<size_t>(j)] = !pred.top_materials.empty() &&
                                   pred.top_materials[0] == e.event.material_id;
  });

  PropsSummary s;
  s.episodes = static_cast<int>(n);
  Rng rng(sub_seed(seed, "random-cell-baseline"));
  double base = 0.0;
  for (long j = 0; j < n; ++j) {
    s.position_error_m += pos_err[static_cast<size_t>(j)];
    s.top1_acc += top1[static_cast<size_t>(j)];
    s.top3_acc += top3[static_cast<size_t>(j)];
    s.material_acc += mat1[static_cast<size_t>(j)];
    const Eigen::Vector2d cell{-4.95 + 0.1 * rng.uniform_int(100),
                               -4.95 + 0.1 * rng.uniform_int(100)};
    base += (cell - ds.episodes[static_cast<size_t>(rows[j])]
                        .relative_position)
                .norm();
  }
  s.position_error_m /= n;
  s.top1_acc /= n;
  s.top3_acc /= n;
  s.material_acc /= n;
  s.random_cell_error_m = base / n;
  return s;
}

void write_props_json(const std::filesystem::path& path,
                      const PropsSummary& s) {
  json j;
  j["position_error_m"] = s.position_error_m;
  j["top1_acc"] = s.top1_acc;
  j["top3_acc"] = s.top3_acc;
  j["material_acc"] = s.material_acc;
  j["random_cell_error_m"] = s.random_cell_error_m;
  j["episodes"] = s.episodes;
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

int cmd_synth(const RunConfig& c) {
  c.require_known({"seed", "out", "T", "M", "scene_count", "episodes",
                   "dataset"});
  world::DatasetConfig dc;
  dc.types = static_cast<int>(c.get_int("T", 10));
  dc.materials = static_cast<int>(c.get_int("M", 5));
  dc.scene_count = static_cast<int>(c.get_int("scene_count", 16));
  dc.episodes = static_cast<int>(c.get_int("episodes", 1000));
  dc.seed = c.get_seed();
  if (dc.types < 2) throw UsageError("config: key T must be >= 2");
  if (dc.materials < 2) throw UsageError("config: key M must be >= 2");
  if (dc.episodes < 1) throw UsageError("config: key episodes must be >= 1");
  if (dc.scene_count < 2)
    throw UsageError("config: key scene_count must be >= 2");

  RunDir run(c.get_string("out", "runs/synth"), c);
  run.log("synth start");
  const auto path = run.file(c.get_string("dataset", "dataset.dafset"));
  const world::Dataset ds = world::generate_dataset(dc, path);
  const std::size_t test = ds.count(world::Split::Test);
  std::cout << "dataset: " << path.string() << "\n"
            << "episodes: " << ds.episodes.size() << " (train "
            << ds.episodes.size() - test << ", test " << test << ")\n"
            << "scenes: " << ds.scenes.size() << "\n";
  run.log("synth done");
  return 0;
}

int cmd_train(const RunConfig& c) {
  c.require_known(kTrainKeys);
  const auto train_class =
      parse_class_filter(c.get_string("train_class", "any"), "train_class");
  RunDir run(c.get_string("out", "runs/train"), c);
  run.log("train start");
  const world::Dataset ds = world::load_dataset(c.get_string("dataset"));
  const model::TrainResult result = run_training(c, ds, train_class);
  const auto ckpt_path = run.file(c.get_string("checkpoint", "model.dafckpt"));
  model::save_checkpoint(ckpt_path, result.checkpoint);
  model::write_loss_csv(run.file("loss.csv"), result.trace);
  const auto& last = result.trace.back().parts;
  std::cout << "checkpoint: " << ckpt_path.string() << "\n"
            << "epochs: " << result.trace.size() << "\n"
            << "final total loss: " << last.total << "\n";
  run.log("train done");
  return 0;
}

int cmd_eval_props(const RunConfig& c) {
  auto keys = kTrainKeys;
  for (const char* k : {"split", "top_k", "test_class"}) keys.push_back(k);
  c.require_known(keys);
  const auto train_class =
      parse_class_filter(c.get_string("train_class", "any"), "train_class");
  const auto test_class =
      parse_class_filter(c.get_string("test_class", "any"), "test_class");
  const std::string split_name = c.get_string("split", "test");
  if (split_name != "test" && split_name != "train")
    throw UsageError("config: key split must be test|train");
  const int top_k = static_cast<int>(c.get_int("top_k", 3));

  RunDir run(c.get_string("out", "runs/eval-props"), c);
  run.log("eval-props start");
  const world::Dataset ds = world::load_dataset(c.get_string("dataset"));

  model::Checkpoint ckpt;
  if (train_class) {
    // Cross-scene protocol: train on one class in-process, then evaluate.
    ckpt = run_training(c, ds, train_class).checkpoint;
    model::save_checkpoint(run.file("model.dafckpt"), ckpt);
  } else {
    ckpt = model::load_checkpoint(c.get_string("checkpoint"));
  }

  const PropsSummary s = evaluate_props(
      ds, ckpt, split_name == "test" ? world::Split::Test : world::Split::Train,
      test_class, top_k, c.get_seed());
  write_props_json(run.file("props.json"), s);
  std::cout << "episodes: " << s.episodes << "\n"
            << "position_error_m: " << s.position_error_m << "\n"
            << "top1_acc: " << s.top1_acc << "\n"
            << "top3_acc: " << s.top3_acc << "\n"
            << "material_acc: " << s.material_acc << "\n"
            << "random_cell_error_m: " << s.random_cell_error_m << "\n";
  run.log("eval-props done");
  return 0;
}

int cmd_lossmap(const RunConfig& c) {
  c.require_known({"seed", "out", "dataset", "episode", "mode", "checkpoint",
                   "k"});
  const std::string mode = c.get_string("mode", "oracle");
  if (mode != "oracle" && mode != "learned")
    throw UsageError("config: key mode must be oracle|learned");
  RunDir run(c.get_string("out", "runs/lossmap"), c);
  run.log("lossmap start");
  const world::Dataset ds = world::load_dataset(c.get_string("dataset"));
  const std::size_t index =
      static_cast<std::size_t>(c.get_int("episode", 0));
  if (index >= ds.episodes.size())
    throw std::runtime_error("lossmap: episode index out of range");
  const world::Episode& e = ds.episodes[index];
  const world::SceneSpec& scene = ds.scene_of(e);

  const auto wave = ds.load_waveform(index);
  const auto spec = signal::log_magnitude(signal::stft(wave));
  const Eigen::VectorXd target = signal::log_psd(signal::welch_psd(wave));
  const infer::FrameTransform tf = e.agent_start.frame();

  model::Checkpoint ckpt;
  if (c.has("checkpoint")) {
    ckpt = model::load_checkpoint(c.get_string("checkpoint"));
  } else {
    if (mode == "learned")
      throw UsageError("config: learned mode requires key checkpoint");
    ckpt.config.T = ds.config.types;
    ckpt.config.M = ds.config.materials;
    ckpt.config.k = static_cast<int>(c.get_int("k", 16));
    ckpt.encoder = model::EncoderParams::init(ckpt.config, 0);
    ckpt.generator = model::GeneratorParams::init(ckpt.config, 0);
  }

  infer::LossMap map;
  if (mode == "oracle") {
    const infer::OracleSynthesizer synth(
        scene, ds.objects[static_cast<size_t>(e.event.type_id)],
        ds.materials[static_cast<size_t>(e.event.material_id)],
        e.event.impact_energy, e.agent_start, e.render_seed);
    map = infer::loss_map(spec, target, synth, ckpt, tf);
  } else {
    const infer::GeneratorSynthesizer synth(ckpt);
    map = infer::loss_map(spec, target, synth, ckpt, tf);
  }

  infer::write_loss_map_csv(run.file("lossmap.csv"), map);
  infer::write_loss_map_pgm(run.file("lossmap.pgm"), map);
  const auto [r, col] = map.argmin();
  const Eigen::Vector2d guess = map.cell_center_global(r, col);
  std::cout << "argmin cell: (" << r << ", " << col << ")\n"
            << "argmin global: (" << guess.x() << ", " << guess.y() << ")\n"
            << "true global: (" << e.event.position.x() << ", "
            << e.event.position.y() << ")\n"
            << "argmin error m: " << (guess - e.event.position).norm() << "\n";
  run.log("lossmap done");
  return 0;
}

int cmd_navigate(const RunConfig& c) {
  c.require_known({"seed", "out", "dataset", "checkpoint", "policy",
                   "episodes", "candidates", "trajectories"});
  const std::string policy = c.get_string("policy", "full");
  plan::PolicyKind kind;
  if (policy == "full")
    kind = plan::PolicyKind::kFull;
  else if (policy == "no-lossmap")
    kind = plan::PolicyKind::kNoLossMap;
  else if (policy == "random")
    kind = plan::PolicyKind::kRandom;
  else if (policy == "oracle")
    kind = plan::PolicyKind::kOracle;
  else
    throw UsageError(
        "config: key policy must be full|no-lossmap|random|oracle");

  RunDir run(c.get_string("out", "runs/navigate"), c);
  run.log("navigate start");
  const world::Dataset ds = world::load_dataset(c.get_string("dataset"));

  const bool needs_model =
      kind == plan::PolicyKind::kFull || kind == plan::PolicyKind::kNoLossMap;
  model::Checkpoint ckpt;
  if (needs_model) ckpt = model::load_checkpoint(c.get_string("checkpoint"));

  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.episodes.size(); ++i)
    if (ds.episodes[i].split == world::Split::Test)
      rows.push_back(static_cast<int>(i));
  const long limit = c.get_int("episodes", static_cast<long>(rows.size()));
  if (static_cast<long>(rows.size()) > limit)
    rows.resize(static_cast<size_t>(limit));
  if (rows.empty()) throw std::runtime_error("navigate: no test episodes");

  const int candidates = static_cast<int>(c.get_int("candidates", 3));
  const long trajectories = c.get_int("trajectories", 0);
  const std::uint64_t seed = c.get_seed();

  std::vector<plan::EpisodeResult> results(rows.size());
  parallel_for(static_cast<long>(rows.size()), worker_count(), [&](long j) {
    const auto& e = ds.episodes[static_cast<size_t>(rows[j])];
    const world::SceneSpec& scene = ds.scene_of(e);
    plan::World w{&scene, e.event.position};

    plan::PlanQuery query;
    plan::LossMapFn lossmap_fn;
    if (needs_model) {
      const auto wave = ds.load_waveform(static_cast<size_t>(rows[j]));
      const auto spec = signal::log_magnitude(signal::stft(wave));
      const auto pred = model::predict(spec, ckpt, 3);
      query.predicted_global = r2g(pred.position, e.agent_start.frame());
      query.type_match =
          std::find(pred.top_types.begin(), pred.top_types.end(),
                    e.event.type_id) != pred.top_types.end();
      if (kind == plan::PolicyKind::kFull) {
        const Eigen::VectorXd target =
            signal::log_psd(signal::welch_psd(wave));
        const auto tf = e.agent_start.frame();
        lossmap_fn = [spec, target, &ckpt, tf]() {
          const infer::GeneratorSynthesizer synth(ckpt);
          return infer::loss_map(spec, target, synth, ckpt, tf, 1);
        };
      }
    }

    plan::PolicyConfig pc;
    pc.kind = kind;
    pc.max_candidates = candidates;
    pc.seed = sub_seed(seed, "episode/" + std::to_string(rows[j]));
    pc.record_trajectory = j < trajectories;
    results[static_cast<size_t>(j)] =
        plan::plan_episode(w, e.agent_start, query, lossmap_fn, pc);
  });

  const plan::Metrics metrics = plan::compute_metrics(results);
  plan::write_results_json(run.file("results.json"), results, metrics);
  for (long j = 0; j < trajectories && j < static_cast<long>(results.size());
       ++j)
    plan::write_trajectory_csv(
        run.file("trajectory_" + std::to_string(j) + ".csv"),
        results[static_cast<size_t>(j)]);
  std::cout << "policy: " << policy << "\n"
            << "episodes: " << metrics.episodes << "\n"
            << "sr: " << metrics.sr << "\n"
            << "spl: " << metrics.spl << "\n"
            << "sna: " << metrics.sna << "\n";
  run.log("navigate done");
  return 0;
}

int cmd_report(const RunConfig& c) {
  c.require_known({"seed", "out", "runs"});
  RunDir run(c.get_string("out", "runs/report"), c);
  run.log("report start");
  const std::string runs = c.get_string("runs");
  std::vector<std::string> dirs;
  std::string cur;
  for (const char ch : runs + ",") {
    if (ch == ',') {
      if (!cur.empty()) dirs.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (dirs.empty()) throw UsageError("config: key runs is empty");

  const std::vector<std::string> columns = {
      "sr",       "spl",      "sna",         "position_error_m",
      "top1_acc", "top3_acc", "material_acc"};
  std::string table = "| run |";
  for (const auto& col : columns) table += " " + col + " |";
  table += "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) table += "---|";
  table += "\n";

  for (const auto& dir : dirs) {
    const std::filesystem::path props = std::filesystem::path(dir) /
                                        "props.json";
    const std::filesystem::path res = std::filesystem::path(dir) /
                                      "results.json";
    json merged;
    bool any = false;
    if (std::filesystem::exists(props)) {
      std::ifstream in(props);
      json j = json::parse(in);
      for (auto& [k, v] : j.items()) merged[k] = v;
      any = true;
    }
    if (std::filesystem::exists(res)) {
      std::ifstream in(res);
      json j = json::parse(in);
      for (auto& [k, v] : j.at("metrics").items()) merged[k] = v;
      any = true;
    }
    if (!any)
      throw std::runtime_error("report: no props.json or results.json in " +
                               dir);
    table += "| " + dir + " |";
    for (const auto& col : columns)
      table += " " + (merged.contains(col) ? merged[col].dump() : "-") + " |";
    table += "\n";
  }

  std::ofstream out(run.file("report.md"), std::ios::trunc);
  out << table;
  std::cout << table;
  run.log("report done");
  return 0;
}

}  // namespace daf::cli
