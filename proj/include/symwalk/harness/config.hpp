#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "symwalk/env/biped_env.hpp"
#include "symwalk/rl/ppo.hpp"

namespace symwalk::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  env::ScenarioConfig scenario;
  env::EnvParams env_params;
  rl::PpoConfig ppo;
  rl::SymLossConfig sym;
  mdp::MirrorTransform mirror = env::canonical_mirror();

  std::vector<int> hidden = {64, 64};
  double init_log_sigma = -0.7;
  double out_scale = 0.3;

  int batch_per_worker = 512;
  int workers = 4;
  long total_steps = 200000;
  std::uint64_t seed = 1;
  int checkpoint_every = 50;  // updates
  std::string out_dir = "runs/default";
  std::string resume;  // checkpoint path, empty = fresh start

  std::vector<std::uint64_t> compare_seeds = {1, 2, 3, 4, 5};
  std::vector<rl::SymLossKind> compare_variants = {
      rl::SymLossKind::None, rl::SymLossKind::Msl, rl::SymLossKind::Psl};
  std::vector<int> compare_batches = {512};

  int eval_episodes = 10;

  void validate() const {
    scenario.validate();
    ppo.validate();
    sym.validate();
    if (batch_per_worker < 2 || workers < 1)
      throw ConfigError("config: batch_per_worker/workers out of range");
    if (total_steps < static_cast<long>(batch_per_worker) * workers)
      throw ConfigError("config: total_steps below one batch");
    if (compare_seeds.empty()) throw ConfigError("config: seed list empty");
    if (hidden.empty()) throw ConfigError("config: hidden layers empty");
  }
};

namespace detail {

inline void check_keys(const YAML::Node& node, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError("config: " + where + " must be a map");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

inline rl::SymLossKind parse_kind(const std::string& s) {
  if (s == "none") return rl::SymLossKind::None;
  if (s == "msl") return rl::SymLossKind::Msl;
  if (s == "psl") return rl::SymLossKind::Psl;
  throw ConfigError("config: unknown sym-loss kind '" + s + "'");
}

inline const char* kind_name(rl::SymLossKind k) {
  switch (k) {
    case rl::SymLossKind::None: return "none";
    case rl::SymLossKind::Msl: return "msl";
    case rl::SymLossKind::Psl: return "psl";
  }
  return "?";
}

inline void parse_scenario(const YAML::Node& node, env::ScenarioConfig& sc) {
  check_keys(node, "scenario",
             {"terrain", "terrain_amplitude", "push", "noise_amplitude",
              "episode_cap", "conquer_radius", "conquer_time",
              "objective_range", "mass"});
  if (node["terrain"]) {
    const auto t = node["terrain"].as<std::string>();
    if (t == "flat")
      sc.terrain = env::Terrain::Flat;
    else if (t == "uneven")
      sc.terrain = env::Terrain::Uneven;
    else
      throw ConfigError("config: unknown terrain '" + t + "'");
  }
  read(node, "terrain_amplitude", sc.terrain_amplitude);
  read(node, "noise_amplitude", sc.noise_amplitude);
  read(node, "episode_cap", sc.episode_cap);
  read(node, "conquer_radius", sc.conquer_radius);
  read(node, "conquer_time", sc.conquer_time);
  read(node, "objective_range", sc.objective_range);
  read(node, "mass", sc.mass);
  if (node["push"]) {
    check_keys(node["push"], "scenario.push",
               {"enabled", "magnitude", "period", "duration"});
    read(node["push"], "enabled", sc.push_enabled);
    read(node["push"], "magnitude", sc.push_magnitude);
    read(node["push"], "period", sc.push_period);
    read(node["push"], "duration", sc.push_duration);
  }
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: cannot parse " + path + ": " + e.what());
  }
  detail::check_keys(root, "top level",
                     {"scenario", "ppo", "sym_loss", "training", "policy",
                      "mirror", "compare", "eval", "out_dir"});
  ExperimentConfig cfg;
  using detail::read;

  if (root["scenario"]) detail::parse_scenario(root["scenario"], cfg.scenario);

  if (root["ppo"]) {
    const auto& n = root["ppo"];
    detail::check_keys(n, "ppo",
                       {"epsilon", "entropy_coef", "gamma", "lambda", "epochs",
                        "minibatch", "lr", "value_lr"});
    read(n, "epsilon", cfg.ppo.epsilon);
    read(n, "entropy_coef", cfg.ppo.entropy_coef);
    read(n, "gamma", cfg.ppo.gamma);
    read(n, "lambda", cfg.ppo.lambda);
    read(n, "epochs", cfg.ppo.epochs);
    read(n, "minibatch", cfg.ppo.minibatch);
    read(n, "lr", cfg.ppo.lr);
    read(n, "value_lr", cfg.ppo.value_lr);
  }

  if (root["sym_loss"]) {
    const auto& n = root["sym_loss"];
    detail::check_keys(n, "sym_loss", {"kind", "weight"});
    if (n["kind"]) cfg.sym.kind = detail::parse_kind(n["kind"].as<std::string>());
    read(n, "weight", cfg.sym.w);
  }
  cfg.sym.epsilon = cfg.ppo.epsilon;  // single source of truth for the clip

  if (root["training"]) {
    const auto& n = root["training"];
    detail::check_keys(n, "training",
                       {"batch_per_worker", "workers", "total_steps", "seed",
                        "checkpoint_every"});
    read(n, "batch_per_worker", cfg.batch_per_worker);
    read(n, "workers", cfg.workers);
    read(n, "total_steps", cfg.total_steps);
    read(n, "seed", cfg.seed);
    read(n, "checkpoint_every", cfg.checkpoint_every);
  }

  if (root["policy"]) {
    const auto& n = root["policy"];
    detail::check_keys(n, "policy", {"hidden", "init_log_sigma", "out_scale"});
    if (n["hidden"]) {
      cfg.hidden.clear();
      for (const auto& v : n["hidden"]) cfg.hidden.push_back(v.as<int>());
    }
    read(n, "init_log_sigma", cfg.init_log_sigma);
    read(n, "out_scale", cfg.out_scale);
  }

  if (root["mirror"]) {
    detail::check_keys(root["mirror"], "mirror", {"state", "action"});
    cfg.mirror = mdp::mirror_from_yaml(root["mirror"]);
    if (cfg.mirror.state.size() != env::kObsDim ||
        cfg.mirror.action.size() != env::kActDim)
      throw ConfigError("config: mirror tables do not match the env layout");
  }

  if (root["compare"]) {
    const auto& n = root["compare"];
    detail::check_keys(n, "compare", {"seeds", "variants", "batch_sizes"});
    if (n["seeds"]) {
      cfg.compare_seeds.clear();
      for (const auto& v : n["seeds"])
        cfg.compare_seeds.push_back(v.as<std::uint64_t>());
    }
    if (n["variants"]) {
      cfg.compare_variants.clear();
      for (const auto& v : n["variants"])
        cfg.compare_variants.push_back(detail::parse_kind(v.as<std::string>()));
    }
    if (n["batch_sizes"]) {
      cfg.compare_batches.clear();
      for (const auto& v : n["batch_sizes"])
        cfg.compare_batches.push_back(v.as<int>());
    }
  }

  if (root["eval"]) {
    detail::check_keys(root["eval"], "eval", {"episodes"});
    read(root["eval"], "episodes", cfg.eval_episodes);
  }

  read(root, "out_dir", cfg.out_dir);
  cfg.validate();
  return cfg;
}

// Emits a complete config. The mirror tables are always written so that
// tests and training share one definition on disk.
inline std::string dump_config(const ExperimentConfig& cfg) {
  YAML::Node root;
  auto& sc = cfg.scenario;
  root["scenario"]["terrain"] =
      sc.terrain == env::Terrain::Flat ? "flat" : "uneven";
  root["scenario"]["terrain_amplitude"] = sc.terrain_amplitude;
  root["scenario"]["push"]["enabled"] = sc.push_enabled;
  root["scenario"]["push"]["magnitude"] = sc.push_magnitude;
  root["scenario"]["push"]["period"] = sc.push_period;
  root["scenario"]["push"]["duration"] = sc.push_duration;
  root["scenario"]["noise_amplitude"] = sc.noise_amplitude;
  root["scenario"]["episode_cap"] = sc.episode_cap;
  root["scenario"]["conquer_radius"] = sc.conquer_radius;
  root["scenario"]["conquer_time"] = sc.conquer_time;
  root["scenario"]["objective_range"] = sc.objective_range;
  root["scenario"]["mass"] = sc.mass;

  root["ppo"]["epsilon"] = cfg.ppo.epsilon;
  root["ppo"]["entropy_coef"] = cfg.ppo.entropy_coef;
  root["ppo"]["gamma"] = cfg.ppo.gamma;
  root["ppo"]["lambda"] = cfg.ppo.lambda;
  root["ppo"]["epochs"] = cfg.ppo.epochs;
  root["ppo"]["minibatch"] = cfg.ppo.minibatch;
  root["ppo"]["lr"] = cfg.ppo.lr;
  root["ppo"]["value_lr"] = cfg.ppo.value_lr;

  root["sym_loss"]["kind"] = detail::kind_name(cfg.sym.kind);
  root["sym_loss"]["weight"] = cfg.sym.w;

  root["training"]["batch_per_worker"] = cfg.batch_per_worker;
  root["training"]["workers"] = cfg.workers;
  root["training"]["total_steps"] = static_cast<long long>(cfg.total_steps);
  root["training"]["seed"] = cfg.seed;
  root["training"]["checkpoint_every"] = cfg.checkpoint_every;

  for (int h : cfg.hidden) root["policy"]["hidden"].push_back(h);
  root["policy"]["hidden"].SetStyle(YAML::EmitterStyle::Flow);
  root["policy"]["init_log_sigma"] = cfg.init_log_sigma;
  root["policy"]["out_scale"] = cfg.out_scale;

  root["mirror"] = mdp::mirror_to_yaml(cfg.mirror);

  for (auto s : cfg.compare_seeds)
    root["compare"]["seeds"].push_back(static_cast<unsigned long long>(s));
  root["compare"]["seeds"].SetStyle(YAML::EmitterStyle::Flow);
  for (auto v : cfg.compare_variants)
    root["compare"]["variants"].push_back(detail::kind_name(v));
  root["compare"]["variants"].SetStyle(YAML::EmitterStyle::Flow);
  for (int b : cfg.compare_batches) root["compare"]["batch_sizes"].push_back(b);
  root["compare"]["batch_sizes"].SetStyle(YAML::EmitterStyle::Flow);

  root["eval"]["episodes"] = cfg.eval_episodes;
  root["out_dir"] = cfg.out_dir;

  YAML::Emitter em;
  em << root;
  return std::string(em.c_str()) + "\n";
}

}  // namespace symwalk::harness
