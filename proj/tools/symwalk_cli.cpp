#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "symwalk/harness/compare.hpp"
#include "symwalk/harness/config.hpp"
#include "symwalk/harness/trainer.hpp"
#include "symwalk/walk/engine.hpp"

namespace {

using namespace symwalk;

struct CommonFlags {
  std::string config_path;
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string sym_loss;
  double sym_weight = -1.0;
  int batch = 0;
  int workers = 0;
  long steps = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment config file (YAML)");
  cmd->add_option("--scenario", f.scenario,
                  "scenario override: flat|uneven|uneven_push");
  cmd->add_option("--out", f.out, "output directory override");
  cmd->add_option("--seed", f.seed, "training seed override")
      ->each([&](const std::string&) { f.seed_set = true; });
  cmd->add_option("--sym-loss", f.sym_loss, "symmetry loss: none|msl|psl");
  cmd->add_option("--sym-weight", f.sym_weight, "symmetry loss weight");
  cmd->add_option("--batch", f.batch, "batch size per worker override");
  cmd->add_option("--workers", f.workers, "rollout worker count override");
  cmd->add_option("--steps", f.steps, "total environment steps override");
}

harness::ExperimentConfig resolve_config(const CommonFlags& f) {
  harness::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = harness::load_config(f.config_path);
  if (!f.scenario.empty()) {
    if (f.scenario == "flat") {
      cfg.scenario.terrain = env::Terrain::Flat;
      cfg.scenario.push_enabled = false;
    } else if (f.scenario == "uneven") {
      cfg.scenario.terrain = env::Terrain::Uneven;
      cfg.scenario.push_enabled = false;
    } else if (f.scenario == "uneven_push") {
      cfg.scenario.terrain = env::Terrain::Uneven;
      cfg.scenario.push_enabled = true;
    } else {
      throw harness::ConfigError("unknown --scenario '" + f.scenario + "'");
    }
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.sym_loss.empty())
    cfg.sym.kind = harness::detail::parse_kind(f.sym_loss);
  if (f.sym_weight >= 0.0) cfg.sym.w = f.sym_weight;
  if (f.batch > 0) cfg.batch_per_worker = f.batch;
  if (f.workers > 0) cfg.workers = f.workers;
  if (f.steps > 0) cfg.total_steps = f.steps;
  cfg.validate();
  return cfg;
}

int run_train(const CommonFlags& f, const std::string& resume) {
  harness::ExperimentConfig cfg = resolve_config(f);
  cfg.resume = resume;
  // persist the resolved config next to the run for reproducibility
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream(cfg.out_dir + "/config.yaml") << harness::dump_config(cfg);
  const harness::TrainResult res = harness::train(cfg, &std::cout);
  std::cout << "done: " << res.updates << " updates, " << res.total_steps
            << " steps\nmetrics: " << res.metrics_path
            << "\ncheckpoint: " << res.checkpoint_path << "\n";
  return 0;
}

int run_eval(const CommonFlags& f, const std::string& ckpt_path,
             int episodes) {
  harness::ExperimentConfig cfg = resolve_config(f);
  const harness::Checkpoint ck = harness::load_checkpoint(ckpt_path);
  rl::GaussianPolicy policy = harness::policy_from_checkpoint(ck);
  const int n = episodes > 0 ? episodes : cfg.eval_episodes;
  const harness::EvalSummary sum =
      harness::evaluate(policy, cfg.scenario, cfg.env_params, n, cfg.seed);
  std::cout << "episodes: " << sum.episodes << "\n"
            << "avg episode duration t [s]: " << sum.avg_duration << "\n"
            << "avg reward per second r/t:  " << sum.avg_reward_per_sec << "\n"
            << "avg total reward:           " << sum.avg_total_reward << "\n";
  const Mat probes =
      harness::probe_states(cfg.scenario, cfg.env_params, 256, cfg.seed);
  std::cout << "symmetry deficit:           "
            << harness::symmetry_deficit(policy, probes, cfg.mirror) << "\n";
  return 0;
}

int run_compare(const CommonFlags& f) {
  harness::ExperimentConfig cfg = resolve_config(f);
  const harness::CompareResult res = harness::compare(cfg, &std::cout);
  std::cout << "comparison csv: " << res.csv_path
            << "\nplot: " << res.svg_path << "\n";
  for (const auto& [label, mean] : res.means)
    std::cout << label << " final mean reward: " << mean.reward.back() << "\n";
  return 0;
}

int run_traj(const CommonFlags& f, double wx, double wy, double wz,
             double wtheta, double wt, double seconds, double rate,
             const std::string& out_path) {
  harness::ExperimentConfig cfg = resolve_config(f);
  walk::WalkEngine engine(cfg.env_params.engine);
  walk::WalkCommand cmd;
  cmd.w_x = wx;
  cmd.w_y = wy;
  cmd.w_z = wz;
  cmd.w_theta = wtheta;
  cmd.w_t = wt;
  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw std::runtime_error("traj: cannot open " + out_path);
  walk::export_trajectory(engine, cmd, seconds, rate, os);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid CPG-ZMP walking stack with symmetry-aware PPO"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, compare_f, traj_f;
  std::string resume_path, ckpt_path;
  int eval_episodes = 0;
  double wx = 0.1, wy = 0.0, wz = 0.04, wtheta = 0.0, wt = 0.5;
  double traj_seconds = 4.0, traj_rate = 100.0;
  std::string traj_out = "trajectory.csv";

  auto* train_cmd = app.add_subcommand("train", "run the PPO(+S) training loop");
  add_common(train_cmd, train_f);
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint with sigma = 0");
  add_common(eval_cmd, eval_f);
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--episodes", eval_episodes, "episode count");

  auto* compare_cmd = app.add_subcommand(
      "compare", "train {PPO, PPO+MSL, PPO+PSL} across seeds and plot");
  add_common(compare_cmd, compare_f);

  auto* traj_cmd = app.add_subcommand(
      "traj", "export walk-engine reference trajectories to CSV");
  add_common(traj_cmd, traj_f);
  traj_cmd->add_option("--wx", wx, "stride length [m]");
  traj_cmd->add_option("--wy", wy, "stride width [m]");
  traj_cmd->add_option("--wz", wz, "swing apex height [m]");
  traj_cmd->add_option("--wtheta", wtheta, "stride rotation [rad]");
  traj_cmd->add_option("--wt", wt, "stride duration [s]");
  traj_cmd->add_option("--seconds", traj_seconds, "trajectory length [s]");
  traj_cmd->add_option("--rate", traj_rate, "sample rate [Hz]");
  traj_cmd->add_option("--traj-out", traj_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return run_train(train_f, resume_path);
    if (eval_cmd->parsed()) return run_eval(eval_f, ckpt_path, eval_episodes);
    if (compare_cmd->parsed()) return run_compare(compare_f);
    if (traj_cmd->parsed())
      return run_traj(traj_f, wx, wy, wz, wtheta, wt, traj_seconds, traj_rate,
                      traj_out);
  } catch (const symwalk::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
