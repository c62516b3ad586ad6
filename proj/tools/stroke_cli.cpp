#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stroke/cli.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const std::uint64_t s = std::stoull(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--seeds", "not an unsigned integer: " + item);
    seeds.push_back(s);
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  stroke::tune_allocator();
  using namespace stroke::cli;

  CLI::App app{"Table-tennis stroke learning workbench"};
  app.require_subcommand(1);

  TrainOptions train_opt;
  auto* train = app.add_subcommand("train", "train an agent and write weights, log and metrics");
  train->add_option("--config", train_opt.config, "run configuration (JSON)");
  train->add_option("--seed", train_opt.seed, "training seed");
  train->add_option("--out", train_opt.out, "output directory");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "evaluate saved weights on the evaluation suite");
  eval->add_option("--weights", eval_opt.weights, "weights file")->required();
  eval->add_option("--config", eval_opt.config, "run configuration (JSON)");
  eval->add_option("--episodes", eval_opt.episodes, "number of evaluation episodes")->capture_default_str();
  eval->add_option("--seed", eval_opt.seed, "evaluation suite seed");
  eval->add_option("--out", eval_opt.out, "metrics file (default: next to the weights)");

  RolloutOptions rollout_opt;
  auto* rollout = app.add_subcommand("rollout", "simulate one episode and export its trajectory");
  rollout->add_option("--config", rollout_opt.config, "run configuration (JSON)");
  rollout->add_option("--seed", rollout_opt.seed, "episode seed")->capture_default_str();
  rollout->add_option("--out", rollout_opt.out, "trajectory CSV")->required();
  rollout->add_option("--weights", rollout_opt.weights, "policy weights (default: neutral stroke)");

  CalibrateOptions cal_opt;
  auto* calibrate = app.add_subcommand("calibrate", "estimate restitution and friction from measurements");
  calibrate->add_option("--h1", cal_opt.h1, "drop height, m")->required();
  calibrate->add_option("--h2", cal_opt.h2, "rebound height, m")->required();
  calibrate->add_option("--theta", cal_opt.theta_deg, "tilt angle at which sliding starts, degrees");

  AblateOptions ablate_opt;
  std::string seed_list;
  auto* ablate = app.add_subcommand("ablate", "train and compare the six agent variants");
  ablate->add_option("--config", ablate_opt.config, "run configuration (JSON)");
  ablate->add_option("--seeds", seed_list, "comma-separated seeds")->required();
  ablate->add_option("--out", ablate_opt.out, "output directory");

  try {
    app.parse(argc, argv);
    if (*ablate) ablate_opt.seeds = parse_seed_list(seed_list);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "ablate: " << e.what() << "\n";
    return kFailure;
  }

  if (*train) return cmd_train(train_opt, std::cout, std::cerr);
  if (*eval) return cmd_eval(eval_opt, std::cout, std::cerr);
  if (*rollout) return cmd_rollout(rollout_opt, std::cout, std::cerr);
  if (*calibrate) return cmd_calibrate(cal_opt, std::cout, std::cerr);
  return cmd_ablate(ablate_opt, std::cout, std::cerr);
}
