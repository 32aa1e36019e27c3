// Copyright 2026 The kinres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kinres: data generation, training, fine-tuning, rollout export and
// evaluation. Exit codes: 0 success, 1 usage or configuration error,
// 2 simulation or training divergence.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "commands.h"
#include "config.h"
#include "kinres/core/error.h"

extern char** environ;

namespace {

using kinres::cli::GlobalConfig;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> model;
  std::optional<int> iterations;
  std::optional<std::string> action_mode;
};

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--model", f.model, "humanoid model JSON (default: built-in)");
}

// Flags win over the environment, which wins over the config file.
GlobalConfig Resolve(const CommonFlags& f, const std::string& iterations_key) {
  json j = kinres::cli::LoadConfigJson(f.config, environ);
  json flags = json::object();
  if (f.out) flags["out"] = *f.out;
  if (f.seed) flags["seed"] = *f.seed;
  if (f.workers) flags["workers"] = *f.workers;
  if (f.model) flags["model"] = *f.model;
  if (f.iterations) flags[iterations_key]["iterations"] = *f.iterations;
  if (f.action_mode) flags["env"]["action_mode"] = *f.action_mode;
  kinres::cli::MergeChecked(j, flags, "");
  return kinres::cli::ConfigFromJson(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinres: kinematics-guided residual control for simulated humanoids"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  AddCommon(gen, flags);
  std::vector<std::string> gen_actions;
  std::optional<int> gen_count;
  std::optional<double> gen_duration;
  gen->add_option("--action", gen_actions, "actions to generate (sit, push, avoid, other)");
  gen->add_option("--count", gen_count, "clips per action");
  gen->add_option("--duration", gen_duration, "clip length in seconds");

  auto* treg = app.add_subcommand("train-regressor", "train the kinematic regressor");
  AddCommon(treg, flags);
  std::string reg_manifest;
  std::optional<int> reg_steps;
  treg->add_option("--manifest", reg_manifest, "dataset manifest")->required();
  treg->add_option("--steps", reg_steps, "training steps");

  auto* tpol = app.add_subcommand("train-policy", "train a control policy with PPO");
  AddCommon(tpol, flags);
  kinres::cli::TrainPolicyOptions tp;
  std::string tp_manifest, tp_resume;
  tpol->add_option("--manifest", tp_manifest, "dataset manifest");
  tpol->add_flag("--toy", tp.toy, "train on the pendulum toy task");
  tpol->add_option("--action", tp.actions, "only train on these actions");
  tpol->add_option("--resume", tp_resume, "trainer or policy checkpoint to continue from");
  tpol->add_option("--iterations", flags.iterations, "PPO iterations");
  tpol->add_option("--workers", flags.workers, "rollout worker threads");
  tpol->add_option("--action-mode", flags.action_mode, "residual or direct");

  auto* fine = app.add_subcommand("finetune", "fine-tune a policy on a head trajectory");
  AddCommon(fine, flags);
  kinres::cli::FinetuneOptions fo;
  std::string fo_policy, fo_heads, fo_manifest, fo_regressor;
  fine->add_option("--policy", fo_policy, "policy checkpoint")->required();
  fine->add_option("--heads", fo_heads, "head trajectory CSV")->required();
  fine->add_option("--manifest", fo_manifest, "dataset manifest")->required();
  fine->add_option("--clip", fo.track.clip_id, "clip id in the manifest")->required();
  fine->add_option("--regressor", fo_regressor, "regressor checkpoint for the kinematic reference");
  fine->add_option("--iterations", flags.iterations, "fine-tuning iterations");
  fine->add_option("--workers", flags.workers, "rollout worker threads");

  auto* roll = app.add_subcommand("rollout", "run a policy and export the motion");
  AddCommon(roll, flags);
  kinres::cli::RolloutOptions ro;
  std::string ro_policy, ro_manifest, ro_regressor;
  roll->add_option("--policy", ro_policy, "policy checkpoint")->required();
  roll->add_option("--manifest", ro_manifest, "dataset manifest");
  roll->add_option("--clip", ro.track.clip_id, "clip id in the manifest");
  roll->add_flag("--toy", ro.track.toy, "use the pendulum toy track");
  roll->add_option("--regressor", ro_regressor, "regressor checkpoint for the kinematic reference");
  roll->add_flag("--stochastic", ro.stochastic, "sample actions instead of using the mean");
  roll->add_option("--start", ro.start, "start frame");
  roll->add_option("--action-mode", flags.action_mode, "residual or direct");

  auto* eval = app.add_subcommand("eval", "compare generated clips with references");
  AddCommon(eval, flags);
  kinres::cli::EvalOptionsCli eo;
  std::vector<std::string> eo_gen, eo_ref;
  eval->add_option("--gen", eo_gen, "generated clips")->required();
  eval->add_option("--ref", eo_ref, "reference clips, paired with --gen")->required();
  eval->add_flag("--linear", eo.linear, "velocity metrics on keypoints in mm");
  eval->add_flag("--per-joint-mpjpe", eo.per_joint_mpjpe, "mean per-keypoint distance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      json j = kinres::cli::LoadConfigJson(flags.config, environ);
      json over = json::object();
      if (!gen_actions.empty()) over["data"]["actions"] = gen_actions;
      if (gen_count) over["data"]["count"] = *gen_count;
      if (gen_duration) over["data"]["duration"] = *gen_duration;
      if (flags.out) over["out"] = *flags.out;
      if (flags.seed) over["seed"] = *flags.seed;
      if (flags.model) over["model"] = *flags.model;
      kinres::cli::MergeChecked(j, over, "");
      kinres::cli::RunGenData(kinres::cli::ConfigFromJson(j));
    } else if (treg->parsed()) {
      GlobalConfig c = Resolve(flags, "ppo");
      if (reg_steps) c.regressor_train.steps = *reg_steps;
      kinres::cli::RunTrainRegressor(c, reg_manifest);
    } else if (tpol->parsed()) {
      tp.manifest = tp_manifest;
      tp.resume = tp_resume;
      kinres::cli::RunTrainPolicy(Resolve(flags, "ppo"), tp);
    } else if (fine->parsed()) {
      fo.policy = fo_policy;
      fo.heads = fo_heads;
      fo.track.manifest = fo_manifest;
      fo.track.regressor = fo_regressor;
      kinres::cli::RunFinetune(Resolve(flags, "finetune"), fo);
    } else if (roll->parsed()) {
      ro.policy = ro_policy;
      ro.track.manifest = ro_manifest;
      ro.track.regressor = ro_regressor;
      kinres::cli::RunRollout(Resolve(flags, "ppo"), ro);
    } else if (eval->parsed()) {
      eo.gen.assign(eo_gen.begin(), eo_gen.end());
      eo.ref.assign(eo_ref.begin(), eo_ref.end());
      kinres::cli::RunEval(Resolve(flags, "ppo"), eo);
    }
  } catch (const kinres::DivergenceError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
