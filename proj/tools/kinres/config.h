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

#ifndef KINRES_TOOLS_CONFIG_H_
#define KINRES_TOOLS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinres/datagen/datagen.h"
#include "kinres/regressor/regressor.h"
#include "kinres/rewards/rewards.h"
#include "kinres/rl/env.h"
#include "kinres/rl/policy.h"
#include "kinres/rl/ppo.h"
#include "kinres/sim/simulator.h"

namespace kinres::cli {

struct TrainingConfig {
  PpoHyper hyper;
  int iterations = 0;
};

struct GlobalConfig {
  std::string model;  // model JSON; empty selects the built-in mini humanoid
  std::string out = "out";
  uint64_t seed = 0;
  int workers = 1;
  sim::SimConfig sim;
  RewardWeights weights;  // normalized
  PolicyConfig policy;
  TrainingConfig ppo;
  bool random_start = true;
  ActionMode action_mode = ActionMode::kResidual;
  int max_steps = 0;
  TrainingConfig finetune;
  RegressorConfig regressor;
  RegressorHyper regressor_train;
  DatasetOptions data;
  DriftModel head_drift;  // applied to the head trajectories gen-data writes
};

// Every key with its default value. Keys outside this tree are rejected.
nlohmann::json DefaultConfigJson();

// Recursively copies `overlay` into `base`. Throws ValidationError on keys
// that `base` lacks or on values whose type differs from the default's.
// `where` prefixes messages.
void MergeChecked(nlohmann::json& base, const nlohmann::json& overlay,
                  const std::string& where);

// KINRES_PPO__LR=3e-4 sets ppo.lr. Values are parsed as JSON, falling back to
// a plain string.
void ApplyEnvOverrides(nlohmann::json& config, char** envp);

GlobalConfig ConfigFromJson(const nlohmann::json& j);

// Defaults, then the file (if any), then the environment.
nlohmann::json LoadConfigJson(const std::filesystem::path& file, char** envp);

}  // namespace kinres::cli

#endif  // KINRES_TOOLS_CONFIG_H_
