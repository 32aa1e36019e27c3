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

#ifndef KINRES_TOOLS_COMMANDS_H_
#define KINRES_TOOLS_COMMANDS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.h"

namespace kinres::cli {

// Where a reference track comes from: the pendulum toy or one dataset clip.
struct TrackOptions {
  bool toy = false;
  std::filesystem::path manifest;
  std::string clip_id;
  // Test-time kinematic reference from a trained regressor.
  std::filesystem::path regressor;
};

struct TrainPolicyOptions {
  bool toy = false;
  std::filesystem::path manifest;
  std::vector<std::string> actions;  // empty: every action in the train split
  std::filesystem::path resume;
};

struct FinetuneOptions {
  std::filesystem::path policy;
  std::filesystem::path heads;
  TrackOptions track;
};

struct RolloutOptions {
  std::filesystem::path policy;
  TrackOptions track;
  bool stochastic = false;
  int start = 0;
};

struct EvalOptionsCli {
  std::vector<std::filesystem::path> gen;
  std::vector<std::filesystem::path> ref;
  bool linear = false;
  bool per_joint_mpjpe = false;
};

void RunGenData(const GlobalConfig& config);
void RunTrainRegressor(const GlobalConfig& config,
                       const std::filesystem::path& manifest);
void RunTrainPolicy(const GlobalConfig& config, const TrainPolicyOptions& options);
void RunFinetune(const GlobalConfig& config, const FinetuneOptions& options);
void RunRollout(const GlobalConfig& config, const RolloutOptions& options);
void RunEval(const GlobalConfig& config, const EvalOptionsCli& options);

}  // namespace kinres::cli

#endif  // KINRES_TOOLS_COMMANDS_H_
