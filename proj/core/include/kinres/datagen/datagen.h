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

#ifndef KINRES_DATAGEN_DATAGEN_H_
#define KINRES_DATAGEN_DATAGEN_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/regressor/regressor.h"
#include "kinres/sim/model.h"
#include "kinres/sim/scene.h"

namespace kinres {

struct ScenarioSpec {
  ActionLabel action = ActionLabel::kSit;
  double radius = 3.0;     // start distance from the object, m
  double duration = 6.0;   // s
  double frame_rate = 30.0;
  double speed = 1.0;        // walking speed, m/s; <= 0 samples one
  double step_length = 0.0;  // m; <= 0 samples one
  // Sit only: start standing in front of the chair instead of walking in.
  bool walk_in = true;
  uint64_t seed = 0;
};

struct GeneratedClip {
  MotionClip clip;  // with head samples
  sim::Scene scene;
};

// Scripted, keyframed motion for the mini humanoid: turn towards the object,
// walk, then sit / push / walk past. Root height keeps the lowest foot point
// on the floor. Velocities are finite differences of the poses. kOther is
// idle standing with an arm gesture next to a distant obstacle. Throws
// ValidationError when a walk-in start would overlap the object.
GeneratedClip GenerateClip(const sim::HumanoidModel& model,
                           const ScenarioSpec& spec);

// Head samples from the head site: position and link rotation by forward
// kinematics, velocities by forward differences.
std::vector<HeadSample> HeadTrajectory(const sim::HumanoidModel& model,
                                       const MotionClip& clip);

// Perturbation of a head trajectory: constant offset, linear bias drift and
// Ornstein-Uhlenbeck noise in position and yaw.
struct DriftModel {
  Vec3 offset = Vec3::Zero();        // m
  Vec3 bias_rate = Vec3::Zero();     // m/s
  double yaw_bias_rate = 0.0;        // rad/s
  double pos_noise = 0.0;            // OU diffusion, m/sqrt(s)
  double rot_noise = 0.0;            // OU diffusion, rad/sqrt(s)
  double reversion = 1.0;            // OU mean reversion, 1/s
  uint64_t seed = 0;

  bool IsZero() const;
};

// Clip head samples with the drift applied. The perturbation's own rate is
// added to the world velocities. Zero drift returns the samples unchanged.
// Throws ValidationError if any frame lacks a head sample.
std::vector<HeadSample> DeriveHeadTrajectory(const MotionClip& clip,
                                             const DriftModel& drift);

// Context features for every frame plus low-pass filtered Gaussian noise of
// the given standard deviation.
FeatureSequence SynthesizeFeatures(const MotionClip& clip, double noise,
                                   uint64_t seed);

struct ManifestEntry {
  std::string clip_id;
  ScenarioSpec spec;
  std::string split;  // train | test
  std::string clip_path;
  std::string scene_path;
  std::string features_path;
};

struct DatasetManifest {
  uint64_t seed = 0;
  double feature_noise = 0.02;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> Split(const std::string& name) const;
};

struct DatasetOptions {
  std::vector<ActionLabel> actions = {ActionLabel::kSit, ActionLabel::kPush,
                                      ActionLabel::kAvoid};
  int n_per_action = 10;
  double train_fraction = 0.8;
  uint64_t seed = 0;
  double feature_noise = 0.02;
  double duration = 6.0;
};

// Entries with disjoint seeds; the first round(n * fraction) clips of each
// action are train. Needs n >= 2. No files are written.
DatasetManifest PlanDataset(const DatasetOptions& options);

// Plans, generates and writes every clip, scene and feature file under
// `dir` with relative paths in manifest.json.
DatasetManifest GenerateDataset(const sim::HumanoidModel& model,
                                const DatasetOptions& options,
                                const std::filesystem::path& dir);
// Rewrites every file listed in an existing manifest.
void RegenerateDataset(const sim::HumanoidModel& model,
                       const DatasetManifest& manifest,
                       const std::filesystem::path& dir);

void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path);
DatasetManifest LoadManifest(const std::filesystem::path& path);

// Feature files: header line "features <dim> <frames>", then one line per
// frame.
void SaveFeatures(const FeatureSequence& f, const std::filesystem::path& path);
FeatureSequence LoadFeatures(const std::filesystem::path& path);

// Head trajectory files: CSV with header
// frame,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz (world frame). Local velocities
// are recomputed on load.
void SaveHeadTrajectory(const std::vector<HeadSample>& heads,
                        const std::filesystem::path& path);
std::vector<HeadSample> LoadHeadTrajectory(const std::filesystem::path& path);

// Smallest distance between the humanoid's collision geometry and any part
// of `object` over the clip (negative when penetrating).
double MinClearance(const sim::HumanoidModel& model, const MotionClip& clip,
                    const sim::SceneObject& object);

}  // namespace kinres

#endif  // KINRES_DATAGEN_DATAGEN_H_
