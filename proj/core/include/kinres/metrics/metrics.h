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

#ifndef KINRES_METRICS_METRICS_H_
#define KINRES_METRICS_METRICS_H_

#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/sim/model.h"

namespace kinres {

// Angular: joint-angle rates in rad/s and rad/s^2. Linear: keypoint position
// rates in mm/s and mm/s^2.
enum class UnitMode { kAngular, kLinear };
std::string_view UnitModeName(UnitMode m);

// Stacked: Frobenius norm of the K x 3 difference per frame. PerJointMean:
// mean of the K per-keypoint distances.
enum class MpjpeMode { kStacked, kPerJointMean };

// (gen keypoint, ref keypoint) index pairs. Empty means identity over the
// model's keypoint set.
using JointMap = std::vector<std::pair<int, int>>;

// Mean over frames of |I - M_t inv(M_hat_t)|_F with M the 4x4 root transform.
double ERoot(const MotionClip& gen, const MotionClip& ref);
// Mean over frames of the Euclidean norm of wrapped joint-angle differences.
double EJoint(const MotionClip& gen, const MotionClip& ref);
// Mean over frames of the world keypoint error, millimetres.
double EMpjpe(const sim::HumanoidModel& model, const MotionClip& gen,
              const MotionClip& ref, const JointMap& map = {},
              MpjpeMode mode = MpjpeMode::kStacked);
// Mean over the T-1 forward-difference velocities of |v_t - v_hat_t|_2.
double EVel(const sim::HumanoidModel& model, const MotionClip& gen,
            const MotionClip& ref, UnitMode mode = UnitMode::kAngular);
// Mean over the T-2 second differences of |a_t|_1. Needs >= 3 frames.
double AAccel(const sim::HumanoidModel& model, const MotionClip& clip,
              UnitMode mode = UnitMode::kAngular);

struct MetricReport {
  ActionLabel action = ActionLabel::kOther;
  double e_root = 0.0;
  double e_joint = 0.0;
  double e_vel = 0.0;
  double a_accel = 0.0;
  std::optional<double> e_mpjpe;
  UnitMode unit_mode = UnitMode::kAngular;
  int n_clips = 0;
};

struct EvalOptions {
  UnitMode unit_mode = UnitMode::kAngular;
  bool mpjpe = true;
  MpjpeMode mpjpe_mode = MpjpeMode::kStacked;
};

// All metrics for one pair, n_clips = 1.
MetricReport EvaluatePair(const sim::HumanoidModel& model,
                          const MotionClip& gen, const MotionClip& ref,
                          const EvalOptions& options = {});

// Per-action means of pair reports, ordered by action label.
std::vector<MetricReport> AggregateByAction(
    const std::vector<MetricReport>& reports);

// CSV with header action,e_root,e_joint,e_vel,a_accel,e_mpjpe,unit_mode,n_clips.
// Rows are written in action order. Throws ValidationError for an empty list
// and IoError when the file cannot be written.
void EmitReport(const std::vector<MetricReport>& reports,
                const std::filesystem::path& path);
std::string ReportCsv(const std::vector<MetricReport>& reports);

}  // namespace kinres

#endif  // KINRES_METRICS_METRICS_H_
