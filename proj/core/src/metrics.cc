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

#include "kinres/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"
#include "kinres/sim/kinematics.h"

namespace kinres {
namespace {

void CheckPair(const MotionClip& gen, const MotionClip& ref) {
  if (gen.num_frames() != ref.num_frames()) {
    throw ValidationError(fmt::format(
        "clip lengths differ: generated {} frames, reference {} frames",
        gen.num_frames(), ref.num_frames()));
  }
  if (gen.num_frames() < 1) throw ValidationError("clips have no frames");
}

void CheckDof(const MotionClip& gen, const MotionClip& ref) {
  if (gen.dof() != ref.dof()) {
    throw ValidationError(fmt::format("clip DoF differs: {} vs {}", gen.dof(),
                                      ref.dof()));
  }
}

VecX WrappedDiff(const VecX& a, const VecX& b) {
  VecX d(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) d[i] = WrapAngle(a[i] - b[i]);
  return d;
}

// Per-frame signal for velocity metrics: joint angles or keypoints in mm.
std::vector<VecX> Signal(const sim::HumanoidModel& model,
                         const MotionClip& clip, UnitMode mode) {
  std::vector<VecX> out;
  out.reserve(clip.frames.size());
  for (const Frame& f : clip.frames) {
    if (mode == UnitMode::kAngular) {
      out.push_back(f.pose.joint_angles);
    } else {
      const auto kp = sim::KeypointPositions(model, f.pose);
      VecX v(3 * kp.size());
      for (size_t k = 0; k < kp.size(); ++k) v.segment<3>(3 * k) = 1000.0 * kp[k];
      out.push_back(v);
    }
  }
  return out;
}

VecX Difference(const VecX& next, const VecX& cur, UnitMode mode) {
  return mode == UnitMode::kAngular ? WrappedDiff(next, cur) : VecX(next - cur);
}

}  // namespace

std::string_view UnitModeName(UnitMode m) {
  return m == UnitMode::kAngular ? "angular" : "linear";
}

double ERoot(const MotionClip& gen, const MotionClip& ref) {
  CheckPair(gen, ref);
  double sum = 0.0;
  for (int t = 0; t < gen.num_frames(); ++t) {
    const Pose& a = gen.frames[t].pose;
    const Pose& b = ref.frames[t].pose;
    // M inv(M) is only the identity up to rounding.
    if (a.root_pos == b.root_pos && a.root_rot == b.root_rot) continue;
    const Mat4 m = gen.frames[t].pose.RootTransform().ToMatrix();
    const Mat4 mhat = ref.frames[t].pose.RootTransform().ToMatrix();
    sum += (Mat4::Identity() - m * mhat.inverse()).norm();
  }
  return sum / gen.num_frames();
}

double EJoint(const MotionClip& gen, const MotionClip& ref) {
  CheckPair(gen, ref);
  CheckDof(gen, ref);
  double sum = 0.0;
  for (int t = 0; t < gen.num_frames(); ++t) {
    sum += WrappedDiff(gen.frames[t].pose.joint_angles,
                       ref.frames[t].pose.joint_angles)
               .norm();
  }
  return sum / gen.num_frames();
}

double EMpjpe(const sim::HumanoidModel& model, const MotionClip& gen,
              const MotionClip& ref, const JointMap& map, MpjpeMode mode) {
  CheckPair(gen, ref);
  const int k = static_cast<int>(model.links.size() + model.end_effectors.size());
  JointMap pairs = map;
  if (pairs.empty()) {
    for (int i = 0; i < k; ++i) pairs.push_back({i, i});
  }
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a >= k || b < 0 || b >= k) {
      throw ValidationError(fmt::format(
          "joint map entry ({}, {}) is outside the {} keypoints", a, b, k));
    }
  }
  double sum = 0.0;
  for (int t = 0; t < gen.num_frames(); ++t) {
    const auto g = sim::KeypointPositions(model, gen.frames[t].pose);
    const auto r = sim::KeypointPositions(model, ref.frames[t].pose);
    double sq = 0.0, dist = 0.0;
    for (const auto& [a, b] : pairs) {
      const double d2 = (g[a] - r[b]).squaredNorm();
      sq += d2;
      dist += std::sqrt(d2);
    }
    sum += mode == MpjpeMode::kStacked ? std::sqrt(sq)
                                       : dist / static_cast<double>(pairs.size());
  }
  return 1000.0 * sum / gen.num_frames();
}

double EVel(const sim::HumanoidModel& model, const MotionClip& gen,
            const MotionClip& ref, UnitMode mode) {
  CheckPair(gen, ref);
  CheckDof(gen, ref);
  if (gen.num_frames() < 2) {
    throw ValidationError("velocity error needs at least 2 frames");
  }
  const auto a = Signal(model, gen, mode);
  const auto b = Signal(model, ref, mode);
  const double rate_a = gen.frame_rate;
  const double rate_b = ref.frame_rate;
  double sum = 0.0;
  const int n = gen.num_frames() - 1;
  for (int t = 0; t < n; ++t) {
    const VecX va = Difference(a[t + 1], a[t], mode) * rate_a;
    const VecX vb = Difference(b[t + 1], b[t], mode) * rate_b;
    sum += (va - vb).norm();
  }
  return sum / n;
}

double AAccel(const sim::HumanoidModel& model, const MotionClip& clip,
              UnitMode mode) {
  if (clip.num_frames() < 3) {
    throw ValidationError(fmt::format(
        "acceleration needs at least 3 frames, clip has {}", clip.num_frames()));
  }
  const auto s = Signal(model, clip, mode);
  const double rate2 = clip.frame_rate * clip.frame_rate;
  double sum = 0.0;
  const int n = clip.num_frames() - 2;
  for (int t = 0; t < n; ++t) {
    const VecX acc =
        (Difference(s[t + 2], s[t + 1], mode) - Difference(s[t + 1], s[t], mode)) *
        rate2;
    sum += acc.lpNorm<1>();
  }
  return sum / n;
}

MetricReport EvaluatePair(const sim::HumanoidModel& model,
                          const MotionClip& gen, const MotionClip& ref,
                          const EvalOptions& options) {
  MetricReport r;
  r.action = ref.action;
  r.unit_mode = options.unit_mode;
  r.e_root = ERoot(gen, ref);
  r.e_joint = EJoint(gen, ref);
  r.e_vel = EVel(model, gen, ref, options.unit_mode);
  r.a_accel = AAccel(model, gen, options.unit_mode);
  if (options.mpjpe) {
    r.e_mpjpe = EMpjpe(model, gen, ref, {}, options.mpjpe_mode);
  }
  r.n_clips = 1;
  return r;
}

std::vector<MetricReport> AggregateByAction(
    const std::vector<MetricReport>& reports) {
  std::map<ActionLabel, std::vector<const MetricReport*>> groups;
  for (const auto& r : reports) groups[r.action].push_back(&r);
  std::vector<MetricReport> out;
  for (const auto& [action, group] : groups) {
    MetricReport agg;
    agg.action = action;
    agg.unit_mode = group.front()->unit_mode;
    double w = 0.0, mp = 0.0;
    bool has_mpjpe = true;
    for (const MetricReport* r : group) {
      if (r->unit_mode != agg.unit_mode) {
        throw ValidationError("cannot aggregate reports with mixed unit modes");
      }
      const double n = r->n_clips;
      agg.e_root += n * r->e_root;
      agg.e_joint += n * r->e_joint;
      agg.e_vel += n * r->e_vel;
      agg.a_accel += n * r->a_accel;
      if (r->e_mpjpe) {
        mp += n * *r->e_mpjpe;
      } else {
        has_mpjpe = false;
      }
      w += n;
      agg.n_clips += r->n_clips;
    }
    if (w <= 0.0) throw ValidationError("reports carry no clips");
    agg.e_root /= w;
    agg.e_joint /= w;
    agg.e_vel /= w;
    agg.a_accel /= w;
    if (has_mpjpe) agg.e_mpjpe = mp / w;
    out.push_back(agg);
  }
  return out;
}

std::string ReportCsv(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw ValidationError("no metric reports to emit");
  std::vector<MetricReport> sorted = reports;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricReport& a, const MetricReport& b) {
                     return a.action < b.action;
                   });
  std::string out = "action,e_root,e_joint,e_vel,a_accel,e_mpjpe,unit_mode,n_clips\n";
  for (const auto& r : sorted) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", ActionName(r.action),
                       FormatReal(r.e_root), FormatReal(r.e_joint),
                       FormatReal(r.e_vel), FormatReal(r.a_accel),
                       r.e_mpjpe ? FormatReal(*r.e_mpjpe) : std::string(),
                       UnitModeName(r.unit_mode), r.n_clips);
  }
  return out;
}

void EmitReport(const std::vector<MetricReport>& reports,
                const std::filesystem::path& path) {
  const std::string csv = ReportCsv(reports);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << csv;
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace kinres
