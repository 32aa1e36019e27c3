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

#include "commands.h"

#include <algorithm>
#include <fstream>
#include <memory>

#include <fmt/format.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"
#include "kinres/metrics/metrics.h"
#include "kinres/rl/toy.h"
#include "kinres/sim/kinematics.h"
#include "kinres/sim/scene.h"

namespace kinres::cli {
namespace {

namespace fs = std::filesystem;

sim::HumanoidModel LoadModelOrDefault(const GlobalConfig& c) {
  return c.model.empty() ? sim::MiniHumanoid() : sim::LoadModel(c.model);
}

fs::path OutDir(const GlobalConfig& c) {
  const fs::path out = c.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}'", out.string()));
  return out;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

struct DatasetClip {
  ManifestEntry entry;
  MotionClip clip;
  sim::Scene scene;
  FeatureSequence features;
};

DatasetClip LoadEntry(const fs::path& manifest_path, const ManifestEntry& e) {
  const fs::path dir = manifest_path.parent_path();
  return {e, LoadClip(dir / e.clip_path), sim::LoadScene(dir / e.scene_path),
          LoadFeatures(dir / e.features_path)};
}

const ManifestEntry& FindEntry(const DatasetManifest& m, const std::string& id,
                               const fs::path& path) {
  for (const auto& e : m.entries) {
    if (e.clip_id == id) return e;
  }
  throw ValidationError(fmt::format("clip '{}' is not listed in '{}'", id, path.string()));
}

EnvConfig MakeEnvConfig(const GlobalConfig& c) {
  EnvConfig env;
  env.sim = c.sim;
  env.action_mode = c.action_mode;
  env.weights = c.weights;
  env.max_steps = c.max_steps;
  return env;
}

// Kinematic reference for test-time episodes: decoded regressor output when
// a regressor is given, the ground truth otherwise.
EpisodeRefs TestRefs(const sim::HumanoidModel& model, const DatasetClip& d,
                     const fs::path& regressor_path,
                     std::vector<HeadSample> heads) {
  std::vector<Pose> poses;
  std::vector<Velocity> vels;
  if (!regressor_path.empty()) {
    const Regressor reg = Regressor::FromCheckpoint(nn::LoadCheckpoint(regressor_path));
    if (reg.config().dof != model.dof()) {
      throw ValidationError(fmt::format("regressor '{}' predicts {} DoF, model has {}",
                                        regressor_path.string(), reg.config().dof,
                                        model.dof()));
    }
    for (const KinematicState& k : reg.Regress(d.features)) {
      auto [p, v] = k.Decode(model);
      poses.push_back(std::move(p));
      vels.push_back(std::move(v));
    }
  } else {
    for (const Frame& f : d.clip.frames) {
      poses.push_back(f.pose);
      vels.push_back(f.vel);
    }
  }
  return RefsFromEstimate(model, poses, vels, d.features.values, d.clip.action,
                          d.clip.frame_rate, d.scene.InitialObjects(), std::move(heads),
                          &d.clip);
}

struct SingleTrack {
  Task task;
  const MotionClip* gt = nullptr;
  MotionClip gt_storage;
};

// Test-mode task over one clip; the toy uses its training track.
SingleTrack MakeTrackTask(const GlobalConfig& c, const TrackOptions& t,
                          std::vector<HeadSample> heads) {
  SingleTrack out;
  if (t.toy) {
    PendulumSpec spec;
    out.task = PendulumTask(spec);
    out.gt_storage = PendulumReference(out.task.model, spec);
    out.task.env.action_mode = c.action_mode;
    out.task.env.weights = c.weights;
    out.task.env.max_steps = c.max_steps;
  } else {
    if (t.manifest.empty() || t.clip_id.empty()) {
      throw ValidationError("choose a track with --manifest and --clip, or --toy");
    }
    const DatasetManifest man = LoadManifest(t.manifest);
    const DatasetClip d = LoadEntry(t.manifest, FindEntry(man, t.clip_id, t.manifest));
    out.task.model = LoadModelOrDefault(c);
    out.task.scenes = {d.scene};
    out.task.refs = {std::make_shared<const EpisodeRefs>(
        TestRefs(out.task.model, d, t.regressor, std::move(heads)))};
    out.task.env = MakeEnvConfig(c);
    out.task.env.init_mode = InitMode::kTest;
    out.gt_storage = d.clip;
  }
  out.task.random_start = false;
  out.gt = &out.gt_storage;
  return out;
}

void CheckPolicyFits(const Policy& p, const Task& t, const fs::path& path) {
  if (p.obs_dim() != t.obs_dim() || p.act_dim() != t.act_dim()) {
    throw ValidationError(fmt::format(
        "policy '{}' expects {} observations and {} actions; the task has {} and {}",
        path.string(), p.obs_dim(), p.act_dim(), t.obs_dim(), t.act_dim()));
  }
}

void WriteJointPositions(const fs::path& path, const sim::HumanoidModel& model,
                         const MotionClip& clip) {
  std::ofstream out = OpenOut(path);
  out << "frame";
  for (const std::string& name : sim::KeypointNames(model)) {
    out << ',' << name << "_x," << name << "_y," << name << "_z";
  }
  out << '\n';
  for (int t = 0; t < clip.num_frames(); ++t) {
    out << t;
    for (const Vec3& p : sim::KeypointPositions(model, clip.frames[t].pose)) {
      out << ',' << FormatReal(p.x()) << ',' << FormatReal(p.y()) << ','
          << FormatReal(p.z());
    }
    out << '\n';
  }
}

}  // namespace

void RunGenData(const GlobalConfig& c) {
  const fs::path out = OutDir(c);
  DatasetOptions o = c.data;
  o.seed = c.seed;
  const DatasetManifest m = GenerateDataset(LoadModelOrDefault(c), o, out);
  // One head trajectory per clip, heads/<clip_id>.csv, for fine-tuning.
  fs::create_directories(out / "heads");
  for (const ManifestEntry& e : m.entries) {
    DriftModel drift = c.head_drift;
    drift.seed = e.spec.seed;
    SaveHeadTrajectory(DeriveHeadTrajectory(LoadClip(out / e.clip_path), drift),
                       out / "heads" / (e.clip_id + ".csv"));
  }
  fmt::print("wrote {} clips ({} train, {} test) to {}\n", m.entries.size(),
             m.Split("train").size(), m.Split("test").size(),
             (out / "manifest.json").string());
}

void RunTrainRegressor(const GlobalConfig& c, const fs::path& manifest) {
  const sim::HumanoidModel model = LoadModelOrDefault(c);
  const DatasetManifest man = LoadManifest(manifest);
  std::vector<RegressorSample> data;
  int feature_dim = 0;
  for (const ManifestEntry& e : man.Split("train")) {
    DatasetClip d = LoadEntry(manifest, e);
    if (d.clip.dof() != model.dof()) {
      throw ValidationError(fmt::format("clip '{}' has {} DoF, model has {}", e.clip_id,
                                        d.clip.dof(), model.dof()));
    }
    feature_dim = d.features.dim();
    data.push_back({std::move(d.features), RawTargets(d.clip)});
  }
  if (data.empty()) {
    throw ValidationError(fmt::format("'{}' has no training clips", manifest.string()));
  }
  RegressorConfig rc = c.regressor;
  rc.feature_dim = feature_dim;
  rc.dof = model.dof();
  RegressorHyper h = c.regressor_train;
  h.seed = c.seed;
  const RegressorTrainResult r = TrainRegressor(data, rc, h);

  const fs::path out = OutDir(c);
  nn::SaveCheckpoint(r.model.ToCheckpoint(), out / "regressor.ckpt");
  std::ofstream csv = OpenOut(out / "regressor_loss.csv");
  csv << "step,loss,smoothed\n";
  const std::vector<double> smooth = Smooth(r.loss_trace, 10);
  for (size_t i = 0; i < r.loss_trace.size(); ++i) {
    csv << i << ',' << FormatReal(r.loss_trace[i]) << ',' << FormatReal(smooth[i]) << '\n';
  }
  fmt::print("regressor: {} steps, final loss {:.6g}\n", r.loss_trace.size(),
             r.loss_trace.empty() ? 0.0 : r.loss_trace.back());
}

void RunTrainPolicy(const GlobalConfig& c, const TrainPolicyOptions& o) {
  Task task;
  if (o.toy) {
    task = PendulumTask();
    task.env.action_mode = c.action_mode;
    task.env.weights = c.weights;
    task.env.max_steps = c.max_steps;
  } else {
    if (o.manifest.empty()) throw ValidationError("train-policy needs --manifest or --toy");
    task.model = LoadModelOrDefault(c);
    task.env = MakeEnvConfig(c);
    std::vector<ActionLabel> filter;
    for (const std::string& a : o.actions) filter.push_back(ParseAction(a));
    const DatasetManifest man = LoadManifest(o.manifest);
    for (const ManifestEntry& e : man.Split("train")) {
      if (!filter.empty() &&
          std::find(filter.begin(), filter.end(), e.spec.action) == filter.end()) {
        continue;
      }
      const DatasetClip d = LoadEntry(o.manifest, e);
      task.scenes.push_back(d.scene);
      task.refs.push_back(std::make_shared<const EpisodeRefs>(
          RefsFromClip(task.model, d.clip, d.features.values)));
    }
    if (task.refs.empty()) {
      throw ValidationError(fmt::format("no training clips in '{}' match the action filter",
                                        o.manifest.string()));
    }
  }
  task.random_start = c.random_start;
  task.Validate();

  PpoTrainer trainer(Policy::Create(task.obs_dim(), task.act_dim(), c.policy, c.seed), task,
                     c.ppo.hyper, c.seed, c.workers);
  if (!o.resume.empty()) {
    const Policy loaded = Policy::FromCheckpoint(nn::LoadCheckpoint(o.resume));
    CheckPolicyFits(loaded, task, o.resume);
    trainer.Resume(nn::LoadCheckpoint(o.resume));
  }
  const fs::path out = OutDir(c);
  std::ofstream csv = OpenOut(out / "training.csv");
  WriteTrainingCsvHeader(csv);
  for (int i = 0; i < c.ppo.iterations; ++i) {
    const IterationStats s = trainer.RunIteration();
    WriteTrainingCsvRow(csv, s);
    csv.flush();
    fmt::print("iter {:4d}  reward {:.4f}  len {:.1f}  kl {:.4f}  clip {:.3f}{}\n", s.iteration,
               s.mean_reward, s.mean_episode_length, s.kl, s.clip_fraction,
               s.aborted ? "  (update aborted)" : "");
  }
  nn::SaveCheckpoint(trainer.ToCheckpoint(), out / "policy.ckpt");
  fmt::print("saved {} at iteration {}\n", (out / "policy.ckpt").string(),
             trainer.iteration());
}

void RunFinetune(const GlobalConfig& c, const FinetuneOptions& o) {
  if (o.heads.empty()) throw ValidationError("finetune needs --heads");
  std::vector<HeadSample> heads = LoadHeadTrajectory(o.heads);
  SingleTrack track = MakeTrackTask(c, o.track, heads);
  if (o.track.toy) throw ValidationError("the pendulum toy has no head to fine-tune on");
  if (static_cast<int>(heads.size()) < track.task.refs[0]->length()) {
    throw ValidationError(fmt::format("head trajectory '{}' has {} frames, the clip needs {}",
                                      o.heads.string(), heads.size(),
                                      track.task.refs[0]->length()));
  }
  track.task.env.reward_mode = RewardMode::kFinetune;
  track.task.random_start = c.random_start;
  const Policy policy = Policy::FromCheckpoint(nn::LoadCheckpoint(o.policy));
  CheckPolicyFits(policy, track.task, o.policy);
  const Policy frozen = policy;

  const fs::path out = OutDir(c);
  std::ofstream csv = OpenOut(out / "finetune.csv");
  WriteTrainingCsvHeader(csv);
  const FinetuneResult r = Finetune(
      policy, frozen, track.task, c.finetune.hyper, c.finetune.iterations, c.seed, c.workers,
      [&](const IterationStats& s) {
        WriteTrainingCsvRow(csv, s);
        fmt::print("finetune {:4d}  reward {:.4f}  len {:.1f}\n", s.iteration, s.mean_reward,
                   s.mean_episode_length);
      });
  nn::SaveCheckpoint(r.policy.ToCheckpoint(), out / "finetuned.ckpt");
  fmt::print("saved {}\n", (out / "finetuned.ckpt").string());
}

void RunRollout(const GlobalConfig& c, const RolloutOptions& o) {
  SingleTrack track = MakeTrackTask(c, o.track, {});
  const Policy policy = Policy::FromCheckpoint(nn::LoadCheckpoint(o.policy));
  CheckPolicyFits(policy, track.task, o.policy);
  Env env = track.task.MakeEnv(0);
  if (o.start < 0 || o.start >= env.refs().length() - 1) {
    throw ValidationError(fmt::format("start frame {} is outside the clip", o.start));
  }
  const RolloutResult r = RunEpisode(policy, env, !o.stochastic, c.seed, nullptr, o.start);

  // The reference frames the rollout covers, for eval.
  MotionClip ref = *track.gt;
  ref.frames.assign(track.gt->frames.begin() + o.start,
                    track.gt->frames.begin() + o.start + r.clip.num_frames());

  const fs::path out = OutDir(c);
  SaveClip(r.clip, out / "rollout.jsonl");
  SaveClip(ref, out / "reference.jsonl");
  {
    std::ofstream csv = OpenOut(out / "breakdown.csv");
    WriteBreakdownCsv(csv, r);
  }
  WriteJointPositions(out / "joints.csv", env.model(), r.clip);
  fmt::print("rollout: {} steps, mean reward {:.4f}{}{}\n", r.steps(), r.MeanTotal(),
             r.fallen ? ", fell" : "", r.diverged ? ", diverged" : "");
  if (r.diverged) throw DivergenceError("simulation diverged during the rollout");
}

void RunEval(const GlobalConfig& c, const EvalOptionsCli& o) {
  if (o.gen.empty() || o.gen.size() != o.ref.size()) {
    throw ValidationError("eval needs matching numbers of --gen and --ref clips");
  }
  const sim::HumanoidModel model = LoadModelOrDefault(c);
  EvalOptions eo;
  eo.unit_mode = o.linear ? UnitMode::kLinear : UnitMode::kAngular;
  eo.mpjpe_mode = o.per_joint_mpjpe ? MpjpeMode::kPerJointMean : MpjpeMode::kStacked;
  std::vector<MetricReport> reports;
  for (size_t i = 0; i < o.gen.size(); ++i) {
    const MotionClip gen = LoadClip(o.gen[i]);
    const MotionClip ref = LoadClip(o.ref[i]);
    if (gen.num_frames() != ref.num_frames()) {
      throw ValidationError(fmt::format("'{}' has {} frames but '{}' has {}",
                                        o.gen[i].string(), gen.num_frames(),
                                        o.ref[i].string(), ref.num_frames()));
    }
    eo.mpjpe = gen.dof() == model.dof();
    reports.push_back(EvaluatePair(model, gen, ref, eo));
  }
  const std::vector<MetricReport> agg = AggregateByAction(reports);
  const fs::path out = OutDir(c);
  EmitReport(agg, out / "metrics.csv");
  fmt::print("{}", ReportCsv(agg));
}

}  // namespace kinres::cli
