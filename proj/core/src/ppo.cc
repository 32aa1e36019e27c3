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

#include "kinres/rl/ppo.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"

namespace kinres {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t MixSeed(uint64_t seed, int64_t a, int64_t b) {
  return SplitMix(SplitMix(SplitMix(seed) ^ static_cast<uint64_t>(a)) ^
                  static_cast<uint64_t>(b));
}

struct Episode {
  std::vector<VecX> raw, obs, actions;
  std::vector<double> rewards, values, next_values, log_probs;
  bool fallen = false;
  bool diverged = false;
};

Episode CollectEpisode(const Policy& policy, const Task& task, uint64_t seed,
                       const Policy* frozen) {
  std::mt19937_64 rng(seed);
  const int track = std::uniform_int_distribution<int>(
      0, static_cast<int>(task.refs.size()) - 1)(rng);
  Env env = task.MakeEnv(track);
  int start = 0;
  if (task.random_start) {
    start = std::uniform_int_distribution<int>(0, env.Horizon(0) - 1)(rng);
  }
  Episode ep;
  VecX raw = env.Reset(start);
  while (true) {
    const VecX on = policy.normalizer().Apply(raw);
    const ActionSample a = SampleAction(policy, on, true, rng);
    VecX mu_frozen;
    if (frozen != nullptr) mu_frozen = frozen->Mean(frozen->normalizer().Apply(raw));
    const StepResult r =
        env.Step(a.action, &a.mean, frozen != nullptr ? &mu_frozen : nullptr);
    ep.raw.push_back(raw);
    ep.obs.push_back(on);
    ep.actions.push_back(a.action);
    ep.rewards.push_back(r.reward.total);
    ep.values.push_back(policy.Value(on));
    ep.log_probs.push_back(a.log_prob);
    if (r.diverged || r.fallen) {
      ep.next_values.push_back(0.0);
      ep.fallen = r.fallen;
      ep.diverged = r.diverged;
      break;
    }
    if (r.done) {
      ep.next_values.push_back(policy.Value(policy.normalizer().Apply(r.obs)));
      break;
    }
    ep.next_values.push_back(0.0);  // filled from the next step's value
    raw = r.obs;
  }
  for (size_t t = 0; t + 1 < ep.values.size(); ++t) {
    ep.next_values[t] = ep.values[t + 1];
  }
  return ep;
}

bool AllFinite(const nn::Grads& g) {
  for (const nn::Mat& m : g) {
    if (!m.allFinite()) return false;
  }
  return true;
}

nn::Mat Columns(const nn::Mat& m, const std::vector<int>& idx) {
  nn::Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) out.col(j) = m.col(idx[j]);
  return out;
}

nn::Mat Row(const VecX& v, const std::vector<int>& idx, double scale = 1.0) {
  nn::Mat out(1, static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) out(0, j) = scale * v[idx[j]];
  return out;
}

}  // namespace

void PpoHyper::Validate() const {
  if (!(clip > 0.0) || epochs < 1 || minibatch < 1 || !(gamma > 0.0) ||
      gamma > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0 || !(lr > 0.0) ||
      value_coef < 0.0 || samples_per_iter < 1) {
    throw ValidationError("invalid PPO hyperparameters");
  }
}

VecX Gae(const VecX& rewards, const VecX& values, const VecX& next_values,
         const std::vector<uint8_t>& done, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || next_values.size() != n ||
      static_cast<Eigen::Index>(done.size()) != n) {
    throw ValidationError("GAE inputs have different lengths");
  }
  VecX adv(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * next_values[t] - values[t];
    running = delta + (done[t] ? 0.0 : gamma * lambda * running);
    adv[t] = running;
  }
  return adv;
}

void ComputeAdvantages(RolloutBatch& b, double gamma, double lambda) {
  b.advantages = Gae(b.rewards, b.values, b.next_values, b.done, gamma, lambda);
  b.returns = b.advantages + b.values;
}

void Task::Validate() const {
  model.Validate();
  if (refs.empty()) throw ValidationError("task has no reference tracks");
  if (scenes.size() != refs.size()) {
    throw ValidationError("task needs one scene per reference track");
  }
  for (const auto& r : refs) {
    if (!r) throw ValidationError("task has a null reference track");
    r->Validate();
  }
  const int dim = MakeEnv(0).obs_dim();
  for (size_t i = 1; i < refs.size(); ++i) {
    if (MakeEnv(static_cast<int>(i)).obs_dim() != dim) {
      throw ValidationError(
          "reference tracks disagree on object count or context size");
    }
  }
}

int Task::obs_dim() const { return MakeEnv(0).obs_dim(); }

Env Task::MakeEnv(int track) const {
  return Env(model, scenes.at(track), env, refs.at(track));
}

RolloutBatch CollectRollouts(const Policy& policy, const Task& task,
                             int min_samples, uint64_t seed, int iteration,
                             int workers, const Policy* frozen) {
  if (task.env.reward_mode == RewardMode::kFinetune && frozen == nullptr) {
    throw ValidationError("fine-tuning rollouts need the frozen policy");
  }
  workers = std::max(1, workers);
  std::vector<Episode> episodes;
  int total = 0;
  int next = 0;
  while (total < min_samples) {
    std::vector<Episode> wave(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](int w) {
      try {
        wave[w] = CollectEpisode(policy, task, MixSeed(seed, iteration, next + w),
                                 frozen);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
      for (auto& t : threads) t.join();
    }
    for (int w = 0; w < workers && total < min_samples; ++w) {
      if (errors[w]) std::rethrow_exception(errors[w]);
      total += static_cast<int>(wave[w].rewards.size());
      episodes.push_back(std::move(wave[w]));
    }
    next += workers;
  }

  RolloutBatch b;
  const int obs_dim = policy.obs_dim();
  const int act_dim = policy.act_dim();
  b.obs.resize(obs_dim, total);
  b.raw_obs.resize(obs_dim, total);
  b.actions.resize(act_dim, total);
  b.rewards.resize(total);
  b.values.resize(total);
  b.next_values.resize(total);
  b.log_probs.resize(total);
  b.done.assign(total, 0);
  int k = 0;
  for (const Episode& ep : episodes) {
    const int n = static_cast<int>(ep.rewards.size());
    for (int t = 0; t < n; ++t, ++k) {
      b.obs.col(k) = ep.obs[t];
      b.raw_obs.col(k) = ep.raw[t];
      b.actions.col(k) = ep.actions[t];
      b.rewards[k] = ep.rewards[t];
      b.values[k] = ep.values[t];
      b.next_values[k] = ep.next_values[t];
      b.log_probs[k] = ep.log_probs[t];
    }
    b.done[k - 1] = 1;
    b.episode_returns.push_back(
        std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0));
    b.episode_lengths.push_back(n);
    b.falls += ep.fallen ? 1 : 0;
    b.divergences += ep.diverged ? 1 : 0;
  }
  return b;
}

std::pair<PpoLoss, nn::Grads> PpoLossAndGrad(const Policy& policy,
                                             const RolloutBatch& batch,
                                             const VecX& advantages,
                                             const std::vector<int>& idx,
                                             const PpoHyper& hyper) {
  using namespace nn;
  if (idx.empty()) throw ValidationError("PPO loss on an empty minibatch");
  const int n = static_cast<int>(idx.size());
  const VecX& log_std = policy.log_std();
  const double log_norm =
      -log_std.sum() - 0.5 * static_cast<double>(log_std.size()) * kLog2Pi;

  Tape tape;
  const std::vector<Var> bound = Bind(tape, policy.params());
  const Var x = tape.Leaf(Columns(batch.obs, idx));
  const Var mean = policy.pi().Forward(tape, bound, x);
  const Var diff = Sub(tape, tape.Leaf(Columns(batch.actions, idx)), mean);
  Mat w(log_std.size(), n);
  for (Eigen::Index i = 0; i < log_std.size(); ++i) {
    w.row(i).setConstant(0.5 * std::exp(-2.0 * log_std[i]));
  }
  const Var quad = ColSum(tape, Mul(tape, Square(tape, diff), tape.Leaf(w)));
  Mat k(1, n);
  for (int j = 0; j < n; ++j) k(0, j) = log_norm - batch.log_probs[idx[j]];
  const Var ratio = Exp(tape, Sub(tape, tape.Leaf(k), quad));
  const Var adv = tape.Leaf(Row(advantages, idx));
  const Var s1 = Mul(tape, ratio, adv);
  const Var s2 =
      Mul(tape, Clamp(tape, ratio, 1.0 - hyper.clip, 1.0 + hyper.clip), adv);
  const Var pol = Scale(tape, Mean(tape, Min(tape, s1, s2)), -1.0);

  const Var v = policy.vf().Forward(tape, bound, x);
  const Var ret =
      tape.Leaf(Row(batch.returns, idx, 1.0 / policy.config().value_scale));
  const Var vl = Mean(tape, Square(tape, Sub(tape, v, ret)));
  const Var total = Add(tape, pol, Scale(tape, vl, hyper.value_coef));
  tape.Backward(total);

  PpoLoss loss;
  loss.total = tape.value(total)(0, 0);
  loss.policy = tape.value(pol)(0, 0);
  loss.value = tape.value(vl)(0, 0);
  const Mat& r = tape.value(ratio);
  int clipped = 0;
  double kl = 0.0;
  for (int j = 0; j < n; ++j) {
    kl += (r(0, j) - 1.0) - std::log(r(0, j));
    if (std::abs(r(0, j) - 1.0) > hyper.clip) ++clipped;
  }
  loss.kl = kl / n;
  loss.clip_fraction = static_cast<double>(clipped) / n;
  return {loss, CollectGrads(tape, bound)};
}

PpoStats PpoUpdate(Policy& policy, nn::Adam& adam, const RolloutBatch& batch,
                   const PpoHyper& hyper, std::mt19937_64& rng) {
  hyper.Validate();
  const int n = batch.size();
  if (n == 0) throw ValidationError("PPO update on an empty batch");
  if (batch.advantages.size() != n || !batch.advantages.allFinite() ||
      !batch.returns.allFinite()) {
    throw ValidationError("PPO update needs finite advantages and returns");
  }
  VecX adv = batch.advantages;
  if (hyper.normalize_advantages && n > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().mean());
    adv = (adv.array() - mean) / (sd + 1e-8);
  }
  const nn::ParamSet saved_params = policy.params();
  const nn::Adam saved_adam = adam;

  PpoStats stats;
  int count = 0;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int e = 0; e < hyper.epochs; ++e) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int s = 0; s < n; s += hyper.minibatch) {
      const std::vector<int> idx(perm.begin() + s,
                                 perm.begin() + std::min(n, s + hyper.minibatch));
      auto [loss, grads] = PpoLossAndGrad(policy, batch, adv, idx, hyper);
      if (!std::isfinite(loss.total) || !AllFinite(grads)) {
        policy.params() = saved_params;
        adam = saved_adam;
        stats.aborted = true;
        return stats;
      }
      adam.Step(policy.params(), std::move(grads));
      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.kl += loss.kl;
      stats.clip_fraction += loss.clip_fraction;
      ++count;
    }
  }
  stats.policy_loss /= count;
  stats.value_loss /= count;
  stats.kl /= count;
  stats.clip_fraction /= count;
  return stats;
}

void WriteTrainingCsvHeader(std::ostream& out) {
  out << "iteration,mean_reward,mean_episode_length,kl,clip_fraction\n";
}

void WriteTrainingCsvRow(std::ostream& out, const IterationStats& s) {
  out << s.iteration << ',' << FormatReal(s.mean_reward) << ','
      << FormatReal(s.mean_episode_length) << ',' << FormatReal(s.kl) << ','
      << FormatReal(s.clip_fraction) << '\n';
}

PpoTrainer::PpoTrainer(Policy policy, Task task, PpoHyper hyper, uint64_t seed,
                       int workers, const Policy* frozen)
    : policy_(std::move(policy)),
      task_(std::move(task)),
      hyper_(hyper),
      seed_(seed),
      workers_(std::max(1, workers)),
      frozen_(frozen) {
  hyper_.Validate();
  task_.Validate();
  if (task_.obs_dim() != policy_.obs_dim() ||
      task_.act_dim() != policy_.act_dim()) {
    throw ValidationError(fmt::format(
        "policy expects {} observations and {} actions, task has {} and {}",
        policy_.obs_dim(), policy_.act_dim(), task_.obs_dim(),
        task_.act_dim()));
  }
  if (task_.env.reward_mode == RewardMode::kFinetune && frozen_ == nullptr) {
    throw ValidationError("fine-tuning needs a frozen policy");
  }
  adam_ = nn::Adam(policy_.params(),
                   {hyper_.lr, 0.9, 0.999, 1e-8, hyper_.max_grad_norm});
}

IterationStats PpoTrainer::RunIteration() {
  if (policy_.normalizer().count == 0.0) {
    // Warm-up batch so that the first update already sees normalized inputs.
    const RolloutBatch warm =
        CollectRollouts(policy_, task_, hyper_.samples_per_iter, seed_, -1,
                        workers_, frozen_);
    policy_.normalizer().Update(warm.raw_obs);
  }
  RolloutBatch batch = CollectRollouts(policy_, task_, hyper_.samples_per_iter,
                                       seed_, iteration_, workers_, frozen_);
  ComputeAdvantages(batch, hyper_.gamma, hyper_.gae_lambda);
  std::mt19937_64 rng(MixSeed(seed_, iteration_, -7));
  const PpoStats ps = PpoUpdate(policy_, adam_, batch, hyper_, rng);
  policy_.normalizer().Update(batch.raw_obs);

  IterationStats s;
  s.iteration = iteration_;
  s.samples = batch.size();
  s.episodes = static_cast<int>(batch.episode_lengths.size());
  s.mean_reward = batch.rewards.mean();
  s.mean_episode_length = static_cast<double>(s.samples) / s.episodes;
  s.kl = ps.kl;
  s.clip_fraction = ps.clip_fraction;
  s.policy_loss = ps.policy_loss;
  s.value_loss = ps.value_loss;
  s.falls = batch.falls;
  s.aborted = ps.aborted;
  ++iteration_;
  return s;
}

nn::Checkpoint PpoTrainer::ToCheckpoint() const {
  nn::Checkpoint c = policy_.ToCheckpoint();
  c.meta["iteration"] = std::to_string(iteration_);
  adam_.ExportState(c.params, "adam");
  return c;
}

void PpoTrainer::Resume(const nn::Checkpoint& ckpt) {
  Policy p = Policy::FromCheckpoint(ckpt);
  if (p.obs_dim() != policy_.obs_dim() || p.act_dim() != policy_.act_dim()) {
    throw ValidationError("checkpoint does not match the task dimensions");
  }
  policy_ = std::move(p);
  adam_ = nn::Adam(policy_.params(),
                   {hyper_.lr, 0.9, 0.999, 1e-8, hyper_.max_grad_norm});
  iteration_ = 0;
  auto it = ckpt.meta.find("iteration");
  if (it != ckpt.meta.end()) {
    iteration_ = std::stoi(it->second);
    adam_.ImportState(ckpt.params, "adam");
  }
}

double RolloutResult::MeanComponent(std::string_view name) const {
  if (rewards.empty()) return 0.0;
  double s = 0.0;
  for (const RewardBreakdown& r : rewards) s += r.Get(name);
  return s / static_cast<double>(rewards.size());
}

double RolloutResult::MeanTotal() const {
  if (rewards.empty()) return 0.0;
  double s = 0.0;
  for (const RewardBreakdown& r : rewards) s += r.total;
  return s / static_cast<double>(rewards.size());
}

RolloutResult RunEpisode(const Policy& policy, Env& env, bool deterministic,
                         uint64_t seed, const Policy* frozen, int start) {
  if (env.config().reward_mode == RewardMode::kFinetune && frozen == nullptr) {
    throw ValidationError("fine-tuning rewards need the frozen policy");
  }
  std::mt19937_64 rng(seed);
  RolloutResult out;
  MotionClip& clip = out.clip;
  clip.frame_rate = env.refs().frame_rate;
  clip.action = env.refs().action;
  clip.joint_names = env.model().DofNames();
  for (const ObjectState& o : env.state().objects) {
    clip.object_ids.push_back(o.object_id);
  }
  auto record = [&]() {
    const sim::SimFeatures f = env.Features();
    Frame fr;
    fr.pose = env.state().pose;
    fr.vel = env.state().vel;
    fr.objects = env.state().objects;
    fr.head = f.head;
    clip.frames.push_back(std::move(fr));
  };
  VecX raw = env.Reset(start);
  record();
  while (true) {
    const VecX on = policy.normalizer().Apply(raw);
    const ActionSample a = SampleAction(policy, on, !deterministic, rng);
    VecX mu_frozen;
    if (frozen != nullptr) mu_frozen = frozen->Mean(frozen->normalizer().Apply(raw));
    const StepResult r =
        env.Step(a.action, &a.mean, frozen != nullptr ? &mu_frozen : nullptr);
    if (r.diverged) {
      out.diverged = true;
      break;
    }
    out.rewards.push_back(r.reward);
    record();
    if (r.done) {
      out.fallen = r.fallen;
      break;
    }
    raw = r.obs;
  }
  return out;
}

void WriteBreakdownCsv(std::ostream& out, const RolloutResult& r) {
  out << "step,total";
  if (!r.rewards.empty()) {
    for (const auto& [name, _] : r.rewards.front().components) out << ',' << name;
  }
  out << '\n';
  for (size_t t = 0; t < r.rewards.size(); ++t) {
    out << t << ',' << FormatReal(r.rewards[t].total);
    for (const auto& [_, v] : r.rewards[t].components) out << ',' << FormatReal(v);
    out << '\n';
  }
}

FinetuneResult Finetune(const Policy& policy, const Policy& frozen,
                        const Task& task, const PpoHyper& hyper,
                        int iterations, uint64_t seed, int workers,
                        const std::function<void(const IterationStats&)>&
                            on_iteration) {
  if (task.env.reward_mode != RewardMode::kFinetune) {
    throw ValidationError("fine-tuning task must use the fine-tuning reward");
  }
  if (iterations < 0) throw ValidationError("negative iteration count");
  PpoTrainer trainer(policy, task, hyper, seed, workers, &frozen);
  FinetuneResult out;
  for (int i = 0; i < iterations; ++i) {
    out.history.push_back(trainer.RunIteration());
    if (on_iteration) on_iteration(out.history.back());
  }
  out.policy = trainer.policy();
  return out;
}

}  // namespace kinres
