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

#ifndef KINRES_RL_PPO_H_
#define KINRES_RL_PPO_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <vector>

#include "kinres/nn/params.h"
#include "kinres/rl/env.h"
#include "kinres/rl/policy.h"

namespace kinres {

struct PpoHyper {
  double clip = 0.2;
  int epochs = 10;
  int minibatch = 512;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double lr = 3e-4;
  double value_coef = 0.5;
  double max_grad_norm = 1.0;
  int samples_per_iter = 4096;  // at least this many steps per batch
  bool normalize_advantages = true;

  void Validate() const;
};

// Steps in collection order; episodes are contiguous. Observations are stored
// normalized with the normalizer snapshot used while acting, so the first
// epoch's probability ratios are exactly one.
struct RolloutBatch {
  nn::Mat obs;      // normalized, obs_dim x N
  nn::Mat raw_obs;  // for the normalizer update
  nn::Mat actions;  // act_dim x N
  VecX rewards;
  VecX values;
  VecX next_values;  // V(s_{t+1}); zero after a fall or divergence
  VecX log_probs;
  std::vector<uint8_t> done;  // episode ends after this step
  VecX advantages;
  VecX returns;
  std::vector<double> episode_returns;
  std::vector<int> episode_lengths;
  int falls = 0;
  int divergences = 0;

  int size() const { return static_cast<int>(rewards.size()); }
};

// delta_t = r_t + gamma V(s_{t+1}) - V(s_t);
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}.
VecX Gae(const VecX& rewards, const VecX& values, const VecX& next_values,
         const std::vector<uint8_t>& done, double gamma, double lambda);
// Fills advantages and returns (= advantages + values).
void ComputeAdvantages(RolloutBatch& batch, double gamma, double lambda);

// The training distribution: a model, one (scene, refs) pair per reference
// track, and the environment settings shared by every episode.
struct Task {
  sim::HumanoidModel model;
  std::vector<sim::Scene> scenes;
  std::vector<std::shared_ptr<const EpisodeRefs>> refs;
  EnvConfig env;
  bool random_start = false;  // uniform start frame instead of frame 0

  void Validate() const;
  int obs_dim() const;
  int act_dim() const { return model.dof(); }
  Env MakeEnv(int track) const;
};

// Episode `index` of iteration `iteration` draws its track, start frame and
// action noise from a generator seeded by (seed, iteration, index) alone, and
// episodes are concatenated in index order until `min_samples` is reached, so
// the batch does not depend on `workers`. `frozen` is required for
// fine-tuning rewards.
RolloutBatch CollectRollouts(const Policy& policy, const Task& task,
                             int min_samples, uint64_t seed, int iteration,
                             int workers, const Policy* frozen = nullptr);

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double kl = 0.0;             // mean of (r - 1) - log r
  double clip_fraction = 0.0;  // share of |r - 1| > clip
};

// Clipped surrogate plus value regression on the columns `idx` of the batch.
// Advantages are taken as given (normalize beforehand). The value target is
// returns / value_scale against the raw value head output.
std::pair<PpoLoss, nn::Grads> PpoLossAndGrad(const Policy& policy,
                                             const RolloutBatch& batch,
                                             const VecX& advantages,
                                             const std::vector<int>& idx,
                                             const PpoHyper& hyper);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  bool aborted = false;  // non-finite loss; parameters were restored
};

// Epochs of shuffled minibatch Adam steps. Both networks are updated. On a
// non-finite loss or gradient the update stops and the parameters and
// optimizer state from before the call are restored.
PpoStats PpoUpdate(Policy& policy, nn::Adam& adam, const RolloutBatch& batch,
                   const PpoHyper& hyper, std::mt19937_64& rng);

struct IterationStats {
  int iteration = 0;
  double mean_reward = 0.0;  // per step
  double mean_episode_length = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  int samples = 0;
  int episodes = 0;
  int falls = 0;
  bool aborted = false;
};

// iteration,mean_reward,mean_episode_length,kl,clip_fraction
void WriteTrainingCsvHeader(std::ostream& out);
void WriteTrainingCsvRow(std::ostream& out, const IterationStats& s);

class PpoTrainer {
 public:
  // `frozen` (fine-tuning) must outlive the trainer and is never modified.
  PpoTrainer(Policy policy, Task task, PpoHyper hyper, uint64_t seed,
             int workers = 1, const Policy* frozen = nullptr);

  IterationStats RunIteration();

  int iteration() const { return iteration_; }
  const Policy& policy() const { return policy_; }
  Policy& policy() { return policy_; }
  const Task& task() const { return task_; }
  const PpoHyper& hyper() const { return hyper_; }

  // Policy checkpoint plus optimizer state and iteration counter; it still
  // loads with Policy::FromCheckpoint.
  nn::Checkpoint ToCheckpoint() const;
  // Restores policy, optimizer and iteration counter. Plain policy
  // checkpoints start a fresh optimizer at iteration 0.
  void Resume(const nn::Checkpoint& ckpt);

 private:
  Policy policy_;
  Task task_;
  PpoHyper hyper_;
  uint64_t seed_;
  int workers_;
  const Policy* frozen_;
  nn::Adam adam_;
  int iteration_ = 0;
};

struct RolloutResult {
  MotionClip clip;  // start state plus one frame per control step
  std::vector<RewardBreakdown> rewards;
  bool fallen = false;
  bool diverged = false;

  int steps() const { return static_cast<int>(rewards.size()); }
  double MeanComponent(std::string_view name) const;
  double MeanTotal() const;
};

// One episode from `start`. Deterministic uses the policy mean; otherwise the
// action noise comes from `seed`. Fine-tuning rewards need `frozen`.
RolloutResult RunEpisode(const Policy& policy, Env& env, bool deterministic,
                         uint64_t seed, const Policy* frozen = nullptr,
                         int start = 0);

// Rows "step,total,<components...>" with every value at full precision.
void WriteBreakdownCsv(std::ostream& out, const RolloutResult& r);

struct FinetuneResult {
  Policy policy;
  std::vector<IterationStats> history;
};

// PPO on the fine-tuning reward with the frozen copy supplying mu_tilde. The
// task must be in fine-tuning reward mode.
FinetuneResult Finetune(const Policy& policy, const Policy& frozen,
                        const Task& task, const PpoHyper& hyper,
                        int iterations, uint64_t seed, int workers = 1,
                        const std::function<void(const IterationStats&)>&
                            on_iteration = nullptr);

}  // namespace kinres

#endif  // KINRES_RL_PPO_H_
