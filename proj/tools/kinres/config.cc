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

#include "config.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres::cli {
namespace {

using nlohmann::json;

const char* Kind(const json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "an array";
  if (v.is_object()) return "an object";
  return "null";
}

bool Compatible(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    if (def.empty()) return true;
    return std::all_of(v.begin(), v.end(),
                       [&](const json& e) { return Compatible(def.front(), e); });
  }
  return def.type() == v.type();
}

json PpoJson(const PpoHyper& h, int iterations) {
  return {{"clip", h.clip},
          {"epochs", h.epochs},
          {"minibatch", h.minibatch},
          {"gamma", h.gamma},
          {"gae_lambda", h.gae_lambda},
          {"lr", h.lr},
          {"value_coef", h.value_coef},
          {"max_grad_norm", h.max_grad_norm},
          {"samples_per_iter", h.samples_per_iter},
          {"normalize_advantages", h.normalize_advantages},
          {"iterations", iterations}};
}

TrainingConfig PpoFromJson(const json& j) {
  TrainingConfig t;
  PpoHyper& h = t.hyper;
  h.clip = j.at("clip");
  h.epochs = j.at("epochs");
  h.minibatch = j.at("minibatch");
  h.gamma = j.at("gamma");
  h.gae_lambda = j.at("gae_lambda");
  h.lr = j.at("lr");
  h.value_coef = j.at("value_coef");
  h.max_grad_norm = j.at("max_grad_norm");
  h.samples_per_iter = j.at("samples_per_iter");
  h.normalize_advantages = j.at("normalize_advantages");
  t.iterations = j.at("iterations");
  if (t.iterations < 0) throw ValidationError("iterations must be >= 0");
  h.Validate();
  return t;
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

json DefaultConfigJson() {
  const sim::SimConfig sim;
  const RewardWeights w;
  const PolicyConfig pol;
  const RegressorConfig reg;
  const RegressorHyper rh;
  const DatasetOptions data;
  PpoHyper fine;
  fine.samples_per_iter = 2048;
  fine.lr = 1e-4;
  json actions = json::array();
  for (ActionLabel a : data.actions) actions.push_back(std::string(ActionName(a)));
  return {
      {"model", ""},
      {"out", "out"},
      {"seed", 0},
      {"workers", 1},
      {"sim",
       {{"sim_dt", sim.sim_dt},
        {"control_dt", sim.control_dt},
        {"contact_stiffness", sim.contact_stiffness},
        {"contact_damping", sim.contact_damping},
        {"ground_friction", sim.ground_friction},
        {"torque_limit", sim.default_torque_limit},
        {"fall_height", sim.fall_height},
        {"horizon", sim.horizon}}},
      {"rewards",
       {{"imitation",
         {{"pose", w.imitation.pose},
          {"end_effector", w.imitation.end_effector},
          {"root_vel", w.imitation.root_vel},
          {"root_rot", w.imitation.root_rot},
          {"root_pos", w.imitation.root_pos}}},
        {"finetune",
         {{"head_pos", w.finetune.head_pos},
          {"head_rot", w.finetune.head_rot},
          {"head_vel", w.finetune.head_vel},
          {"pose", w.finetune.pose},
          {"action", w.finetune.action}}}}},
      {"policy",
       {{"hidden", pol.hidden},
        {"log_std", pol.log_std},
        {"out_gain", pol.out_gain},
        {"value_scale", pol.value_scale}}},
      {"ppo", PpoJson(PpoHyper{}, 200)},
      {"env", {{"random_start", true}, {"action_mode", "residual"}, {"max_steps", 0}}},
      {"finetune", PpoJson(fine, 50)},
      {"regressor",
       {{"hidden", reg.hidden},
        {"decoder_hidden", reg.decoder_hidden},
        {"steps", rh.steps},
        {"batch", rh.batch},
        {"lr", rh.adam.lr}}},
      {"data",
       {{"actions", actions},
        {"count", data.n_per_action},
        {"train_fraction", data.train_fraction},
        {"duration", data.duration},
        {"feature_noise", data.feature_noise},
        {"head_drift",
         {{"offset", {0.0, 0.0, 0.0}},
          {"bias_rate", {0.0, 0.0, 0.0}},
          {"yaw_bias_rate", 0.0},
          {"pos_noise", 0.0},
          {"rot_noise", 0.0},
          {"reversion", 1.0}}}}},
  };
}

void MergeChecked(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) {
    throw ValidationError(fmt::format("{}: expected an object", where));
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) {
      throw ValidationError(fmt::format("unknown config key '{}'", key));
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      MergeChecked(slot, it.value(), key);
    } else if (Compatible(slot, it.value())) {
      slot = it.value();
    } else {
      throw ValidationError(fmt::format("config key '{}' must be {}, got {}", key,
                                        Kind(slot), Kind(it.value())));
    }
  }
}

void ApplyEnvOverrides(json& config, char** envp) {
  if (envp == nullptr) return;
  constexpr std::string_view kPrefix = "KINRES_";
  for (char** e = envp; *e != nullptr; ++e) {
    const std::string entry = *e;
    if (entry.rfind(kPrefix, 0) != 0) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(0, eq);
    const std::string text = entry.substr(eq + 1);
    std::string rest = Lower(name.substr(kPrefix.size()));
    std::vector<std::string> path;
    for (size_t pos = 0;;) {
      const size_t next = rest.find("__", pos);
      path.push_back(rest.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json overlay = value;
    for (auto p = path.rbegin(); p != path.rend(); ++p) overlay = json{{*p, overlay}};
    try {
      MergeChecked(config, overlay, "");
    } catch (const ValidationError& err) {
      throw ValidationError(fmt::format("environment variable {}: {}", name, err.what()));
    }
  }
}

GlobalConfig ConfigFromJson(const json& j) {
  try {
    GlobalConfig c;
    c.model = j.at("model");
    c.out = j.at("out");
    c.seed = j.at("seed");
    c.workers = j.at("workers");
    if (c.workers < 1) throw ValidationError("workers must be >= 1");

    const json& s = j.at("sim");
    c.sim.sim_dt = s.at("sim_dt");
    c.sim.control_dt = s.at("control_dt");
    c.sim.contact_stiffness = s.at("contact_stiffness");
    c.sim.contact_damping = s.at("contact_damping");
    c.sim.ground_friction = s.at("ground_friction");
    c.sim.default_torque_limit = s.at("torque_limit");
    c.sim.fall_height = s.at("fall_height");
    c.sim.horizon = s.at("horizon");
    c.sim.Validate();

    const json& wi = j.at("rewards").at("imitation");
    const json& wf = j.at("rewards").at("finetune");
    RewardWeights w;
    w.imitation = {wi.at("pose"), wi.at("end_effector"), wi.at("root_vel"),
                   wi.at("root_rot"), wi.at("root_pos")};
    w.finetune = {wf.at("head_pos"), wf.at("head_rot"), wf.at("head_vel"),
                  wf.at("pose"), wf.at("action")};
    c.weights = w.Normalized();

    const json& p = j.at("policy");
    c.policy.hidden = p.at("hidden").get<std::vector<int>>();
    c.policy.log_std = p.at("log_std");
    c.policy.out_gain = p.at("out_gain");
    c.policy.value_scale = p.at("value_scale");

    c.ppo = PpoFromJson(j.at("ppo"));
    c.finetune = PpoFromJson(j.at("finetune"));
    const json& env = j.at("env");
    c.random_start = env.at("random_start");
    c.max_steps = env.at("max_steps");
    const std::string mode = env.at("action_mode");
    if (mode == "residual") {
      c.action_mode = ActionMode::kResidual;
    } else if (mode == "direct") {
      c.action_mode = ActionMode::kDirect;
    } else {
      throw ValidationError(fmt::format(
          "env.action_mode must be 'residual' or 'direct', got '{}'", mode));
    }

    const json& r = j.at("regressor");
    c.regressor.hidden = r.at("hidden");
    c.regressor.decoder_hidden = r.at("decoder_hidden").get<std::vector<int>>();
    c.regressor_train.steps = r.at("steps");
    c.regressor_train.batch = r.at("batch");
    c.regressor_train.adam.lr = r.at("lr");

    const json& d = j.at("data");
    c.data.actions.clear();
    for (const auto& a : d.at("actions")) c.data.actions.push_back(ParseAction(a.get<std::string>()));
    c.data.n_per_action = d.at("count");
    c.data.train_fraction = d.at("train_fraction");
    c.data.duration = d.at("duration");
    c.data.feature_noise = d.at("feature_noise");
    const json& h = d.at("head_drift");
    auto vec3 = [](const json& a, const char* name) {
      if (a.size() != 3) throw ValidationError(fmt::format("{} needs 3 numbers", name));
      return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    c.head_drift.offset = vec3(h.at("offset"), "data.head_drift.offset");
    c.head_drift.bias_rate = vec3(h.at("bias_rate"), "data.head_drift.bias_rate");
    c.head_drift.yaw_bias_rate = h.at("yaw_bias_rate");
    c.head_drift.pos_noise = h.at("pos_noise");
    c.head_drift.rot_noise = h.at("rot_noise");
    c.head_drift.reversion = h.at("reversion");
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("invalid config: {}", e.what()));
  }
}

json LoadConfigJson(const std::filesystem::path& file, char** envp) {
  json config = DefaultConfigJson();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw IoError(fmt::format("cannot read config '{}'", file.string()));
    std::stringstream text;
    text << in.rdbuf();
    json user = json::parse(text.str(), nullptr, false);
    if (user.is_discarded()) {
      throw ParseError(fmt::format("{}: not valid JSON", file.string()));
    }
    try {
      MergeChecked(config, user, "");
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: {}", file.string(), e.what()));
    }
  }
  ApplyEnvOverrides(config, envp);
  return config;
}

}  // namespace kinres::cli
