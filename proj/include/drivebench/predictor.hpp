// Copyright 2026 The DriveBench Authors. All Rights Reserved.
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

#pragma once

// Predictor interface, the builtin predictors, and the subprocess adapter.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/prompt_corruption.hpp"
#include "drivebench/protocol.hpp"
#include "drivebench/trajectory.hpp"
#include "drivebench/tta.hpp"

namespace drivebench {

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictorReply predict(const PredictRequest& req) = 0;
  virtual std::string chat(const ChatRequest& req) = 0;
  virtual void adapt(const DistillationTarget& target) = 0;
  virtual void shutdown() {}
  /// Drops any state left by a failed exchange (subprocess: kill it).
  virtual void reset() {}
  /// True if requests must carry asset file paths.
  virtual bool wants_assets() const { return false; }
};

namespace builtin {

/// Stage names understood by the builtins and sent by the CoT pipelines.
inline constexpr std::string_view kStageSceneDescription = "scene_description";
inline constexpr std::string_view kStageSceneAnalysis = "scene_analysis";
inline constexpr std::string_view kStageHierarchicalPlanning = "hierarchical_planning";
inline constexpr std::string_view kStageIntentCommand = "intent_command";
inline constexpr std::string_view kStageMajorObjects = "major_objects";
inline constexpr std::string_view kStagePrediction = "prediction";

/// Token probability reported by the builtins per modality, so selection
/// has a unique winner (All).
constexpr double modality_token_prob(Modality m) noexcept {
  switch (m) {
    case Modality::LidarOnly: return 0.98;
    case Modality::CameraOnly: return 0.99;
    case Modality::All: return 1.0;
  }
  return 1.0;
}

/// One token per byte of `text`.
inline std::vector<Token> byte_tokens(std::string_view text, double prob) {
  std::vector<Token> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back({static_cast<std::int64_t>(c), prob});
  return out;
}

}  // namespace builtin

/// Extrapolates the ego history at constant velocity. Answers every stage of
/// both CoT styles.
class ConstantVelocityPredictor : public Predictor {
 public:
  PredictorReply predict(const PredictRequest& req) override {
    PredictorReply r{trajectory_text(req.ego_history, req.horizon_steps, req.dt), std::nullopt};
    if (req.want_token_probs) r.tokens = builtin::byte_tokens(r.text, builtin::modality_token_prob(req.modality));
    return r;
  }

  std::string chat(const ChatRequest& req) override {
    using namespace builtin;
    if (req.stage == kStageSceneDescription) return "A straight road ahead; no vehicle blocks the ego lane.";
    if (req.stage == kStageSceneAnalysis) return "No object affects the ego motion; keep the current speed.";
    if (req.stage == kStageIntentCommand) return "Keep lane at the current speed.";
    if (req.stage == kStageMajorObjects) return "No critical objects.";
    if (req.stage == kStageHierarchicalPlanning)
      return "Meta actions: keep lane, keep speed.\nTrajectory: " +
             trajectory_text(req.ego_history, req.horizon_steps, req.dt);
    if (req.stage == kStagePrediction) {
      const double v = speed(req.ego_history);
      return format_speed_curvature(std::vector<double>(static_cast<std::size_t>(req.horizon_steps), v),
                                    std::vector<double>(static_cast<std::size_t>(req.horizon_steps), 0.0));
    }
    return "Unknown stage.";
  }

  void adapt(const DistillationTarget&) override { ++adapt_count_; }
  std::size_t adapt_count() const noexcept { return adapt_count_; }

 private:
  // Without two usable history samples the answer carries no list and
  // scores as Invalid(NoList).
  static std::string trajectory_text(const std::vector<EgoState>& h, int steps, double dt) {
    try {
      return format_trajectory(constant_velocity_baseline(h, steps, dt));
    } catch (const InsufficientHistory&) {
      return "Insufficient history.";
    }
  }
  static double speed(const std::vector<EgoState>& h) {
    try {
      const auto t = constant_velocity_baseline(h, 1, 1.0);
      return std::hypot(t.waypoints[0].x, t.waypoints[0].y);
    } catch (const InsufficientHistory&) {
      return 0.0;
    }
  }

  std::size_t adapt_count_ = 0;
};

/// Answers "HAHA" whenever the injection template appears anywhere in the
/// prompt text, otherwise behaves like the constant-velocity predictor.
class EchoHahaPredictor : public ConstantVelocityPredictor {
 public:
  PredictorReply predict(const PredictRequest& req) override {
    if (!injected(req)) return ConstantVelocityPredictor::predict(req);
    PredictorReply r{"HAHA", std::nullopt};
    if (req.want_token_probs) r.tokens = builtin::byte_tokens(r.text, 1.0);
    return r;
  }
  std::string chat(const ChatRequest& req) override {
    for (const auto& m : req.messages)
      if (contains_template(m.text)) return "HAHA";
    return ConstantVelocityPredictor::chat(req);
  }

 private:
  static bool contains_template(std::string_view s) { return s.find(kInjectionTemplate) != std::string_view::npos; }
  static bool injected(const PredictRequest& req) {
    const auto& p = req.prompts;
    if (contains_template(p.user_prompt) || contains_template(p.system_lidar) || contains_template(p.system_radar) ||
        contains_template(p.system_camera))
      return true;
    for (const auto& t : p.history)
      if (contains_template(t.text)) return true;
    return false;
  }
};

/// Speaks the wire protocol with an external process.
class SubprocessPredictor : public Predictor {
 public:
  SubprocessPredictor(std::vector<std::string> argv, double timeout_s) : channel_(std::move(argv), timeout_s) {}
  ~SubprocessPredictor() override { shutdown(); }

  /// Starts the process now so launch failures surface before any frame.
  void start() { channel_.start(); }

  PredictorReply predict(const PredictRequest& req) override {
    return wire::decode_reply(channel_.call(wire::encode(req)), true);
  }
  std::string chat(const ChatRequest& req) override {
    return wire::decode_reply(channel_.call(wire::encode(req)), false).text;
  }
  void adapt(const DistillationTarget& target) override {
    const auto resp = channel_.call(wire::encode(target));
    if (const auto ok = resp.find("ok"); ok != resp.end() && *ok == false)
      throw ProtocolError("predictor rejected an adaptation target");
  }
  void shutdown() override { channel_.shutdown(); }
  void reset() override { channel_.restart(); }
  bool wants_assets() const override { return true; }

  const ProtocolChannel& channel() const noexcept { return channel_; }

 private:
  ProtocolChannel channel_;
};

inline constexpr std::string_view kBuiltinPrefix = "builtin:";

/// "builtin:cv", "builtin:echo-haha", or an external command line.
inline std::unique_ptr<Predictor> make_predictor(std::string_view spec, double timeout_s) {
  if (spec.substr(0, kBuiltinPrefix.size()) == kBuiltinPrefix) {
    const auto name = spec.substr(kBuiltinPrefix.size());
    if (name == "cv") return std::make_unique<ConstantVelocityPredictor>();
    if (name == "echo-haha") return std::make_unique<EchoHahaPredictor>();
    throw ConfigError("unknown builtin predictor '" + std::string(name) + "'");
  }
  auto argv = split_command_line(spec);
  if (argv.empty()) throw ConfigError("empty predictor command");
  auto p = std::make_unique<SubprocessPredictor>(std::move(argv), timeout_s);
  p->start();
  return p;
}

}  // namespace drivebench
