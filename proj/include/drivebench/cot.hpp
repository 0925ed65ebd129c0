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

// Prompting pipelines: a single direct request, the staged DriveVLM flow
// (description, analysis, planning; each answer feeds the next request), and
// the OpenEMMA flow (three description prompts, then a speed/curvature
// prediction integrated into waypoints).
//
// Predictor errors (timeout, protocol, crash) propagate as exceptions, so a
// failing stage stops the pipeline before later stages are sent.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "drivebench/bev.hpp"
#include "drivebench/predictor.hpp"
#include "drivebench/trajectory.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

enum class PipelineStyle { Direct, DriveVLM, OpenEMMA };

constexpr std::string_view to_string(PipelineStyle s) noexcept {
  switch (s) {
    case PipelineStyle::Direct: return "direct";
    case PipelineStyle::DriveVLM: return "drivevlm";
    case PipelineStyle::OpenEMMA: return "openemma";
  }
  return "?";
}

inline std::optional<PipelineStyle> parse_pipeline_style(std::string_view s) {
  for (auto v : {PipelineStyle::Direct, PipelineStyle::DriveVLM, PipelineStyle::OpenEMMA})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

struct PipelineOptions {
  int horizon_steps = kDefaultHorizonSteps;
  double dt = kDefaultDt;
  BevGridSpec grid;
  nlohmann::json assets = nlohmann::json::object();
};

namespace cot_prompts {

inline constexpr std::string_view kSceneDescription =
    "Describe the driving scene: road layout, weather, traffic lights and the key objects around the ego vehicle.";
inline constexpr std::string_view kSceneAnalysis =
    "Analyse how each key object may influence the ego vehicle's next three seconds of driving.";
inline constexpr std::string_view kIntentCommand =
    "State the ego vehicle's high-level intent (for example: keep lane, turn left, stop).";
inline constexpr std::string_view kMajorObjects =
    "List the major objects that the ego vehicle must attend to, with their positions and motion.";

inline std::string planning(int steps, double dt) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Give the meta actions, then the planned trajectory as %d waypoints (x, y) in metres at %.2f s "
                "spacing, formatted [(x1, y1), ...].",
                steps, dt);
  return buf;
}

inline std::string prediction(int steps, double dt) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Predict the next %d speeds (m/s) and curvatures (1/m) at %.2f s spacing, formatted "
                "\"speeds: [..]\" and \"curvatures: [..]\".",
                steps, dt);
  return buf;
}

}  // namespace cot_prompts

namespace detail {

inline std::vector<ChatTurn> base_messages(const PromptBundle& p) {
  std::vector<ChatTurn> m;
  m.push_back({"system", p.system_lidar});
  m.push_back({"system", p.system_radar});
  m.push_back({"system", p.system_camera});
  for (const auto& t : p.history) m.push_back(t);
  if (!p.user_prompt.empty()) m.push_back({"user", p.user_prompt});
  return m;
}

inline std::string number_list(const std::vector<double>& v) {
  std::string s = "[";
  char buf[48];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.3f", i ? ", " : "", v[i]);
    s += buf;
  }
  return s + "]";
}

inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

/// Past speeds and curvatures (heading change per metre travelled).
inline std::pair<std::vector<double>, std::vector<double>> past_speed_curvature(const std::vector<EgoState>& h) {
  std::vector<double> speeds, curvs;
  for (std::size_t i = 0; i < h.size(); ++i) {
    speeds.push_back(h[i].speed);
    double k = 0;
    if (i > 0) {
      const double travelled = h[i].speed * (h[i].t - h[i - 1].t);
      if (std::abs(travelled) > 1e-9) k = wrap_angle(h[i].heading - h[i - 1].heading) / travelled;
    }
    curvs.push_back(k);
  }
  return {speeds, curvs};
}

/// Applies the same value checks as the text parser to derived waypoints.
inline Trajectory checked(Trajectory t) {
  for (const auto& p : t.waypoints)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return Trajectory::make_invalid(InvalidReason::NonFinite, t.dt);
  for (const auto& p : t.waypoints)
    if (std::abs(p.x) > kMaxCoordinate || std::abs(p.y) > kMaxCoordinate)
      return Trajectory::make_invalid(InvalidReason::OutOfRange, t.dt);
  return t;
}

}  // namespace detail

inline Trajectory run_cot_pipeline(const Frame& frame, const PromptBundle& prompts, PipelineStyle style,
                                   Predictor& predictor, const PipelineOptions& opt = {}) {
  const int n = opt.horizon_steps;
  auto chat = [&](std::string_view stage, std::vector<ChatTurn> messages) {
    ChatRequest req;
    req.frame_id = frame.frame_id;
    req.stage = std::string(stage);
    req.messages = std::move(messages);
    req.horizon_steps = n;
    req.dt = opt.dt;
    req.ego_history = frame.ego_history;
    req.assets = opt.assets;
    return predictor.chat(req);
  };

  switch (style) {
    case PipelineStyle::Direct: {
      PredictRequest req;
      req.frame_id = frame.frame_id;
      req.horizon_steps = n;
      req.dt = opt.dt;
      req.prompts = prompts;
      req.ego_history = frame.ego_history;
      req.grid = opt.grid;
      req.assets = opt.assets;
      return parse_trajectory(predictor.predict(req).text, n, opt.dt);
    }
    case PipelineStyle::DriveVLM: {
      auto messages = detail::base_messages(prompts);
      const std::pair<std::string_view, std::string> stages[] = {
          {builtin::kStageSceneDescription, std::string(cot_prompts::kSceneDescription)},
          {builtin::kStageSceneAnalysis, std::string(cot_prompts::kSceneAnalysis)},
          {builtin::kStageHierarchicalPlanning, cot_prompts::planning(n, opt.dt)},
      };
      std::string answer;
      for (const auto& [stage, question] : stages) {
        messages.push_back({"user", question});
        answer = chat(stage, messages);
        messages.push_back({"assistant", answer});
      }
      return parse_trajectory(answer, n, opt.dt);
    }
    case PipelineStyle::OpenEMMA: {
      const auto base = detail::base_messages(prompts);
      auto ask = [&](std::string_view stage, std::string_view question) {
        auto m = base;
        m.push_back({"user", std::string(question)});
        return chat(stage, std::move(m));
      };
      const std::string scene = ask(builtin::kStageSceneDescription, cot_prompts::kSceneDescription);
      const std::string intent = ask(builtin::kStageIntentCommand, cot_prompts::kIntentCommand);
      const std::string objects = ask(builtin::kStageMajorObjects, cot_prompts::kMajorObjects);

      const auto [past_s, past_k] = detail::past_speed_curvature(frame.ego_history);
      auto m = base;
      m.push_back({"user", "Scene: " + scene + "\nIntent: " + intent + "\nObjects: " + objects +
                               "\nPast speeds: " + detail::number_list(past_s) +
                               "\nPast curvatures: " + detail::number_list(past_k) + "\n" +
                               cot_prompts::prediction(n, opt.dt)});
      const auto parsed = parse_speed_curvature(chat(builtin::kStagePrediction, std::move(m)), n);
      if (const auto* reason = std::get_if<InvalidReason>(&parsed)) return Trajectory::make_invalid(*reason, opt.dt);
      const auto& a = std::get<SpeedCurvatureAnswer>(parsed);
      SpeedCurvatureProfile profile{a.speeds, a.curvatures, 0.0, 0.0, 0.0, opt.dt};
      return detail::checked(integrate_speed_curvature(profile));
    }
  }
  throw InvalidInput("unknown pipeline style");
}

}  // namespace drivebench
