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

// Predictor wire protocol: newline-delimited JSON over the child's stdin and
// stdout. Every request carries a fresh, strictly increasing "id" and a
// "type" in {predict, chat, adapt, shutdown}; every response must echo the id.
//
//   predict  -> {"id", "text", "tokens"?: [{"id", "prob"}]}
//   chat     -> {"id", "text"}
//   adapt    -> {"id", "ok"?}
//   shutdown -> {"id", "ok"?}

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drivebench/bev.hpp"
#include "drivebench/errors.hpp"
#include "drivebench/subprocess.hpp"
#include "drivebench/tta.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

inline constexpr int kProtocolVersion = 1;

struct PredictRequest {
  std::string frame_id;
  Modality modality = Modality::All;
  bool want_token_probs = false;
  int horizon_steps = kDefaultHorizonSteps;
  double dt = kDefaultDt;
  PromptBundle prompts;
  std::vector<EgoState> ego_history;
  BevGridSpec grid;
  nlohmann::json assets = nlohmann::json::object();  // file paths; empty for builtins
};

struct ChatRequest {
  std::string frame_id;
  std::string stage;
  std::vector<ChatTurn> messages;
  int horizon_steps = kDefaultHorizonSteps;
  double dt = kDefaultDt;
  std::vector<EgoState> ego_history;
  nlohmann::json assets = nlohmann::json::object();
};

struct PredictorReply {
  std::string text;
  std::optional<std::vector<Token>> tokens;
};

namespace wire {

inline nlohmann::json turns(const std::vector<ChatTurn>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : v) out.push_back({{"role", t.role}, {"text", t.text}});
  return out;
}

inline nlohmann::json history(const std::vector<EgoState>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : v) out.push_back({e.t, e.x, e.y, e.heading, e.speed});
  return out;
}

inline std::vector<EgoState> history_from(const nlohmann::json& j) {
  std::vector<EgoState> out;
  for (const auto& r : j) out.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                         r.at(3).get<double>(), r.at(4).get<double>()});
  return out;
}

inline nlohmann::json encode(const PredictRequest& r) {
  return {{"type", "predict"},
          {"frame_id", r.frame_id},
          {"modality", std::string(to_string(r.modality))},
          {"want_token_probs", r.want_token_probs},
          {"horizon_steps", r.horizon_steps},
          {"dt_s", r.dt},
          {"prompts",
           {{"system", {{"lidar", r.prompts.system_lidar}, {"radar", r.prompts.system_radar},
                        {"camera", r.prompts.system_camera}}},
            {"user", r.prompts.user_prompt},
            {"history", turns(r.prompts.history)}}},
          {"ego_history", history(r.ego_history)},
          {"grid", {{"range_m", r.grid.range}, {"resolution_m", r.grid.resolution},
                    {"height_bins_m", r.grid.height_bins}}},
          {"assets", r.assets}};
}

inline nlohmann::json encode(const ChatRequest& r) {
  return {{"type", "chat"},
          {"frame_id", r.frame_id},
          {"stage", r.stage},
          {"messages", turns(r.messages)},
          {"horizon_steps", r.horizon_steps},
          {"dt_s", r.dt},
          {"ego_history", history(r.ego_history)},
          {"assets", r.assets}};
}

inline nlohmann::json encode(const DistillationTarget& t) { return {{"type", "adapt"}, {"target", to_json(t)}}; }

/// Validates the body of a predict/chat response.
inline PredictorReply decode_reply(const nlohmann::json& resp, bool allow_tokens) {
  const auto text = resp.find("text");
  if (text == resp.end() || !text->is_string()) throw ProtocolError("response lacks a string 'text' field");
  PredictorReply out{text->get<std::string>(), std::nullopt};
  const auto tokens = resp.find("tokens");
  if (tokens == resp.end() || tokens->is_null()) return out;
  if (!allow_tokens) throw ProtocolError("chat responses carry no tokens");
  if (!tokens->is_array()) throw ProtocolError("'tokens' must be an array");
  std::vector<Token> seq;
  for (const auto& t : *tokens) {
    if (!t.is_object()) throw ProtocolError("token entries must be objects");
    const auto id = t.find("id");
    const auto prob = t.find("prob");
    if (id == t.end() || !id->is_number_integer()) throw ProtocolError("token 'id' must be an integer");
    if (prob == t.end() || !prob->is_number()) throw ProtocolError("token 'prob' must be a number");
    seq.push_back({id->get<std::int64_t>(), prob->get<double>()});
  }
  out.tokens = std::move(seq);
  return out;
}

}  // namespace wire

/// One predictor process plus request/response correlation. The process is
/// started lazily and can be discarded after a failed exchange; ids keep
/// increasing across restarts.
class ProtocolChannel {
 public:
  ProtocolChannel(std::vector<std::string> argv, double timeout_s) : argv_(std::move(argv)), timeout_s_(timeout_s) {
    if (argv_.empty()) throw ConfigError("empty predictor command");
    if (!(timeout_s > 0) || !std::isfinite(timeout_s)) throw ConfigError("timeout must be positive");
  }

  void start() {
    if (!child_.running()) child_ = ChildProcess::spawn(argv_);
  }

  /// Sends `request` with the next id and returns the parsed response.
  /// Throws TimeoutError, ProtocolError or PredictorCrashed.
  nlohmann::json call(nlohmann::json request) {
    start();
    const std::uint64_t id = ++last_id_;
    request["id"] = id;
    child_.write_line(request.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    const auto ms = std::chrono::milliseconds(static_cast<long long>(std::ceil(timeout_s_ * 1000.0)));
    const auto line = child_.read_line(ms);
    if (!line) throw TimeoutError("no response to request " + std::to_string(id) + " within timeout");
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("response to request " + std::to_string(id) + " is not JSON");
    }
    if (!resp.is_object()) throw ProtocolError("response is not a JSON object");
    const auto rid = resp.find("id");
    if (rid == resp.end() || !rid->is_number_unsigned() || rid->get<std::uint64_t>() != id)
      throw ProtocolError("response id does not match request " + std::to_string(id));
    return resp;
  }

  /// Kills the process; the next call starts a fresh one.
  void restart() { child_.terminate(); }

  /// Sends "shutdown" (best effort) and waits briefly for exit.
  void shutdown() {
    if (!child_.running()) return;
    try {
      call({{"type", "shutdown"}});
    } catch (const PredictorError&) {
    }
    child_.close_and_wait(std::chrono::milliseconds(500));
  }

  std::uint64_t last_id() const noexcept { return last_id_; }
  bool running() const noexcept { return child_.running(); }

 private:
  std::vector<std::string> argv_;
  double timeout_s_;
  ChildProcess child_;
  std::uint64_t last_id_ = 0;
};

}  // namespace drivebench
