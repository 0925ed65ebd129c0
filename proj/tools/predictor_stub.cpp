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

// Reference predictor speaking the JSON-lines protocol. Answers like the
// builtin constant-velocity predictor, with faults keyed on the frame id:
//
//   "timeout"   sleeps --delay-ms before answering
//   "badid"     answers with a wrong id
//   "garbage"   answers with a non-JSON line
//   "notext"    answers without a text field
//   "crashonce" exits without answering, once per frame (needs --state-dir)
//   "crash"     exits without answering
//   "haha"      answers "HAHA"
//   "stage2_timeout" sleeps on the second chat stage only

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "drivebench/predictor.hpp"

namespace {

using nlohmann::json;
namespace db = drivebench;

db::PromptBundle prompts_from(const json& j) {
  db::PromptBundle p;
  p.system_lidar = j.at("system").at("lidar").get<std::string>();
  p.system_radar = j.at("system").at("radar").get<std::string>();
  p.system_camera = j.at("system").at("camera").get<std::string>();
  p.user_prompt = j.at("user").get<std::string>();
  for (const auto& t : j.at("history")) p.history.push_back({t.at("role").get<std::string>(), t.at("text").get<std::string>()});
  return p;
}

bool has(const std::string& s, const char* needle) { return s.find(needle) != std::string::npos; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DriveBench reference predictor"};
  int delay_ms = 2000;
  std::string state_dir;
  std::string log_path;
  app.add_option("--delay-ms", delay_ms, "Delay for timeout-tagged frames");
  app.add_option("--state-dir", state_dir, "Directory for crash-once markers");
  app.add_option("--log", log_path, "Append one line per request");
  CLI11_PARSE(app, argc, argv);

  db::ConstantVelocityPredictor model;
  std::size_t adapted = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) return 4;
    const auto id = req.value("id", std::uint64_t{0});
    const std::string type = req.value("type", "");
    std::string frame = req.value("frame_id", "");
    if (type == "adapt") frame = req.at("target").value("frame_id", "");
    const std::string stage = req.value("stage", "");
    if (!log_path.empty()) {
      std::ofstream log(log_path, std::ios::app);
      log << id << ' ' << type << ' ' << frame << ' ' << stage << '\n';
    }

    json resp = {{"id", id}};
    if (type == "shutdown") {
      resp["ok"] = true;
      std::cout << resp.dump() << std::endl;
      return 0;
    }

    if (has(frame, "crashonce") && !state_dir.empty()) {
      const auto marker = std::filesystem::path(state_dir) / (frame + "." + type + "." + stage);
      if (!std::filesystem::exists(marker)) {
        std::ofstream(marker) << "crashed\n";
        return 3;
      }
    } else if (has(frame, "crash")) {
      return 3;
    }
    if (has(frame, "stage2_timeout") ? (stage == "scene_analysis") : has(frame, "timeout"))
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    if (has(frame, "garbage")) {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    if (has(frame, "badid")) resp["id"] = id + 1000;

    if (type == "predict") {
      db::PredictRequest r;
      r.frame_id = frame;
      r.modality = db::parse_modality(req.at("modality").get<std::string>()).value_or(db::Modality::All);
      r.want_token_probs = req.at("want_token_probs").get<bool>();
      r.horizon_steps = req.at("horizon_steps").get<int>();
      r.dt = req.at("dt_s").get<double>();
      r.prompts = prompts_from(req.at("prompts"));
      r.ego_history = db::wire::history_from(req.at("ego_history"));
      auto reply = model.predict(r);
      if (has(frame, "haha")) reply = {"HAHA", reply.tokens ? std::optional(db::builtin::byte_tokens("HAHA", 1.0)) : std::nullopt};
      resp["text"] = reply.text;
      if (reply.tokens) {
        json toks = json::array();
        for (const auto& t : *reply.tokens) toks.push_back({{"id", t.id}, {"prob", t.prob}});
        resp["tokens"] = toks;
      }
    } else if (type == "chat") {
      db::ChatRequest r;
      r.frame_id = frame;
      r.stage = stage;
      r.horizon_steps = req.at("horizon_steps").get<int>();
      r.dt = req.at("dt_s").get<double>();
      r.ego_history = db::wire::history_from(req.at("ego_history"));
      resp["text"] = has(frame, "haha") ? std::string("HAHA") : model.chat(r);
    } else if (type == "adapt") {
      ++adapted;
      resp["ok"] = true;
      resp["adapted"] = adapted;
    } else {
      resp["error"] = "unknown request type";
    }
    if (has(frame, "notext")) resp.erase("text");
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}
