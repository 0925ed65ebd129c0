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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "drivebench/harness.hpp"
#include "drivebench/predictor.hpp"
#include "drivebench/synthetic.hpp"
#include "test_util.hpp"

namespace db = drivebench;
using db::testing::TempDir;
using nlohmann::json;

namespace {

json predict_json(const std::string& frame_id) {
  db::PredictRequest r;
  r.frame_id = frame_id;
  r.ego_history = db::make_synthetic_frame(1, 0).ego_history;
  r.prompts.user_prompt = "Predict.";
  return db::wire::encode(r);
}

std::vector<std::string> stub(std::vector<std::string> extra = {}) {
  std::vector<std::string> argv = {PREDICTOR_STUB};
  argv.insert(argv.end(), extra.begin(), extra.end());
  return argv;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(CommandLine, SplitsWithQuotes) {
  EXPECT_EQ(db::split_command_line(R"(python3 "my model.py" --flag 'a b' c\ d)"),
            (std::vector<std::string>{"python3", "my model.py", "--flag", "a b", "c d"}));
  EXPECT_TRUE(db::split_command_line("   ").empty());
  EXPECT_THROW(db::split_command_line("a 'b"), db::ConfigError);
}

TEST(WireFormat, PredictRequestFields) {
  const auto j = predict_json("f1");
  EXPECT_EQ(j.at("type"), "predict");
  EXPECT_EQ(j.at("modality"), "all");
  EXPECT_EQ(j.at("horizon_steps"), 6);
  EXPECT_EQ(j.at("dt_s"), 0.5);
  EXPECT_EQ(j.at("prompts").at("user"), "Predict.");
  EXPECT_TRUE(j.at("prompts").at("system").contains("lidar"));
  EXPECT_EQ(j.at("ego_history").size(), 4u);
  EXPECT_EQ(j.at("ego_history")[0].size(), 5u);
  EXPECT_EQ(j.at("grid").at("resolution_m"), 0.2);
}

TEST(WireFormat, DecodeReplyValidates) {
  EXPECT_EQ(db::wire::decode_reply({{"id", 1}, {"text", "hi"}}, true).text, "hi");
  const auto r = db::wire::decode_reply({{"text", "x"}, {"tokens", {{{"id", 7}, {"prob", 0.5}}}}}, true);
  ASSERT_TRUE(r.tokens);
  EXPECT_EQ((*r.tokens)[0], (db::Token{7, 0.5}));
  EXPECT_THROW(db::wire::decode_reply({{"id", 1}}, true), db::ProtocolError);
  EXPECT_THROW(db::wire::decode_reply({{"text", 3}}, true), db::ProtocolError);
  EXPECT_THROW(db::wire::decode_reply({{"text", "x"}, {"tokens", {{{"id", "a"}, {"prob", 0.5}}}}}, true),
               db::ProtocolError);
  EXPECT_THROW(db::wire::decode_reply({{"text", "x"}, {"tokens", json::array()}}, false), db::ProtocolError);
}

TEST(Channel, PredictChatAdaptShutdown) {
  TempDir dir;
  const auto log = dir / "log.txt";
  db::SubprocessPredictor p(stub({"--log", log.string()}), 10.0);
  p.start();
  db::PredictRequest req;
  req.frame_id = "synth_0001";
  req.ego_history = db::make_synthetic_frame(1, 0).ego_history;
  req.want_token_probs = true;
  req.modality = db::Modality::CameraOnly;
  const auto reply = p.predict(req);
  const auto t = db::parse_trajectory(reply.text);
  ASSERT_TRUE(t.valid()) << reply.text;
  EXPECT_DOUBLE_EQ(t.waypoints[0].x, 1.0);  // speed 2 m/s at 0.5 s
  ASSERT_TRUE(reply.tokens);
  EXPECT_EQ(reply.tokens->size(), reply.text.size());
  EXPECT_EQ(reply.tokens->front().prob, 0.99);

  db::ChatRequest chat;
  chat.frame_id = "synth_0001";
  chat.stage = std::string(db::builtin::kStageIntentCommand);
  chat.ego_history = req.ego_history;
  EXPECT_FALSE(p.chat(chat).empty());

  p.adapt(db::build_distillation_targets("synth_0001", {db::Modality::All, {{1, 0.5}}, "x"}));
  EXPECT_EQ(p.channel().last_id(), 3u);
  p.shutdown();
  EXPECT_FALSE(p.channel().running());
  EXPECT_EQ(read_lines(log), (std::vector<std::string>{"1 predict synth_0001 ", "2 chat synth_0001 intent_command",
                                                       "3 adapt synth_0001 ", "4 shutdown  "}));
}

TEST(Channel, IdMismatchIsProtocolError) {
  db::ProtocolChannel ch(stub(), 10.0);
  EXPECT_THROW(ch.call(predict_json("x_badid")), db::ProtocolError);
}

TEST(Channel, NonJsonIsProtocolError) {
  db::ProtocolChannel ch(stub(), 10.0);
  EXPECT_THROW(ch.call(predict_json("x_garbage")), db::ProtocolError);
}

TEST(Channel, MissingTextIsProtocolError) {
  db::SubprocessPredictor p(stub(), 10.0);
  db::PredictRequest req;
  req.frame_id = "x_notext";
  EXPECT_THROW(p.predict(req), db::ProtocolError);
}

TEST(Channel, SilenceIsTimeoutAndRestartRecovers) {
  db::ProtocolChannel ch(stub({"--delay-ms", "3000"}), 0.3);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(ch.call(predict_json("x_timeout")), db::TimeoutError);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(2));
  ch.restart();
  const auto resp = ch.call(predict_json("x_fine"));
  EXPECT_EQ(resp.at("id"), 2);
  EXPECT_TRUE(resp.at("text").is_string());
}

TEST(Channel, ExitIsPredictorCrashed) {
  db::ProtocolChannel ch(stub(), 10.0);
  EXPECT_THROW(ch.call(predict_json("x_crash")), db::PredictorCrashed);
}

TEST(Channel, MissingBinaryIsLaunchError) {
  db::ProtocolChannel ch({"/nonexistent/drivebench-predictor"}, 1.0);
  EXPECT_THROW(ch.start(), db::PredictorLaunchError);
  EXPECT_THROW(db::make_predictor("/nonexistent/drivebench-predictor --x", 1.0), db::PredictorLaunchError);
  EXPECT_THROW(db::make_predictor("builtin:nope", 1.0), db::ConfigError);
}

TEST(Builtins, EchoHahaAnswersInjectedPrompts) {
  db::EchoHahaPredictor p;
  db::PredictRequest req;
  req.ego_history = db::make_synthetic_frame(0, 0).ego_history;
  req.prompts.user_prompt = "Predict.";
  EXPECT_TRUE(db::parse_trajectory(p.predict(req).text).valid());
  req.prompts.history.push_back({"passenger", std::string(db::kInjectionTemplate)});
  EXPECT_EQ(p.predict(req).text, "HAHA");
}

// Fifty scripted exchanges over one stub: predict frames scored by the
// harness, DriveVLM chat frames, adaptation targets, then shutdown.
TEST(Conformance, FiftyScriptedExchanges) {
  TempDir dir;
  const auto log = dir / "log.txt";
  db::SubprocessPredictor p(stub({"--delay-ms", "1500", "--log", log.string()}), 0.3);
  p.start();
  const auto prompts = db::default_prompts();
  auto frame = [](std::size_t i, const std::string& tag) {
    auto f = db::make_synthetic_frame(i, 3);
    f.frame_id = "c" + std::to_string(i) + tag;
    return f;
  };

  std::vector<db::FrameResult> direct;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::string tag = i % 5 == 1 ? "_timeout" : i % 5 == 3 ? "_badid" : "";
    const db::CellInputs in{frame(i, tag), prompts};
    direct.push_back(db::score_frame(p, in, db::PipelineStyle::Direct, {}, db::L2Convention::MeanUpTo, {}));
  }
  const auto stats = db::aggregate_run(direct);
  EXPECT_EQ(stats.sample_nums, 20u);
  EXPECT_EQ(stats.invalid_reasons, (std::map<std::string, std::size_t>{{"ProtocolError", 4}, {"Timeout", 4}}));
  EXPECT_DOUBLE_EQ(*stats.avg_l2, 0.0);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto expect = i % 5 == 1   ? std::optional(db::InvalidReason::Timeout)
                        : i % 5 == 3 ? std::optional(db::InvalidReason::ProtocolError)
                                     : std::nullopt;
    EXPECT_EQ(direct[i].invalid, expect) << i;
  }

  std::vector<db::FrameResult> cot;
  for (std::size_t i = 20; i < 25; ++i) {
    const db::CellInputs in{frame(i, i == 22 ? "_badid" : ""), prompts};
    cot.push_back(db::score_frame(p, in, db::PipelineStyle::DriveVLM, {}, db::L2Convention::MeanUpTo, {}));
  }
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_EQ(cot[i].invalid, i == 2 ? std::optional(db::InvalidReason::ProtocolError) : std::nullopt) << i;

  for (std::size_t i = 0; i < 16; ++i)
    p.adapt(db::build_distillation_targets("a" + std::to_string(i), {db::Modality::LidarOnly, {{3, 0.25}}, "x"}));
  p.shutdown();

  const auto lines = read_lines(log);
  ASSERT_EQ(lines.size(), 50u);  // 20 predict + 13 chat + 16 adapt + 1 shutdown
  std::map<std::string, int> types;
  for (const auto& l : lines) {
    std::istringstream ss(l);
    std::string id, type;
    ss >> id >> type;
    ++types[type];
  }
  EXPECT_EQ(types, (std::map<std::string, int>{{"adapt", 16}, {"chat", 13}, {"predict", 20}, {"shutdown", 1}}));
  EXPECT_EQ(lines.back().substr(0, 3), "50 ");
}
