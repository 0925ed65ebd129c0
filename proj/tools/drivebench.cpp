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

// drivebench: evaluation harness command line.
//
// Exit codes: 0 success, 2 configuration or input error, 3 predictor launch
// failure. Per-frame predictor failures are recorded in the report and never
// change the exit code.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drivebench/drivebench.hpp"

namespace db = drivebench;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitLaunch = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<db::CorruptionKind> parse_kinds(const std::string& s) {
  if (s == "all") return {db::kAllCorruptionKinds.begin(), db::kAllCorruptionKinds.end()};
  if (s == "none" || s.empty()) return {};
  std::vector<db::CorruptionKind> out;
  for (const auto& name : split(s, ',')) {
    const auto k = db::parse_corruption_kind(name);
    if (!k) throw db::ConfigError("unknown corruption '" + name + "'");
    out.push_back(*k);
  }
  return out;
}

std::vector<db::Severity> parse_severities(const std::string& s) {
  std::vector<db::Severity> out;
  for (const auto& name : split(s, ',')) {
    const auto v = db::parse_severity(name);
    if (!v) throw db::ConfigError("unknown severity '" + name + "'");
    out.push_back(*v);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw db::ConfigError("invalid " + what + " '" + s + "'");
  }
}

/// "off", or "n=32" optionally followed by ",seed=7".
db::TtaOptions parse_tta(const std::string& s) {
  db::TtaOptions t;
  if (s.empty() || s == "off") return t;
  t.enabled = true;
  for (const auto& part : split(s, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw db::ConfigError("invalid --tta entry '" + part + "'");
    const std::string key = part.substr(0, eq), value = part.substr(eq + 1);
    if (key == "n") {
      t.n = parse_u64(value, "TTA sample count");
    } else if (key == "seed") {
      t.seed = parse_u64(value, "TTA seed");
    } else if (key == "score") {
      if (value == "joint") t.score = db::SelectionScore::Joint;
      else if (value == "per_token_mean") t.score = db::SelectionScore::PerTokenMean;
      else throw db::ConfigError("unknown TTA score '" + value + "'");
    } else {
      throw db::ConfigError("unknown --tta key '" + key + "'");
    }
  }
  return t;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw db::ConfigError("cannot write '" + path + "'");
  os << text;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw db::ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

db::PromptBundle prompt_from_json(const nlohmann::json& j) {
  db::PromptBundle p;
  p.system_lidar = j.value("system_lidar", "");
  p.system_radar = j.value("system_radar", "");
  p.system_camera = j.value("system_camera", "");
  p.user_prompt = j.value("user_prompt", "");
  if (j.contains("history"))
    for (const auto& t : j.at("history")) p.history.push_back({t.at("role").get<std::string>(), t.at("text").get<std::string>()});
  return p;
}

nlohmann::json prompt_to_json(const db::PromptBundle& p) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& t : p.history) h.push_back({{"role", t.role}, {"text", t.text}});
  return {{"system_lidar", p.system_lidar}, {"system_radar", p.system_radar}, {"system_camera", p.system_camera},
          {"user_prompt", p.user_prompt}, {"history", h}};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DriveBench: corruption robustness evaluation for driving trajectory predictors"};
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a predictor over a corruption matrix");
  std::string manifest, predictor = "builtin:cv", corruptions = "all", severities = "easy,mid,hard", tta = "off";
  std::string out, format = "json", style = "direct", corpus_dir, horizon = "mean_up_to", workdir;
  std::uint64_t seed = 0;
  double timeout_s = 30.0;
  std::size_t workers = 1;
  std::vector<double> footprint;
  eval->add_option("--manifest", manifest, "Scenario manifest.json")->required();
  eval->add_option("--predictor", predictor, "builtin:cv, builtin:echo-haha, or a command line");
  eval->add_option("--corruptions", corruptions, "Comma list of corruption kinds, 'all' or 'none'");
  eval->add_option("--severities", severities, "Comma list of easy, mid, hard");
  eval->add_option("--seed", seed, "Run seed");
  eval->add_option("--tta", tta, "'off' or n=K[,seed=S][,score=joint|per_token_mean]");
  eval->add_option("--out", out, "Output path (default stdout)");
  eval->add_option("--format", format, "json or md")->check(CLI::IsMember({"json", "md"}));
  eval->add_option("--timeout-s", timeout_s, "Per-request predictor timeout in seconds");
  eval->add_option("--workers", workers, "Predictor worker processes");
  eval->add_option("--style", style, "direct, drivevlm or openemma")->check(CLI::IsMember({"direct", "drivevlm", "openemma"}));
  eval->add_option("--corpus-dir", corpus_dir, "Directory with commands.txt and dialogues.txt");
  eval->add_option("--metric-horizon", horizon, "mean_up_to or at_horizon")->check(CLI::IsMember({"mean_up_to", "at_horizon"}));
  eval->add_option("--ego-footprint", footprint, "Ego length and width in metres")->expected(2);
  eval->add_option("--workdir", workdir, "Directory for predictor input assets");

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Apply one corruption to a single file");
  std::string kind, severity, in_path, out_path;
  std::uint64_t corrupt_seed = 0;
  int record_floats = 4;
  corrupt->add_option("--kind", kind, "Corruption kind")->required();
  corrupt->add_option("--severity", severity, "easy, mid or hard");
  corrupt->add_option("--seed", corrupt_seed, "Seed");
  corrupt->add_option("--in", in_path, ".png image, .bin LiDAR sweep, .json prompt bundle or .txt prompt")->required();
  corrupt->add_option("--out", out_path, "Output file")->required();
  corrupt->add_option("--lidar-record-floats", record_floats, "Floats per LiDAR record (4 or 5)");
  corrupt->add_option("--corpus-dir", corpus_dir, "Directory with commands.txt and dialogues.txt");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic scenario");
  std::string synth_out;
  std::size_t frames = 10;
  std::uint64_t synth_seed = 0;
  bool obstacle = false;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--frames", frames, "Frame count");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_flag("--obstacle-on-path", obstacle, "Place an obstacle on the ego path");

  // params
  auto* params = app.add_subcommand("params", "Print the corruption parameter table as JSON");

  // validate
  auto* validate = app.add_subcommand("validate", "Load and check a scenario manifest");
  std::string validate_manifest;
  validate->add_option("--manifest", validate_manifest, "Scenario manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*eval) {
      db::RunConfig cfg;
      cfg.manifest = manifest;
      cfg.predictor = predictor;
      cfg.corruptions = parse_kinds(corruptions);
      cfg.severities = parse_severities(severities);
      cfg.seed = seed;
      cfg.tta = parse_tta(tta);
      cfg.timeout_s = timeout_s;
      cfg.workers = workers;
      cfg.style = *db::parse_pipeline_style(style);
      cfg.corpus_dir = corpus_dir;
      cfg.workdir = workdir;
      cfg.l2_convention = horizon == "at_horizon" ? db::L2Convention::AtHorizon : db::L2Convention::MeanUpTo;
      if (!footprint.empty()) cfg.ego = {footprint[0], footprint[1]};
      const auto report = db::run_eval(cfg);
      write_output(out, db::emit_report(report, format == "md" ? db::ReportFormat::Markdown : db::ReportFormat::Json));
    } else if (*corrupt) {
      const auto k = db::parse_corruption_kind(kind);
      if (!k) throw db::ConfigError("unknown corruption '" + kind + "'");
      std::optional<db::Severity> sev;
      if (!severity.empty()) {
        sev = db::parse_severity(severity);
        if (!sev) throw db::ConfigError("unknown severity '" + severity + "'");
      }
      if (ends_with(in_path, ".png")) {
        const auto img = db::png::read(in_path);
        db::png::write(out_path, db::corrupt_image(img, {db::CorruptionTarget::Image, *k, sev, corrupt_seed}));
      } else if (ends_with(in_path, ".bin")) {
        const auto cloud = db::decode_lidar(db::detail::read_bytes(in_path, "", "lidar"), record_floats);
        const auto outc = db::corrupt_pointcloud(cloud, {db::CorruptionTarget::PointCloud, *k, sev, corrupt_seed});
        db::detail::write_bytes(out_path, db::encode_lidar(outc));
      } else {
        db::AttackCorpus corpus;
        if (*k == db::CorruptionKind::CommandOverride || *k == db::CorruptionKind::DialogueInjection)
          corpus = db::load_corpus(corpus_dir.empty() ? db::default_corpus_dir() : std::filesystem::path(corpus_dir));
        const db::CorruptionSpec spec{db::CorruptionTarget::Prompt, *k, sev, corrupt_seed};
        if (ends_with(in_path, ".json")) {
          const auto p = prompt_from_json(nlohmann::json::parse(read_text(in_path)));
          write_output(out_path, prompt_to_json(db::corrupt_prompt(p, spec, corpus)).dump(2) + "\n");
        } else {
          db::PromptBundle p;
          p.user_prompt = read_text(in_path);
          const auto r = db::corrupt_prompt(p, spec, corpus);
          std::string text = r.user_prompt;
          for (const auto& t : r.history) text += "\n" + t.role + ": " + t.text;
          write_output(out_path, text);
        }
      }
    } else if (*synth) {
      db::SyntheticOptions opt;
      opt.obstacle_on_path = obstacle;
      const auto path = db::save_scenario(db::make_synthetic_scenario(frames, synth_seed, opt), synth_out);
      std::cout << path.string() << "\n";
    } else if (*params) {
      std::cout << db::parameter_table().dump(2) << "\n";
    } else if (*validate) {
      const auto s = db::load_scenario(validate_manifest);
      std::cout << "ok: " << s.frames.size() << " frames\n";
    }
  } catch (const db::PredictorLaunchError& e) {
    std::cerr << "drivebench: predictor launch failed: " << e.what() << "\n";
    return kExitLaunch;
  } catch (const db::ScenarioError& e) {
    std::cerr << "drivebench: " << e.what();
    if (!e.frame_id().empty()) std::cerr << " (frame " << e.frame_id() << ", " << e.field() << ")";
    std::cerr << "\n";
    return kExitConfig;
  } catch (const db::Error& e) {
    std::cerr << "drivebench: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "drivebench: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
