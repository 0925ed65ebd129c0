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

// Evaluation report: schema-versioned JSON and Markdown tables.

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drivebench/errors.hpp"
#include "drivebench/metrics.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

inline constexpr std::string_view kToolkitVersion = "0.1.0";
inline constexpr std::string_view kReportSchema = "drivebench.eval_report";
inline constexpr int kReportSchemaVersion = 1;

/// One (kind, severity) cell; severity is absent for kinds without levels.
struct CellReport {
  std::optional<Severity> severity;
  RunStats stats;
  bool operator==(const CellReport&) const = default;
};

/// All cells of one corruption kind, pooled, with the ratios against Clean.
/// Ratios are absent when undefined (zero clean value, or no valid sample).
struct CorruptionRow {
  CorruptionKind kind = CorruptionKind::Dark;
  std::vector<CellReport> cells;
  RunStats pooled;
  std::optional<double> mcl2;
  std::optional<double> mcc;
  std::optional<double> penalty;
  bool operator==(const CorruptionRow&) const = default;
};

struct TtaSummary {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t adapted = 0;  // targets sent (per worker counted once)
  std::size_t skipped = 0;  // sampled frames without usable candidates
  std::map<std::string, std::size_t> selected;  // modality -> count
  bool operator==(const TtaSummary&) const = default;
};

struct EvalReport {
  std::string toolkit_version{kToolkitVersion};
  std::string predictor;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> corpus_hashes;
  std::size_t frames = 0;
  std::size_t case_count = 0;  // corrupted cases, Clean excluded
  RunStats clean;
  std::vector<CorruptionRow> rows;
  std::optional<TtaSummary> tta;
  bool operator==(const EvalReport&) const = default;
};

/// Fills the pooled ratios of `row` against `clean`.
inline void finalize_row(CorruptionRow& row, const RunStats& clean) {
  auto attempt = [](auto&& f) -> std::optional<double> {
    try {
      return f();
    } catch (const DivisionByZero&) {
      return std::nullopt;
    } catch (const InvalidInput&) {
      return std::nullopt;
    }
  };
  row.mcl2 = attempt([&] { return mcl2(row.pooled, clean); });
  row.mcc = attempt([&] { return mcc(row.pooled, clean); });
  row.penalty = attempt([&] { return penalty_factor(row.pooled); });
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const RunStats& s) {
  return {{"avg_l2", detail::opt_json(s.avg_l2)},   {"l2_at", detail::opt_json(s.l2_at)},
          {"avg_col", detail::opt_json(s.avg_col)}, {"col_at", detail::opt_json(s.col_at)},
          {"invalid_nums", s.invalid_nums},         {"sample_nums", s.sample_nums},
          {"invalid_reasons", s.invalid_reasons}};
}

inline RunStats run_stats_from_json(const nlohmann::json& j) {
  RunStats s;
  s.avg_l2 = detail::opt_from<double>(j, "avg_l2");
  s.l2_at = detail::opt_from<std::array<double, 3>>(j, "l2_at");
  s.avg_col = detail::opt_from<double>(j, "avg_col");
  s.col_at = detail::opt_from<std::array<double, 3>>(j, "col_at");
  s.invalid_nums = j.at("invalid_nums").get<std::size_t>();
  s.sample_nums = j.at("sample_nums").get<std::size_t>();
  s.invalid_reasons = j.at("invalid_reasons").get<std::map<std::string, std::size_t>>();
  return s;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : row.cells)
      cells.push_back({{"severity", c.severity ? nlohmann::json(std::string(to_string(*c.severity))) : nullptr},
                       {"stats", to_json(c.stats)}});
    rows.push_back({{"corruption", std::string(to_string(row.kind))},
                    {"cells", std::move(cells)},
                    {"pooled", to_json(row.pooled)},
                    {"mcl2", detail::opt_json(row.mcl2)},
                    {"mcc", detail::opt_json(row.mcc)},
                    {"penalty_factor", detail::opt_json(row.penalty)}});
  }
  nlohmann::json out = {{"schema", std::string(kReportSchema)},
                        {"schema_version", kReportSchemaVersion},
                        {"toolkit_version", r.toolkit_version},
                        {"predictor", r.predictor},
                        {"config", r.config},
                        {"corpus_hashes", r.corpus_hashes},
                        {"frames", r.frames},
                        {"case_count", r.case_count},
                        {"clean", to_json(r.clean)},
                        {"rows", std::move(rows)},
                        {"tta", nullptr}};
  if (r.tta)
    out["tta"] = {{"n", r.tta->n},
                  {"seed", r.tta->seed},
                  {"adapted", r.tta->adapted},
                  {"skipped", r.tta->skipped},
                  {"selected", r.tta->selected}};
  return out;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) throw InvalidInput("not an evaluation report");
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
      throw InvalidInput("unsupported report schema version");
    EvalReport r;
    r.toolkit_version = j.at("toolkit_version").get<std::string>();
    r.predictor = j.at("predictor").get<std::string>();
    r.config = j.at("config");
    r.corpus_hashes = j.at("corpus_hashes").get<std::map<std::string, std::string>>();
    r.frames = j.at("frames").get<std::size_t>();
    r.case_count = j.at("case_count").get<std::size_t>();
    r.clean = run_stats_from_json(j.at("clean"));
    for (const auto& jr : j.at("rows")) {
      CorruptionRow row;
      const auto kind = parse_corruption_kind(jr.at("corruption").get<std::string>());
      if (!kind) throw InvalidInput("unknown corruption kind in report");
      row.kind = *kind;
      for (const auto& jc : jr.at("cells")) {
        CellReport c;
        if (!jc.at("severity").is_null()) {
          c.severity = parse_severity(jc.at("severity").get<std::string>());
          if (!c.severity) throw InvalidInput("unknown severity in report");
        }
        c.stats = run_stats_from_json(jc.at("stats"));
        row.cells.push_back(std::move(c));
      }
      row.pooled = run_stats_from_json(jr.at("pooled"));
      row.mcl2 = detail::opt_from<double>(jr, "mcl2");
      row.mcc = detail::opt_from<double>(jr, "mcc");
      row.penalty = detail::opt_from<double>(jr, "penalty_factor");
      r.rows.push_back(std::move(row));
    }
    if (const auto& t = j.at("tta"); !t.is_null()) {
      TtaSummary s;
      s.n = t.at("n").get<std::size_t>();
      s.seed = t.at("seed").get<std::uint64_t>();
      s.adapted = t.at("adapted").get<std::size_t>();
      s.skipped = t.at("skipped").get<std::size_t>();
      s.selected = t.at("selected").get<std::map<std::string, std::size_t>>();
      r.tta = s;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Markdown

enum class ReportFormat { Json, Markdown };

namespace detail {

inline std::string fmt2(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

inline std::string md_row(const std::vector<std::string>& cells) {
  std::string s = "|";
  for (const auto& c : cells) s += " " + c + " |";
  return s + "\n";
}

inline std::string md_rule(std::size_t n) {
  std::string s = "|";
  for (std::size_t i = 0; i < n; ++i) s += "---|";
  return s + "\n";
}

/// One summary table: Clean value, then (avg, ratio, Inv.) per corruption.
template <typename Value, typename Ratio>
std::string summary_table(const EvalReport& r, std::string_view metric_label, std::string_view ratio_label,
                          Value value, Ratio ratio) {
  std::vector<std::string> head{"Model", "Clean " + std::string(metric_label)};
  std::vector<std::string> body{r.predictor.empty() ? "-" : r.predictor, fmt2(value(r.clean))};
  for (const auto& row : r.rows) {
    const std::string k(to_string(row.kind));
    head.push_back(k + " " + std::string(metric_label));
    head.push_back(k + " " + std::string(ratio_label));
    head.push_back(k + " Inv.");
    body.push_back(fmt2(value(row.pooled)));
    body.push_back(fmt2(ratio(row)));
    body.push_back(std::to_string(row.pooled.invalid_nums));
  }
  return md_row(head) + md_rule(head.size()) + md_row(body);
}

}  // namespace detail

inline std::string render_markdown(const EvalReport& r) {
  std::string out = "# DriveBench evaluation\n\n";
  out += "Predictor: `" + r.predictor + "`, frames: " + std::to_string(r.frames) +
         ", corrupted cases: " + std::to_string(r.case_count) + ", toolkit " + r.toolkit_version + "\n\n";

  out += "## L2 (m)\n\n";
  out += detail::summary_table(
      r, "avg_L2", "MCL2", [](const RunStats& s) { return s.avg_l2; },
      [](const CorruptionRow& row) { return row.mcl2; });
  out += "\n## Collision (%)\n\n";
  out += detail::summary_table(
      r, "avg_col", "MCC", [](const RunStats& s) { return s.avg_col; },
      [](const CorruptionRow& row) { return row.mcc; });

  out += "\n## Per severity\n\n";
  const std::vector<std::string> head{"Corruption", "Severity", "L2 1s", "L2 2s", "L2 3s", "avg_L2",
                                      "Col 1s",     "Col 2s",   "Col 3s", "avg_col", "Inv.", "Samples"};
  out += detail::md_row(head) + detail::md_rule(head.size());
  auto line = [&](std::string name, std::string sev, const RunStats& s) {
    auto at = [](const std::optional<std::array<double, 3>>& a, std::size_t i) {
      return detail::fmt2(a ? std::optional<double>((*a)[i]) : std::nullopt);
    };
    out += detail::md_row({std::move(name), std::move(sev), at(s.l2_at, 0), at(s.l2_at, 1), at(s.l2_at, 2),
                           detail::fmt2(s.avg_l2), at(s.col_at, 0), at(s.col_at, 1), at(s.col_at, 2),
                           detail::fmt2(s.avg_col), std::to_string(s.invalid_nums), std::to_string(s.sample_nums)});
  };
  line("clean", "-", r.clean);
  for (const auto& row : r.rows)
    for (const auto& c : row.cells)
      line(std::string(to_string(row.kind)), c.severity ? std::string(to_string(*c.severity)) : "-", c.stats);
  return out;
}

inline std::string emit_report(const EvalReport& r, ReportFormat format) {
  if (format == ReportFormat::Json) return to_json(r).dump(2) + "\n";
  return render_markdown(r);
}

}  // namespace drivebench
