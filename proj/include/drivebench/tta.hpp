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

// Cross-modal maximum-likelihood selection for test-time adaptation.
//
// Each modality (LiDAR only, camera only, all) decodes one candidate token
// sequence. The candidate with the largest joint probability
// prod_i P(s_i | s_<i) is selected and its token distribution is packaged as
// the supervision target sent to the predictor.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drivebench/errors.hpp"
#include "drivebench/rng.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

/// Declaration order is the tie-break order.
enum class Modality { LidarOnly, CameraOnly, All };

inline constexpr std::array kAllModalities = {Modality::LidarOnly, Modality::CameraOnly, Modality::All};

constexpr std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::LidarOnly: return "lidar_only";
    case Modality::CameraOnly: return "camera_only";
    case Modality::All: return "all";
  }
  return "?";
}

inline std::optional<Modality> parse_modality(std::string_view s) {
  for (auto m : kAllModalities)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct Token {
  std::int64_t id = 0;
  double prob = 1.0;  // conditional probability given the prefix, in (0, 1]
  bool operator==(const Token&) const = default;
};

struct TokenSeq {
  Modality modality = Modality::All;
  std::vector<Token> tokens;
  std::string decoded_text;
  bool operator==(const TokenSeq&) const = default;
};

/// Sum of log-probabilities. Throws InvalidProbability for probs outside (0, 1].
inline double joint_log_likelihood(const TokenSeq& seq) {
  double ll = 0;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const double p = seq.tokens[i].prob;
    if (!(p > 0.0 && p <= 1.0))
      throw InvalidProbability("token " + std::to_string(i) + " has probability outside (0, 1]");
    ll += std::log(p);
  }
  return ll;
}

enum class SelectionScore {
  Joint,          // raw joint likelihood, as in the selection rule
  PerTokenMean,   // extension: length-normalized mean log-probability
};

/// Log-likelihoods closer than this (relative) are a tie. Absorbs rounding
/// in the log sums so that exactly equal products compare equal.
inline constexpr double kTieTolerance = 1e-12;

struct Selection {
  std::size_t index = 0;
  TokenSeq sequence;
  double score = 0;
};

inline double selection_score(const TokenSeq& seq, SelectionScore mode) {
  const double ll = joint_log_likelihood(seq);
  if (mode == SelectionScore::PerTokenMean && !seq.tokens.empty()) return ll / static_cast<double>(seq.tokens.size());
  return ll;
}

/// Picks the candidate with the highest score among exactly three candidates
/// of distinct modalities. Ties go to the earlier modality in
/// LidarOnly < CameraOnly < All, independent of list position.
inline Selection select_best_sequence(std::span<const TokenSeq> candidates, SelectionScore mode = SelectionScore::Joint) {
  if (candidates.size() != 3) throw InvalidInput("selection needs exactly three candidates");
  std::array<bool, 3> seen{};
  for (const auto& c : candidates) {
    auto& slot = seen[static_cast<std::size_t>(c.modality)];
    if (slot) throw InvalidInput("candidate modalities must be distinct");
    slot = true;
  }
  std::array<double, 3> score{};
  for (std::size_t i = 0; i < 3; ++i) score[i] = selection_score(candidates[i], mode);
  const double best = *std::max_element(score.begin(), score.end());
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < 3; ++i) {
    const double scale = std::max({1.0, std::abs(best), std::abs(score[i])});
    if (best - score[i] > kTieTolerance * scale) continue;
    if (!pick || candidates[i].modality < candidates[*pick].modality) pick = i;
  }
  return {*pick, candidates[*pick], score[*pick]};
}

// ---------------------------------------------------------------------------

struct DistillationTarget {
  std::string frame_id;
  Modality selected_modality = Modality::All;
  std::vector<Token> positions;
  double joint_log_likelihood = 0;
  bool operator==(const DistillationTarget&) const = default;
};

inline DistillationTarget build_distillation_targets(std::string frame_id, const TokenSeq& selected) {
  return {std::move(frame_id), selected.modality, selected.tokens, joint_log_likelihood(selected)};
}

inline nlohmann::json to_json(const DistillationTarget& t) {
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& tok : t.positions) positions.push_back({{"token_id", tok.id}, {"prob", tok.prob}});
  return {{"frame_id", t.frame_id},
          {"selected_modality", std::string(to_string(t.selected_modality))},
          {"positions", std::move(positions)},
          {"joint_log_likelihood", t.joint_log_likelihood}};
}

inline DistillationTarget distillation_target_from_json(const nlohmann::json& j) {
  try {
    DistillationTarget t;
    t.frame_id = j.at("frame_id").get<std::string>();
    auto m = parse_modality(j.at("selected_modality").get<std::string>());
    if (!m) throw InvalidInput("unknown modality");
    t.selected_modality = *m;
    for (const auto& p : j.at("positions")) t.positions.push_back({p.at("token_id").get<std::int64_t>(), p.at("prob").get<double>()});
    t.joint_log_likelihood = j.at("joint_log_likelihood").get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed distillation target: ") + e.what());
  }
}

/// n distinct frame ids, uniform without replacement: the n ids with the
/// smallest per-index hash under `seed`.
inline std::vector<std::string> sample_adaptation_batch(const std::vector<std::string>& frame_ids, std::size_t n,
                                                        std::uint64_t seed) {
  if (n > frame_ids.size())
    throw NotEnoughFrames("requested " + std::to_string(n) + " adaptation frames from " +
                          std::to_string(frame_ids.size()));
  const CounterRng rng = CounterRng(seed).derive("adaptation_batch");
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(frame_ids.size());
  for (std::size_t i = 0; i < frame_ids.size(); ++i) keyed[i] = {rng.bits(i), i};
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(n), keyed.end());
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(frame_ids[keyed[j].second]);
  return out;
}

inline std::vector<std::string> sample_adaptation_batch(const Scenario& scenario, std::size_t n, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& f : scenario.frames) ids.push_back(f.frame_id);
  return sample_adaptation_batch(ids, n, seed);
}

}  // namespace drivebench
