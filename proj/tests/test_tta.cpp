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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "drivebench/tta.hpp"

namespace db = drivebench;
using db::Modality;

namespace {

db::TokenSeq seq(Modality m, std::vector<double> probs) {
  db::TokenSeq s;
  s.modality = m;
  std::int64_t id = 1;
  for (double p : probs) s.tokens.push_back({id++, p});
  return s;
}

std::size_t select(const std::array<db::TokenSeq, 3>& c) { return db::select_best_sequence(c).index; }

// Grid probabilities k/10 as integers; a sequence of up to four tokens scaled
// to a common denominator of 10^4 so products compare exactly.
struct GridSeq {
  std::vector<int> digits;  // 1..10
  std::uint64_t numerator = 1;
};

std::vector<GridSeq> all_multisets(int max_len) {
  std::vector<GridSeq> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (!cur.empty()) {
      GridSeq g{cur, 1};
      for (int d : cur) g.numerator *= static_cast<std::uint64_t>(d);
      for (int i = static_cast<int>(cur.size()); i < max_len; ++i) g.numerator *= 10;
      out.push_back(g);
    }
    if (static_cast<int>(cur.size()) == max_len) return;
    for (int d = start; d <= 10; ++d) {
      cur.push_back(d);
      self(self, d);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return out;
}

db::TokenSeq to_seq(const GridSeq& g, Modality m) {
  std::vector<double> p;
  for (int d : g.digits) p.push_back(d / 10.0);
  return seq(m, p);
}

// Exact argmax with the modality tie-break.
std::size_t oracle(const std::array<std::uint64_t, 3>& num, const std::array<Modality, 3>& mod) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (num[i] > num[best] || (num[i] == num[best] && mod[i] < mod[best])) best = i;
  return best;
}

}  // namespace

TEST(JointLogLikelihood, Examples) {
  EXPECT_EQ(db::joint_log_likelihood(seq(Modality::All, {1.0})), 0.0);
  EXPECT_NEAR(db::joint_log_likelihood(seq(Modality::All, {0.5, 0.5})), std::log(0.25), 1e-15);
  const double ll = db::joint_log_likelihood(seq(Modality::All, std::vector<double>(512, 1e-6)));
  EXPECT_TRUE(std::isfinite(ll));
  EXPECT_NEAR(ll, -512.0 * std::log(1e6), 1e-9);
  EXPECT_TRUE(std::isfinite(db::joint_log_likelihood(seq(Modality::All, {1e-300, 1e-300}))));
}

TEST(JointLogLikelihood, RejectsBadProbabilities) {
  for (double p : {0.0, -0.1, 1.0000001, std::nan("")})
    EXPECT_THROW(db::joint_log_likelihood(seq(Modality::All, {0.5, p})), db::InvalidProbability);
}

TEST(Selection, Examples) {
  EXPECT_EQ(select({seq(Modality::LidarOnly, {0.9}), seq(Modality::CameraOnly, {0.5}), seq(Modality::All, {0.7})}), 0u);
  EXPECT_EQ(select({seq(Modality::LidarOnly, {0.7, 0.99}), seq(Modality::CameraOnly, {0.95, 0.8}),
                    seq(Modality::All, {0.9, 0.9})}),
            2u);
  // Exact tie: 0.2 * 0.3 == 0.6 * 0.1 as rationals.
  EXPECT_EQ(select({seq(Modality::All, {0.2, 0.3}), seq(Modality::CameraOnly, {0.6, 0.1}),
                    seq(Modality::LidarOnly, {0.01})}),
            1u);
}

TEST(Selection, RequiresThreeDistinctModalities) {
  const std::array two = {seq(Modality::All, {0.5}), seq(Modality::All, {0.5}), seq(Modality::LidarOnly, {0.5})};
  EXPECT_THROW(db::select_best_sequence(two), db::InvalidInput);
  const std::vector<db::TokenSeq> short_list = {seq(Modality::All, {0.5})};
  EXPECT_THROW(db::select_best_sequence(short_list), db::InvalidInput);
}

TEST(Selection, PerTokenMeanIsOptional) {
  const std::array c = {seq(Modality::LidarOnly, {0.6}), seq(Modality::CameraOnly, {0.8, 0.8, 0.8}),
                        seq(Modality::All, {0.1})};
  EXPECT_EQ(db::select_best_sequence(c).index, 0u);
  EXPECT_EQ(db::select_best_sequence(c, db::SelectionScore::PerTokenMean).index, 1u);
}

// Every triple of distinct grid products (lengths <= 4, probs k/10) against
// integer arithmetic, in all modality placements by position.
TEST(SelectionProperty, ExhaustiveGridAgreesWithRationalOracle) {
  std::map<std::uint64_t, GridSeq> classes;
  for (const auto& g : all_multisets(4)) classes.emplace(g.numerator, g);  // one representative per product
  std::vector<GridSeq> reps;
  for (const auto& [n, g] : classes) reps.push_back(g);
  ASSERT_EQ(reps.size(), 275u);
  const std::array<Modality, 3> mod = {Modality::LidarOnly, Modality::CameraOnly, Modality::All};
  std::array<std::vector<db::TokenSeq>, 3> seqs;
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& g : reps) seqs[k].push_back(to_seq(g, mod[k]));
  std::size_t cases = 0;
  for (std::size_t a = 0; a < reps.size(); ++a)
    for (std::size_t b = 0; b < reps.size(); ++b)
      for (std::size_t c = 0; c < reps.size(); ++c) {
        const std::array cand = {seqs[0][a], seqs[1][b], seqs[2][c]};
        const auto want = oracle({reps[a].numerator, reps[b].numerator, reps[c].numerator}, mod);
        ASSERT_EQ(select(cand), want) << a << " " << b << " " << c;
        ++cases;
      }
  EXPECT_EQ(cases, 275u * 275u * 275u);
}

// Every ordered pair of grid multisets, including different multisets with the
// same product (where log sums differ by rounding only).
TEST(SelectionProperty, AllMultisetPairsAgreeWithRationalOracle) {
  const auto all = all_multisets(4);
  ASSERT_EQ(all.size(), 1000u);
  const auto floor_seq = seq(Modality::All, {0.1, 0.1, 0.1, 0.1, 0.1});  // below every grid product
  for (const auto& x : all)
    for (const auto& y : all) {
      const std::array cand = {to_seq(x, Modality::CameraOnly), to_seq(y, Modality::LidarOnly), floor_seq};
      const std::size_t want = x.numerator > y.numerator ? 0 : 1;  // equal goes to LidarOnly
      ASSERT_EQ(select(cand), want);
    }
}

TEST(SelectionProperty, PermutationAndUnitTokenInvariance) {
  const db::CounterRng r(11);
  for (std::uint64_t i = 0; i < 5000; ++i) {
    std::array<db::TokenSeq, 3> c;
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<double> p;
      const auto len = 1 + r.below(i, 10 + k, 6);
      for (std::uint64_t t = 0; t < len; ++t) p.push_back(std::ceil(10 * (1 - r.uniform(i, 20 + 8 * k + t))) / 10);
      c[k] = seq(db::kAllModalities[k], p);
    }
    const auto winner = c[select(c)].modality;
    auto perm = c;
    std::rotate(perm.begin(), perm.begin() + 1 + static_cast<long>(i % 2), perm.end());
    EXPECT_EQ(perm[select(perm)].modality, winner);
    auto extended = c;
    extended[r.below(i, 99, 3)].tokens.push_back({0, 1.0});
    EXPECT_EQ(extended[select(extended)].modality, winner);
  }
}

TEST(DistillationTarget, BuildAndRoundTrip) {
  const auto s = seq(Modality::CameraOnly, {0.5, 0.25, 0.125});
  const auto t = db::build_distillation_targets("frame_7", s);
  EXPECT_EQ(t.positions.size(), 3u);
  EXPECT_EQ(t.selected_modality, Modality::CameraOnly);
  EXPECT_EQ(t.joint_log_likelihood, db::joint_log_likelihood(s));
  EXPECT_NEAR(t.joint_log_likelihood, std::log(0.5) + std::log(0.25) + std::log(0.125), 1e-15);
  const auto text = db::to_json(t).dump();
  EXPECT_EQ(db::distillation_target_from_json(nlohmann::json::parse(text)), t);
  EXPECT_THROW(db::distillation_target_from_json(nlohmann::json{{"frame_id", 1}}), db::InvalidInput);
}

TEST(AdaptationBatch, Examples) {
  std::vector<std::string> ids;
  for (int i = 0; i < 12; ++i) ids.push_back("f" + std::to_string(i));
  auto all = db::sample_adaptation_batch(ids, 12, 3);
  std::sort(all.begin(), all.end());
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(all, sorted);
  EXPECT_TRUE(db::sample_adaptation_batch(ids, 0, 3).empty());
  EXPECT_THROW(db::sample_adaptation_batch(ids, 13, 3), db::NotEnoughFrames);
  const auto a = db::sample_adaptation_batch(ids, 5, 99);
  EXPECT_EQ(a, db::sample_adaptation_batch(ids, 5, 99));
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), 5u);
}

TEST(AdaptationBatch, SelectionFrequenciesMatchHypergeometric) {
  const std::size_t N = 20, n = 5, seeds = 10000;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < N; ++i) ids.push_back("f" + std::to_string(i));
  std::map<std::string, std::size_t> count;
  for (std::uint64_t s = 0; s < seeds; ++s)
    for (const auto& id : db::sample_adaptation_batch(ids, n, s)) ++count[id];
  const double p = static_cast<double>(n) / N;
  const double mean = seeds * p, sigma = std::sqrt(seeds * p * (1 - p));
  ASSERT_EQ(count.size(), N);
  for (const auto& [id, c] : count) EXPECT_NEAR(static_cast<double>(c), mean, 3 * sigma) << id;
}
