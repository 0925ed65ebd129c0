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

// Per-frame L2 / collision, run aggregation, and the invalid-penalized
// corruption ratios:
//
//   MCL2 = 100 * (avgL2_corrupt / avgL2_clean) * (1 + invalid / samples)
//   MCC  = 100 * (avgCol_corrupt / avgCol_clean) * (1 + invalid / samples)

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

inline constexpr std::array<double, 3> kHorizonSeconds = {1.0, 2.0, 3.0};

enum class L2Convention {
  MeanUpTo,   // mean displacement over steps 1..h (VAD style), default
  AtHorizon,  // displacement at step h only (UniAD style)
};

constexpr std::string_view to_string(L2Convention c) noexcept {
  return c == L2Convention::MeanUpTo ? "mean_up_to" : "at_horizon";
}

struct HorizonL2 {
  std::array<double, 3> at{};  // 1 s, 2 s, 3 s
  double avg = 0;
  bool operator==(const HorizonL2&) const = default;
};

struct EgoFootprint {
  double length = 4.08;  // m, along heading
  double width = 1.73;   // m
  bool operator==(const EgoFootprint&) const = default;
};

/// Waypoint count covering `seconds` at spacing dt (1-based step index).
inline std::size_t horizon_step(double seconds, double dt) {
  return static_cast<std::size_t>(std::lround(seconds / dt));
}

namespace detail {
inline void check_horizon_length(std::size_t n, double dt) {
  if (!(dt > 0)) throw InvalidInput("dt must be positive");
  const std::size_t last = horizon_step(kHorizonSeconds.back(), dt);
  if (last < 1 || n < last)
    throw LengthMismatch("trajectory of " + std::to_string(n) + " waypoints does not cover 3 s at dt=" +
                         std::to_string(dt));
}
}  // namespace detail

inline HorizonL2 l2_at_horizons(const Trajectory& pred, const Trajectory& gt,
                                L2Convention convention = L2Convention::MeanUpTo) {
  if (!pred.valid() || !gt.valid()) throw InvalidTrajectory("L2 requires two valid trajectories");
  if (pred.waypoints.size() != gt.waypoints.size() || std::abs(pred.dt - gt.dt) > 1e-12)
    throw LengthMismatch("prediction and ground truth differ in length or dt");
  detail::check_horizon_length(gt.waypoints.size(), gt.dt);

  std::vector<double> disp(gt.waypoints.size());
  for (std::size_t i = 0; i < disp.size(); ++i)
    disp[i] = std::hypot(pred.waypoints[i].x - gt.waypoints[i].x, pred.waypoints[i].y - gt.waypoints[i].y);

  HorizonL2 out;
  for (std::size_t h = 0; h < 3; ++h) {
    const std::size_t steps = horizon_step(kHorizonSeconds[h], gt.dt);
    if (convention == L2Convention::AtHorizon) {
      out.at[h] = disp[steps - 1];
    } else {
      double sum = 0;
      for (std::size_t i = 0; i < steps; ++i) sum += disp[i];
      out.at[h] = sum / static_cast<double>(steps);
    }
  }
  out.avg = (out.at[0] + out.at[1] + out.at[2]) / 3.0;
  return out;
}

/// Whether the ego rectangle at each waypoint covers an occupied cell centre.
/// The box is centred on waypoint i and aligned with the segment from the
/// previous waypoint (the ego origin for i = 0); a zero-length segment keeps
/// the previous heading. Boundary contact counts as a hit.
inline std::vector<bool> collision_steps(const Trajectory& pred, const std::vector<OccupancyGrid>& occupancy,
                                         const EgoFootprint& ego = {}) {
  if (!pred.valid()) throw InvalidTrajectory("collision check requires a valid trajectory");
  if (occupancy.size() != pred.waypoints.size())
    throw LengthMismatch("occupancy has " + std::to_string(occupancy.size()) + " grids for " +
                         std::to_string(pred.waypoints.size()) + " waypoints");
  std::vector<bool> hits(pred.waypoints.size(), false);
  double heading = 0;
  Waypoint prev{0, 0};
  const double hl = ego.length / 2, hw = ego.width / 2;
  for (std::size_t i = 0; i < pred.waypoints.size(); ++i) {
    const Waypoint& w = pred.waypoints[i];
    if (w.x != prev.x || w.y != prev.y) heading = std::atan2(w.y - prev.y, w.x - prev.x);
    prev = w;
    const double c = std::cos(heading), s = std::sin(heading);
    const OccupancyGrid& g = occupancy[i];
    if (g.width == 0 || g.height == 0) continue;

    // Candidate cells: the box's axis-aligned bounding square.
    const double reach = std::hypot(hl, hw);
    const auto lo_col = static_cast<long long>(std::floor((w.x - reach - g.origin_x) / g.resolution)) - 1;
    const auto hi_col = static_cast<long long>(std::floor((w.x + reach - g.origin_x) / g.resolution)) + 1;
    const auto lo_row = static_cast<long long>(std::floor((w.y - reach - g.origin_y) / g.resolution)) - 1;
    const auto hi_row = static_cast<long long>(std::floor((w.y + reach - g.origin_y) / g.resolution)) + 1;
    for (long long row = std::max(0LL, lo_row); row <= std::min<long long>(g.height - 1, hi_row) && !hits[i]; ++row) {
      for (long long col = std::max(0LL, lo_col); col <= std::min<long long>(g.width - 1, hi_col); ++col) {
        if (!g.occupied(static_cast<int>(col), static_cast<int>(row))) continue;
        const double dx = g.center_x(static_cast<int>(col)) - w.x;
        const double dy = g.center_y(static_cast<int>(row)) - w.y;
        const double along = c * dx + s * dy;
        const double across = -s * dx + c * dy;
        if (std::abs(along) <= hl && std::abs(across) <= hw) {
          hits[i] = true;
          break;
        }
      }
    }
  }
  return hits;
}

/// collided_at(h) = any collision in steps 1..h.
inline std::array<bool, 3> collision_at_horizons(const Trajectory& pred, const std::vector<OccupancyGrid>& occupancy,
                                                 const EgoFootprint& ego = {}) {
  const auto hits = collision_steps(pred, occupancy, ego);
  detail::check_horizon_length(hits.size(), pred.dt);
  std::array<bool, 3> out{};
  for (std::size_t h = 0; h < 3; ++h) {
    const std::size_t steps = horizon_step(kHorizonSeconds[h], pred.dt);
    out[h] = std::any_of(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(steps), [](bool b) { return b; });
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Outcome of one prediction. Invalid results carry no L2/collision.
struct FrameResult {
  std::string frame_id;
  std::optional<InvalidReason> invalid;
  std::optional<HorizonL2> l2;
  std::optional<std::array<bool, 3>> collided;

  bool valid() const noexcept { return !invalid.has_value(); }

  static FrameResult make_invalid(std::string id, InvalidReason r) {
    FrameResult f;
    f.frame_id = std::move(id);
    f.invalid = r;
    return f;
  }

  bool operator==(const FrameResult&) const = default;
};

inline FrameResult evaluate_frame(const Frame& frame, const Trajectory& pred,
                                  L2Convention convention = L2Convention::MeanUpTo, const EgoFootprint& ego = {}) {
  if (!pred.valid()) return FrameResult::make_invalid(frame.frame_id, *pred.invalid);
  FrameResult r;
  r.frame_id = frame.frame_id;
  r.l2 = l2_at_horizons(pred, frame.gt_future, convention);
  r.collided = collision_at_horizons(pred, frame.occupancy, ego);
  return r;
}

struct RunStats {
  std::optional<double> avg_l2;                 // m, mean of the three horizon means
  std::optional<std::array<double, 3>> l2_at;   // m
  std::optional<double> avg_col;                // %, mean of the three horizon rates
  std::optional<std::array<double, 3>> col_at;  // %
  std::size_t invalid_nums = 0;
  std::size_t sample_nums = 0;
  std::map<std::string, std::size_t> invalid_reasons;

  bool operator==(const RunStats&) const = default;
};

/// Commutative fold over FrameResults. Sums are taken over sorted values so
/// the result is bit-identical for any insertion or merge order.
class RunAccumulator {
 public:
  void add(const FrameResult& r) {
    ++samples_;
    if (!r.valid()) {
      ++invalid_;
      ++reasons_[std::string(to_string(*r.invalid))];
      return;
    }
    for (std::size_t h = 0; h < 3; ++h) {
      l2_[h].push_back(r.l2->at[h]);
      col_[h] += (*r.collided)[h] ? 1 : 0;
    }
  }

  void merge(const RunAccumulator& o) {
    samples_ += o.samples_;
    invalid_ += o.invalid_;
    for (const auto& [k, v] : o.reasons_) reasons_[k] += v;
    for (std::size_t h = 0; h < 3; ++h) {
      l2_[h].insert(l2_[h].end(), o.l2_[h].begin(), o.l2_[h].end());
      col_[h] += o.col_[h];
    }
  }

  RunStats finish() const {
    RunStats s;
    s.sample_nums = samples_;
    s.invalid_nums = invalid_;
    s.invalid_reasons = reasons_;
    const std::size_t valid = samples_ - invalid_;
    if (valid == 0) return s;
    std::array<double, 3> l2{}, col{};
    for (std::size_t h = 0; h < 3; ++h) {
      auto v = l2_[h];
      std::sort(v.begin(), v.end());
      l2[h] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(valid);
      col[h] = 100.0 * static_cast<double>(col_[h]) / static_cast<double>(valid);
    }
    s.l2_at = l2;
    s.col_at = col;
    s.avg_l2 = (l2[0] + l2[1] + l2[2]) / 3.0;
    s.avg_col = (col[0] + col[1] + col[2]) / 3.0;
    return s;
  }

 private:
  std::size_t samples_ = 0;
  std::size_t invalid_ = 0;
  std::map<std::string, std::size_t> reasons_;
  std::array<std::vector<double>, 3> l2_;
  std::array<std::size_t, 3> col_{};
};

/// Averages over valid results only; invalid ones are counted separately.
inline RunStats aggregate_run(const std::vector<FrameResult>& results) {
  RunAccumulator acc;
  for (const auto& r : results) acc.add(r);
  return acc.finish();
}

/// The multiplicative invalid penalty 1 + invalid / samples.
inline double penalty_factor(const RunStats& s) {
  if (s.sample_nums == 0) throw DivisionByZero("run has no samples");
  return 1.0 + static_cast<double>(s.invalid_nums) / static_cast<double>(s.sample_nums);
}

namespace detail {
inline double corruption_ratio(const std::optional<double>& corrupt, const std::optional<double>& clean,
                               const RunStats& corrupt_run, const char* what) {
  if (!clean || *clean == 0.0) throw DivisionByZero(std::string("clean ") + what + " is zero or absent");
  if (corrupt_run.sample_nums == 0) throw DivisionByZero("corrupted run has no samples");
  if (!corrupt) throw InvalidInput(std::string("corrupted run has no valid samples for ") + what);
  return 100.0 * (*corrupt / *clean) * penalty_factor(corrupt_run);
}
}  // namespace detail

/// Mean corruption L2, percent.
inline double mcl2(const RunStats& corrupt, const RunStats& clean) {
  return detail::corruption_ratio(corrupt.avg_l2, clean.avg_l2, corrupt, "avg_l2");
}

/// Mean corruption collision, percent.
inline double mcc(const RunStats& corrupt, const RunStats& clean) {
  return detail::corruption_ratio(corrupt.avg_col, clean.avg_col, corrupt, "avg_col");
}

}  // namespace drivebench
