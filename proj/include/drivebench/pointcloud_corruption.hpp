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

// LiDAR corruptions.
//
// Snow, Rain and Fog share one scattering model. A point at range r with
// extinction a survives with probability exp(-2 a r) and keeps its position,
// its intensity scaled by the same factor. A dropped point becomes, with
// probability 1/2, a near-range clutter return at u*r along the same ray
// (u ~ U[0.05, 0.5]) with intensity 0.1. Snow/Rain use a = 0.004 * rate,
// Fog uses its coefficient directly.
//
// Brightness displaces ceil(ratio * K) points by an isotropic 2 m Gaussian.
// Motion applies one rigid jitter (axis-angle rotation, Gaussian translation)
// to the whole cloud. Dark does not affect LiDAR and is rejected.
//
// The random key omits the severity, so the same draws are reused across
// Easy/Mid/Hard: survivors at a harder level are a subset of those at an
// easier level and the displaced index sets are nested.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/rng.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

namespace lidar_params {
inline constexpr std::array<double, 3> kWeatherRate = {0.20, 1.5625, 7.29};
inline constexpr double kExtinctionPerRate = 0.004;
inline constexpr std::array<double, 3> kFogAttenuation = {0.005, 0.02, 0.06};
inline constexpr std::array<int, 3> kNoisePercent = {1, 3, 5};
inline constexpr double kNoiseSigma = 2.0;
inline constexpr std::array<double, 3> kRotationSigma = {0.02, 0.06, 0.10};
inline constexpr std::array<double, 3> kTranslationSigma = {0.002, 0.006, 0.010};
inline constexpr double kScatterProbability = 0.5;
inline constexpr double kScatterMinFraction = 0.05;
inline constexpr double kScatterMaxFraction = 0.5;
inline constexpr double kScatterIntensity = 0.1;
}  // namespace lidar_params

struct LidarCorruptionParams {
  CorruptionKind kind = CorruptionKind::Snow;
  Severity severity = Severity::Easy;
  double rate = 0;            // Snow/Rain precipitation rate
  double extinction = 0;      // 1/m, Snow/Rain/Fog
  int noise_percent = 0;      // Brightness
  double noise_sigma = 0;     // m, Brightness
  double rotation_sigma = 0;  // rad, Motion
  double translation_sigma = 0;  // m, Motion
};

inline LidarCorruptionParams resolve_lidar_params(CorruptionKind kind, Severity severity) {
  using namespace lidar_params;
  const auto i = static_cast<std::size_t>(severity_index(severity));
  LidarCorruptionParams p;
  p.kind = kind;
  p.severity = severity;
  switch (kind) {
    case CorruptionKind::Snow:
    case CorruptionKind::Rain:
      p.rate = kWeatherRate[i];
      p.extinction = kExtinctionPerRate * p.rate;
      break;
    case CorruptionKind::Fog: p.extinction = kFogAttenuation[i]; break;
    case CorruptionKind::Brightness:
      p.noise_percent = kNoisePercent[i];
      p.noise_sigma = kNoiseSigma;
      break;
    case CorruptionKind::Motion:
      p.rotation_sigma = kRotationSigma[i];
      p.translation_sigma = kTranslationSigma[i];
      break;
    case CorruptionKind::Dark:
      throw UnsupportedKind("LiDAR is unaffected by darkness");
    default:
      throw KindMismatch("'" + std::string(to_string(kind)) + "' is not a point cloud corruption");
  }
  return p;
}

/// p' = R p + t with R stored row-major.
struct RigidPerturbation {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation{0, 0, 0};
  std::array<double, 3> axis{0, 0, 1};
  double angle = 0;

  LidarPoint apply(const LidarPoint& p) const noexcept {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation[0],
            r[3] * p.x + r[4] * p.y + r[5] * p.z + translation[1],
            r[6] * p.x + r[7] * p.y + r[8] * p.z + translation[2], p.intensity};
  }
};

struct LidarCorruptionStats {
  std::size_t survived = 0;
  std::size_t dropped = 0;
  std::size_t scattered = 0;  // clutter returns appended after the survivors
  std::size_t displaced = 0;
};

namespace detail {

inline CounterRng lidar_rng(const CorruptionSpec& spec) {
  return CounterRng(spec.seed).derive("lidar").derive(to_string(spec.kind));
}

inline void check_lidar_spec(const CorruptionSpec& spec) {
  if (spec.target != CorruptionTarget::PointCloud)
    throw KindMismatch("corrupt_pointcloud called with target '" + std::string(to_string(spec.target)) + "'");
  if (spec.kind == CorruptionKind::Dark) throw UnsupportedKind("LiDAR is unaffected by darkness");
  spec.validate();
}

inline PointCloud scatter(const PointCloud& cloud, double extinction, const CounterRng& rng,
                          LidarCorruptionStats& stats) {
  using namespace lidar_params;
  PointCloud out;
  std::vector<LidarPoint> clutter;
  out.points.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const LidarPoint& p = cloud.points[i];
    const double range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    const double survival = std::exp(-2.0 * extinction * range);
    if (rng.uniform(i, 0) < survival) {
      out.points.push_back({p.x, p.y, p.z, p.intensity * survival});
      continue;
    }
    ++stats.dropped;
    if (rng.uniform(i, 1) < kScatterProbability) {
      const double u = kScatterMinFraction + (kScatterMaxFraction - kScatterMinFraction) * rng.uniform(i, 2);
      clutter.push_back({p.x * u, p.y * u, p.z * u, kScatterIntensity});
    }
  }
  stats.survived = out.points.size();
  stats.scattered = clutter.size();
  out.points.insert(out.points.end(), clutter.begin(), clutter.end());
  return out;
}

}  // namespace detail

/// Indices displaced by Brightness noise: the ceil(percent * K / 100) indices
/// with the smallest per-index hash. Sorted ascending.
inline std::vector<std::size_t> brightness_noise_indices(std::size_t count, Severity severity, std::uint64_t seed) {
  const auto percent = static_cast<std::size_t>(lidar_params::kNoisePercent[severity_index(severity)]);
  const std::size_t m = (percent * count + 99) / 100;
  const CounterRng rng = CounterRng(seed).derive("lidar").derive(to_string(CorruptionKind::Brightness));
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(count);
  for (std::size_t i = 0; i < count; ++i) keyed[i] = {rng.bits(i, 7), i};
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(m), keyed.end());
  std::vector<std::size_t> idx(m);
  for (std::size_t j = 0; j < m; ++j) idx[j] = keyed[j].second;
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// The single rigid jitter used by Motion for this spec.
inline RigidPerturbation sample_rigid_perturbation(const CorruptionSpec& spec) {
  detail::check_lidar_spec(spec);
  if (spec.kind != CorruptionKind::Motion) throw KindMismatch("rigid perturbation is only defined for motion");
  const auto params = resolve_lidar_params(spec.kind, *spec.severity);
  const CounterRng rng = detail::lidar_rng(spec);

  RigidPerturbation t;
  const double z = 2.0 * rng.uniform(0, 0) - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform(0, 1);
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  t.axis = {rxy * std::cos(phi), rxy * std::sin(phi), z};
  t.angle = params.rotation_sigma * rng.gaussian(1, 0);
  for (int k = 0; k < 3; ++k) t.translation[k] = params.translation_sigma * rng.gaussian(2, k);

  // Rodrigues: R = I cos a + (1 - cos a) k k^T + sin a [k]x
  const double c = std::cos(t.angle), s = std::sin(t.angle), one_c = 1.0 - c;
  const auto [kx, ky, kz] = t.axis;
  t.rotation = {c + kx * kx * one_c,      kx * ky * one_c - kz * s, kx * kz * one_c + ky * s,
                ky * kx * one_c + kz * s, c + ky * ky * one_c,      ky * kz * one_c - kx * s,
                kz * kx * one_c - ky * s, kz * ky * one_c + kx * s, c + kz * kz * one_c};
  return t;
}

inline PointCloud corrupt_pointcloud(const PointCloud& cloud, const CorruptionSpec& spec,
                                     LidarCorruptionStats* stats_out = nullptr) {
  detail::check_lidar_spec(spec);
  const auto params = resolve_lidar_params(spec.kind, *spec.severity);
  const CounterRng rng = detail::lidar_rng(spec);
  LidarCorruptionStats stats;
  PointCloud out;

  switch (spec.kind) {
    case CorruptionKind::Snow:
    case CorruptionKind::Rain:
    case CorruptionKind::Fog:
      out = detail::scatter(cloud, params.extinction, rng, stats);
      break;
    case CorruptionKind::Brightness: {
      out = cloud;
      const auto idx = brightness_noise_indices(cloud.points.size(), *spec.severity, spec.seed);
      for (std::size_t i : idx) {
        auto& p = out.points[i];
        p.x += params.noise_sigma * rng.gaussian(i, 0);
        p.y += params.noise_sigma * rng.gaussian(i, 1);
        p.z += params.noise_sigma * rng.gaussian(i, 2);
      }
      stats.displaced = idx.size();
      stats.survived = out.points.size();
      break;
    }
    case CorruptionKind::Motion: {
      const auto rigid = sample_rigid_perturbation(spec);
      out.points.reserve(cloud.points.size());
      for (const auto& p : cloud.points) out.points.push_back(rigid.apply(p));
      stats.displaced = out.points.size();
      stats.survived = out.points.size();
      break;
    }
    default:
      throw KindMismatch("unreachable point cloud kind");
  }
  if (stats_out) *stats_out = stats;
  return out;
}

}  // namespace drivebench
