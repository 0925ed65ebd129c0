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

// Camera corruptions. Each kind is a small deterministic kernel keyed to the
// benchmark's per-severity constants:
//
//   Dark        luminance scale by (1 - coeff), coeff in {0.2, 0.6, 0.8}
//   Brightness  luminance scale by (1 + 0.25 * level), level in {1, 3, 5}
//   Fog         alpha blend with a gray(128) mask at weight {10%, 30%, 50%}
//   Rain        streak overlay, per-pixel streak density {0.01, 0.10, 0.20}
//   Snow        whitening plus bright flakes, coverage scaled by {1, 3, 5}
//   Motion      radial zoom blur averaging {2, 4, 6} scaled resamples
//
// Random draws come from CounterRng keyed by (seed, kind, severity) and the
// pixel index, so output bytes depend only on the input bytes and the CorruptionSpec.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/rng.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

namespace image_params {
inline constexpr std::array<double, 3> kDarkCoefficient = {0.2, 0.6, 0.8};
inline constexpr std::array<int, 3> kBrightnessLevel = {1, 3, 5};
inline constexpr double kBrightnessStep = 0.25;
inline constexpr std::array<int, 3> kFogLevel = {1, 3, 5};
inline constexpr std::array<double, 3> kFogMaskWeight = {0.10, 0.30, 0.50};
inline constexpr double kFogGray = 128.0;
inline constexpr std::array<double, 3> kRainDensity = {0.01, 0.10, 0.20};
inline constexpr double kRainDimPerDensity = 0.5;
inline constexpr double kRainStreakAlpha = 0.45;
inline constexpr double kRainStreakGray = 200.0;
inline constexpr std::array<int, 3> kSnowLevel = {1, 3, 5};
inline constexpr double kSnowFlakeProbPerLevel = 0.004;
inline constexpr double kSnowWhitenPerLevel = 0.04;
inline constexpr double kSnowFlakeAlpha = 0.85;
inline constexpr std::array<int, 3> kZoomFactor = {2, 4, 6};
inline constexpr double kZoomStep = 0.02;
}  // namespace image_params

/// Constants resolved for one (kind, severity) pair.
struct ImageCorruptionParams {
  CorruptionKind kind = CorruptionKind::Dark;
  Severity severity = Severity::Easy;
  int level = 1;        // benchmark severity level 1, 3 or 5
  double strength = 0;  // the kind's headline constant (see file comment)
};

inline ImageCorruptionParams resolve_image_params(CorruptionKind kind, Severity severity) {
  using namespace image_params;
  const auto i = static_cast<std::size_t>(severity_index(severity));
  ImageCorruptionParams p{kind, severity, std::array{1, 3, 5}[i], 0.0};
  switch (kind) {
    case CorruptionKind::Dark: p.strength = kDarkCoefficient[i]; break;
    case CorruptionKind::Brightness: p.strength = 1.0 + kBrightnessStep * kBrightnessLevel[i]; break;
    case CorruptionKind::Fog: p.strength = kFogMaskWeight[i]; break;
    case CorruptionKind::Rain: p.strength = kRainDensity[i]; break;
    case CorruptionKind::Snow: p.strength = kSnowLevel[i]; break;
    case CorruptionKind::Motion: p.strength = kZoomFactor[i]; break;
    default:
      throw KindMismatch("'" + std::string(to_string(kind)) + "' is not an image corruption");
  }
  return p;
}

inline double luminance(double r, double g, double b) noexcept { return 0.299 * r + 0.587 * g + 0.114 * b; }

inline double mean_luminance(const RasterImage& img) {
  double sum = 0;
  for (std::size_t i = 0; i + 2 < img.data.size(); i += 3) sum += luminance(img.data[i], img.data[i + 1], img.data[i + 2]);
  return img.data.empty() ? 0.0 : sum / (img.data.size() / 3);
}

inline double luminance_stddev(const RasterImage& img) {
  const double mean = mean_luminance(img);
  double acc = 0;
  for (std::size_t i = 0; i + 2 < img.data.size(); i += 3) {
    const double d = luminance(img.data[i], img.data[i + 1], img.data[i + 2]) - mean;
    acc += d * d;
  }
  return img.data.empty() ? 0.0 : std::sqrt(acc / (img.data.size() / 3));
}

namespace detail {

inline std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

inline RasterImage scale_values(const RasterImage& img, double factor) {
  RasterImage out = img;
  for (auto& v : out.data) v = to_byte(v * factor);
  return out;
}

inline RasterImage fog(const RasterImage& img, double weight) {
  RasterImage out = img;
  for (auto& v : out.data) v = to_byte((1.0 - weight) * v + weight * image_params::kFogGray);
  return out;
}

/// Blends `out` towards `target` by the per-pixel alpha mask.
inline void blend_mask(RasterImage& out, const std::vector<double>& alpha, double target) {
  for (std::size_t p = 0; p < alpha.size(); ++p) {
    if (alpha[p] <= 0) continue;
    for (int c = 0; c < 3; ++c) {
      auto& v = out.data[p * 3 + c];
      v = to_byte((1.0 - alpha[p]) * v + alpha[p] * target);
    }
  }
}

inline RasterImage rain(const RasterImage& img, double density, const CounterRng& rng) {
  using namespace image_params;
  RasterImage out = scale_values(img, 1.0 - kRainDimPerDensity * density);
  const int w = img.width, h = img.height;
  const int length = std::clamp(h / 40, 2, 20);
  std::vector<double> alpha(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint64_t idx = static_cast<std::uint64_t>(y) * w + x;
      if (rng.uniform(idx, 0) >= density) continue;
      // Streak falls down and slightly left: one column per four rows.
      for (int k = 0; k < length; ++k) {
        const int sx = x - k / 4, sy = y + k;
        if (sx < 0 || sy >= h) break;
        alpha[static_cast<std::size_t>(sy) * w + sx] = kRainStreakAlpha;
      }
    }
  }
  blend_mask(out, alpha, kRainStreakGray);
  return out;
}

inline RasterImage snow(const RasterImage& img, int level, const CounterRng& rng) {
  using namespace image_params;
  const double whiten = kSnowWhitenPerLevel * level;
  RasterImage out = img;
  for (auto& v : out.data) v = to_byte(v + (255.0 - v) * whiten);
  const int w = img.width, h = img.height;
  const double prob = kSnowFlakeProbPerLevel * level;
  std::vector<double> alpha(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint64_t idx = static_cast<std::uint64_t>(y) * w + x;
      if (rng.uniform(idx, 0) >= prob) continue;
      const int radius = 1 + static_cast<int>(rng.below(idx, 1, 2));
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const int px = x + dx, py = y + dy;
          if (px < 0 || py < 0 || px >= w || py >= h) continue;
          alpha[static_cast<std::size_t>(py) * w + px] = kSnowFlakeAlpha;
        }
      }
    }
  }
  blend_mask(out, alpha, 255.0);
  return out;
}

/// Bilinear sample at continuous pixel-index coordinates with edge clamp.
inline double bilinear(const RasterImage& img, double u, double v, int c) noexcept {
  const double fu = std::floor(u), fv = std::floor(v);
  const double ax = u - fu, ay = v - fv;
  auto clampx = [&](double x) { return static_cast<int>(std::clamp(x, 0.0, img.width - 1.0)); };
  auto clampy = [&](double y) { return static_cast<int>(std::clamp(y, 0.0, img.height - 1.0)); };
  const int x0 = clampx(fu), x1 = clampx(fu + 1), y0 = clampy(fv), y1 = clampy(fv + 1);
  const double top = (1 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
  const double bottom = (1 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
  return (1 - ay) * top + ay * bottom;
}

inline RasterImage zoom_blur(const RasterImage& img, int factor) {
  const int w = img.width, h = img.height;
  const double cx = w / 2.0, cy = h / 2.0;
  std::vector<double> acc(img.data.size(), 0.0);
  for (int k = 0; k < factor; ++k) {
    const double scale = 1.0 + image_params::kZoomStep * k;
    for (int y = 0; y < h; ++y) {
      // Half-pixel centres: output pixel centre (x+0.5) maps back through the zoom.
      const double sv = cy + (y + 0.5 - cy) / scale - 0.5;
      for (int x = 0; x < w; ++x) {
        const double su = cx + (x + 0.5 - cx) / scale - 0.5;
        for (int c = 0; c < 3; ++c) acc[img.index(x, y, c)] += bilinear(img, su, sv, c);
      }
    }
  }
  RasterImage out(w, h);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = to_byte(acc[i] / factor);
  return out;
}

}  // namespace detail

/// Applies one image corruption. Throws KindMismatch unless `spec` targets
/// images with a sensor kind and severity.
inline RasterImage corrupt_image(const RasterImage& img, const CorruptionSpec& spec) {
  if (spec.target != CorruptionTarget::Image)
    throw KindMismatch("corrupt_image called with target '" + std::string(to_string(spec.target)) + "'");
  spec.validate();
  if (!img.valid()) throw InvalidInput("raster has inconsistent dimensions");
  const auto params = resolve_image_params(spec.kind, *spec.severity);
  const CounterRng rng = CounterRng(spec.seed)
                             .derive(to_string(spec.kind))
                             .derive(static_cast<std::uint64_t>(severity_index(*spec.severity)));
  switch (spec.kind) {
    case CorruptionKind::Dark: return detail::scale_values(img, 1.0 - params.strength);
    case CorruptionKind::Brightness: return detail::scale_values(img, params.strength);
    case CorruptionKind::Fog: return detail::fog(img, params.strength);
    case CorruptionKind::Rain: return detail::rain(img, params.strength, rng);
    case CorruptionKind::Snow: return detail::snow(img, params.level, rng);
    case CorruptionKind::Motion: return detail::zoom_blur(img, static_cast<int>(params.strength));
    default: break;
  }
  throw KindMismatch("unreachable image kind");
}

}  // namespace drivebench
