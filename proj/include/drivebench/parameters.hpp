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

// Dump of every resolved corruption constant, as used by the operations.

#include <string>

#include <json.hpp>

#include "drivebench/image_corruption.hpp"
#include "drivebench/pointcloud_corruption.hpp"
#include "drivebench/prompt_corruption.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

inline nlohmann::json parameter_table() {
  nlohmann::json image, lidar, prompt;
  for (auto k : kAllCorruptionKinds) {
    if (!is_sensor_kind(k)) continue;
    const std::string name(to_string(k));
    for (auto s : kAllSeverities) {
      const std::string sev(to_string(s));
      const auto ip = resolve_image_params(k, s);
      image[name][sev] = {{"level", ip.level}, {"strength", ip.strength}};
      if (k == CorruptionKind::Dark) continue;
      const auto lp = resolve_lidar_params(k, s);
      nlohmann::json& e = lidar[name][sev];
      switch (k) {
        case CorruptionKind::Snow:
        case CorruptionKind::Rain: e = {{"rate", lp.rate}, {"extinction_per_m", lp.extinction}}; break;
        case CorruptionKind::Fog: e = {{"attenuation_per_m", lp.extinction}}; break;
        case CorruptionKind::Brightness:
          e = {{"noise_percent", lp.noise_percent}, {"noise_sigma_m", lp.noise_sigma}};
          break;
        case CorruptionKind::Motion:
          e = {{"rotation_sigma_rad", lp.rotation_sigma}, {"translation_sigma_m", lp.translation_sigma}};
          break;
        default: break;
      }
    }
  }
  for (auto s : kAllSeverities) {
    const auto i = static_cast<std::size_t>(severity_index(s));
    const std::string sev(to_string(s));
    prompt["char_perturb"][sev] = {{"edit_permille", prompt_params::kCharEditPermille[i]}};
    prompt["word_delete"][sev] = {{"delete_permille", prompt_params::kWordDeletePermille[i]}};
  }
  prompt["malicious_injection"] = {{"template", std::string(kInjectionTemplate)}};
  return {{"image", image}, {"lidar", lidar}, {"prompt", prompt}};
}

}  // namespace drivebench
