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

// Umbrella header.

#include "drivebench/bev.hpp"
#include "drivebench/cot.hpp"
#include "drivebench/errors.hpp"
#include "drivebench/harness.hpp"
#include "drivebench/image_corruption.hpp"
#include "drivebench/metrics.hpp"
#include "drivebench/parameters.hpp"
#include "drivebench/png_io.hpp"
#include "drivebench/pointcloud_corruption.hpp"
#include "drivebench/predictor.hpp"
#include "drivebench/prompt_corruption.hpp"
#include "drivebench/protocol.hpp"
#include "drivebench/report.hpp"
#include "drivebench/rng.hpp"
#include "drivebench/scenario.hpp"
#include "drivebench/subprocess.hpp"
#include "drivebench/synthetic.hpp"
#include "drivebench/trajectory.hpp"
#include "drivebench/tta.hpp"
#include "drivebench/types.hpp"
#include "drivebench/utf8.hpp"
