// Copyright 2026 The kinres Authors
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

#ifndef KINRES_CORE_CLIP_IO_H_
#define KINRES_CORE_CLIP_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kinres/core/motion_clip.h"

namespace kinres {

// Motion-clip file: JSON lines. The first record is the header
//   {"type":"header","version":1,"frame_rate":..,"dof_count":..,
//    "action":"sit","joint_names":[..],"object_ids":[..]}
// followed by one record per frame
//   {"type":"frame","index":i,"root_pos":[x,y,z],"root_rot":[w,x,y,z],
//    "joints":[..],"root_lin":[..],"root_ang":[..],"joint_vel":[..],
//    "objects":[{"id":..,"pos":..,"rot":..,"lin_vel":..,"ang_vel":..}],
//    "head":{"pos":..,"rot":..,"lin_vel":..,"ang_vel":..}}
// Velocity keys are optional; when any frame lacks them, velocities are
// reconstructed with FiniteDifferenceVelocities. Numbers are written with 17
// significant digits so a save/load round trip is bit-exact.
void WriteClip(const MotionClip& clip, std::ostream& out);
void SaveClip(const MotionClip& clip, const std::filesystem::path& path);

// `source` names the stream in error messages.
MotionClip ReadClip(std::istream& in, const std::string& source = "<stream>");
MotionClip LoadClip(const std::filesystem::path& path);

// Shortest-safe decimal used by every text format in the project.
std::string FormatReal(double v);

}  // namespace kinres

#endif  // KINRES_CORE_CLIP_IO_H_
