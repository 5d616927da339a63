// include/danse/checkpoint.h

// Copyright 2026   DANSE authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DANSE_CHECKPOINT_H_
#define DANSE_CHECKPOINT_H_

#include <string>
#include <vector>

#include "danse/model.h"

namespace danse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "DNSE", u32 version, u32 tensor count, then per tensor: u16 name length,
// name bytes, u8 rank, u32 dims; followed by every tensor's f64 data in
// manifest order. All integers and floats little-endian.
void WriteCheckpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> ReadCheckpoint(const std::string& path);

void SaveModel(const std::string& path, const DanseModel& model);
// Loads the given parameter groups of a checkpoint into `model`.
void LoadModel(const std::string& path, DanseModel& model,
               const std::vector<std::string>& prefixes = {"f.", "y.", "d."});

}  // namespace danse

#endif  // DANSE_CHECKPOINT_H_
