// include/danse/feature_io.h

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

#ifndef DANSE_FEATURE_IO_H_
#define DANSE_FEATURE_IO_H_

#include <string>
#include <vector>

#include "danse/datagen.h"

namespace danse {

// "FEA1", u32 F, u32 T, then F*T little-endian f32 values, frame-major
// (the F values of frame t are contiguous). Frames are [F x T] in memory.
void WriteFeatureFile(const std::string& path, const Tensor& frames);
Tensor ReadFeatureFile(const std::string& path);

struct ManifestEntry {
  std::string recording_id;
  std::string speaker_id;
  Domain domain = Domain::kSource;
  std::string path;  // relative to the manifest's directory
};

// One line per recording: `recording_id speaker_id domain path`.
void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries);
// Throws FormatError with the 1-based line number on malformed lines.
std::vector<ManifestEntry> ReadManifest(const std::string& path);

// Loads every recording listed in a manifest.
std::vector<FeatureSequence> LoadRecordings(const std::string& manifest_path);

}  // namespace danse

#endif  // DANSE_FEATURE_IO_H_
