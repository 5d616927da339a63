// src/feature_io.cc

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

#include "danse/feature_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "danse/binary_io.h"
#include "danse/error.h"

namespace danse {

void WriteFeatureFile(const std::string& path, const Tensor& frames) {
  if (frames.rank() != 2)
    throw ConfigError("feature matrix must be [F x T], got " +
                      ShapeString(frames.shape()));
  const std::size_t F = frames.dim(0), T = frames.dim(1);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("FEA1", 4);
  binary::WriteUnsigned<std::uint32_t>(os, F);
  binary::WriteUnsigned<std::uint32_t>(os, T);
  const auto data = frames.data();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f)
      binary::WriteF32(os, static_cast<float>(data[f * T + t]));
  if (!os) throw IoError("write failed: " + path);
}

Tensor ReadFeatureFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  binary::ExpectMagic(is, "FEA1", path);
  const auto F = binary::ReadUnsigned<std::uint32_t>(is, "F");
  const auto T = binary::ReadUnsigned<std::uint32_t>(is, "T");
  if (F == 0 || T == 0) throw FormatError(path + ": empty feature matrix");
  std::vector<double> data(std::size_t{F} * T);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f)
      data[f * T + t] = binary::ReadF32(is, path);
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(path + ": trailing bytes after feature data");
  return Tensor::FromData({F, T}, std::move(data));
}

void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto& e : entries)
    os << e.recording_id << ' ' << e.speaker_id << ' ' << DomainName(e.domain)
       << ' ' << e.path << '\n';
  if (!os) throw IoError("write failed: " + path);
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    ManifestEntry e;
    std::string domain, extra;
    if (!(fields >> e.recording_id >> e.speaker_id >> domain >> e.path) ||
        (fields >> extra))
      throw FormatError(path + ": expected 4 fields", lineno);
    try {
      e.domain = ParseDomain(domain);
    } catch (const FormatError& err) {
      throw FormatError(path + ": " + err.what(), lineno);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<FeatureSequence> LoadRecordings(const std::string& manifest_path) {
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<FeatureSequence> out;
  for (auto& e : ReadManifest(manifest_path)) {
    FeatureSequence seq;
    seq.recording_id = e.recording_id;
    seq.speaker_id = e.speaker_id;
    seq.domain = e.domain;
    seq.frames = ReadFeatureFile((base / e.path).string());
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace danse
