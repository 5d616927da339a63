// src/checkpoint.cc

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

#include "danse/checkpoint.h"

#include <fstream>
#include <limits>

#include "danse/binary_io.h"
#include "danse/error.h"

namespace danse {

void WriteCheckpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("DNSE", 4);
  binary::WriteUnsigned<std::uint32_t>(os, kCheckpointVersion);
  binary::WriteUnsigned<std::uint32_t>(os, tensors.size());
  for (const auto& nt : tensors) {
    if (nt.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw ConfigError("tensor name too long: " + nt.name);
    binary::WriteUnsigned<std::uint16_t>(os, nt.name.size());
    os.write(nt.name.data(), nt.name.size());
    binary::WriteUnsigned<std::uint8_t>(os, nt.tensor.rank());
    for (std::size_t d : nt.tensor.shape())
      binary::WriteUnsigned<std::uint32_t>(os, d);
  }
  for (const auto& nt : tensors)
    for (double v : nt.tensor.data()) binary::WriteF64(os, v);
  if (!os) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> ReadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  binary::ExpectMagic(is, "DNSE", path);
  const auto version = binary::ReadUnsigned<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  const auto count = binary::ReadUnsigned<std::uint32_t>(is, "tensor count");
  std::vector<std::pair<std::string, Shape>> manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = binary::ReadUnsigned<std::uint16_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len))
      throw FormatError(path + ": truncated tensor name");
    const auto rank = binary::ReadUnsigned<std::uint8_t>(is, "rank");
    Shape shape(rank);
    for (auto& d : shape) d = binary::ReadUnsigned<std::uint32_t>(is, "dim");
    manifest.emplace_back(std::move(name), std::move(shape));
  }
  std::vector<NamedTensor> out;
  for (auto& [name, shape] : manifest) {
    std::vector<double> data(NumElements(shape));
    for (double& v : data) v = binary::ReadF64(is, "tensor " + name);
    out.push_back({name, Tensor::FromData(shape, std::move(data))});
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(path + ": trailing bytes after tensor data");
  return out;
}

void SaveModel(const std::string& path, const DanseModel& model) {
  WriteCheckpoint(path, model.State());
}

void LoadModel(const std::string& path, DanseModel& model,
               const std::vector<std::string>& prefixes) {
  model.LoadState(ReadCheckpoint(path), prefixes);
}

}  // namespace danse
