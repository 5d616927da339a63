// include/danse/run_config.h

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

#ifndef DANSE_RUN_CONFIG_H_
#define DANSE_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "danse/datagen.h"
#include "danse/model.h"
#include "danse/training.h"

namespace danse {

// Everything a command needs, loaded from a flat `key = value` document.
// A single `seed` key drives the corpus, model initialization and
// training streams.
struct RunConfig {
  CorpusConfig corpus;
  ModelConfig model;  // num_speakers is taken from the data at run time
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string workdir;
  std::string manifest;
  std::string trials;
  std::string pretrain_checkpoint;
  std::size_t threads = 0;  // 0 keeps the OpenMP default

  // Copies `seed` into the per-module configs and validates them.
  void Resolve();
  // Every key with its resolved value, one `key = value` per line.
  std::string ToString() const;
  static std::vector<std::string> Keys();
};

// Lines are `key = value`; `#` starts a comment; blank lines are ignored.
// Unknown keys, duplicate keys and unparsable values throw FormatError
// with the line number.
RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace danse

#endif  // DANSE_RUN_CONFIG_H_
