// src/data_dir.cc

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

#include "danse/data_dir.h"

#include <filesystem>
#include <set>

#include "danse/error.h"
#include "danse/feature_io.h"

namespace danse {

namespace fs = std::filesystem;

void WriteDataDir(const std::string& dir, const Corpus& corpus) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "feats", ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  for (const auto* split :
       {&corpus.source, &corpus.target, &corpus.validation, &corpus.trial}) {
    for (const FeatureSequence& r : *split) {
      const std::string rel = "feats/" + r.recording_id + ".fea";
      WriteFeatureFile((fs::path(dir) / rel).string(), r.frames);
      entries.push_back({r.recording_id, r.speaker_id, r.domain, rel});
    }
  }
  WriteManifest((fs::path(dir) / "manifest.txt").string(), entries);
  WriteTrialList((fs::path(dir) / "trials.txt").string(),
                 MakeAllPairsTrials(corpus.trial));
  WriteTrialList((fs::path(dir) / "val_trials.txt").string(),
                 MakeAllPairsTrials(corpus.validation));
}

DataDir LoadDataDir(const std::string& dir) {
  DataDir out;
  out.trials = ReadTrialList((fs::path(dir) / "trials.txt").string());
  out.val_trials = ReadTrialList((fs::path(dir) / "val_trials.txt").string());
  std::set<std::string> val_ids;
  for (const Trial& t : out.val_trials.trials) {
    val_ids.insert(t.enroll_id);
    val_ids.insert(t.test_id);
  }
  for (FeatureSequence& r :
       LoadRecordings((fs::path(dir) / "manifest.txt").string())) {
    if (r.domain == Domain::kSource)
      out.corpus.source.push_back(std::move(r));
    else if (r.speaker_id == kWithheldSpeaker)
      out.corpus.target.push_back(std::move(r));
    else if (val_ids.count(r.recording_id))
      out.corpus.validation.push_back(std::move(r));
    else
      out.corpus.trial.push_back(std::move(r));
  }
  return out;
}

}  // namespace danse
