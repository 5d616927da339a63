// include/danse/data_dir.h

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

#ifndef DANSE_DATA_DIR_H_
#define DANSE_DATA_DIR_H_

#include <string>

#include "danse/datagen.h"
#include "danse/verification.h"

namespace danse {

// On-disk layout written by gen-data:
//   DIR/manifest.txt      every recording of every split
//   DIR/feats/<id>.fea    one FEA1 file per recording
//   DIR/trials.txt        all pairs of the held-out trial split
//   DIR/val_trials.txt    all pairs of the validation split
struct DataDir {
  Corpus corpus;
  TrialSet trials;
  TrialSet val_trials;
};

void WriteDataDir(const std::string& dir, const Corpus& corpus);

// Splits the manifest back into the corpus parts: source-domain lines are
// the labeled source set, target lines with a withheld speaker are the
// adaptation set, recordings named in val_trials.txt are the validation
// set and the remaining target lines are the trial set.
DataDir LoadDataDir(const std::string& dir);

}  // namespace danse

#endif  // DANSE_DATA_DIR_H_
