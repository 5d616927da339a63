// include/danse/verification.h

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

#ifndef DANSE_VERIFICATION_H_
#define DANSE_VERIFICATION_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "danse/datagen.h"
#include "danse/model.h"

namespace danse {

struct Trial {
  std::string enroll_id;
  std::string test_id;
  bool target = false;
  std::optional<double> score;
};

struct TrialSet {
  std::vector<Trial> trials;

  std::size_t num_target() const;
  std::size_t num_nontarget() const;
};

// All unordered pairs of the given recordings; target iff the speaker ids
// match.
TrialSet MakeAllPairsTrials(std::span<const FeatureSequence> recordings);

using Embedding = std::vector<double>;
using EmbeddingTable = std::map<std::string, Embedding>;
using EmbeddingLookup = std::function<const Embedding*(const std::string&)>;

// Cosine similarity clamped to [-1, 1]. Throws NumericError naming `what`
// when either norm is below 1e-12.
double CosineScore(std::span<const double> a, std::span<const double> b,
                   const std::string& what = "embedding");

// Fills every trial's score; order is preserved. A missing embedding throws
// InputError naming the recording.
TrialSet ScoreTrials(const EmbeddingLookup& lookup, TrialSet trials);
TrialSet ScoreTrials(const EmbeddingTable& table, TrialSet trials);

struct EerResult {
  double eer = 0.0;  // fraction in [0, 1]
  double threshold = 0.0;
};

// Sweeps thresholds at the sorted unique scores with accept iff
// score >= threshold. Where FAR and FRR cross between two adjacent
// operating points, both curves are linearly interpolated and the EER is
// their common value. Throws StateError for unscored trials and InputError
// when either class is empty.
EerResult ComputeEer(const TrialSet& trials);
EerResult ComputeEer(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores);

// One eval-mode forward pass per recording; the discriminator is unused.
EmbeddingTable ExtractEmbeddings(DanseModel& model,
                                 std::span<const FeatureSequence> recordings);

// EER of `trials` scored with embeddings of `recordings` under `model`.
double EvaluateEer(DanseModel& model,
                   std::span<const FeatureSequence> recordings,
                   const TrialSet& trials);

// `enroll_id test_id label`, label in {target, nontarget}.
void WriteTrialList(const std::string& path, const TrialSet& trials);
TrialSet ReadTrialList(const std::string& path);

// `enroll_id test_id score`, 6 decimals.
void WriteScoreFile(const std::string& path, const TrialSet& trials);
// Returns (enroll, test, score) triples in file order.
struct ScoreLine {
  std::string enroll_id, test_id;
  double score;
};
std::vector<ScoreLine> ReadScoreFile(const std::string& path);

inline constexpr std::size_t kEmbeddingFileDim = 64;

// "EMB1", u32 count, then per record: u16 id length, id bytes, 64 f32
// little-endian values. Records are written in table (sorted id) order.
void WriteEmbeddingFile(const std::string& path, const EmbeddingTable& table);
EmbeddingTable ReadEmbeddingFile(const std::string& path);

// "EER 12.34%"
std::string FormatEer(double eer);

}  // namespace danse

#endif  // DANSE_VERIFICATION_H_
