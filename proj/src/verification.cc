// src/verification.cc

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

#include "danse/verification.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "danse/binary_io.h"
#include "danse/error.h"

namespace danse {

std::size_t TrialSet::num_target() const {
  return std::count_if(trials.begin(), trials.end(),
                       [](const Trial& t) { return t.target; });
}

std::size_t TrialSet::num_nontarget() const {
  return trials.size() - num_target();
}

TrialSet MakeAllPairsTrials(std::span<const FeatureSequence> recordings) {
  TrialSet set;
  for (std::size_t i = 0; i < recordings.size(); ++i)
    for (std::size_t j = i + 1; j < recordings.size(); ++j)
      set.trials.push_back(
          {recordings[i].recording_id, recordings[j].recording_id,
           recordings[i].speaker_id == recordings[j].speaker_id, std::nullopt});
  return set;
}

double CosineScore(std::span<const double> a, std::span<const double> b,
                   const std::string& what) {
  if (a.size() != b.size())
    throw ConfigError("cosine_score: dimension mismatch for " + what);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na >= 1e-12) || !(nb >= 1e-12))
    throw NumericError("cosine_score: degenerate embedding norm for " + what);
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

TrialSet ScoreTrials(const EmbeddingLookup& lookup, TrialSet trials) {
  for (Trial& t : trials.trials) {
    const Embedding* a = lookup(t.enroll_id);
    if (!a)
      throw InputError("no embedding for recording '" + t.enroll_id + "'");
    const Embedding* b = lookup(t.test_id);
    if (!b) throw InputError("no embedding for recording '" + t.test_id + "'");
    t.score = CosineScore(*a, *b, t.enroll_id + " / " + t.test_id);
  }
  return trials;
}

TrialSet ScoreTrials(const EmbeddingTable& table, TrialSet trials) {
  return ScoreTrials(
      [&table](const std::string& id) -> const Embedding* {
        auto it = table.find(id);
        return it == table.end() ? nullptr : &it->second;
      },
      std::move(trials));
}

EerResult ComputeEer(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty())
    throw InputError("EER is undefined without both target and nontarget "
                     "trials");
  std::vector<std::pair<double, bool>> all;
  for (double s : target_scores) all.emplace_back(s, true);
  for (double s : nontarget_scores) all.emplace_back(s, false);
  for (const auto& [s, _] : all)
    if (!std::isfinite(s)) throw NumericError("EER: non-finite score");
  std::sort(all.begin(), all.end());
  const double nt = static_cast<double>(target_scores.size());
  const double nn = static_cast<double>(nontarget_scores.size());

  // Operating point j thresholds at the j-th unique score; the final one
  // sits just above the maximum and rejects everything.
  std::size_t rejected_targets = 0, rejected_nontargets = 0;
  double prev_far = 1.0, prev_frr = 0.0, prev_tau = all.front().first;
  std::size_t i = 0;
  bool first = true;
  while (true) {
    double tau;
    if (i < all.size()) {
      tau = all[i].first;
    } else {
      tau = std::nextafter(all.back().first,
                           std::numeric_limits<double>::infinity());
    }
    const double far = (nn - rejected_nontargets) / nn;
    const double frr = rejected_targets / nt;
    if (frr >= far) {
      if (frr == far || first) return {far, tau};
      const double d0 = prev_far - prev_frr;
      const double d1 = frr - far;
      const double u = d0 / (d0 + d1);
      return {prev_far + u * (far - prev_far),
              prev_tau + u * (tau - prev_tau)};
    }
    if (i >= all.size()) break;
    // Advance past every trial scored exactly tau.
    while (i < all.size() && all[i].first == tau) {
      if (all[i].second)
        ++rejected_targets;
      else
        ++rejected_nontargets;
      ++i;
    }
    prev_far = far;
    prev_frr = frr;
    prev_tau = tau;
    first = false;
  }
  // Unreachable: the last operating point has FRR = 1 >= FAR = 0.
  return {prev_far, prev_tau};
}

EerResult ComputeEer(const TrialSet& trials) {
  std::vector<double> tgt, non;
  for (const Trial& t : trials.trials) {
    if (!t.score)
      throw StateError("trial " + t.enroll_id + " " + t.test_id +
                       " has no score");
    (t.target ? tgt : non).push_back(*t.score);
  }
  return ComputeEer(tgt, non);
}

EmbeddingTable ExtractEmbeddings(DanseModel& model,
                                 std::span<const FeatureSequence> recordings) {
  EmbeddingTable table;
  for (const FeatureSequence& r : recordings) {
    try {
      table[r.recording_id] = model.EmbedRecording(r.frames);
    } catch (const InputError& e) {
      throw InputError(r.recording_id + ": " + e.what());
    }
  }
  return table;
}

double EvaluateEer(DanseModel& model,
                   std::span<const FeatureSequence> recordings,
                   const TrialSet& trials) {
  return ComputeEer(ScoreTrials(ExtractEmbeddings(model, recordings), trials))
      .eer;
}

void WriteTrialList(const std::string& path, const TrialSet& trials) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const Trial& t : trials.trials)
    os << t.enroll_id << ' ' << t.test_id << ' '
       << (t.target ? "target" : "nontarget") << '\n';
  if (!os) throw IoError("write failed: " + path);
}

TrialSet ReadTrialList(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  TrialSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Trial t;
    std::string label, extra;
    if (!(fields >> t.enroll_id >> t.test_id >> label) || (fields >> extra))
      throw FormatError(path + ": expected `enroll test label`", lineno);
    if (label == "target")
      t.target = true;
    else if (label != "nontarget")
      throw FormatError(path + ": unknown label '" + label + "'", lineno);
    set.trials.push_back(std::move(t));
  }
  return set;
}

void WriteScoreFile(const std::string& path, const TrialSet& trials) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  char buf[64];
  for (const Trial& t : trials.trials) {
    if (!t.score) throw StateError("cannot write unscored trial");
    std::snprintf(buf, sizeof(buf), "%.6f", *t.score);
    os << t.enroll_id << ' ' << t.test_id << ' ' << buf << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

std::vector<ScoreLine> ReadScoreFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<ScoreLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    ScoreLine s;
    std::string score, extra;
    if (!(fields >> s.enroll_id >> s.test_id >> score) || (fields >> extra))
      throw FormatError(path + ": expected `enroll test score`", lineno);
    char* end = nullptr;
    s.score = std::strtod(score.c_str(), &end);
    if (end != score.c_str() + score.size() || !std::isfinite(s.score))
      throw FormatError(path + ": bad score '" + score + "'", lineno);
    out.push_back(std::move(s));
  }
  return out;
}

void WriteEmbeddingFile(const std::string& path, const EmbeddingTable& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("EMB1", 4);
  binary::WriteUnsigned<std::uint32_t>(os, table.size());
  for (const auto& [id, emb] : table) {
    if (emb.size() != kEmbeddingFileDim)
      throw ConfigError("embedding file records are " +
                        std::to_string(kEmbeddingFileDim) +
                        "-dimensional; '" + id + "' has " +
                        std::to_string(emb.size()));
    binary::WriteUnsigned<std::uint16_t>(os, id.size());
    os.write(id.data(), id.size());
    for (double v : emb) binary::WriteF32(os, static_cast<float>(v));
  }
  if (!os) throw IoError("write failed: " + path);
}

EmbeddingTable ReadEmbeddingFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  binary::ExpectMagic(is, "EMB1", path);
  const auto count = binary::ReadUnsigned<std::uint32_t>(is, "count");
  EmbeddingTable table;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = binary::ReadUnsigned<std::uint16_t>(is, "id length");
    std::string id(len, '\0');
    if (!is.read(id.data(), len)) throw FormatError(path + ": truncated id");
    Embedding emb(kEmbeddingFileDim);
    for (double& v : emb) v = binary::ReadF32(is, path);
    table[id] = std::move(emb);
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(path + ": trailing bytes after embeddings");
  return table;
}

std::string FormatEer(double eer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "EER %.2f%%", eer * 100.0);
  return buf;
}

}  // namespace danse
