// src/datagen.cc

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

#include "danse/datagen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "danse/error.h"

namespace danse {

const char* DomainName(Domain d) {
  return d == Domain::kSource ? "source" : "target";
}

Domain ParseDomain(const std::string& s) {
  if (s == "source") return Domain::kSource;
  if (s == "target") return Domain::kTarget;
  throw FormatError("unknown domain '" + s + "'");
}

void CorpusConfig::Validate() const {
  if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
  if (num_speakers_source == 0 || num_speakers_target == 0 ||
      num_speakers_trial == 0)
    throw ConfigError("speaker counts must be positive");
  if (recordings_per_speaker == 0)
    throw ConfigError("recordings_per_speaker must be positive");
  if (min_frames == 0 || min_frames > max_frames)
    throw ConfigError("frames range must satisfy 1 <= min <= max");
  if (speaker_scale < 0 || channel_scale < 0 || noise_scale < 0)
    throw ConfigError("scales must be non-negative");
  if (smoothing < 0 || smoothing >= 1)
    throw ConfigError("smoothing must be in [0, 1)");
  for (const auto* v : {&shift_scale, &shift_offset})
    if (v->size() != 1 && v->size() != feature_dim)
      throw ConfigError("domain shift vectors need 1 or feature_dim entries");
}

static std::vector<double> Broadcast(const std::vector<double>& v,
                                     std::size_t n) {
  return v.size() == 1 ? std::vector<double>(n, v[0]) : v;
}

std::vector<double> CorpusConfig::ScaleVector() const {
  return Broadcast(shift_scale, feature_dim);
}

std::vector<double> CorpusConfig::OffsetVector() const {
  return Broadcast(shift_offset, feature_dim);
}

std::mt19937_64 SeedStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

std::string Id(const char* prefix, std::size_t spk, std::size_t rec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-spk%03zu-rec%02zu", prefix, spk, rec);
  return buf;
}

std::string SpeakerId(const char* prefix, std::size_t spk) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s-spk%03zu", prefix, spk);
  return buf;
}

struct Split {
  const char* prefix;
  std::size_t speakers;
  Domain domain;
  bool labeled;
  std::vector<FeatureSequence>* out;
};

}  // namespace

Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Corpus corpus;
  const std::size_t F = config.feature_dim;
  const auto a = config.ScaleVector();
  const auto b = config.OffsetVector();
  const double rho = config.smoothing;
  const double innov = std::sqrt(1.0 - rho * rho);

  std::mt19937_64 rng = SeedStream(config.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(config.min_frames,
                                                    config.max_frames);

  const Split splits[] = {
      {"src", config.num_speakers_source, Domain::kSource, true,
       &corpus.source},
      {"adp", config.num_speakers_target, Domain::kTarget, false,
       &corpus.target},
      {"val", config.num_speakers_validation, Domain::kTarget, true,
       &corpus.validation},
      {"tst", config.num_speakers_trial, Domain::kTarget, true,
       &corpus.trial},
  };
  for (const Split& split : splits) {
    for (std::size_t spk = 0; spk < split.speakers; ++spk) {
      std::vector<double> identity(F);
      for (double& v : identity) v = config.speaker_scale * normal(rng);
      for (std::size_t rec = 0; rec < config.recordings_per_speaker; ++rec) {
        std::vector<double> channel(F);
        for (double& v : channel) v = config.channel_scale * normal(rng);
        const std::size_t T = length(rng);
        std::vector<double> frames(F * T);
        std::vector<double> noise(F);
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t f = 0; f < F; ++f) {
            const double white = config.noise_scale * normal(rng);
            noise[f] = t == 0 ? white : rho * noise[f] + innov * white;
            double x = identity[f] + channel[f] + noise[f];
            if (split.domain == Domain::kTarget) x = a[f] * x + b[f];
            frames[f * T + t] = static_cast<float>(x);
          }
        }
        FeatureSequence seq;
        seq.recording_id = Id(split.prefix, spk, rec);
        seq.speaker_id =
            split.labeled ? SpeakerId(split.prefix, spk) : kWithheldSpeaker;
        seq.domain = split.domain;
        seq.frames = Tensor::FromData({F, T}, std::move(frames));
        split.out->push_back(std::move(seq));
      }
    }
  }
  return corpus;
}

std::vector<FeatureSequence> FilterSpeakers(
    std::vector<FeatureSequence> recordings, std::size_t min_recordings) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : recordings) ++counts[r.speaker_id];
  std::erase_if(recordings, [&](const FeatureSequence& r) {
    return r.speaker_id != kWithheldSpeaker &&
           counts[r.speaker_id] < min_recordings;
  });
  return recordings;
}

ChunkPlan DrawChunk(const FeatureSequence& recording, std::size_t index,
                    std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> length(kMinChunkFrames,
                                                    kMaxChunkFrames);
  ChunkPlan plan;
  plan.recording = index;
  plan.length = length(rng);
  const std::size_t T = recording.num_frames();
  if (T > plan.length) {
    std::uniform_int_distribution<std::size_t> start(0, T - plan.length);
    plan.start = start(rng);
  }
  return plan;
}

std::vector<ChunkPlan> PlanEpoch(std::span<const FeatureSequence> recordings,
                                 std::size_t chunks_per_recording,
                                 std::uint64_t seed) {
  if (recordings.empty()) throw ConfigError("sample_epoch: no recordings");
  std::mt19937_64 rng = SeedStream(seed, 2);
  std::vector<ChunkPlan> plan;
  plan.reserve(recordings.size() * chunks_per_recording);
  for (std::size_t r = 0; r < recordings.size(); ++r)
    for (std::size_t c = 0; c < chunks_per_recording; ++c)
      plan.push_back(DrawChunk(recordings[r], r, rng));
  std::shuffle(plan.begin(), plan.end(), rng);
  return plan;
}

Chunk CutChunk(const FeatureSequence& recording, std::size_t start,
               std::size_t length) {
  const std::size_t F = recording.frames.dim(0), T = recording.num_frames();
  std::vector<double> data(F * length);
  const auto src = recording.frames.data();
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t i = 0; i < length; ++i)
      data[f * length + i] = src[f * T + (start + i) % T];
  return {recording.recording_id, recording.speaker_id, recording.domain,
          Tensor::FromData({F, length}, std::move(data))};
}

std::vector<Chunk> SampleEpoch(std::span<const FeatureSequence> recordings,
                               std::size_t chunks_per_recording,
                               std::uint64_t seed) {
  std::vector<Chunk> chunks;
  for (const ChunkPlan& p : PlanEpoch(recordings, chunks_per_recording, seed))
    chunks.push_back(CutChunk(recordings[p.recording], p.start, p.length));
  return chunks;
}

std::vector<ChunkPlan> PlanTargetBatch(
    std::span<const FeatureSequence> recordings, std::size_t batch_size,
    std::mt19937_64& rng) {
  if (recordings.empty())
    throw ConfigError("sample_target_batch: empty target set");
  std::uniform_int_distribution<std::size_t> pick(0, recordings.size() - 1);
  std::vector<ChunkPlan> plan;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t r = pick(rng);
    plan.push_back(DrawChunk(recordings[r], r, rng));
  }
  return plan;
}

std::vector<Chunk> SampleTargetBatch(
    std::span<const FeatureSequence> recordings, std::size_t batch_size,
    std::mt19937_64& rng) {
  std::vector<Chunk> chunks;
  for (const ChunkPlan& p : PlanTargetBatch(recordings, batch_size, rng))
    chunks.push_back(CutChunk(recordings[p.recording], p.start, p.length));
  return chunks;
}

Tensor StackChunks(std::span<const Chunk> chunks) {
  if (chunks.empty()) throw ConfigError("cannot stack an empty batch");
  const std::size_t F = chunks[0].frames.dim(0);
  std::size_t L = chunks[0].frames.dim(1);
  for (const Chunk& c : chunks) {
    if (c.frames.dim(0) != F)
      throw ConfigError("chunks in a batch disagree on feature dimension");
    L = std::min(L, c.frames.dim(1));
  }
  std::vector<double> data(chunks.size() * F * L);
  for (std::size_t n = 0; n < chunks.size(); ++n) {
    const std::size_t T = chunks[n].frames.dim(1);
    const auto src = chunks[n].frames.data();
    for (std::size_t f = 0; f < F; ++f)
      std::copy_n(src.begin() + f * T, L, data.begin() + (n * F + f) * L);
  }
  return Tensor::FromData({chunks.size(), F, L}, std::move(data));
}

}  // namespace danse
