// include/danse/datagen.h

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

#ifndef DANSE_DATAGEN_H_
#define DANSE_DATAGEN_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "danse/tensor.h"

namespace danse {

enum class Domain { kSource, kTarget };

const char* DomainName(Domain d);
Domain ParseDomain(const std::string& s);

// Speaker id used when labels are withheld.
inline constexpr const char* kWithheldSpeaker = "-";

struct FeatureSequence {
  std::string recording_id;
  std::string speaker_id;
  Domain domain = Domain::kSource;
  Tensor frames;  // [F x T], nominally 100 frames per second

  std::size_t num_frames() const { return frames.dim(1); }
};

struct CorpusConfig {
  std::size_t feature_dim = 23;
  std::size_t num_speakers_source = 20;
  std::size_t num_speakers_target = 10;      // unlabeled adaptation split
  std::size_t num_speakers_validation = 5;   // labeled, target domain
  std::size_t num_speakers_trial = 10;       // labeled, target domain
  std::size_t recordings_per_speaker = 8;
  std::size_t min_frames = 400;
  std::size_t max_frames = 1000;
  double speaker_scale = 1.0;
  double channel_scale = 0.3;
  double noise_scale = 0.5;
  double smoothing = 0.7;
  // Target frames are mapped x -> shift_scale * x + shift_offset per
  // coordinate; a single entry is broadcast to every coordinate.
  std::vector<double> shift_scale = {1.5};
  std::vector<double> shift_offset = {1.0};
  std::uint64_t seed = 1;

  void Validate() const;
  std::vector<double> ScaleVector() const;
  std::vector<double> OffsetVector() const;
};

struct Corpus {
  std::vector<FeatureSequence> source;      // labeled
  std::vector<FeatureSequence> target;      // adaptation, labels withheld
  std::vector<FeatureSequence> validation;  // held-out target speakers
  std::vector<FeatureSequence> trial;       // held-out target speakers
};

// Gaussian factor model: frame_t = s_speaker + c_recording + n_t, where n_t
// is AR(1)-smoothed white noise with stationary scale noise_scale. Values
// are rounded to f32 precision so they survive the feature file format
// unchanged. Deterministic given config.seed.
Corpus GenerateCorpus(const CorpusConfig& config);

// Drops speakers with fewer than min_recordings recordings (unlabeled
// recordings are kept).
std::vector<FeatureSequence> FilterSpeakers(
    std::vector<FeatureSequence> recordings, std::size_t min_recordings = 5);

// Chunk lengths in frames: 3 to 8 seconds at 100 frames/s.
inline constexpr std::size_t kMinChunkFrames = 300;
inline constexpr std::size_t kMaxChunkFrames = 800;

struct ChunkPlan {
  std::size_t recording = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct Chunk {
  std::string recording_id;
  std::string speaker_id;
  Domain domain = Domain::kSource;
  Tensor frames;  // [F x L]
};

// Draws one chunk (uniform length, uniform start) from recording `index`.
ChunkPlan DrawChunk(const FeatureSequence& recording, std::size_t index,
                    std::mt19937_64& rng);

// chunks_per_recording chunks of every recording, shuffled.
std::vector<ChunkPlan> PlanEpoch(std::span<const FeatureSequence> recordings,
                                 std::size_t chunks_per_recording,
                                 std::uint64_t seed);

// Contiguous slice; wraps around to the recording start when the chunk
// runs past the end.
Chunk CutChunk(const FeatureSequence& recording, std::size_t start,
               std::size_t length);

std::vector<Chunk> SampleEpoch(std::span<const FeatureSequence> recordings,
                               std::size_t chunks_per_recording,
                               std::uint64_t seed);

// batch_size chunks drawn with replacement, advancing `rng`.
std::vector<ChunkPlan> PlanTargetBatch(
    std::span<const FeatureSequence> recordings, std::size_t batch_size,
    std::mt19937_64& rng);
std::vector<Chunk> SampleTargetBatch(
    std::span<const FeatureSequence> recordings, std::size_t batch_size,
    std::mt19937_64& rng);

// Stacks chunks into [N x F x L_min], cropping each to the shortest length
// in the batch.
Tensor StackChunks(std::span<const Chunk> chunks);

// Independent sub-stream of a base seed.
std::mt19937_64 SeedStream(std::uint64_t seed, std::uint64_t stream);

}  // namespace danse

#endif  // DANSE_DATAGEN_H_
