// tests/test_datagen.cc

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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "danse/datagen.h"
#include "danse/error.h"
#include "danse/feature_io.h"
#include "doctest.h"
#include "test_util.h"

using namespace danse;
namespace fs = std::filesystem;

namespace {

bool SameFrames(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::vector<double> MeanFrame(const FeatureSequence& r) {
  const std::size_t F = r.frames.dim(0), T = r.frames.dim(1);
  std::vector<double> m(F, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) m[f] += r.frames[f * T + t];
    m[f] /= double(T);
  }
  return m;
}

double Dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// Welch z statistic for the difference in means of coordinate 0, using one
// frame per single-frame recording so the samples are independent.
double MeanTestZ(const std::vector<FeatureSequence>& a,
                 const std::vector<FeatureSequence>& b) {
  auto moments = [](const std::vector<FeatureSequence>& r) {
    double s = 0, s2 = 0;
    for (const auto& x : r) {
      s += x.frames[0];
      s2 += x.frames[0] * x.frames[0];
    }
    const double n = double(r.size()), mean = s / n;
    return std::pair{mean, (s2 / n - mean * mean) * n / (n - 1) / n};
  };
  auto [ma, va] = moments(a);
  auto [mb, vb] = moments(b);
  return (ma - mb) / std::sqrt(va + vb);
}

CorpusConfig SingleFrameCorpus(double scale, double offset) {
  CorpusConfig c;
  c.feature_dim = 3;
  c.num_speakers_source = 2000;
  c.num_speakers_target = 2000;
  c.num_speakers_validation = 1;
  c.num_speakers_trial = 1;
  c.recordings_per_speaker = 5;
  c.min_frames = c.max_frames = 1;
  c.shift_scale = {scale};
  c.shift_offset = {offset};
  c.seed = 21;
  return c;
}

}  // namespace

TEST_CASE("corpus generation is deterministic and has the configured shape") {
  CorpusConfig c;
  c.feature_dim = 5;
  c.num_speakers_source = 3;
  c.num_speakers_target = 2;
  c.num_speakers_validation = 1;
  c.num_speakers_trial = 2;
  c.recordings_per_speaker = 6;
  const Corpus a = GenerateCorpus(c), b = GenerateCorpus(c);
  CHECK(a.source.size() == 18);
  CHECK(a.target.size() == 12);
  CHECK(a.validation.size() == 6);
  CHECK(a.trial.size() == 12);
  for (auto split : {&Corpus::source, &Corpus::target,
                            &Corpus::validation, &Corpus::trial})
    for (std::size_t i = 0; i < (a.*split).size(); ++i) {
      const FeatureSequence& x = (a.*split)[i];
      CHECK(x.recording_id == (b.*split)[i].recording_id);
      CHECK(SameFrames(x.frames, (b.*split)[i].frames));
      CHECK(x.frames.dim(0) == 5);
      CHECK(x.num_frames() >= c.min_frames);
      CHECK(x.num_frames() <= c.max_frames);
      for (double v : x.frames.data())
        CHECK(double(float(v)) == v);
    }
  for (const auto& r : a.target) {
    CHECK(r.speaker_id == kWithheldSpeaker);
    CHECK(r.domain == Domain::kTarget);
  }
  for (const auto& r : a.source) CHECK(r.domain == Domain::kSource);
  std::map<std::string, int> owners;
  for (const auto& r : a.source) owners[r.speaker_id] |= 1;
  for (const auto& r : a.trial) owners[r.speaker_id] |= 2;
  for (const auto& r : a.validation) owners[r.speaker_id] |= 4;
  for (const auto& [id, bits] : owners)
    CHECK((bits == 1 || bits == 2 || bits == 4));

  c.seed = 2;
  CHECK_FALSE(SameFrames(GenerateCorpus(c).source[0].frames,
                         a.source[0].frames));
}

TEST_CASE("invalid corpus configs are rejected") {
  CorpusConfig c;
  c.shift_scale = {1.0, 2.0};
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = CorpusConfig();
  c.min_frames = 10;
  c.max_frames = 5;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = CorpusConfig();
  c.noise_scale = -1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("identity domain shift leaves frame means indistinguishable") {
  const Corpus same = GenerateCorpus(SingleFrameCorpus(1.0, 0.0));
  REQUIRE(same.source.size() == 10000);
  REQUIRE(same.target.size() == 10000);
  // Two-sided 1% critical value of the standard normal.
  CHECK(std::fabs(MeanTestZ(same.source, same.target)) < 2.5758);

  const Corpus shifted = GenerateCorpus(SingleFrameCorpus(1.5, 1.0));
  CHECK(std::fabs(MeanTestZ(shifted.source, shifted.target)) > 2.5758);
}

TEST_CASE("without noise every frame of a speaker is its identity vector") {
  CorpusConfig c;
  c.feature_dim = 4;
  c.num_speakers_source = 3;
  c.num_speakers_target = 2;
  c.num_speakers_validation = 2;
  c.num_speakers_trial = 3;
  c.recordings_per_speaker = 5;
  c.min_frames = 20;
  c.max_frames = 40;
  c.noise_scale = 0;
  c.channel_scale = 0;
  c.shift_scale = {1.5};
  c.shift_offset = {1.0};
  const Corpus shifted = GenerateCorpus(c);
  c.shift_scale = {1.0};
  c.shift_offset = {0.0};
  const Corpus plain = GenerateCorpus(c);

  for (const auto* split : {&shifted.source, &shifted.trial, &plain.trial}) {
    std::map<std::string, std::vector<double>> identity;
    for (const auto& r : *split) {
      const std::size_t T = r.num_frames();
      std::vector<double> first(4);
      for (std::size_t f = 0; f < 4; ++f) first[f] = r.frames[f * T];
      for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t t = 0; t < T; ++t)
          CHECK(r.frames[f * T + t] == first[f]);
      auto [it, fresh] = identity.emplace(r.speaker_id, first);
      if (!fresh) CHECK(it->second == first);
    }
  }
  REQUIRE(shifted.trial.size() == plain.trial.size());
  for (std::size_t i = 0; i < plain.trial.size(); ++i) {
    const auto& s = plain.trial[i].frames;
    const auto& t = shifted.trial[i].frames;
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(t[k * t.dim(1)] ==
            doctest::Approx(1.5 * s[k * s.dim(1)] + 1.0).epsilon(1e-6));
  }
}

TEST_CASE("shifted target recordings are linearly separable from source") {
  CorpusConfig c;
  c.num_speakers_target = 20;
  c.seed = 5;
  const Corpus corpus = GenerateCorpus(c);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& r : corpus.source) {
    x.push_back(MeanFrame(r));
    y.push_back(0);
  }
  for (const auto& r : corpus.target) {
    x.push_back(MeanFrame(r));
    y.push_back(1);
  }
  // Logistic regression on even rows, evaluated on odd rows.
  const std::size_t F = x[0].size();
  std::vector<double> w(F, 0.0);
  double b = 0;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> gw(F, 0.0);
    double gb = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); i += 2, ++n) {
      double z = b;
      for (std::size_t f = 0; f < F; ++f) z += w[f] * x[i][f];
      const double err = 1 / (1 + std::exp(-z)) - y[i];
      for (std::size_t f = 0; f < F; ++f) gw[f] += err * x[i][f];
      gb += err;
    }
    for (std::size_t f = 0; f < F; ++f) w[f] -= 0.1 * gw[f] / double(n);
    b -= 0.1 * gb / double(n);
  }
  std::size_t right = 0, total = 0;
  for (std::size_t i = 1; i < x.size(); i += 2, ++total) {
    double z = b;
    for (std::size_t f = 0; f < F; ++f) z += w[f] * x[i][f];
    right += (z > 0) == (y[i] == 1);
  }
  const double acc = double(right) / double(total);
  INFO("accuracy " << acc);
  CHECK(acc >= 0.95);
}

TEST_CASE("source speakers are separable by nearest centroid") {
  const Corpus corpus = GenerateCorpus(CorpusConfig());
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  std::vector<std::vector<double>> means;
  for (std::size_t i = 0; i < corpus.source.size(); ++i) {
    means.push_back(MeanFrame(corpus.source[i]));
    by_speaker[corpus.source[i].speaker_id].push_back(i);
  }
  // Leave-one-out centroids.
  std::size_t right = 0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    std::string best;
    double best_d = INFINITY;
    for (const auto& [spk, members] : by_speaker) {
      std::vector<double> c(means[i].size(), 0.0);
      std::size_t n = 0;
      for (std::size_t j : members) {
        if (j == i) continue;
        for (std::size_t f = 0; f < c.size(); ++f) c[f] += means[j][f];
        ++n;
      }
      for (double& v : c) v /= double(n);
      const double d = Dist2(means[i], c);
      if (d < best_d) {
        best_d = d;
        best = spk;
      }
    }
    right += best == corpus.source[i].speaker_id;
  }
  const double acc = double(right) / double(means.size());
  INFO("accuracy " << acc);
  CHECK(acc >= 0.90);
}

TEST_CASE("speaker filter drops speakers with too few recordings") {
  CorpusConfig c;
  c.feature_dim = 2;
  c.num_speakers_source = 2;
  c.recordings_per_speaker = 5;
  auto recs = GenerateCorpus(c).source;
  const std::string dropped = recs.back().speaker_id;
  recs.pop_back();
  const auto kept = FilterSpeakers(recs, 5);
  CHECK(kept.size() == 5);
  for (const auto& r : kept) CHECK(r.speaker_id != dropped);
  CHECK(FilterSpeakers(recs, 4).size() == 9);
}

TEST_CASE("epoch sampling counts, lengths, slices and determinism") {
  CorpusConfig c;
  c.feature_dim = 3;
  c.num_speakers_source = 1;
  c.recordings_per_speaker = 7;
  c.min_frames = 200;
  c.max_frames = 900;
  const Corpus corpus = GenerateCorpus(c);
  const auto plan = PlanEpoch(corpus.source, 10, 4);
  const auto chunks = SampleEpoch(corpus.source, 10, 4);
  REQUIRE(chunks.size() == 70);
  std::vector<int> per_recording(7, 0);
  bool shuffled = false;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const ChunkPlan& p = plan[i];
    const FeatureSequence& rec = corpus.source[p.recording];
    ++per_recording[p.recording];
    if (i > 0 && p.recording < plan[i - 1].recording) shuffled = true;
    const Chunk& ch = chunks[i];
    const std::size_t L = ch.frames.dim(1), T = rec.num_frames();
    CHECK(L == p.length);
    CHECK(L >= kMinChunkFrames);
    CHECK(L <= kMaxChunkFrames);
    CHECK(ch.recording_id == rec.recording_id);
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t t = 0; t < L; t += 37)
        CHECK(ch.frames[f * L + t] == rec.frames[f * T + (p.start + t) % T]);
  }
  for (int n : per_recording) CHECK(n == 10);
  CHECK(shuffled);
  const auto again = SampleEpoch(corpus.source, 10, 4);
  for (std::size_t i = 0; i < chunks.size(); ++i)
    CHECK(SameFrames(again[i].frames, chunks[i].frames));
  CHECK_THROWS_AS(SampleEpoch({}, 10, 1), ConfigError);
}

TEST_CASE("short recordings wrap around") {
  std::vector<double> v(2 * 100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
  FeatureSequence rec{"r", "s", Domain::kSource, Tensor::FromData({2, 100}, v)};
  Chunk c = CutChunk(rec, 0, 300);
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t t = 0; t < 300; ++t)
      CHECK(c.frames[f * 300 + t] == rec.frames[f * 100 + t % 100]);
  Chunk d = CutChunk(rec, 95, 10);
  CHECK(d.frames[0] == 95);
  CHECK(d.frames[5] == 0);
}

TEST_CASE("target batches draw uniformly with replacement") {
  CorpusConfig c;
  c.feature_dim = 2;
  c.num_speakers_target = 2;
  c.recordings_per_speaker = 5;
  c.min_frames = c.max_frames = 400;
  const Corpus corpus = GenerateCorpus(c);
  REQUIRE(corpus.target.size() == 10);

  std::mt19937_64 rng = SeedStream(17, 3);
  std::vector<std::size_t> counts(10, 0);
  for (int batch = 0; batch < 100; ++batch)
    for (const ChunkPlan& p : PlanTargetBatch(corpus.target, 100, rng))
      ++counts[p.recording];
  // A binomial(10^4, 0.1) frequency has standard deviation 0.003.
  for (std::size_t n : counts) {
    const double freq = double(n) / 1e4;
    CHECK(std::fabs(freq - 0.1) <= 0.05);
    CHECK(std::fabs(freq - 0.1) <= 0.012);
  }

  std::mt19937_64 a = SeedStream(3, 3), b = SeedStream(3, 3);
  const auto ba = SampleTargetBatch(corpus.target, 8, a);
  const auto bb = SampleTargetBatch(corpus.target, 8, b);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(SameFrames(ba[i].frames, bb[i].frames));
  const auto next = SampleTargetBatch(corpus.target, 8, a);
  CHECK_FALSE(SameFrames(next[0].frames, ba[0].frames));

  std::span<const FeatureSequence> one(corpus.target.data(), 1);
  for (const Chunk& ch : SampleTargetBatch(one, 4, a))
    CHECK(ch.recording_id == corpus.target[0].recording_id);
  CHECK_THROWS_AS(SampleTargetBatch({}, 4, a), ConfigError);
}

TEST_CASE("stacking crops to the shortest chunk") {
  std::vector<double> v(2 * 400);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
  FeatureSequence rec{"r", "s", Domain::kSource, Tensor::FromData({2, 400}, v)};
  std::vector<Chunk> chunks{CutChunk(rec, 0, 350), CutChunk(rec, 10, 310)};
  Tensor x = StackChunks(chunks);
  CHECK(x.shape() == Shape{2, 2, 310});
  CHECK(x[310] == 400);         // chunk 0, f = 1, t = 0
  CHECK(x[2 * 310] == 10);      // chunk 1, f = 0, t = 0
}

TEST_CASE("feature files and manifests round trip") {
  const std::string dir = testing::TempDir("datagen_io");
  fs::create_directories(dir);
  CorpusConfig c;
  c.feature_dim = 3;
  c.num_speakers_source = 1;
  c.recordings_per_speaker = 1;
  c.min_frames = c.max_frames = 5;
  const FeatureSequence rec = GenerateCorpus(c).source[0];
  const std::string path = dir + "/a.fea";
  WriteFeatureFile(path, rec.frames);
  CHECK(SameFrames(ReadFeatureFile(path), rec.frames));
  CHECK(fs::file_size(path) == 12 + 4 * 15);

  // Frame-major layout: the second stored value is coordinate 1 of frame 0.
  std::ifstream is(path, std::ios::binary);
  char header[12];
  float second[2];
  is.read(header, 12);
  is.read(reinterpret_cast<char*>(second), 8);
  CHECK(std::memcmp(header, "FEA1", 4) == 0);
  CHECK(double(second[1]) == rec.frames[1 * 5 + 0]);

  auto corrupt = [&](const std::string& name, auto edit) {
    std::string bytes;
    {
      std::ifstream in(path, std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    edit(bytes);
    const std::string p = dir + "/" + name;
    std::ofstream(p, std::ios::binary) << bytes;
    return p;
  };
  CHECK_THROWS_AS(ReadFeatureFile(corrupt("magic.fea",
                                          [](std::string& b) { b[0] = 'X'; })),
                  FormatError);
  CHECK_THROWS_AS(ReadFeatureFile(corrupt(
                      "short.fea", [](std::string& b) { b.resize(30); })),
                  FormatError);
  CHECK_THROWS_AS(ReadFeatureFile(corrupt("long.fea",
                                          [](std::string& b) { b += "x"; })),
                  FormatError);
  CHECK_THROWS_AS(ReadFeatureFile(dir + "/missing.fea"), IoError);

  const std::vector<ManifestEntry> entries{
      {"src-0", "spk0", Domain::kSource, "feats/src-0.fea"},
      {"tgt-0", "-", Domain::kTarget, "feats/tgt-0.fea"}};
  WriteManifest(dir + "/manifest.txt", entries);
  const auto back = ReadManifest(dir + "/manifest.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[1].speaker_id == "-");
  CHECK(back[1].domain == Domain::kTarget);
  CHECK(back[0].path == "feats/src-0.fea");

  std::ofstream(dir + "/bad.txt") << "a b source p\nc d sideways p\n";
  try {
    ReadManifest(dir + "/bad.txt");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::ofstream(dir + "/few.txt") << "a b source\n";
  CHECK_THROWS_AS(ReadManifest(dir + "/few.txt"), FormatError);
}
