// src/run_config.cc

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

#include "danse/run_config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "danse/error.h"

namespace danse {

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> parse;
  std::function<std::string(const RunConfig&)> format;
};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T ParseNumber(const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError("cannot parse '" + s + "' as a number");
  return v;
}

template <typename T>
std::vector<T> ParseList(const std::string& s) {
  std::string spaced = s;
  for (char& c : spaced)
    if (c == ',') c = ' ';
  std::istringstream is(spaced);
  std::vector<T> out;
  std::string item;
  while (is >> item) out.push_back(ParseNumber<T>(item));
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string FormatList(const T& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += FormatDouble(v);
    else
      out += std::to_string(v);
  }
  return out;
}

bool ParseBool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("cannot parse '" + s + "' as a boolean");
}

template <typename M>
Field Size(const std::string& key, M member) {
  return {key,
          [member](RunConfig& c, const std::string& v) {
            member(c) = ParseNumber<std::size_t>(v);
          },
          [member](const RunConfig& c) {
            return std::to_string(member(const_cast<RunConfig&>(c)));
          }};
}

template <typename M>
Field Real(const std::string& key, M member) {
  return {key,
          [member](RunConfig& c, const std::string& v) {
            member(c) = ParseNumber<double>(v);
          },
          [member](const RunConfig& c) {
            return FormatDouble(member(const_cast<RunConfig&>(c)));
          }};
}

template <typename M>
Field Text(const std::string& key, M member) {
  return {key,
          [member](RunConfig& c, const std::string& v) { member(c) = v; },
          [member](const RunConfig& c) {
            return member(const_cast<RunConfig&>(c));
          }};
}

template <typename M>
Field Array4(const std::string& key, M member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            auto list = ParseList<std::size_t>(v);
            if (list.size() != 4)
              throw ConfigError(key + " needs exactly 4 entries");
            std::copy(list.begin(), list.end(), member(c).begin());
          },
          [member](const RunConfig& c) {
            return FormatList(member(const_cast<RunConfig&>(c)));
          }};
}

template <typename T, typename M>
Field List(const std::string& key, M member) {
  return {key,
          [member](RunConfig& c, const std::string& v) {
            member(c) = ParseList<T>(v);
          },
          [member](const RunConfig& c) {
            return FormatList(member(const_cast<RunConfig&>(c)));
          }};
}

#define DANSE_M(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      {"seed",
       [](RunConfig& c, const std::string& v) {
         c.seed = ParseNumber<std::uint64_t>(v);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      Size("threads", DANSE_M(c.threads)),
      Text("workdir", DANSE_M(c.workdir)),
      Text("manifest", DANSE_M(c.manifest)),
      Text("trials", DANSE_M(c.trials)),
      Text("pretrain_checkpoint", DANSE_M(c.pretrain_checkpoint)),
      // corpus
      Size("feature_dim", DANSE_M(c.corpus.feature_dim)),
      Size("num_speakers_source", DANSE_M(c.corpus.num_speakers_source)),
      Size("num_speakers_target", DANSE_M(c.corpus.num_speakers_target)),
      Size("num_speakers_validation",
           DANSE_M(c.corpus.num_speakers_validation)),
      Size("num_speakers_trial", DANSE_M(c.corpus.num_speakers_trial)),
      Size("recordings_per_speaker", DANSE_M(c.corpus.recordings_per_speaker)),
      Size("min_frames", DANSE_M(c.corpus.min_frames)),
      Size("max_frames", DANSE_M(c.corpus.max_frames)),
      Real("speaker_scale", DANSE_M(c.corpus.speaker_scale)),
      Real("channel_scale", DANSE_M(c.corpus.channel_scale)),
      Real("noise_scale", DANSE_M(c.corpus.noise_scale)),
      Real("smoothing", DANSE_M(c.corpus.smoothing)),
      List<double>("shift_scale", DANSE_M(c.corpus.shift_scale)),
      List<double>("shift_offset", DANSE_M(c.corpus.shift_offset)),
      // model
      Array4("block_counts", DANSE_M(c.model.extractor.block_counts)),
      Array4("channel_widths", DANSE_M(c.model.extractor.channel_widths)),
      Size("bottleneck_expansion",
           DANSE_M(c.model.extractor.bottleneck_expansion)),
      Size("embedding_dim", DANSE_M(c.model.extractor.embedding_dim)),
      Size("fc_hidden_dim", DANSE_M(c.model.extractor.fc_hidden_dim)),
      Size("attention_dim", DANSE_M(c.model.extractor.attention_dim)),
      Real("var_floor", DANSE_M(c.model.extractor.var_floor)),
      Size("classifier_hidden_dim", DANSE_M(c.model.classifier_hidden_dim)),
      Size("discriminator_hidden_dim",
           DANSE_M(c.model.discriminator_hidden_dim)),
      Real("bn_eps", DANSE_M(c.model.bn_eps)),
      Real("bn_momentum", DANSE_M(c.model.bn_momentum)),
      // training
      Real("lambda", DANSE_M(c.train.lambda)),
      Real("pretrain_lr", DANSE_M(c.train.pretrain_lr)),
      List<std::size_t>("pretrain_anneal_epochs",
                        DANSE_M(c.train.pretrain_anneal_epochs)),
      Real("pretrain_anneal_factor", DANSE_M(c.train.pretrain_anneal_factor)),
      Size("pretrain_epochs", DANSE_M(c.train.pretrain_epochs)),
      Real("dat_lr_classifier", DANSE_M(c.train.dat_lr_classifier)),
      Real("dat_lr_extractor", DANSE_M(c.train.dat_lr_extractor)),
      Real("dat_lr_discriminator", DANSE_M(c.train.dat_lr_discriminator)),
      Real("rms_rho", DANSE_M(c.train.rms_rho)),
      Real("rms_eps", DANSE_M(c.train.rms_eps)),
      Size("batch_size", DANSE_M(c.train.batch_size)),
      Size("max_epochs", DANSE_M(c.train.max_epochs)),
      Size("patience", DANSE_M(c.train.patience)),
      Real("margin", DANSE_M(c.train.margin)),
      Real("scale", DANSE_M(c.train.scale)),
      Size("chunks_per_recording", DANSE_M(c.train.chunks_per_recording)),
      Size("min_recordings", DANSE_M(c.train.min_recordings)),
      {"adapt",
       [](RunConfig& c, const std::string& v) { c.train.adapt = ParseBool(v); },
       [](const RunConfig& c) {
         return std::string(c.train.adapt ? "true" : "false");
       }},
      Real("target_weight", DANSE_M(c.train.target_weight)),
  };
  return fields;
}

#undef DANSE_M

}  // namespace

void RunConfig::Resolve() {
  corpus.seed = seed;
  train.seed = seed;
  model.extractor.feature_dim = corpus.feature_dim;
  corpus.Validate();
  model.extractor.Validate();
  train.Validate();
}

std::string RunConfig::ToString() const {
  std::string out;
  for (const Field& f : Fields()) out += f.key + " = " + f.format(*this) + "\n";
  return out;
}

std::vector<std::string> RunConfig::Keys() {
  std::vector<std::string> keys;
  for (const Field& f : Fields()) keys.push_back(f.key);
  return keys;
}

RunConfig ParseRunConfig(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: expected `key = value`", lineno);
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : Fields())
      if (f.key == key) field = &f;
    if (!field) throw FormatError("config: unknown key '" + key + "'", lineno);
    if (!seen.insert(key).second)
      throw FormatError("config: duplicate key '" + key + "'", lineno);
    try {
      field->parse(config, value);
    } catch (const ConfigError& e) {
      throw FormatError("config: " + key + ": " + e.what(), lineno);
    }
  }
  config.Resolve();
  return config;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return ParseRunConfig(buf.str());
}

}  // namespace danse
