// tools/danse_main.cc

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

// danse command-line driver.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "danse/checkpoint.h"
#include "danse/data_dir.h"
#include "danse/error.h"
#include "danse/feature_io.h"
#include "danse/kernels.h"
#include "danse/run_config.h"
#include "danse/self_test.h"
#include "danse/training.h"
#include "danse/verification.h"

namespace fs = std::filesystem;
using namespace danse;

namespace {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kDiverged = 2,
  kMissingArtifact = 3,
  kBadFormat = 4,
};

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void Require(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw MissingArtifact("missing " + what + ": " + path);
}

RunConfig Config(const std::string& path) {
  RunConfig config = path.empty() ? RunConfig() : LoadRunConfig(path);
  if (path.empty()) config.Resolve();
  if (config.threads) kernels::SetNumThreads(config.threads);
  return config;
}

std::string Workdir(const RunConfig& config) {
  if (!config.workdir.empty()) return config.workdir;
  if (const char* env = std::getenv("DANSE_WORKDIR")) return env;
  return "";
}

std::string OutPath(const std::string& flag, const RunConfig& config,
                    const std::string& leaf) {
  if (!flag.empty()) return flag;
  const std::string w = Workdir(config);
  if (w.empty())
    throw ConfigError("--out not given and DANSE_WORKDIR is not set");
  return (fs::path(w) / leaf).string();
}

std::string DataPath(const std::string& flag, const RunConfig& config) {
  if (!flag.empty()) return flag;
  const std::string w = Workdir(config);
  if (w.empty())
    throw ConfigError("--data not given and DANSE_WORKDIR is not set");
  return (fs::path(w) / "data").string();
}

void MakeDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

void WriteRunLog(const std::string& dir, const std::string& command,
                 const RunConfig& config) {
  std::ofstream os(fs::path(dir) / "run.log", std::ios::trunc);
  if (!os) throw IoError("cannot write run log in " + dir);
  os << "# danse " << command << "\n" << config.ToString();
}

DataDir LoadData(const std::string& dir) {
  Require((fs::path(dir) / "manifest.txt").string(), "manifest");
  Require((fs::path(dir) / "trials.txt").string(), "trial list");
  Require((fs::path(dir) / "val_trials.txt").string(), "validation trials");
  return LoadDataDir(dir);
}

ModelConfig ModelFor(const RunConfig& config,
                     const std::vector<FeatureSequence>& source) {
  ModelConfig mc = config.model;
  mc.num_speakers =
      IndexSpeakers(FilterSpeakers(source, config.train.min_recordings))
          .size();
  return mc;
}

class TrainLog {
 public:
  explicit TrainLog(const std::string& dir)
      : dir_(dir), os_(fs::path(dir) / "train.log", std::ios::trunc) {
    if (!os_) throw IoError("cannot write train.log in " + dir);
  }
  void operator()(const EpochLog& log, const DanseModel& model) {
    const std::string line = FormatLogLine(log);
    os_ << line << "\n" << std::flush;
    std::cout << line << "\n";
    SaveModel((fs::path(dir_) / ("epoch_" + std::to_string(log.epoch) +
                                 ".ckpt"))
                  .string(),
              model);
  }

 private:
  std::string dir_;
  std::ofstream os_;
};

int GenData(const std::string& config_path, const std::string& out_flag) {
  RunConfig config = Config(config_path);
  const std::string out = OutPath(out_flag, config, "data");
  MakeDir(out);
  WriteDataDir(out, GenerateCorpus(config.corpus));
  WriteRunLog(out, "gen-data", config);
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int PretrainCmd(const std::string& config_path, const std::string& data_flag,
                const std::string& out_flag) {
  RunConfig config = Config(config_path);
  const DataDir data = LoadData(DataPath(data_flag, config));
  const std::string out = OutPath(out_flag, config, "pretrain");
  MakeDir(out);
  WriteRunLog(out, "pretrain", config);
  DanseModel model(ModelFor(config, data.corpus.source), config.seed);
  TrainLog log(out);
  Pretrain(model, data.corpus.source, config.train,
           {data.corpus.validation, &data.val_trials},
           [&log](const EpochLog& l, const DanseModel& m) { log(l, m); });
  SaveModel((fs::path(out) / "best.ckpt").string(), model);
  return kOk;
}

int TrainDatCmd(const std::string& config_path, const std::string& data_flag,
                const std::string& out_flag) {
  RunConfig config = Config(config_path);
  const std::string out = OutPath(out_flag, config, "dat");
  fs::path out_dir(out);
  if (!out_dir.has_filename()) out_dir = out_dir.parent_path();
  const std::string ckpt =
      config.pretrain_checkpoint.empty()
          ? (out_dir.parent_path() / "pretrain" / "best.ckpt").string()
          : config.pretrain_checkpoint;
  Require(ckpt, "pretrain checkpoint");
  const DataDir data = LoadData(DataPath(data_flag, config));
  MakeDir(out);
  WriteRunLog(out, "train-dat", config);
  DanseModel model(ModelFor(config, data.corpus.source), config.seed);
  LoadModel(ckpt, model, {"f."});
  TrainLog log(out);
  TrainDat(model, data.corpus.source, data.corpus.target,
           {data.corpus.validation, &data.val_trials}, config.train,
           [&log](const EpochLog& l, const DanseModel& m) { log(l, m); });
  SaveModel((fs::path(out) / "best.ckpt").string(), model);
  return kOk;
}

int Extract(const std::string& config_path, const std::string& model_path,
            const std::string& data_flag, const std::string& manifest,
            const std::string& out_flag) {
  RunConfig config = Config(config_path);
  Require(model_path, "model checkpoint");
  std::string manifest_path = manifest.empty() ? config.manifest : manifest;
  if (manifest_path.empty())
    manifest_path =
        (fs::path(DataPath(data_flag, config)) / "manifest.txt").string();
  Require(manifest_path, "manifest");
  ModelConfig mc = config.model;
  mc.num_speakers = 2;  // the classifier is not used
  DanseModel model(mc, config.seed);
  LoadModel(model_path, model, {"f."});
  const auto recordings = LoadRecordings(manifest_path);
  const std::string out = OutPath(out_flag, config, "embeddings.emb");
  WriteEmbeddingFile(out, ExtractEmbeddings(model, recordings));
  std::cout << "wrote " << recordings.size() << " embeddings to " << out
            << "\n";
  return kOk;
}

std::string TrialsPath(const std::string& flag, const RunConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.trials.empty()) return config.trials;
  return (fs::path(DataPath("", config)) / "trials.txt").string();
}

int Score(const std::string& config_path, const std::string& embeddings_flag,
          const std::string& trials_flag, const std::string& out_flag) {
  RunConfig config = Config(config_path);
  const std::string embeddings =
      OutPath(embeddings_flag, config, "embeddings.emb");
  const std::string trials = TrialsPath(trials_flag, config);
  Require(embeddings, "embedding file");
  Require(trials, "trial list");
  const std::string out = OutPath(out_flag, config, "scores.txt");
  WriteScoreFile(out, ScoreTrials(ReadEmbeddingFile(embeddings),
                                  ReadTrialList(trials)));
  return kOk;
}

int EvalEer(const std::string& config_path, const std::string& scores_flag,
            const std::string& trials_flag) {
  RunConfig config = Config(config_path);
  const std::string scores_path = OutPath(scores_flag, config, "scores.txt");
  const std::string trials_path = TrialsPath(trials_flag, config);
  Require(scores_path, "score file");
  Require(trials_path, "trial list");
  TrialSet trials = ReadTrialList(trials_path);
  const auto scores = ReadScoreFile(scores_path);
  if (scores.size() != trials.trials.size())
    throw FormatError(scores_path + ": " + std::to_string(scores.size()) +
                          " scores for " +
                          std::to_string(trials.trials.size()) + " trials",
                      std::min(scores.size(), trials.trials.size()) + 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Trial& t = trials.trials[i];
    if (scores[i].enroll_id != t.enroll_id || scores[i].test_id != t.test_id)
      throw FormatError(scores_path + ": trial mismatch (" +
                            scores[i].enroll_id + " " + scores[i].test_id +
                            ")",
                        i + 1);
    t.score = scores[i].score;
  }
  std::cout << FormatEer(ComputeEer(trials).eer) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-adversarial neural speaker embeddings"};
  app.require_subcommand(1);

  std::string config, out, data, model, manifest, embeddings, trials, scores;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen->add_option("--config", config, "Run config file");
  gen->add_option("--out", out, "Output directory");

  auto* pre = app.add_subcommand("pretrain", "Cross-entropy pretraining");
  auto* dat = app.add_subcommand("train-dat", "Domain-adversarial training");
  for (auto* cmd : {pre, dat}) {
    cmd->add_option("--config", config, "Run config file");
    cmd->add_option("--data", data, "gen-data output directory");
    cmd->add_option("--out", out, "Output directory");
  }

  auto* ext = app.add_subcommand("extract", "Extract embeddings");
  ext->add_option("--config", config, "Run config file");
  ext->add_option("--model", model, "Model checkpoint")->required();
  ext->add_option("--data", data, "gen-data output directory");
  ext->add_option("--manifest", manifest, "Manifest (overrides --data)");
  ext->add_option("--out", out, "Embedding file");

  auto* sc = app.add_subcommand("score", "Cosine-score a trial list");
  sc->add_option("--config", config, "Run config file");
  sc->add_option("--embeddings", embeddings, "Embedding file");
  sc->add_option("--trials", trials, "Trial list");
  sc->add_option("--out", out, "Score file");

  auto* ev = app.add_subcommand("eval-eer", "Equal error rate of scores");
  ev->add_option("--config", config, "Run config file");
  ev->add_option("--scores", scores, "Score file");
  ev->add_option("--trials", trials, "Trial list with labels");

  auto* st = app.add_subcommand("self-test", "Run built-in checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kFailure;
  }

  try {
    if (*gen) return GenData(config, out);
    if (*pre) return PretrainCmd(config, data, out);
    if (*dat) return TrainDatCmd(config, data, out);
    if (*ext) return Extract(config, model, data, manifest, out);
    if (*sc) return Score(config, embeddings, trials, out);
    if (*ev) return EvalEer(config, scores, trials);
    if (*st) return RunSelfTest(std::cout) == 0 ? kOk : kFailure;
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kBadFormat;
  } catch (const NumericError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
