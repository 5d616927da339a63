// src/training.cc

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

#include "danse/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "danse/error.h"

namespace danse {

void TrainConfig::Validate() const {
  for (double lr : {pretrain_lr, dat_lr_classifier, dat_lr_extractor,
                    dat_lr_discriminator})
    if (!(lr > 0)) throw ConfigError("learning rates must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be non-negative");
  if (!(pretrain_anneal_factor > 0))
    throw ConfigError("pretrain_anneal_factor must be positive");
  if (!(rms_rho >= 0 && rms_rho < 1))
    throw ConfigError("rms_rho must be in [0, 1)");
  if (!(rms_eps > 0)) throw ConfigError("rms_eps must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (chunks_per_recording == 0)
    throw ConfigError("chunks_per_recording must be positive");
  if (!(margin >= 0) || !(scale > 0))
    throw ConfigError("margin must be >= 0 and scale > 0");
  if (target_weight != 0.0 && target_weight != 1.0)
    throw ConfigError("target_weight must be 0 or 1");
}

double PretrainLearningRate(const TrainConfig& config, std::size_t epoch) {
  double lr = config.pretrain_lr;
  for (std::size_t e : config.pretrain_anneal_epochs)
    if (epoch > e) lr *= config.pretrain_anneal_factor;
  return lr;
}

std::string FormatLogLine(const EpochLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu %.6f %.6f %.6f %.6f %.6f %.6f",
                log.epoch, log.l_y, log.l_d, log.val_eer, log.lr_f, log.lr_y,
                log.lr_d);
  return buf;
}

std::map<std::string, int> IndexSpeakers(
    std::span<const FeatureSequence> recordings) {
  std::map<std::string, int> index;
  for (const auto& r : recordings) {
    if (r.speaker_id == kWithheldSpeaker)
      throw ConfigError("recording " + r.recording_id +
                        " has no speaker label");
    index.emplace(r.speaker_id, 0);
  }
  int next = 0;
  for (auto& [_, i] : index) i = next++;
  return index;
}

namespace {

std::uint64_t EpochSeed(std::uint64_t seed, std::uint64_t phase,
                        std::size_t epoch) {
  return SeedStream(seed, (phase << 32) | epoch)();
}

std::vector<FeatureSequence> Filtered(std::span<const FeatureSequence> recs,
                                      std::size_t min_recordings) {
  return FilterSpeakers({recs.begin(), recs.end()}, min_recordings);
}

std::string BatchIds(std::span<const Chunk> a, std::span<const Chunk> b = {}) {
  std::string ids;
  for (auto span : {a, b})
    for (const Chunk& c : span)
      ids += (ids.empty() ? "" : ",") + c.recording_id;
  return ids;
}

void CheckFinite(double v, const char* what, std::size_t epoch,
                 std::size_t step, const std::string& ids) {
  if (!std::isfinite(v))
    throw NumericError(std::string(what) + " diverged at epoch " +
                       std::to_string(epoch) + " step " +
                       std::to_string(step) + " (batch " + ids + ")");
}

double ValidationEer(DanseModel& model, const ValidationSet& validation) {
  if (!validation.trials) return 0.0;
  return EvaluateEer(model, validation.recordings, *validation.trials);
}

std::vector<NamedTensor> Snapshot(const DanseModel& model) {
  std::vector<NamedTensor> state = model.State();
  for (auto& t : state) t.tensor = t.tensor.Clone();
  return state;
}

// Eval-mode accuracy of the pretraining head over whole recordings.
double RecordingAccuracy(DanseModel& model, const Dense& head,
                         std::span<const FeatureSequence> recordings,
                         const std::map<std::string, int>& speakers) {
  std::size_t correct = 0;
  for (const auto& rec : recordings) {
    const auto emb = model.EmbedRecording(rec.frames);
    Tape tape;
    tape.set_enabled(false);
    Tensor z = head.Forward(
        tape, Tensor::FromData({1, emb.size()}, emb));
    const auto row = z.data();
    const auto best = std::max_element(row.begin(), row.end());
    if (best - row.begin() == speakers.at(rec.speaker_id)) ++correct;
  }
  return recordings.empty() ? 0.0 : double(correct) / recordings.size();
}

}  // namespace

PretrainResult Pretrain(DanseModel& model,
                        std::span<const FeatureSequence> source_in,
                        const TrainConfig& config,
                        const ValidationSet& validation,
                        const EpochCallback& on_epoch, std::size_t max_steps) {
  config.Validate();
  const auto source = Filtered(source_in, config.min_recordings);
  if (source.empty()) throw ConfigError("pretrain: empty source corpus");
  const auto speakers = IndexSpeakers(source);

  std::mt19937_64 head_rng = SeedStream(config.seed, 7);
  Dense head(model.config().extractor.embedding_dim, speakers.size(),
             head_rng);
  ParamSet params = model.ThetaF();
  params.push_back({"p.head.weight", head.weight});
  params.push_back({"p.head.bias", head.bias});
  Optimizer opt =
      Optimizer::RmsProp(config.pretrain_lr, config.rms_rho, config.rms_eps);

  PretrainResult result;
  std::size_t steps = 0;
  for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    const double lr = PretrainLearningRate(config, epoch);
    opt.set_learning_rate(lr);
    const auto plan = PlanEpoch(source, config.chunks_per_recording,
                                EpochSeed(config.seed, 1, epoch));
    double loss_sum = 0.0;
    std::size_t batches = 0, correct = 0, seen = 0;
    for (std::size_t begin = 0; begin + 2 <= plan.size();
         begin += config.batch_size) {
      const std::size_t end = std::min(plan.size(), begin + config.batch_size);
      std::vector<Chunk> chunks;
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& rec = source[plan[i].recording];
        chunks.push_back(CutChunk(rec, plan[i].start, plan[i].length));
        labels.push_back(speakers.at(rec.speaker_id));
      }
      ZeroGrad(params);
      Tape tape;
      Tensor emb =
          model.extractor().Forward(tape, StackChunks(chunks), Mode::kTrain);
      Tensor logits = head.Forward(tape, emb);
      Tensor loss = ops::SoftmaxCrossEntropy(tape, logits, labels);
      CheckFinite(loss.item(), "pretrain loss", epoch, batches,
                  BatchIds(chunks));
      tape.Backward(loss);
      opt.Step(params);

      const std::size_t S = speakers.size();
      const auto z = logits.data();
      for (std::size_t n = 0; n < labels.size(); ++n) {
        const auto row = z.subspan(n * S, S);
        const auto best = std::max_element(row.begin(), row.end());
        if (best - row.begin() == labels[n]) ++correct;
      }
      seen += labels.size();
      loss_sum += loss.item();
      result.step_losses.push_back(loss.item());
      ++batches;
      if (max_steps && ++steps >= max_steps) return result;
    }
    EpochLog log;
    log.epoch = epoch;
    log.l_y = batches ? loss_sum / batches : 0.0;
    log.val_eer = ValidationEer(model, validation);
    log.lr_f = log.lr_y = lr;
    result.log.push_back(log);
    result.epoch_accuracy.push_back(seen ? double(correct) / seen : 0.0);
    result.recording_accuracy.push_back(
        RecordingAccuracy(model, head, source, speakers));
    if (on_epoch) on_epoch(log, model);
  }
  return result;
}

DatOptimizers DatOptimizers::FromConfig(const TrainConfig& config) {
  return {Optimizer::Sgd(config.dat_lr_extractor),
          Optimizer::RmsProp(config.dat_lr_classifier, config.rms_rho,
                             config.rms_eps),
          Optimizer::Sgd(config.dat_lr_discriminator)};
}

DatLosses DatUpdate(const DatObjective& objective, const ParamSet& theta_f,
                    const ParamSet& theta_y, const ParamSet& theta_d,
                    DatOptimizers& optimizers) {
  ZeroGrad(theta_f);
  ZeroGrad(theta_y);
  ZeroGrad(theta_d);
  Tape tape;
  auto [l_y, l_d] = objective(tape);
  const bool has_d = l_d.defined();
  DatLosses losses{l_y.item(), has_d ? l_d.item() : 0.0};
  if (!std::isfinite(losses.l_y) || !std::isfinite(losses.l_d))
    throw NumericError("non-finite loss (L_y " + std::to_string(losses.l_y) +
                       ", L_d " + std::to_string(losses.l_d) + ")");
  tape.Backward(has_d ? ops::Add(tape, l_y, l_d) : l_y);
  optimizers.extractor.Step(theta_f);
  optimizers.classifier.Step(theta_y);
  if (has_d) optimizers.discriminator.Step(theta_d);
  return losses;
}

std::pair<Tensor, Tensor> DatObjectiveValue(
    Tape& tape, DanseModel& model, std::span<const Chunk> source,
    std::span<const int> labels, std::span<const Chunk> target,
    const TrainConfig& config) {
  if (source.empty()) throw ConfigError("dat_step: empty source batch");
  if (config.adapt && config.target_weight != 0.0 && target.empty())
    throw ConfigError("dat_step: empty target batch");
  std::vector<Chunk> rows(source.begin(), source.end());
  std::vector<int> domains(source.size(), 0);
  if (config.adapt && config.target_weight != 0.0) {
    rows.insert(rows.end(), target.begin(), target.end());
    domains.resize(rows.size(), 1);
  }
  Tensor emb = model.extractor().Forward(tape, StackChunks(rows), Mode::kTrain);
  Tensor src = rows.size() == source.size()
                   ? emb
                   : ops::SliceRows(tape, emb, 0, source.size());
  Tensor l_y = model.classifier().Loss(tape, src, labels, Mode::kTrain,
                                       config.margin, config.scale);
  Tensor l_d;
  if (config.adapt) {
    Tensor logits = model.discriminator().Logits(tape, emb, config.lambda,
                                                 Mode::kTrain);
    l_d = ops::BceWithLogits(tape, logits, domains);
  }
  return {l_y, l_d};
}

DatLosses DatStep(DanseModel& model, std::span<const Chunk> source,
                  std::span<const int> labels, std::span<const Chunk> target,
                  DatOptimizers& optimizers, const TrainConfig& config) {
  try {
    return DatUpdate(
        [&](Tape& tape) {
          return DatObjectiveValue(tape, model, source, labels, target,
                                   config);
        },
        model.ThetaF(), model.ThetaY(), model.ThetaD(), optimizers);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " in batch " +
                       BatchIds(source, target));
  }
}

DatResult TrainDat(DanseModel& model,
                   std::span<const FeatureSequence> source_in,
                   std::span<const FeatureSequence> target,
                   const ValidationSet& validation, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.Validate();
  if (config.adapt && target.empty())
    throw ConfigError("train_dat: empty target adaptation set");
  if (!validation.trials)
    throw ConfigError("train_dat: validation trials are required");
  const auto source = Filtered(source_in, config.min_recordings);
  if (source.empty()) throw ConfigError("train_dat: empty source corpus");
  const auto speakers = IndexSpeakers(source);
  if (speakers.size() != model.config().num_speakers)
    throw ConfigError("model has " +
                      std::to_string(model.config().num_speakers) +
                      " speaker classes but the source corpus has " +
                      std::to_string(speakers.size()));

  DatOptimizers opt = DatOptimizers::FromConfig(config);
  std::mt19937_64 target_rng = SeedStream(config.seed, 3);
  const bool use_target = config.adapt && config.target_weight != 0.0;

  DatResult result;
  std::vector<NamedTensor> best_state;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto plan = PlanEpoch(source, config.chunks_per_recording,
                                EpochSeed(config.seed, 2, epoch));
    double ly_sum = 0.0, ld_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin + 2 <= plan.size();
         begin += config.batch_size) {
      const std::size_t end = std::min(plan.size(), begin + config.batch_size);
      std::vector<Chunk> chunks;
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& rec = source[plan[i].recording];
        chunks.push_back(CutChunk(rec, plan[i].start, plan[i].length));
        labels.push_back(speakers.at(rec.speaker_id));
      }
      std::vector<Chunk> tgt;
      if (use_target)
        tgt = SampleTargetBatch(target, chunks.size(), target_rng);
      DatLosses losses;
      try {
        losses = DatStep(model, chunks, labels, tgt, opt, config);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " step " +
                           std::to_string(batches) + ": " + e.what());
      }
      ly_sum += losses.l_y;
      ld_sum += losses.l_d;
      ++batches;
    }
    EpochLog log;
    log.epoch = epoch;
    log.l_y = batches ? ly_sum / batches : 0.0;
    log.l_d = batches ? ld_sum / batches : 0.0;
    log.val_eer = ValidationEer(model, validation);
    log.lr_f = opt.extractor.learning_rate();
    log.lr_y = opt.classifier.learning_rate();
    log.lr_d = config.adapt ? opt.discriminator.learning_rate() : 0.0;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log, model);

    if (best_state.empty() || log.val_eer < result.best_val_eer) {
      result.best_val_eer = log.val_eer;
      result.best_epoch = epoch;
      best_state = Snapshot(model);
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (!best_state.empty()) model.LoadState(best_state);
  return result;
}

}  // namespace danse
