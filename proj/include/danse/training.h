// include/danse/training.h

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

#ifndef DANSE_TRAINING_H_
#define DANSE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "danse/datagen.h"
#include "danse/model.h"
#include "danse/optim.h"
#include "danse/verification.h"

namespace danse {

struct TrainConfig {
  double lambda = 3.0;
  double pretrain_lr = 0.001;
  std::vector<std::size_t> pretrain_anneal_epochs = {4, 8};
  double pretrain_anneal_factor = 0.1;
  std::size_t pretrain_epochs = 12;
  double dat_lr_classifier = 0.003;     // RMSprop
  double dat_lr_extractor = 0.001;      // SGD
  double dat_lr_discriminator = 0.001;  // SGD
  double rms_rho = 0.9;
  double rms_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  double margin = 0.6;
  double scale = 30.0;
  std::size_t chunks_per_recording = 10;
  std::size_t min_recordings = 5;
  // false trains the margin loss on source batches only (no target rows,
  // no discriminator).
  bool adapt = true;
  // 0 leaves target rows out of every batch; the discriminator then sees
  // source rows only.
  double target_weight = 1.0;
  std::uint64_t seed = 1;

  void Validate() const;
};

// Learning rate of 1-based pretraining epoch `epoch`.
double PretrainLearningRate(const TrainConfig& config, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double l_y = 0.0;
  double l_d = 0.0;
  double val_eer = 0.0;
  double lr_f = 0.0, lr_y = 0.0, lr_d = 0.0;
};

// `epoch L_y L_d val_eer lr_f lr_y lr_d`, floats with 6 decimals.
std::string FormatLogLine(const EpochLog& log);

// Dense 0-based speaker indices in sorted id order. Throws ConfigError on
// withheld labels.
std::map<std::string, int> IndexSpeakers(
    std::span<const FeatureSequence> recordings);

struct ValidationSet {
  std::span<const FeatureSequence> recordings;
  const TrialSet* trials = nullptr;
};

using EpochCallback = std::function<void(const EpochLog&, const DanseModel&)>;

struct PretrainResult {
  std::vector<double> step_losses;
  std::vector<EpochLog> log;
  // Running training-batch accuracy of each epoch.
  std::vector<double> epoch_accuracy;
  // Eval-mode accuracy over whole source recordings after each epoch.
  std::vector<double> recording_accuracy;
};

// Cross-entropy training of theta_f with a plain linear softmax head that
// is discarded afterwards. val_eer is logged as 0 without a validation set.
// max_steps > 0 stops early after that many updates.
PretrainResult Pretrain(DanseModel& model,
                        std::span<const FeatureSequence> source,
                        const TrainConfig& config,
                        const ValidationSet& validation = {},
                        const EpochCallback& on_epoch = {},
                        std::size_t max_steps = 0);

struct DatOptimizers {
  Optimizer extractor, classifier, discriminator;

  static DatOptimizers FromConfig(const TrainConfig& config);
};

struct DatLosses {
  double l_y = 0.0;
  double l_d = 0.0;
};

// Returns (L_y, L_d); L_d may be an empty tensor when no discriminator
// term is present.
using DatObjective = std::function<std::pair<Tensor, Tensor>(Tape&)>;

// One saddle-point update: backpropagates L_y + L_d once (the reversal
// layer inside the objective supplies the -lambda factor on theta_f) and
// steps each parameter group with its own optimizer. The discriminator
// group is not stepped when L_d is absent.
DatLosses DatUpdate(const DatObjective& objective, const ParamSet& theta_f,
                    const ParamSet& theta_y, const ParamSet& theta_d,
                    DatOptimizers& optimizers);

// Objective of one batch pair: source rows first, then target rows, in a
// single forward pass.
std::pair<Tensor, Tensor> DatObjectiveValue(
    Tape& tape, DanseModel& model, std::span<const Chunk> source,
    std::span<const int> labels, std::span<const Chunk> target,
    const TrainConfig& config);

DatLosses DatStep(DanseModel& model, std::span<const Chunk> source,
                  std::span<const int> labels, std::span<const Chunk> target,
                  DatOptimizers& optimizers, const TrainConfig& config);

struct DatResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_eer = 1.0;
};

// Epochs of DatStep over source batches paired with target batches, with
// validation EER after every epoch. Stops after `patience` epochs without
// a strict improvement; on return `model` holds the best epoch's state.
DatResult TrainDat(DanseModel& model, std::span<const FeatureSequence> source,
                   std::span<const FeatureSequence> target,
                   const ValidationSet& validation, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

}  // namespace danse

#endif  // DANSE_TRAINING_H_
