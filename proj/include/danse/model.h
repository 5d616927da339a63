// include/danse/model.h

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

#ifndef DANSE_MODEL_H_
#define DANSE_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "danse/ops.h"
#include "danse/tensor.h"

namespace danse {

using ops::Mode;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// A named, ordered collection of trainable tensors.
using ParamSet = std::vector<NamedTensor>;

struct ExtractorConfig {
  std::size_t feature_dim = 23;
  std::array<std::size_t, 4> block_counts = {3, 4, 6, 3};
  std::array<std::size_t, 4> channel_widths = {32, 64, 128, 256};
  std::size_t bottleneck_expansion = 2;
  std::size_t embedding_dim = 64;
  std::size_t fc_hidden_dim = 128;
  std::size_t attention_dim = 64;
  double var_floor = 1e-8;

  void Validate() const;
  // Input conv + three convs per bottleneck block + attention + two FC.
  std::size_t NamedLayerCount() const;
  std::size_t BlockConvCount() const;
  // Channels of the last residual stage (nF).
  std::size_t PooledChannels() const;
  // Frames after the three stride-2 stages, ceil(T / 8).
  std::size_t OutputLength(std::size_t frames) const;
  // Shortest accepted input; leaves at least 4 frames after downsampling.
  std::size_t MinFrames() const;
};

struct ModelConfig {
  ExtractorConfig extractor;
  std::size_t num_speakers = 2;
  std::size_t classifier_hidden_dim = 128;
  std::size_t discriminator_hidden_dim = 256;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  void Validate() const;
};

struct BatchNorm {
  Tensor gamma, beta;
  ops::BatchNormState state;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels);
  Tensor Forward(Tape& tape, const Tensor& x, Mode mode, double eps,
                 double momentum);
};

// conv1d followed by batch-norm (no activation).
struct ConvBn {
  Tensor kernels, bias;
  BatchNorm bn;
  std::size_t stride = 1, padding = 0;

  ConvBn() = default;
  ConvBn(std::size_t in, std::size_t out, std::size_t width,
         std::size_t stride, std::mt19937_64& rng);
  Tensor Forward(Tape& tape, const Tensor& x, Mode mode, double eps,
                 double momentum);
};

// 1x1 reduce -> 3-wide conv (carries the stride) -> 1x1 expand, with ELU
// after the first two and after the residual addition.
struct BottleneckBlock {
  ConvBn reduce, conv, expand;
  std::optional<ConvBn> projection;

  Tensor Forward(Tape& tape, const Tensor& x, Mode mode, double eps,
                 double momentum);
};

struct Dense {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  Dense() = default;
  Dense(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Tensor Forward(Tape& tape, const Tensor& x) const;
};

// e_t = v^T tanh(W h_t + b) + k.
struct AttentionParams {
  Tensor W;  // [d_a x nF]
  Tensor b;  // [d_a]
  Tensor v;  // [d_a]
  Tensor k;  // [1]

  AttentionParams() = default;
  AttentionParams(std::size_t channels, std::size_t hidden,
                  std::mt19937_64& rng);
};

// H is [N x nF x T'] (or [nF x T'] for a single sequence); returns alpha
// [N x T'] (or [T']), each row a softmax over time.
Tensor AttentionWeights(Tape& tape, const Tensor& H,
                        const AttentionParams& params);

struct PooledStats {
  Tensor mu;     // [N x nF]
  Tensor sigma;  // [N x nF]
  Tensor concat; // [N x 2nF]
};

// Attention-weighted mean and standard deviation over time, with
// sigma = sqrt(max(E[h^2] - mu^2, var_floor)).
PooledStats AttentiveStats(Tape& tape, const Tensor& H, const Tensor& alpha,
                           double var_floor);

// Additive-margin softmax. features [N x D], weight [D x S]:
//   cos_ij = <f_i/|f_i|, w_j/|w_j|>, logit_ij = s (cos_ij - m [j == y_i]),
//   loss = mean_i CE(softmax(logit_i), y_i).
Tensor AmSoftmaxLoss(Tape& tape, const Tensor& features,
                     std::span<const int> labels, const Tensor& weight,
                     double margin = 0.6, double scale = 30.0);

// The cosine matrix [N x S] used by AmSoftmaxLoss (no margin).
Tensor CosineLogits(Tape& tape, const Tensor& features, const Tensor& weight);

class Extractor {
 public:
  Extractor() = default;
  Extractor(const ModelConfig& config, std::mt19937_64& rng);

  // x: [N x F x T] -> H [N x nF x ceil(T/8)]. Throws InputError when T is
  // below config.MinFrames().
  Tensor Frames(Tape& tape, const Tensor& x, Mode mode);
  // stats [N x 2nF] -> embeddings [N x embedding_dim] (pre-activation).
  Tensor Embed(Tape& tape, const Tensor& stats, Mode mode);
  // Full path from features to embeddings.
  Tensor Forward(Tape& tape, const Tensor& x, Mode mode);

  ParamSet Parameters(const std::string& prefix) const;
  void CollectState(const std::string& prefix,
                    std::vector<NamedTensor>& out) const;
  void LoadState(const std::string& prefix,
                 const std::vector<NamedTensor>& in);

  AttentionParams& attention() { return attention_; }
  const ModelConfig& config() const { return config_; }

 private:
  template <typename Visitor>
  void Visit(const std::string& prefix, Visitor&& visit);

  ModelConfig config_;
  ConvBn input_;
  std::vector<std::vector<BottleneckBlock>> stages_;
  AttentionParams attention_;
  Dense fc1_;
  BatchNorm fc1_bn_;
  Dense fc2_;
};

// Hidden layer (BN + ELU) followed by the AM-Softmax weight matrix.
class SpeakerClassifier {
 public:
  SpeakerClassifier() = default;
  SpeakerClassifier(const ModelConfig& config, std::mt19937_64& rng);

  Tensor Hidden(Tape& tape, const Tensor& embeddings, Mode mode);
  Tensor Loss(Tape& tape, const Tensor& embeddings,
              std::span<const int> labels, Mode mode, double margin,
              double scale);

  Tensor& am_weight() { return am_weight_; }
  Dense& hidden() { return hidden_; }
  ParamSet Parameters(const std::string& prefix) const;
  void CollectState(const std::string& prefix,
                    std::vector<NamedTensor>& out) const;
  void LoadState(const std::string& prefix,
                 const std::vector<NamedTensor>& in);

 private:
  ModelConfig config_;
  Dense hidden_;
  BatchNorm hidden_bn_;
  Tensor am_weight_;  // [classifier_hidden_dim x S]
};

// Gradient reversal, two hidden layers (BN + ELU), one logit.
class DomainDiscriminator {
 public:
  DomainDiscriminator() = default;
  DomainDiscriminator(const ModelConfig& config, std::mt19937_64& rng);

  // Pre-sigmoid target-domain logits [N].
  Tensor Logits(Tape& tape, const Tensor& embeddings, double lambda,
                Mode mode);
  // Logits without the reversal layer.
  Tensor Head(Tape& tape, const Tensor& features, Mode mode);
  // Posterior probability of the target domain, [N].
  Tensor Discriminate(Tape& tape, const Tensor& embeddings, double lambda,
                      Mode mode);

  Dense& output() { return out_; }
  ParamSet Parameters(const std::string& prefix) const;
  void CollectState(const std::string& prefix,
                    std::vector<NamedTensor>& out) const;
  void LoadState(const std::string& prefix,
                 const std::vector<NamedTensor>& in);

 private:
  ModelConfig config_;
  Dense h1_, h2_, out_;
  BatchNorm bn1_, bn2_;
};

// The full network with parameters partitioned into theta_f (extractor,
// pooling, FC), theta_y (speaker classifier) and theta_d (discriminator).
class DanseModel {
 public:
  DanseModel() = default;
  DanseModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Extractor& extractor() { return extractor_; }
  SpeakerClassifier& classifier() { return classifier_; }
  DomainDiscriminator& discriminator() { return discriminator_; }

  ParamSet ThetaF() const;
  ParamSet ThetaY() const;
  ParamSet ThetaD() const;

  // Parameters and populated batch-norm statistics, in a fixed order.
  std::vector<NamedTensor> State() const;
  // Loads every tensor whose name starts with one of the given prefixes
  // ("f.", "y.", "d."); all model tensors under those prefixes must be
  // present with matching shapes.
  void LoadState(const std::vector<NamedTensor>& state,
                 const std::vector<std::string>& prefixes = {"f.", "y.",
                                                             "d."});
  DanseModel Clone() const;

  // Eval-mode embedding of one [F x T] recording.
  std::vector<double> EmbedRecording(const Tensor& frames);

 private:
  ModelConfig config_;
  Extractor extractor_;
  SpeakerClassifier classifier_;
  DomainDiscriminator discriminator_;
};

// Kaiming-uniform fan-in initialization, bound sqrt(6 / fan_in).
Tensor KaimingUniform(const Shape& shape, std::size_t fan_in,
                      std::mt19937_64& rng);

}  // namespace danse

#endif  // DANSE_MODEL_H_
