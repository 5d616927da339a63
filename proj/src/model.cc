// src/model.cc

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

#include "danse/model.h"

#include <cmath>
#include <map>
#include <numeric>

#include "danse/error.h"

namespace danse {

namespace {

using TensorMap = std::map<std::string, Tensor>;

// Walks every parameter and batch-norm layer under a name prefix.
struct Visitor {
  virtual ~Visitor() = default;
  virtual void Param(const std::string& name, Tensor& t) = 0;
  virtual void Norm(const std::string& name, BatchNorm& bn) = 0;
};

void VisitBn(const std::string& name, BatchNorm& bn, Visitor& v) {
  v.Param(name + ".gamma", bn.gamma);
  v.Param(name + ".beta", bn.beta);
  v.Norm(name, bn);
}

void VisitConvBn(const std::string& name, ConvBn& c, Visitor& v) {
  v.Param(name + ".kernels", c.kernels);
  v.Param(name + ".bias", c.bias);
  VisitBn(name + ".bn", c.bn, v);
}

void VisitDense(const std::string& name, Dense& d, Visitor& v) {
  v.Param(name + ".weight", d.weight);
  v.Param(name + ".bias", d.bias);
}

struct ParamCollector : Visitor {
  ParamSet* out;
  explicit ParamCollector(ParamSet* o) : out(o) {}
  void Param(const std::string& name, Tensor& t) override {
    out->push_back({name, t});
  }
  void Norm(const std::string&, BatchNorm&) override {}
};

struct StateCollector : Visitor {
  std::vector<NamedTensor>* out;
  explicit StateCollector(std::vector<NamedTensor>* o) : out(o) {}
  void Param(const std::string& name, Tensor& t) override {
    out->push_back({name, t});
  }
  void Norm(const std::string& name, BatchNorm& bn) override {
    if (!bn.state.populated) return;
    const std::size_t c = bn.state.running_mean.size();
    out->push_back({name + ".running_mean",
                    Tensor::FromData({c}, bn.state.running_mean)});
    out->push_back({name + ".running_var",
                    Tensor::FromData({c}, bn.state.running_var)});
  }
};

struct StateLoader : Visitor {
  const TensorMap* in;
  explicit StateLoader(const TensorMap* i) : in(i) {}
  void Param(const std::string& name, Tensor& t) override {
    auto it = in->find(name);
    if (it == in->end())
      throw FormatError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape() != t.shape())
      throw FormatError("tensor '" + name + "' has shape " +
                        ShapeString(it->second.shape()) + ", model expects " +
                        ShapeString(t.shape()));
    std::copy(it->second.data().begin(), it->second.data().end(),
              t.mutable_data().begin());
    t.zero_grad();
  }
  void Norm(const std::string& name, BatchNorm& bn) override {
    auto m = in->find(name + ".running_mean");
    auto v = in->find(name + ".running_var");
    if (m == in->end() || v == in->end()) {
      bn.state = {};
      return;
    }
    const std::size_t c = bn.gamma.numel();
    if (m->second.numel() != c || v->second.numel() != c)
      throw FormatError("running statistics of '" + name +
                        "' do not match " + std::to_string(c) + " channels");
    bn.state.running_mean.assign(m->second.data().begin(),
                                 m->second.data().end());
    bn.state.running_var.assign(v->second.data().begin(),
                                v->second.data().end());
    bn.state.populated = true;
  }
};

TensorMap ToMap(const std::vector<NamedTensor>& tensors) {
  TensorMap map;
  for (const auto& nt : tensors) map.emplace(nt.name, nt.tensor);
  return map;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configs

void ExtractorConfig::Validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(feature_dim, "feature_dim");
  for (std::size_t b : block_counts) positive(b, "block_counts entries");
  for (std::size_t w : channel_widths) positive(w, "channel_widths entries");
  positive(bottleneck_expansion, "bottleneck_expansion");
  positive(embedding_dim, "embedding_dim");
  positive(fc_hidden_dim, "fc_hidden_dim");
  positive(attention_dim, "attention_dim");
  if (!(var_floor > 0)) throw ConfigError("var_floor must be positive");
}

std::size_t ExtractorConfig::BlockConvCount() const {
  return 3 * std::accumulate(block_counts.begin(), block_counts.end(),
                             std::size_t{0});
}

std::size_t ExtractorConfig::NamedLayerCount() const {
  return BlockConvCount() + 1 + 1 + 2;
}

std::size_t ExtractorConfig::PooledChannels() const {
  return channel_widths.back() * bottleneck_expansion;
}

std::size_t ExtractorConfig::OutputLength(std::size_t frames) const {
  std::size_t t = frames;
  for (int s = 1; s < 4; ++s) t = (t + 2 - 3) / 2 + 1;
  return t;
}

std::size_t ExtractorConfig::MinFrames() const { return 4 * 8; }

void ModelConfig::Validate() const {
  extractor.Validate();
  if (num_speakers == 0) throw ConfigError("num_speakers must be positive");
  if (classifier_hidden_dim == 0 || discriminator_hidden_dim == 0)
    throw ConfigError("hidden widths must be positive");
  if (!(bn_eps > 0)) throw ConfigError("bn_eps must be positive");
}

// ---------------------------------------------------------------------------
// Layers

Tensor KaimingUniform(const Shape& shape, std::size_t fan_in,
                      std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = dist(rng);
  return Tensor::FromData(shape, std::move(data), true);
}

BatchNorm::BatchNorm(std::size_t channels)
    : gamma(Tensor::Full({channels}, 1.0, true)),
      beta(Tensor::Zeros({channels}, true)) {}

Tensor BatchNorm::Forward(Tape& tape, const Tensor& x, Mode mode, double eps,
                          double momentum) {
  return ops::BatchNorm1d(tape, x, gamma, beta, state, mode, eps, momentum);
}

ConvBn::ConvBn(std::size_t in, std::size_t out, std::size_t width,
               std::size_t stride_, std::mt19937_64& rng)
    : kernels(KaimingUniform({out, in, width}, in * width, rng)),
      bias(Tensor::Zeros({out}, true)),
      bn(out),
      stride(stride_),
      padding(width / 2) {}

Tensor ConvBn::Forward(Tape& tape, const Tensor& x, Mode mode, double eps,
                       double momentum) {
  Tensor y = ops::Conv1d(tape, x, kernels, bias, stride, padding);
  return bn.Forward(tape, y, mode, eps, momentum);
}

Tensor BottleneckBlock::Forward(Tape& tape, const Tensor& x, Mode mode,
                                double eps, double momentum) {
  Tensor h = ops::Elu(tape, reduce.Forward(tape, x, mode, eps, momentum));
  h = ops::Elu(tape, conv.Forward(tape, h, mode, eps, momentum));
  h = expand.Forward(tape, h, mode, eps, momentum);
  Tensor skip =
      projection ? projection->Forward(tape, x, mode, eps, momentum) : x;
  return ops::Elu(tape, ops::Add(tape, h, skip));
}

Dense::Dense(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight(KaimingUniform({in, out}, in, rng)),
      bias(Tensor::Zeros({out}, true)) {}

Tensor Dense::Forward(Tape& tape, const Tensor& x) const {
  return ops::Linear(tape, x, weight, bias);
}

AttentionParams::AttentionParams(std::size_t channels, std::size_t hidden,
                                 std::mt19937_64& rng)
    : W(KaimingUniform({hidden, channels}, channels, rng)),
      b(Tensor::Zeros({hidden}, true)),
      v(KaimingUniform({hidden}, hidden, rng)),
      k(Tensor::Zeros({1}, true)) {}

Tensor AttentionWeights(Tape& tape, const Tensor& H,
                        const AttentionParams& params) {
  const bool single = H.rank() == 2;
  Tensor h3 = single ? ops::Reshape(tape, H, {1, H.dim(0), H.dim(1)}) : H;
  const std::size_t n = h3.dim(0), t = h3.dim(2);
  const std::size_t d_a = params.W.dim(0);
  Tensor rows = ops::ChannelsLast(tape, h3);  // [N*T x nF]
  Tensor hidden = ops::Tanh(
      tape, ops::AddBias(
                tape, ops::MatMul(tape, rows, ops::Transpose(tape, params.W)),
                params.b));
  Tensor e = ops::AddBias(
      tape, ops::MatMul(tape, hidden, ops::Reshape(tape, params.v, {d_a, 1})),
      params.k);
  Tensor alpha = ops::Softmax(tape, ops::Reshape(tape, e, {n, t}));
  return single ? ops::Reshape(tape, alpha, {t}) : alpha;
}

PooledStats AttentiveStats(Tape& tape, const Tensor& H, const Tensor& alpha,
                           double var_floor) {
  const bool single = H.rank() == 2;
  Tensor h3 = single ? ops::Reshape(tape, H, {1, H.dim(0), H.dim(1)}) : H;
  Tensor a2 = single ? ops::Reshape(tape, alpha, {1, alpha.numel()}) : alpha;
  Tensor mu = ops::WeightedTimeSum(tape, h3, a2);
  Tensor second = ops::WeightedTimeSum(tape, ops::Mul(tape, h3, h3), a2);
  Tensor var = ops::Sub(tape, second, ops::Mul(tape, mu, mu));
  Tensor sigma = ops::Sqrt(tape, ops::ClampMin(tape, var, var_floor));
  Tensor concat = ops::ConcatCols(tape, mu, sigma);
  return {mu, sigma, concat};
}

Tensor CosineLogits(Tape& tape, const Tensor& features, const Tensor& weight) {
  Tensor f = ops::L2Normalize(tape, features, 1);
  Tensor w = ops::L2Normalize(tape, weight, 0);
  return ops::MatMul(tape, f, w);
}

Tensor AmSoftmaxLoss(Tape& tape, const Tensor& features,
                     std::span<const int> labels, const Tensor& weight,
                     double margin, double scale) {
  if (features.rank() != 2 || weight.rank() != 2 ||
      features.dim(1) != weight.dim(0))
    throw ConfigError("am_softmax: features " + ShapeString(features.shape()) +
                      " incompatible with weight " +
                      ShapeString(weight.shape()));
  const std::size_t n = features.dim(0), s = weight.dim(1);
  if (labels.size() != n)
    throw ConfigError("am_softmax: label count does not match batch");
  Tensor cos = CosineLogits(tape, features, weight);
  std::vector<double> shift(n * s, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= s)
      throw ConfigError("am_softmax: label " + std::to_string(labels[i]) +
                        " out of range for " + std::to_string(s) + " classes");
    shift[i * s + labels[i]] = scale * margin;
  }
  Tensor logits = ops::Sub(tape, ops::Scale(tape, cos, scale),
                           Tensor::FromData({n, s}, std::move(shift)));
  return ops::SoftmaxCrossEntropy(tape, logits, labels);
}

// ---------------------------------------------------------------------------
// Extractor

Extractor::Extractor(const ModelConfig& config, std::mt19937_64& rng)
    : config_(config) {
  const ExtractorConfig& c = config.extractor;
  c.Validate();
  input_ = ConvBn(c.feature_dim, c.channel_widths[0], 3, 1, rng);
  std::size_t in = c.channel_widths[0];
  stages_.resize(4);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t width = c.channel_widths[s];
    const std::size_t out = width * c.bottleneck_expansion;
    for (std::size_t b = 0; b < c.block_counts[s]; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      BottleneckBlock block;
      block.reduce = ConvBn(in, width, 1, 1, rng);
      block.conv = ConvBn(width, width, 3, stride, rng);
      block.expand = ConvBn(width, out, 1, 1, rng);
      if (in != out || stride != 1)
        block.projection = ConvBn(in, out, 1, stride, rng);
      stages_[s].push_back(std::move(block));
      in = out;
    }
  }
  attention_ = AttentionParams(in, c.attention_dim, rng);
  fc1_ = Dense(2 * in, c.fc_hidden_dim, rng);
  fc1_bn_ = BatchNorm(c.fc_hidden_dim);
  fc2_ = Dense(c.fc_hidden_dim, c.embedding_dim, rng);
}

Tensor Extractor::Frames(Tape& tape, const Tensor& x, Mode mode) {
  const ExtractorConfig& c = config_.extractor;
  if (x.rank() != 3 || x.dim(1) != c.feature_dim)
    throw ConfigError("extractor expects [N x " +
                      std::to_string(c.feature_dim) + " x T] input, got " +
                      ShapeString(x.shape()));
  if (x.dim(2) < c.MinFrames())
    throw InputError("input of " + std::to_string(x.dim(2)) +
                     " frames is shorter than the minimum of " +
                     std::to_string(c.MinFrames()));
  const double eps = config_.bn_eps, mom = config_.bn_momentum;
  Tensor h = ops::Elu(tape, input_.Forward(tape, x, mode, eps, mom));
  for (auto& stage : stages_)
    for (auto& block : stage) h = block.Forward(tape, h, mode, eps, mom);
  return h;
}

Tensor Extractor::Embed(Tape& tape, const Tensor& stats, Mode mode) {
  Tensor h = fc1_.Forward(tape, stats);
  h = ops::Elu(tape, fc1_bn_.Forward(tape, h, mode, config_.bn_eps,
                                     config_.bn_momentum));
  return fc2_.Forward(tape, h);
}

Tensor Extractor::Forward(Tape& tape, const Tensor& x, Mode mode) {
  Tensor H = Frames(tape, x, mode);
  Tensor alpha = AttentionWeights(tape, H, attention_);
  PooledStats stats =
      AttentiveStats(tape, H, alpha, config_.extractor.var_floor);
  return Embed(tape, stats.concat, mode);
}

template <typename V>
void Extractor::Visit(const std::string& prefix, V&& v) {
  VisitConvBn(prefix + "input", input_, v);
  for (std::size_t s = 0; s < stages_.size(); ++s)
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      const std::string name = prefix + "stage" + std::to_string(s + 1) +
                               ".block" + std::to_string(b);
      BottleneckBlock& block = stages_[s][b];
      VisitConvBn(name + ".reduce", block.reduce, v);
      VisitConvBn(name + ".conv", block.conv, v);
      VisitConvBn(name + ".expand", block.expand, v);
      if (block.projection)
        VisitConvBn(name + ".projection", *block.projection, v);
    }
  v.Param(prefix + "attention.W", attention_.W);
  v.Param(prefix + "attention.b", attention_.b);
  v.Param(prefix + "attention.v", attention_.v);
  v.Param(prefix + "attention.k", attention_.k);
  VisitDense(prefix + "fc1", fc1_, v);
  VisitBn(prefix + "fc1.bn", fc1_bn_, v);
  VisitDense(prefix + "fc2", fc2_, v);
}

ParamSet Extractor::Parameters(const std::string& prefix) const {
  ParamSet out;
  ParamCollector v(&out);
  const_cast<Extractor*>(this)->Visit(prefix, v);
  return out;
}

void Extractor::CollectState(const std::string& prefix,
                             std::vector<NamedTensor>& out) const {
  StateCollector v(&out);
  const_cast<Extractor*>(this)->Visit(prefix, v);
}

void Extractor::LoadState(const std::string& prefix,
                          const std::vector<NamedTensor>& in) {
  const TensorMap map = ToMap(in);
  StateLoader v(&map);
  Visit(prefix, v);
}

// ---------------------------------------------------------------------------
// Heads

SpeakerClassifier::SpeakerClassifier(const ModelConfig& config,
                                     std::mt19937_64& rng)
    : config_(config),
      hidden_(config.extractor.embedding_dim, config.classifier_hidden_dim,
              rng),
      hidden_bn_(config.classifier_hidden_dim),
      am_weight_(KaimingUniform(
          {config.classifier_hidden_dim, config.num_speakers},
          config.classifier_hidden_dim, rng)) {}

Tensor SpeakerClassifier::Hidden(Tape& tape, const Tensor& embeddings,
                                 Mode mode) {
  Tensor h = hidden_.Forward(tape, embeddings);
  return ops::Elu(tape, hidden_bn_.Forward(tape, h, mode, config_.bn_eps,
                                           config_.bn_momentum));
}

Tensor SpeakerClassifier::Loss(Tape& tape, const Tensor& embeddings,
                               std::span<const int> labels, Mode mode,
                               double margin, double scale) {
  return AmSoftmaxLoss(tape, Hidden(tape, embeddings, mode), labels,
                       am_weight_, margin, scale);
}

namespace {

void VisitClassifier(const std::string& p, Dense& hidden, BatchNorm& bn,
                     Tensor& am, Visitor& v) {
  VisitDense(p + "hidden", hidden, v);
  VisitBn(p + "hidden.bn", bn, v);
  v.Param(p + "am.W", am);
}

}  // namespace

ParamSet SpeakerClassifier::Parameters(const std::string& prefix) const {
  ParamSet out;
  ParamCollector v(&out);
  auto* self = const_cast<SpeakerClassifier*>(this);
  VisitClassifier(prefix, self->hidden_, self->hidden_bn_, self->am_weight_, v);
  return out;
}

void SpeakerClassifier::CollectState(const std::string& prefix,
                                     std::vector<NamedTensor>& out) const {
  StateCollector v(&out);
  auto* self = const_cast<SpeakerClassifier*>(this);
  VisitClassifier(prefix, self->hidden_, self->hidden_bn_, self->am_weight_, v);
}

void SpeakerClassifier::LoadState(const std::string& prefix,
                                  const std::vector<NamedTensor>& in) {
  const TensorMap map = ToMap(in);
  StateLoader v(&map);
  VisitClassifier(prefix, hidden_, hidden_bn_, am_weight_, v);
}

DomainDiscriminator::DomainDiscriminator(const ModelConfig& config,
                                         std::mt19937_64& rng)
    : config_(config),
      h1_(config.extractor.embedding_dim, config.discriminator_hidden_dim,
          rng),
      h2_(config.discriminator_hidden_dim, config.discriminator_hidden_dim,
          rng),
      out_(config.discriminator_hidden_dim, 1, rng),
      bn1_(config.discriminator_hidden_dim),
      bn2_(config.discriminator_hidden_dim) {}

Tensor DomainDiscriminator::Logits(Tape& tape, const Tensor& embeddings,
                                   double lambda, Mode mode) {
  return Head(tape, ops::GradReverse(tape, embeddings, lambda), mode);
}

Tensor DomainDiscriminator::Head(Tape& tape, const Tensor& features,
                                 Mode mode) {
  const double eps = config_.bn_eps, mom = config_.bn_momentum;
  Tensor h = features;
  h = ops::Elu(tape, bn1_.Forward(tape, h1_.Forward(tape, h), mode, eps, mom));
  h = ops::Elu(tape, bn2_.Forward(tape, h2_.Forward(tape, h), mode, eps, mom));
  Tensor z = out_.Forward(tape, h);
  return ops::Reshape(tape, z, {z.dim(0)});
}

Tensor DomainDiscriminator::Discriminate(Tape& tape, const Tensor& embeddings,
                                         double lambda, Mode mode) {
  return ops::Sigmoid(tape, Logits(tape, embeddings, lambda, mode));
}

namespace {

void VisitDiscriminator(const std::string& p, Dense& h1, BatchNorm& bn1,
                        Dense& h2, BatchNorm& bn2, Dense& out, Visitor& v) {
  VisitDense(p + "hidden1", h1, v);
  VisitBn(p + "hidden1.bn", bn1, v);
  VisitDense(p + "hidden2", h2, v);
  VisitBn(p + "hidden2.bn", bn2, v);
  VisitDense(p + "out", out, v);
}

}  // namespace

ParamSet DomainDiscriminator::Parameters(const std::string& prefix) const {
  ParamSet out;
  ParamCollector v(&out);
  auto* s = const_cast<DomainDiscriminator*>(this);
  VisitDiscriminator(prefix, s->h1_, s->bn1_, s->h2_, s->bn2_, s->out_, v);
  return out;
}

void DomainDiscriminator::CollectState(const std::string& prefix,
                                       std::vector<NamedTensor>& out) const {
  StateCollector v(&out);
  auto* s = const_cast<DomainDiscriminator*>(this);
  VisitDiscriminator(prefix, s->h1_, s->bn1_, s->h2_, s->bn2_, s->out_, v);
}

void DomainDiscriminator::LoadState(const std::string& prefix,
                                    const std::vector<NamedTensor>& in) {
  const TensorMap map = ToMap(in);
  StateLoader v(&map);
  VisitDiscriminator(prefix, h1_, bn1_, h2_, bn2_, out_, v);
}

// ---------------------------------------------------------------------------
// DanseModel

DanseModel::DanseModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config.Validate();
  std::seed_seq seq{seed, std::uint64_t{0x6d6f64656cULL}};
  std::mt19937_64 rng(seq);
  extractor_ = Extractor(config, rng);
  classifier_ = SpeakerClassifier(config, rng);
  discriminator_ = DomainDiscriminator(config, rng);
}

ParamSet DanseModel::ThetaF() const { return extractor_.Parameters("f."); }
ParamSet DanseModel::ThetaY() const { return classifier_.Parameters("y."); }
ParamSet DanseModel::ThetaD() const { return discriminator_.Parameters("d."); }

std::vector<NamedTensor> DanseModel::State() const {
  std::vector<NamedTensor> out;
  extractor_.CollectState("f.", out);
  classifier_.CollectState("y.", out);
  discriminator_.CollectState("d.", out);
  return out;
}

void DanseModel::LoadState(const std::vector<NamedTensor>& state,
                           const std::vector<std::string>& prefixes) {
  for (const std::string& p : prefixes) {
    if (p == "f.")
      extractor_.LoadState(p, state);
    else if (p == "y.")
      classifier_.LoadState(p, state);
    else if (p == "d.")
      discriminator_.LoadState(p, state);
    else
      throw ConfigError("unknown parameter group '" + p + "'");
  }
}

DanseModel DanseModel::Clone() const {
  DanseModel copy(config_, 0);
  std::vector<NamedTensor> state = State();
  for (auto& nt : state) nt.tensor = nt.tensor.Clone();
  copy.LoadState(state);
  return copy;
}

std::vector<double> DanseModel::EmbedRecording(const Tensor& frames) {
  if (frames.rank() != 2)
    throw ConfigError("EmbedRecording expects [F x T] frames, got " +
                      ShapeString(frames.shape()));
  Tape tape;
  tape.set_enabled(false);
  Tensor x = Tensor::FromData(
      {1, frames.dim(0), frames.dim(1)},
      std::vector<double>(frames.data().begin(), frames.data().end()));
  Tensor emb = extractor_.Forward(tape, x, Mode::kEval);
  return {emb.data().begin(), emb.data().end()};
}

}  // namespace danse
