// Copyright 2026 The salpn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "salpn/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "salpn/io.h"
#include "salpn/random.h"

namespace salpn {
namespace {

Eigen::VectorXd to_vector(std::span<const float> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

void check_label(int label, int num_classes) {
  if (label < 1 || label > num_classes) {
    throw std::invalid_argument("label " + std::to_string(label) + " outside [1, " +
                                std::to_string(num_classes) + "]");
  }
}

void check_features(const HeadBank& bank, const PartFeatures& f) {
  if (static_cast<int>(f.size()) != bank.n_parts()) {
    throw std::invalid_argument("expected " + std::to_string(bank.n_parts()) +
                                " partitions, got " + std::to_string(f.size()));
  }
  for (const auto& o : f) {
    for (Stream s : kStreams) {
      if (static_cast<int>(stream_input(o, s).size()) != bank.d_in()) {
        throw std::invalid_argument("feature length " + std::to_string(stream_input(o, s).size()) +
                                    " does not match head input " + std::to_string(bank.d_in()));
      }
    }
  }
}

Eigen::MatrixXd dropout_mask(int rows, int cols, double rate, std::uint64_t seed) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(rows, cols);
  if (rate <= 0.0) return m;
  Rng rng(seed);
  const double keep = 1.0 - rate;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  return m;
}

// Forward/backward of one head over a batch with batch-statistics BN.
struct HeadPass {
  Eigen::MatrixXd x;      // d_in x B
  Eigen::MatrixXd xhat;   // d_mid x B
  Eigen::VectorXd mean;
  Eigen::VectorXd var;    // biased
  Eigen::VectorXd inv_std;
  Eigen::MatrixXd mask;   // scaled dropout mask
  Eigen::MatrixXd dropped;
  Eigen::MatrixXd probs;  // C x B
  double loss = 0.0;      // sum over batch
};

HeadPass head_forward_batch(const ClassifierHead& h, const Eigen::MatrixXd& x,
                            const std::vector<int>& labels, std::uint64_t dropout_seed) {
  HeadPass p;
  const auto batch = x.cols();
  p.x = x;
  const Eigen::MatrixXd z = (h.fc_weight * x).colwise() + h.fc_bias;
  p.mean = z.rowwise().mean();
  const Eigen::MatrixXd centered = z.colwise() - p.mean;
  p.var = centered.array().square().rowwise().mean();
  p.inv_std = (p.var.array() + kBatchNormEpsilon).rsqrt();
  p.xhat = centered.array().colwise() * p.inv_std.array();
  const Eigen::MatrixXd y =
      (p.xhat.array().colwise() * h.bn_gamma.array()).colwise() + h.bn_beta.array();
  p.mask = dropout_mask(h.d_mid(), static_cast<int>(batch), h.dropout_rate, dropout_seed);
  p.dropped = y.cwiseProduct(p.mask);
  const Eigen::MatrixXd logits = (h.cls_weight * p.dropped).colwise() + h.cls_bias;
  p.probs.resize(logits.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    p.probs.col(b) = softmax(logits.col(b));
    p.loss += cross_entropy(logits.col(b), labels[b] - 1);
  }
  return p;
}

HeadGradients head_backward(const ClassifierHead& h, const HeadPass& p,
                            const std::vector<int>& labels) {
  const auto batch = static_cast<double>(p.x.cols());
  Eigen::MatrixXd dlogits = p.probs;
  for (Eigen::Index b = 0; b < dlogits.cols(); ++b) dlogits(labels[b] - 1, b) -= 1.0;
  dlogits /= batch;

  HeadGradients g;
  g.cls_weight = dlogits * p.dropped.transpose();
  g.cls_bias = dlogits.rowwise().sum();
  const Eigen::MatrixXd dy = (h.cls_weight.transpose() * dlogits).cwiseProduct(p.mask);
  g.bn_gamma = dy.cwiseProduct(p.xhat).rowwise().sum();
  g.bn_beta = dy.rowwise().sum();
  const Eigen::MatrixXd dxhat = dy.array().colwise() * h.bn_gamma.array();
  const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
  const Eigen::VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(p.xhat).rowwise().sum();
  Eigen::MatrixXd dz = (batch * dxhat).colwise() - sum_dxhat;
  dz -= (p.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dz = (dz.array().colwise() * (p.inv_std.array() / batch)).matrix();
  g.fc_weight = dz * p.x.transpose();
  g.fc_bias = dz.rowwise().sum();
  return g;
}

struct BatchInputs {
  std::vector<Eigen::MatrixXd> per_head;  // d_in x B
  std::vector<int> labels;
};

BatchInputs gather(const HeadBank& bank, std::span<const TrainSample* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  BatchInputs in;
  in.per_head.assign(bank.size(), Eigen::MatrixXd(bank.d_in(), static_cast<Eigen::Index>(batch.size())));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainSample& s = *batch[b];
    check_label(s.label, bank.num_classes());
    check_features(bank, s.features);
    in.labels.push_back(s.label);
    for (int n = 0; n < bank.n_parts(); ++n) {
      for (Stream st : kStreams) {
        in.per_head[HeadBank::index(n, st)].col(static_cast<Eigen::Index>(b)) =
            to_vector(stream_input(s.features[n], st));
      }
    }
  }
  return in;
}

template <typename Head, typename Span>
std::vector<std::pair<std::string, Span>> head_blocks(Head& h) {
  auto mk = [](auto& m) { return Span(m.data(), static_cast<std::size_t>(m.size())); };
  return {{"fc_weight", mk(h.fc_weight)}, {"fc_bias", mk(h.fc_bias)},
          {"bn_gamma", mk(h.bn_gamma)},   {"bn_beta", mk(h.bn_beta)},
          {"cls_weight", mk(h.cls_weight)}, {"cls_bias", mk(h.cls_bias)}};
}

}  // namespace

std::string to_string(Stream s) {
  switch (s) {
    case Stream::kGlobal:
      return "global";
    case Stream::kSalient:
      return "salient";
    case Stream::kBackground:
      return "background";
  }
  return "unknown";
}

ClassifierHead ClassifierHead::random(int d_in, int d_mid, int num_classes, double dropout_rate,
                                      std::uint64_t seed) {
  if (d_in < 1 || d_mid < 1 || num_classes < 1) {
    throw std::invalid_argument("ClassifierHead: dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("ClassifierHead: dropout rate must be in [0, 1)");
  }
  Rng rng(seed);
  ClassifierHead h;
  const double fc_std = std::sqrt(2.0 / d_mid);
  h.fc_weight = Eigen::MatrixXd::NullaryExpr(d_mid, d_in, [&] { return fc_std * rng.normal(); });
  h.fc_bias = Eigen::VectorXd::Zero(d_mid);
  h.bn_gamma = Eigen::VectorXd::Ones(d_mid);
  h.bn_beta = Eigen::VectorXd::Zero(d_mid);
  h.bn_running_mean = Eigen::VectorXd::Zero(d_mid);
  h.bn_running_var = Eigen::VectorXd::Ones(d_mid);
  h.cls_weight = Eigen::MatrixXd::NullaryExpr(num_classes, d_mid, [&] { return 0.001 * rng.normal(); });
  h.cls_bias = Eigen::VectorXd::Zero(num_classes);
  h.dropout_rate = dropout_rate;
  return h;
}

std::vector<std::pair<std::string, std::span<double>>> ClassifierHead::parameters() {
  return head_blocks<ClassifierHead, std::span<double>>(*this);
}

std::vector<std::pair<std::string, std::span<const double>>> ClassifierHead::parameters() const {
  return head_blocks<const ClassifierHead, std::span<const double>>(*this);
}

std::vector<std::pair<std::string, std::span<const double>>> HeadGradients::blocks() const {
  return head_blocks<const HeadGradients, std::span<const double>>(*this);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

double cross_entropy(const Eigen::VectorXd& logits, int label_index) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits[label_index];
}

HeadOutput head_forward(const ClassifierHead& head, std::span<const float> x, bool training,
                        std::uint64_t dropout_seed) {
  if (static_cast<int>(x.size()) != head.d_in()) {
    throw std::invalid_argument("head_forward: input length " + std::to_string(x.size()) +
                                " does not match d_in " + std::to_string(head.d_in()));
  }
  const Eigen::VectorXd z = head.fc_weight * to_vector(x) + head.fc_bias;
  HeadOutput out;
  out.descriptor = ((z - head.bn_running_mean).array() /
                        (head.bn_running_var.array() + kBatchNormEpsilon).sqrt() *
                        head.bn_gamma.array() +
                    head.bn_beta.array())
                       .matrix();
  Eigen::VectorXd after = out.descriptor;
  if (training) after = after.cwiseProduct(dropout_mask(head.d_mid(), 1, head.dropout_rate, dropout_seed));
  out.logits = head.cls_weight * after + head.cls_bias;
  return out;
}

HeadBank::HeadBank(int n_parts, int d_in, int d_mid, int num_classes, double dropout_rate,
                   std::uint64_t seed)
    : n_parts_(n_parts) {
  if (n_parts < 1) throw std::invalid_argument("HeadBank: n_parts must be >= 1");
  heads_.reserve(static_cast<std::size_t>(3 * n_parts));
  for (int i = 0; i < 3 * n_parts; ++i) {
    heads_.push_back(ClassifierHead::random(d_in, d_mid, num_classes, dropout_rate,
                                            mix_seed(seed, static_cast<std::uint64_t>(i))));
  }
}

std::span<const float> stream_input(const SgrsOutput& o, Stream s) {
  switch (s) {
    case Stream::kGlobal:
      return o.global_vec;
    case Stream::kSalient:
      return o.salient_vec;
    case Stream::kBackground:
      return o.background_vec;
  }
  return {};
}

LossBreakdown total_ce_loss(const HeadBank& bank, const PartFeatures& features, int label) {
  check_label(label, bank.num_classes());
  check_features(bank, features);
  LossBreakdown out;
  for (int n = 0; n < bank.n_parts(); ++n) {
    for (Stream s : kStreams) {
      const HeadOutput o = head_forward(bank.head(n, s), stream_input(features[n], s), false);
      const double l = cross_entropy(o.logits, label - 1);
      out.per_head.push_back(l);
      out.total += l;
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(lr_backbone >= 0 && lr_heads >= 0 && momentum >= 0 && weight_decay >= 0)) {
    throw std::invalid_argument("TrainConfig: learning rates, momentum and weight decay must be >= 0");
  }
  if (batch_size < 1 || epochs < 1) {
    throw std::invalid_argument("TrainConfig: batch_size and epochs must be >= 1");
  }
  if (lr_decay_epoch < 0 || lr_decay_epoch >= epochs) {
    throw std::invalid_argument("TrainConfig: lr_decay_epoch must be in [0, epochs)");
  }
  if (!(lr_decay > 0.0)) throw std::invalid_argument("TrainConfig: lr_decay must be > 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr_backbone", c.lr_backbone},       {"lr_heads", c.lr_heads},
          {"momentum", c.momentum},             {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},         {"epochs", c.epochs},
          {"lr_decay_epoch", c.lr_decay_epoch}, {"lr_decay", c.lr_decay},
          {"horizontal_flip", c.horizontal_flip}, {"flip_probability", c.flip_probability}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  c.lr_backbone = j.value("lr_backbone", c.lr_backbone);
  c.lr_heads = j.value("lr_heads", c.lr_heads);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.lr_decay_epoch = j.value("lr_decay_epoch", c.lr_decay_epoch);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.horizontal_flip = j.value("horizontal_flip", c.horizontal_flip);
  c.flip_probability = j.value("flip_probability", c.flip_probability);
  c.validate();
  return c;
}

double batch_objective(const HeadBank& bank, std::span<const TrainSample* const> batch,
                       std::uint64_t dropout_seed) {
  const BatchInputs in = gather(bank, batch);
  double total = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    total += head_forward_batch(bank.heads()[i], in.per_head[i], in.labels,
                                mix_seed(dropout_seed, i))
                 .loss;
  }
  return total / static_cast<double>(batch.size());
}

BankGradients compute_gradients(const HeadBank& bank, std::span<const TrainSample* const> batch,
                                std::uint64_t dropout_seed) {
  const BatchInputs in = gather(bank, batch);
  BankGradients out;
  out.heads.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const ClassifierHead& h = bank.heads()[i];
    const HeadPass p = head_forward_batch(h, in.per_head[i], in.labels, mix_seed(dropout_seed, i));
    out.loss += p.loss;
    out.heads.push_back(head_backward(h, p, in.labels));
    out.batch_stats.push_back({p.mean, p.var});
  }
  out.loss /= static_cast<double>(batch.size());
  return out;
}

SgdOptimizer::SgdOptimizer(const HeadBank& bank, const TrainConfig& config) : config_(config) {
  for (const auto& h : bank.heads()) {
    std::vector<Eigen::VectorXd> v;
    for (const auto& [name, block] : h.parameters()) v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(block.size())));
    velocity_.push_back(std::move(v));
  }
}

void SgdOptimizer::apply(HeadBank& bank, const BankGradients& grads, double lr) {
  for (std::size_t i = 0; i < bank.size(); ++i) {
    auto params = bank.heads()[i].parameters();
    const auto gblocks = grads.heads[i].blocks();
    for (std::size_t k = 0; k < params.size(); ++k) {
      Eigen::Map<Eigen::VectorXd> p(params[k].second.data(), static_cast<Eigen::Index>(params[k].second.size()));
      Eigen::Map<const Eigen::VectorXd> g(gblocks[k].second.data(), static_cast<Eigen::Index>(gblocks[k].second.size()));
      Eigen::VectorXd& v = velocity_[i][k];
      v = config_.momentum * v + g + config_.weight_decay * p;
      p -= lr * v;
    }
  }
}

double SgdOptimizer::step(HeadBank& bank, std::span<const TrainSample* const> batch, double lr,
                          std::uint64_t dropout_seed) {
  const BankGradients grads = compute_gradients(bank, batch, dropout_seed);
  apply(bank, grads, lr);
  if (batch.size() > 1) {
    const double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
      ClassifierHead& h = bank.heads()[i];
      const BatchStats& s = grads.batch_stats[i];
      h.bn_running_mean = (1.0 - kBatchNormMomentum) * h.bn_running_mean + kBatchNormMomentum * s.mean;
      h.bn_running_var = (1.0 - kBatchNormMomentum) * h.bn_running_var +
                         kBatchNormMomentum * s.var_biased * (n / (n - 1.0));
    }
  }
  return grads.loss;
}

TrainReport train_bank(HeadBank& bank, const std::vector<TrainSampleVariants>& samples,
                       const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("train_bank: no training samples");
  SgdOptimizer opt(bank, config);
  TrainReport report;
  std::vector<std::size_t> order(samples.size());
  std::uint64_t step_no = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(static_cast<int>(i))]);
    const double lr = config.lr_heads * (epoch >= config.lr_decay_epoch ? config.lr_decay : 1.0);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      // A trailing batch of one has no batch variance; fold it into this one.
      if (order.size() - end == 1) end = order.size();
      std::vector<const TrainSample*> batch;
      for (std::size_t k = start; k < end; ++k) {
        const auto& v = samples[order[k]];
        const bool flip = config.horizontal_flip && v.flipped && rng.bernoulli(config.flip_probability);
        batch.push_back(flip ? &*v.flipped : &v.original);
      }
      epoch_loss += opt.step(bank, batch, lr, mix_seed(seed ^ 0xd209ULL, step_no++));
      ++batches;
      start = end;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  std::size_t correct = 0;
  for (const auto& s : samples) correct += predict(bank, s.original.features) == s.original.label;
  report.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return report;
}

int predict(const HeadBank& bank, const PartFeatures& features) {
  check_features(bank, features);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(bank.num_classes());
  for (int n = 0; n < bank.n_parts(); ++n) {
    for (Stream s : kStreams) sum += head_forward(bank.head(n, s), stream_input(features[n], s), false).logits;
  }
  Eigen::Index best = 0;
  sum.maxCoeff(&best);
  return static_cast<int>(best) + 1;
}

std::vector<float> assemble_descriptor(const HeadBank& bank, const PartFeatures& features,
                                       bool l2_normalize) {
  check_features(bank, features);
  std::vector<float> out;
  out.reserve(bank.size() * static_cast<std::size_t>(bank.d_mid()));
  for (int n = 0; n < bank.n_parts(); ++n) {
    for (Stream s : kStreams) {
      const HeadOutput o = head_forward(bank.head(n, s), stream_input(features[n], s), false);
      for (Eigen::Index i = 0; i < o.descriptor.size(); ++i) out.push_back(static_cast<float>(o.descriptor[i]));
    }
  }
  if (l2_normalize) {
    double sq = 0.0;
    for (float v : out) sq += static_cast<double>(v) * v;
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (float& v : out) v = static_cast<float>(v * inv);
    }
  }
  return out;
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'L', 'P', 'N', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw IoError("checkpoint: truncated");
  return v;
}

std::vector<std::pair<std::string, Tensor3>> bank_blocks(const HeadBank& bank) {
  std::vector<std::pair<std::string, Tensor3>> out;
  auto add = [&out](const std::string& name, const double* data, Eigen::Index rows, Eigen::Index cols) {
    // Eigen is column-major; FMAP blocks are row-major.
    std::vector<float> v(static_cast<std::size_t>(rows * cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) v[static_cast<std::size_t>(r * cols + c)] = static_cast<float>(data[c * rows + r]);
    }
    out.emplace_back(name, Tensor3(1, static_cast<int>(rows), static_cast<int>(cols), std::move(v)));
  };
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const ClassifierHead& h = bank.heads()[i];
    const std::string p = "head" + std::to_string(i) + ".";
    add(p + "fc_weight", h.fc_weight.data(), h.fc_weight.rows(), h.fc_weight.cols());
    add(p + "fc_bias", h.fc_bias.data(), h.fc_bias.size(), 1);
    add(p + "bn_gamma", h.bn_gamma.data(), h.bn_gamma.size(), 1);
    add(p + "bn_beta", h.bn_beta.data(), h.bn_beta.size(), 1);
    add(p + "bn_running_mean", h.bn_running_mean.data(), h.bn_running_mean.size(), 1);
    add(p + "bn_running_var", h.bn_running_var.data(), h.bn_running_var.size(), 1);
    add(p + "cls_weight", h.cls_weight.data(), h.cls_weight.rows(), h.cls_weight.cols());
    add(p + "cls_bias", h.cls_bias.data(), h.cls_bias.size(), 1);
  }
  return out;
}

}  // namespace

void save_checkpoint(std::ostream& out, const HeadBank& bank, const nlohmann::json& metadata) {
  nlohmann::json meta = metadata;
  meta["n_parts"] = bank.n_parts();
  meta["d_in"] = bank.d_in();
  meta["d_mid"] = bank.d_mid();
  meta["num_classes"] = bank.num_classes();
  meta["dropout_rate"] = bank.heads().empty() ? 0.0 : bank.heads().front().dropout_rate;
  const std::string text = meta.dump();
  const auto blocks = bank_blocks(bank);
  out.write(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, t] : blocks) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_fmap(out, t);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

HeadBank load_checkpoint(std::istream& in, nlohmann::json* metadata) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw IoError("checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::string text(get_u32(in), '\0');
  in.read(text.data(), static_cast<std::streamsize>(text.size()));
  if (!in) throw IoError("checkpoint: truncated metadata");
  const nlohmann::json meta = nlohmann::json::parse(text);
  HeadBank bank(meta.at("n_parts").get<int>(), meta.at("d_in").get<int>(), meta.at("d_mid").get<int>(),
                meta.at("num_classes").get<int>(), meta.at("dropout_rate").get<double>(), 0);
  const std::uint32_t n_blocks = get_u32(in);
  if (n_blocks != bank.size() * 8) throw IoError("checkpoint: unexpected block count");
  for (std::size_t i = 0; i < bank.size(); ++i) {
    ClassifierHead& h = bank.heads()[i];
    const std::string prefix = "head" + std::to_string(i) + ".";
    auto read_into = [&](const std::string& name, double* data, Eigen::Index rows, Eigen::Index cols) {
      std::string got(get_u32(in), '\0');
      in.read(got.data(), static_cast<std::streamsize>(got.size()));
      if (!in || got != prefix + name) throw IoError("checkpoint: expected block " + prefix + name);
      const Tensor3 t = read_fmap(in);
      if (t.channels() != 1 || t.height() != rows || t.width() != cols) {
        throw IoError("checkpoint: block " + got + " has the wrong shape");
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) data[c * rows + r] = t.at(0, static_cast<int>(r), static_cast<int>(c));
      }
    };
    read_into("fc_weight", h.fc_weight.data(), h.fc_weight.rows(), h.fc_weight.cols());
    read_into("fc_bias", h.fc_bias.data(), h.fc_bias.size(), 1);
    read_into("bn_gamma", h.bn_gamma.data(), h.bn_gamma.size(), 1);
    read_into("bn_beta", h.bn_beta.data(), h.bn_beta.size(), 1);
    read_into("bn_running_mean", h.bn_running_mean.data(), h.bn_running_mean.size(), 1);
    read_into("bn_running_var", h.bn_running_var.data(), h.bn_running_var.size(), 1);
    read_into("cls_weight", h.cls_weight.data(), h.cls_weight.rows(), h.cls_weight.cols());
    read_into("cls_bias", h.cls_bias.data(), h.cls_bias.size(), 1);
    if ((h.bn_running_var.array() < 0.0).any()) throw IoError("checkpoint: negative running variance");
  }
  if (metadata) *metadata = meta;
  return bank;
}

void save_checkpoint(const std::filesystem::path& path, const HeadBank& bank,
                     const nlohmann::json& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, bank, metadata);
}

HeadBank load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_checkpoint(in, metadata);
}

}  // namespace salpn
