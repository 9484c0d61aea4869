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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "salpn/refinement.h"

namespace salpn {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

enum class Stream { kGlobal = 0, kSalient = 1, kBackground = 2 };
inline constexpr std::array<Stream, 3> kStreams = {Stream::kGlobal, Stream::kSalient,
                                                   Stream::kBackground};
std::string to_string(Stream s);

// FC -> BatchNorm -> Dropout -> Cls.
struct ClassifierHead {
  Eigen::MatrixXd fc_weight;  // d_mid x d_in
  Eigen::VectorXd fc_bias;
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::VectorXd bn_running_mean;
  Eigen::VectorXd bn_running_var;
  Eigen::MatrixXd cls_weight;  // C x d_mid
  Eigen::VectorXd cls_bias;
  double dropout_rate = 0.0;

  int d_in() const { return static_cast<int>(fc_weight.cols()); }
  int d_mid() const { return static_cast<int>(fc_weight.rows()); }
  int num_classes() const { return static_cast<int>(cls_weight.rows()); }

  // Deterministic random init: FC ~ N(0, 2/d_mid), Cls ~ N(0, 0.001^2),
  // BN gamma = 1, beta = 0, running stats 0 / 1.
  static ClassifierHead random(int d_in, int d_mid, int num_classes, double dropout_rate,
                               std::uint64_t seed);

  // Named views of the trainable blocks, in a fixed order.
  std::vector<std::pair<std::string, std::span<double>>> parameters();
  std::vector<std::pair<std::string, std::span<const double>>> parameters() const;
};

struct HeadOutput {
  Eigen::VectorXd descriptor;  // post-BN, pre-dropout
  Eigen::VectorXd logits;
};

// Single-sample forward. Inference uses running statistics; training mode
// uses the running statistics too (a lone sample has no batch variance) but
// applies dropout drawn from `dropout_seed`.
HeadOutput head_forward(const ClassifierHead& head, std::span<const float> x, bool training,
                        std::uint64_t dropout_seed = 0);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double cross_entropy(const Eigen::VectorXd& logits, int label_index);

// 3N independent heads, indexed by (part, stream).
class HeadBank {
 public:
  HeadBank() = default;
  HeadBank(int n_parts, int d_in, int d_mid, int num_classes, double dropout_rate,
           std::uint64_t seed);

  int n_parts() const { return n_parts_; }
  int d_in() const { return heads_.empty() ? 0 : heads_.front().d_in(); }
  int d_mid() const { return heads_.empty() ? 0 : heads_.front().d_mid(); }
  int num_classes() const { return heads_.empty() ? 0 : heads_.front().num_classes(); }
  std::size_t size() const { return heads_.size(); }

  ClassifierHead& head(int part, Stream s) { return heads_[index(part, s)]; }
  const ClassifierHead& head(int part, Stream s) const { return heads_[index(part, s)]; }
  std::vector<ClassifierHead>& heads() { return heads_; }
  const std::vector<ClassifierHead>& heads() const { return heads_; }

  static std::size_t index(int part, Stream s) {
    return static_cast<std::size_t>(part) * 3 + static_cast<std::size_t>(s);
  }

 private:
  int n_parts_ = 0;
  std::vector<ClassifierHead> heads_;
};

// One image: the SGRS triple for each of its N partitions.
using PartFeatures = std::vector<SgrsOutput>;

std::span<const float> stream_input(const SgrsOutput& o, Stream s);

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_head;  // bank order
};

// Sum over parts and streams of -log softmax(logits)[label], inference mode.
// `label` is 1-based in [1, C].
LossBreakdown total_ce_loss(const HeadBank& bank, const PartFeatures& features, int label);

struct TrainSample {
  PartFeatures features;
  int label = 1;  // 1-based
};

struct TrainConfig {
  double lr_backbone = 1e-4;  // for pluggable trainable extractors; unused by fixed features
  double lr_heads = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 4;
  int epochs = 120;
  int lr_decay_epoch = 80;
  double lr_decay = 0.1;
  bool horizontal_flip = true;
  double flip_probability = 0.5;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// Gradients of one head, same layout as ClassifierHead::parameters().
struct HeadGradients {
  Eigen::MatrixXd fc_weight;
  Eigen::VectorXd fc_bias;
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::MatrixXd cls_weight;
  Eigen::VectorXd cls_bias;

  std::vector<std::pair<std::string, std::span<const double>>> blocks() const;
};

struct BatchStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd var_biased;
};

struct BankGradients {
  double loss = 0.0;  // mean over the batch of the summed per-head loss
  std::vector<HeadGradients> heads;
  std::vector<BatchStats> batch_stats;
};

// Batch objective (mean over samples of the per-sample summed loss) with
// batch-statistics BatchNorm. Dropout masks come from `dropout_seed` when the
// heads have a non-zero rate.
double batch_objective(const HeadBank& bank, std::span<const TrainSample* const> batch,
                       std::uint64_t dropout_seed);
BankGradients compute_gradients(const HeadBank& bank, std::span<const TrainSample* const> batch,
                                std::uint64_t dropout_seed);

// SGD with momentum and weight decay (v = mu v + g + wd p; p -= lr v).
class SgdOptimizer {
 public:
  SgdOptimizer(const HeadBank& bank, const TrainConfig& config);

  // Forward, backward and one update. Updates BN running statistics.
  double step(HeadBank& bank, std::span<const TrainSample* const> batch, double lr,
              std::uint64_t dropout_seed);
  void apply(HeadBank& bank, const BankGradients& grads, double lr);

 private:
  TrainConfig config_;
  std::vector<std::vector<Eigen::VectorXd>> velocity_;  // per head, per block (flattened)
};

struct TrainSampleVariants {
  TrainSample original;
  std::optional<TrainSample> flipped;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

TrainReport train_bank(HeadBank& bank, const std::vector<TrainSampleVariants>& samples,
                       const TrainConfig& config, std::uint64_t seed);

// argmax of the summed logits of every head; 1-based.
int predict(const HeadBank& bank, const PartFeatures& features);

// Concatenated post-BN descriptors of all 3N heads in (part, stream) order.
std::vector<float> assemble_descriptor(const HeadBank& bank, const PartFeatures& features,
                                       bool l2_normalize = false);

// Versioned container: "SLPNCKPT", u32 version, u32 metadata length, JSON
// metadata, u32 block count, then per block u32 name length, name, FMAP1
// block (channels 1, height rows, width cols).
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const HeadBank& bank,
                     const nlohmann::json& metadata);
HeadBank load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);
void save_checkpoint(std::ostream& out, const HeadBank& bank, const nlohmann::json& metadata);
HeadBank load_checkpoint(std::istream& in, nlohmann::json* metadata = nullptr);

}  // namespace salpn
