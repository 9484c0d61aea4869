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

// Reference implementations written from the metric and layer definitions,
// sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "salpn/model.h"
#include "salpn/retrieval.h"

namespace salpn::oracle {

// Gallery indices ordered by distance, ties by index, via pairwise
// comparison counting instead of sorting.
inline std::vector<int> brute_force_order(const std::vector<float>& query,
                                          const std::vector<std::vector<float>>& gallery) {
  const int n = static_cast<int>(gallery.size());
  std::vector<long double> d(n);
  for (int i = 0; i < n; ++i) {
    long double s = 0;
    for (std::size_t k = 0; k < query.size(); ++k) {
      const long double diff = static_cast<long double>(query[k]) - gallery[i][k];
      s += diff * diff;
    }
    d[i] = std::sqrt(s);
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    int position = 0;
    for (int j = 0; j < n; ++j) {
      if (d[j] < d[i] || (d[j] == d[i] && j < i)) ++position;
    }
    order[position] = i;
  }
  return order;
}

// Average precision as the mean over positives of precision at that positive.
inline double brute_force_ap(const std::vector<bool>& is_positive_in_rank_order) {
  int total = 0;
  for (bool p : is_positive_in_rank_order) total += p;
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < is_positive_in_rank_order.size(); ++r) {
    if (!is_positive_in_rank_order[r]) continue;
    int hits = 0;
    for (std::size_t q = 0; q <= r; ++q) hits += is_positive_in_rank_order[q];
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / total;
}

inline double brute_force_recall(const std::vector<int>& first_positive_ranks, int k) {
  int hits = 0;
  for (int r : first_positive_ranks) hits += (r >= 1 && r <= k);
  return static_cast<double>(hits) / static_cast<double>(first_positive_ranks.size());
}

// Loss of a batch written directly from the layer definitions, using
// per-feature loops instead of matrix algebra. Dropout is not modelled.
inline double reference_batch_loss(const HeadBank& bank, const std::vector<TrainSample>& batch) {
  const int b = static_cast<int>(batch.size());
  double total = 0.0;
  for (int part = 0; part < bank.n_parts(); ++part) {
    for (Stream s : kStreams) {
      const ClassifierHead& h = bank.head(part, s);
      std::vector<std::vector<double>> z(b, std::vector<double>(h.d_mid()));
      for (int i = 0; i < b; ++i) {
        const auto x = stream_input(batch[i].features[part], s);
        for (int m = 0; m < h.d_mid(); ++m) {
          double acc = h.fc_bias(m);
          for (int k = 0; k < h.d_in(); ++k) acc += h.fc_weight(m, k) * x[k];
          z[i][m] = acc;
        }
      }
      for (int m = 0; m < h.d_mid(); ++m) {
        double mean = 0.0;
        for (int i = 0; i < b; ++i) mean += z[i][m];
        mean /= b;
        double var = 0.0;
        for (int i = 0; i < b; ++i) var += (z[i][m] - mean) * (z[i][m] - mean);
        var /= b;
        for (int i = 0; i < b; ++i) {
          z[i][m] = h.bn_gamma(m) * (z[i][m] - mean) / std::sqrt(var + kBatchNormEpsilon) +
                    h.bn_beta(m);
        }
      }
      for (int i = 0; i < b; ++i) {
        std::vector<double> logits(h.num_classes());
        double mx = -INFINITY;
        for (int c = 0; c < h.num_classes(); ++c) {
          double acc = h.cls_bias(c);
          for (int m = 0; m < h.d_mid(); ++m) acc += h.cls_weight(c, m) * z[i][m];
          logits[c] = acc;
          mx = std::max(mx, acc);
        }
        double denom = 0.0;
        for (double l : logits) denom += std::exp(l - mx);
        total += -(logits[batch[i].label - 1] - mx - std::log(denom));
      }
    }
  }
  return total / b;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t checked = 0;
};

// Central differences of `loss` for every trainable scalar of `bank`,
// compared against `analytic`. Relative error uses max(|a|, |n|, 1e-6) as
// the denominator so vanishing gradients do not blow up the ratio.
inline GradCheckResult check_gradients(
    HeadBank& bank, const BankGradients& analytic,
    const std::function<double(const HeadBank&)>& loss, double h = 1e-4) {
  GradCheckResult res;
  for (std::size_t hi = 0; hi < bank.size(); ++hi) {
    auto params = bank.heads()[hi].parameters();
    const auto grads = analytic.heads[hi].blocks();
    for (std::size_t bi = 0; bi < params.size(); ++bi) {
      auto& [name, span] = params[bi];
      for (std::size_t k = 0; k < span.size(); ++k) {
        const double saved = span[k];
        span[k] = saved + h;
        const double up = loss(bank);
        span[k] = saved - h;
        const double down = loss(bank);
        span[k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double a = grads[bi].second[k];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        const double rel = std::abs(a - numeric) / denom;
        ++res.checked;
        if (rel > res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst_block = "head" + std::to_string(hi) + "." + name;
        }
      }
    }
  }
  return res;
}

// Random PartFeatures with every stream filled from N(0, 1).
inline PartFeatures random_features(int n_parts, int d_in, std::mt19937_64& rng) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  PartFeatures f(n_parts);
  for (auto& o : f) {
    for (auto* v : {&o.global_vec, &o.salient_vec, &o.background_vec}) {
      v->resize(d_in);
      for (auto& x : *v) x = nd(rng);
    }
  }
  return f;
}

}  // namespace salpn::oracle
