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

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace salpn {

struct EmbeddingRecord {
  std::string id;
  int class_id = 0;
  std::vector<float> vector;
};

struct RankingResult {
  std::string query_id;
  std::vector<std::string> ids;    // gallery ids by ascending distance
  std::vector<double> distances;
  std::vector<int> class_ids;      // class of each ranked item
  int rank_of_first_positive = 0;  // 1-based; 0 when no gallery item shares the query class
};

double euclidean_distance(std::span<const float> a, std::span<const float> b);

// Exact ranking by Euclidean distance; ties keep gallery insertion order.
// Positives are gallery items with the query's class id.
RankingResult rank(const EmbeddingRecord& query, const std::vector<EmbeddingRecord>& gallery);

// Fraction of results whose first positive is within the top k.
double recall_at_k(const std::vector<RankingResult>& results, int k);

// (1/|P|) sum over positive hits of hits_so_far / rank.
double average_precision(const RankingResult& result, const std::set<std::string>& positives);

// Same, with positives taken as the gallery items sharing the query class.
double average_precision(const RankingResult& result, int query_class);

struct QueryMetrics {
  std::string id;
  int rank = 0;
  double ap = 0.0;
};

struct MetricsReport {
  std::map<int, double> recall;  // k -> R@k
  double mean_ap = 0.0;
  std::vector<QueryMetrics> per_query;
};

MetricsReport evaluate(const std::vector<EmbeddingRecord>& queries,
                       const std::vector<EmbeddingRecord>& gallery, const std::vector<int>& k_list);

nlohmann::json to_json(const MetricsReport& report);

// Embeddings as one FMAP1 file of shape (count, 1, dim) plus a JSON-lines
// sidecar of {id, class_id} in the same order.
void write_embeddings(const std::filesystem::path& fmap_path, const std::filesystem::path& sidecar,
                      const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& fmap_path,
                                             const std::filesystem::path& sidecar);

}  // namespace salpn
