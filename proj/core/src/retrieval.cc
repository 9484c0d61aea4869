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

#include "salpn/retrieval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "salpn/io.h"
#include "salpn/tensor.h"

namespace salpn {

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("euclidean_distance: dimension " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

RankingResult rank(const EmbeddingRecord& query, const std::vector<EmbeddingRecord>& gallery) {
  if (gallery.empty()) throw std::invalid_argument("rank: empty gallery");
  std::vector<double> dist(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) dist[i] = euclidean_distance(query.vector, gallery[i].vector);
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  RankingResult r;
  r.query_id = query.id;
  r.ids.reserve(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& g = gallery[order[pos]];
    r.ids.push_back(g.id);
    r.distances.push_back(dist[order[pos]]);
    r.class_ids.push_back(g.class_id);
    if (r.rank_of_first_positive == 0 && g.class_id == query.class_id) {
      r.rank_of_first_positive = static_cast<int>(pos) + 1;
    }
  }
  return r;
}

double recall_at_k(const std::vector<RankingResult>& results, int k) {
  if (results.empty()) throw std::invalid_argument("recall_at_k: no results");
  if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
  std::size_t hits = 0;
  for (const auto& r : results) hits += r.rank_of_first_positive >= 1 && r.rank_of_first_positive <= k;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double average_precision(const RankingResult& result, const std::set<std::string>& positives) {
  std::size_t total = 0;
  for (const auto& id : result.ids) total += positives.count(id);
  if (total == 0) throw std::invalid_argument("average_precision: no positive in gallery for " + result.query_id);
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < result.ids.size(); ++pos) {
    if (positives.count(result.ids[pos])) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return ap / static_cast<double>(total);
}

double average_precision(const RankingResult& result, int query_class) {
  std::size_t total = 0;
  for (int c : result.class_ids) total += c == query_class;
  if (total == 0) throw std::invalid_argument("average_precision: no positive in gallery for " + result.query_id);
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < result.class_ids.size(); ++pos) {
    if (result.class_ids[pos] == query_class) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return ap / static_cast<double>(total);
}

MetricsReport evaluate(const std::vector<EmbeddingRecord>& queries,
                       const std::vector<EmbeddingRecord>& gallery, const std::vector<int>& k_list) {
  if (queries.empty()) throw std::invalid_argument("evaluate: no queries");
  std::vector<RankingResult> results;
  results.reserve(queries.size());
  MetricsReport report;
  double ap_sum = 0.0;
  for (const auto& q : queries) {
    results.push_back(rank(q, gallery));
    const double ap = average_precision(results.back(), q.class_id);
    ap_sum += ap;
    report.per_query.push_back({q.id, results.back().rank_of_first_positive, ap});
  }
  for (int k : k_list) report.recall[k] = recall_at_k(results, k);
  report.mean_ap = ap_sum / static_cast<double>(queries.size());
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& q : report.per_query) per.push_back({{"id", q.id}, {"rank", q.rank}, {"ap", q.ap}});
  return {{"recall", recall}, {"map", report.mean_ap}, {"per_query", per}};
}

void write_embeddings(const std::filesystem::path& fmap_path, const std::filesystem::path& sidecar,
                      const std::vector<EmbeddingRecord>& records) {
  if (records.empty()) throw std::invalid_argument("write_embeddings: no records");
  const std::size_t dim = records.front().vector.size();
  std::vector<float> data;
  data.reserve(records.size() * dim);
  std::string lines;
  for (const auto& r : records) {
    if (r.vector.size() != dim) throw std::invalid_argument("write_embeddings: mixed dimensions");
    data.insert(data.end(), r.vector.begin(), r.vector.end());
    lines += nlohmann::json{{"id", r.id}, {"class_id", r.class_id}}.dump() + "\n";
  }
  write_fmap(fmap_path, Tensor3(static_cast<int>(records.size()), 1, static_cast<int>(dim), std::move(data)));
  write_text_file(sidecar, lines);
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& fmap_path,
                                             const std::filesystem::path& sidecar) {
  const Tensor3 t = read_fmap(fmap_path);
  if (t.height() != 1) throw IoError("embeddings FMAP must have height 1");
  std::istringstream in(read_text_file(sidecar));
  std::vector<EmbeddingRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    if (static_cast<int>(out.size()) >= t.channels()) throw IoError("embedding sidecar has more rows than the FMAP");
    const auto row = t.plane(static_cast<int>(out.size()));
    out.push_back({j.at("id").get<std::string>(), j.at("class_id").get<int>(),
                   std::vector<float>(row.begin(), row.end())});
  }
  if (static_cast<int>(out.size()) != t.channels()) throw IoError("embedding sidecar row count does not match FMAP");
  return out;
}

}  // namespace salpn
