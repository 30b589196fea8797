/*
 * Copyright 2026 The semslice Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "semslice/sampler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "random.hpp"
#include "semslice/error.hpp"
#include "semslice/io.hpp"

namespace semslice {
namespace {

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void NormalizeL2(std::vector<double>& values) {
  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& v : values) v /= norm;
}

// Second seed used when the first clustering leaves a cluster empty.
constexpr std::uint64_t kReseedOffset = 0x9E3779B97F4A7C15ULL;

std::vector<std::vector<double>> KMeansPlusPlus(
    std::span<const EmbeddingVector> points, std::size_t k,
    internal::Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.Below(n);
  centroids.push_back(points[first].values);
  chosen[first] = true;

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    const auto& latest = centroids.back();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points[i].values, latest));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.Unit() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        cumulative += nearest[i];
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      // Every point coincides with a centroid: take the next unused index.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick].values);
  }
  return centroids;
}

// Assigns each point to its nearest centroid (lowest index on ties) and
// returns the resulting inertia.
double Assign(std::span<const EmbeddingVector> points,
              const std::vector<std::vector<double>>& centroids,
              std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_cluster = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = SquaredDistance(points[i].values, centroids[c]);
      if (d < best) {
        best = d;
        best_cluster = c;
      }
    }
    assignments[i] = best_cluster;
    inertia += best;
  }
  return inertia;
}

std::vector<std::size_t> RepresentativesOrEmpty(
    std::span<const EmbeddingVector> embeddings, const ClusteringResult& result,
    std::vector<bool>& cluster_filled) {
  const std::size_t k = result.centroids.size();
  std::vector<std::size_t> best(k, embeddings.size());
  std::vector<double> best_dist(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const std::size_t c = result.assignments[i];
    const double d = SquaredDistance(embeddings[i].values, result.centroids[c]);
    if (d < best_dist[c]) {  // strict: earlier index wins ties
      best_dist[c] = d;
      best[c] = i;
    }
  }
  cluster_filled.assign(k, false);
  std::vector<std::size_t> picks;
  for (std::size_t c = 0; c < k; ++c) {
    if (best[c] < embeddings.size()) {
      picks.push_back(best[c]);
      cluster_filled[c] = true;
    }
  }
  return picks;
}

}  // namespace

HashNgramEmbedder::HashNgramEmbedder(std::size_t dim, int n) : dim_(dim), n_(n) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
  if (n_ < 1) throw ConfigError("n-gram order must be positive");
}

EmbeddingVector HashNgramEmbedder::EmbedOne(const std::string& text) const {
  if (TrimView(text).empty()) {
    throw ConfigError("cannot embed an empty text");
  }
  EmbeddingVector out;
  out.values.assign(dim_, 0.0);
  const std::string lowered = ToLowerAscii(text);
  std::size_t pos = 0;
  while (pos < lowered.size()) {
    while (pos < lowered.size() &&
           std::isspace(static_cast<unsigned char>(lowered[pos]))) {
      ++pos;
    }
    const std::size_t start = pos;
    while (pos < lowered.size() &&
           !std::isspace(static_cast<unsigned char>(lowered[pos]))) {
      ++pos;
    }
    if (pos == start) break;
    const std::string padded = " " + lowered.substr(start, pos - start) + " ";
    const std::size_t order = static_cast<std::size_t>(n_);
    if (padded.size() < order) {
      out.values[Fnv1a64(padded) % dim_] += 1.0;
      continue;
    }
    for (std::size_t i = 0; i + order <= padded.size(); ++i) {
      out.values[Fnv1a64(std::string_view(padded).substr(i, order)) % dim_] +=
          1.0;
    }
  }
  NormalizeL2(out.values);
  return out;
}

std::vector<EmbeddingVector> HashNgramEmbedder::Embed(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(EmbedOne(text));
  return out;
}

std::string HashNgramEmbedder::Name() const {
  return "hash-ngram:" + std::to_string(n_) + ":" + std::to_string(dim_);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(Endpoint endpoint,
                                             std::string model,
                                             RetryPolicy retry,
                                             std::size_t batch_size)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      retry_(std::move(retry)),
      batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<EmbeddingVector> HttpEmbeddingProvider::Embed(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
    const std::size_t end = std::min(texts.size(), begin + batch_size_);
    nlohmann::json input = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) {
      if (TrimView(texts[i]).empty()) {
        throw ConfigError("cannot embed an empty text");
      }
      input.push_back(texts[i]);
    }
    const nlohmann::json body = {{"model", model_}, {"input", input}};
    const nlohmann::json payload = WithRetries(retry_, [&] {
      return PostJson(endpoint_, "/embeddings", body, std::chrono::seconds(120));
    });
    try {
      const auto& data = payload.at("data");
      if (data.size() != end - begin) {
        throw BackendError("embedding response has " +
                           std::to_string(data.size()) + " vectors, expected " +
                           std::to_string(end - begin));
      }
      std::vector<EmbeddingVector> batch(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t slot =
            data[i].value("index", static_cast<std::size_t>(i));
        if (slot >= batch.size()) {
          throw BackendError("embedding response index out of range");
        }
        batch[slot].values = data[i].at("embedding").get<std::vector<double>>();
      }
      for (auto& v : batch) out.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed embedding payload: ") +
                         e.what());
    }
  }
  return out;
}

MemoizingEmbedder::MemoizingEmbedder(std::shared_ptr<EmbeddingProvider> inner)
    : inner_(std::move(inner)) {}

std::vector<EmbeddingVector> MemoizingEmbedder::Embed(
    std::span<const std::string> texts) {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    for (const auto& text : texts) {
      if (!memo_.contains(text) &&
          std::find(missing.begin(), missing.end(), text) == missing.end()) {
        missing.push_back(text);
      }
    }
  }
  if (!missing.empty()) {
    auto fresh = inner_->Embed(missing);
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      memo_.emplace(missing[i], std::move(fresh[i]));
    }
  }
  std::lock_guard lock(mu_);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(memo_.at(text));
  return out;
}

std::size_t MemoizingEmbedder::cached_texts() const {
  std::lock_guard lock(mu_);
  return memo_.size();
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw ConfigError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool ClusteringResult::has_empty_cluster() const {
  return std::find(empty_clusters.begin(), empty_clusters.end(), true) !=
         empty_clusters.end();
}

ClusteringResult KMeans(std::span<const EmbeddingVector> points, std::size_t k,
                        std::uint64_t seed, int max_iterations) {
  const std::size_t n = points.size();
  if (k == 0) throw ConfigError("k must be positive");
  if (k > n) {
    throw ConfigError("k (" + std::to_string(k) + ") exceeds the number of "
                      "points (" + std::to_string(n) + ")");
  }
  const std::size_t dim = points[0].dim();
  if (dim == 0) throw ConfigError("embedding vectors must be non-empty");
  for (const auto& p : points) {
    if (p.dim() != dim) throw ConfigError("embedding dimensions differ");
    for (double v : p.values) {
      if (!std::isfinite(v)) throw ConfigError("embedding has non-finite value");
    }
  }

  internal::Rng rng(seed);
  ClusteringResult result;
  result.centroids = KMeansPlusPlus(points, k, rng);
  result.assignments.assign(n, 0);
  result.inertia = Assign(points, result.centroids, result.assignments);
  result.inertia_history.push_back(result.inertia);

  std::vector<std::size_t> next(n, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignments[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i].values[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the previous centroid
      for (std::size_t d = 0; d < dim; ++d) {
        result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
    result.iterations = iter + 1;
    result.inertia = Assign(points, result.centroids, next);
    result.inertia_history.push_back(result.inertia);
    if (next == result.assignments) break;
    result.assignments.swap(next);
  }

  result.empty_clusters.assign(k, true);
  for (std::size_t c : result.assignments) result.empty_clusters[c] = false;
  return result;
}

std::vector<std::size_t> SampleRandomIndices(std::size_t population,
                                             std::size_t n,
                                             std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample size must be positive");
  if (n > population) {
    throw ConfigError("sample size " + std::to_string(n) +
                      " exceeds dataset size " + std::to_string(population));
  }
  std::vector<std::size_t> order(population);
  std::iota(order.begin(), order.end(), 0);
  internal::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.Below(population - i);
    std::swap(order[i], order[j]);
  }
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<Example> SampleRandom(const Dataset& dataset, std::size_t n,
                                  std::uint64_t seed) {
  std::vector<Example> out;
  for (std::size_t i : SampleRandomIndices(dataset.size(), n, seed)) {
    out.push_back(dataset[i]);
  }
  return out;
}

std::vector<std::size_t> SelectDiverseIndices(
    std::span<const EmbeddingVector> embeddings, std::size_t n,
    std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample size must be positive");
  ClusteringResult clustering = KMeans(embeddings, n, seed);
  if (clustering.has_empty_cluster()) {
    clustering = KMeans(embeddings, n, seed + kReseedOffset);
  }
  std::vector<bool> filled;
  std::vector<std::size_t> picks =
      RepresentativesOrEmpty(embeddings, clustering, filled);

  // Farthest-point completion for clusters that stayed empty.
  std::vector<bool> selected(embeddings.size(), false);
  for (std::size_t p : picks) selected[p] = true;
  while (picks.size() < n) {
    std::size_t best = embeddings.size();
    double best_dist = -1.0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (selected[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t p : picks) {
        nearest = std::min(nearest,
                           SquaredDistance(embeddings[i].values,
                                           embeddings[p].values));
      }
      if (nearest > best_dist) {
        best_dist = nearest;
        best = i;
      }
    }
    selected[best] = true;
    picks.push_back(best);
  }
  std::sort(picks.begin(), picks.end());
  return picks;
}

std::vector<Example> SampleDiverse(const Dataset& dataset, std::size_t n,
                                   std::uint64_t seed,
                                   EmbeddingProvider& provider) {
  if (n > dataset.size()) {
    throw ConfigError("sample size " + std::to_string(n) +
                      " exceeds dataset size " + std::to_string(dataset.size()));
  }
  std::vector<std::string> texts;
  texts.reserve(dataset.size());
  for (const auto& ex : dataset.examples()) texts.push_back(ex.text);
  const auto embeddings = provider.Embed(texts);
  if (embeddings.size() != texts.size()) {
    throw BackendError("embedding provider returned the wrong number of vectors");
  }
  std::vector<Example> out;
  for (std::size_t i : SelectDiverseIndices(embeddings, n, seed)) {
    out.push_back(dataset[i]);
  }
  return out;
}

}  // namespace semslice
