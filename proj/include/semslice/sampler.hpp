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

#ifndef SEMSLICE_SAMPLER_HPP_
#define SEMSLICE_SAMPLER_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "semslice/backend.hpp"
#include "semslice/corpus.hpp"

namespace semslice {

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // One vector per text, same order. Texts must be non-blank.
  virtual std::vector<EmbeddingVector> Embed(
      std::span<const std::string> texts) = 0;
  // Identifies the provider in cache keys and artifacts.
  virtual std::string Name() const = 0;
};

// Offline embedder: lower-cased character trigrams (words padded with a
// space on each side) hashed with 64-bit FNV-1a into `dim` buckets, counted,
// then L2-normalized.
class HashNgramEmbedder : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 256;
  explicit HashNgramEmbedder(std::size_t dim = kDefaultDim, int n = 3);

  std::vector<EmbeddingVector> Embed(
      std::span<const std::string> texts) override;
  EmbeddingVector EmbedOne(const std::string& text) const;
  std::string Name() const override;

 private:
  std::size_t dim_;
  int n_;
};

// OpenAI-compatible "/embeddings" client.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(Endpoint endpoint, std::string model,
                        RetryPolicy retry, std::size_t batch_size = 64);

  std::vector<EmbeddingVector> Embed(
      std::span<const std::string> texts) override;
  std::string Name() const override { return "http:" + model_; }

 private:
  Endpoint endpoint_;
  std::string model_;
  RetryPolicy retry_;
  std::size_t batch_size_;
};

// Memoizes another provider by text, so several slices over one dataset
// embed it once.
class MemoizingEmbedder : public EmbeddingProvider {
 public:
  explicit MemoizingEmbedder(std::shared_ptr<EmbeddingProvider> inner);

  std::vector<EmbeddingVector> Embed(
      std::span<const std::string> texts) override;
  std::string Name() const override { return inner_->Name(); }
  std::size_t cached_texts() const;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector> memo_;
};

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b);
double SquaredDistance(std::span<const double> a, std::span<const double> b);

struct ClusteringResult {
  std::vector<std::size_t> assignments;  // per point, in [0, k)
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  // Inertia after each assignment pass, starting with the initial one.
  std::vector<double> inertia_history;
  int iterations = 0;
  std::vector<bool> empty_clusters;  // true where no point is assigned
  bool has_empty_cluster() const;
};

// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
// or after `max_iterations` update steps. Ties go to the lowest cluster
// index. Throws ConfigError for k == 0, k > n, ragged or non-finite input.
ClusteringResult KMeans(std::span<const EmbeddingVector> points, std::size_t k,
                        std::uint64_t seed, int max_iterations = 100);

// Uniform selection of n distinct examples, returned in dataset order.
std::vector<Example> SampleRandom(const Dataset& dataset, std::size_t n,
                                  std::uint64_t seed);
std::vector<std::size_t> SampleRandomIndices(std::size_t population,
                                             std::size_t n, std::uint64_t seed);

// One representative per k-means cluster (k = n): the member nearest its
// centroid, ties broken by dataset index. Output in dataset order.
std::vector<Example> SampleDiverse(const Dataset& dataset, std::size_t n,
                                   std::uint64_t seed,
                                   EmbeddingProvider& provider);
std::vector<std::size_t> SelectDiverseIndices(
    std::span<const EmbeddingVector> embeddings, std::size_t n,
    std::uint64_t seed);

}  // namespace semslice

#endif  // SEMSLICE_SAMPLER_HPP_
