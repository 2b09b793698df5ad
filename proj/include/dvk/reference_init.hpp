#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvk/demo_dataset.hpp"
#include "dvk/reference_set.hpp"

namespace dvk {

struct PatchOrigin {
  std::uint32_t image = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
};

/// Pooled patch embeddings. Clustering treats them as an unordered bag; the
/// origins are kept only for the per-image saliency pass.
struct FeatureBag {
  std::uint32_t dim = 0;
  std::uint32_t image_count = 0;
  std::vector<float> vectors;  // size() x dim
  std::vector<PatchOrigin> origins;

  std::size_t size() const { return origins.size(); }
  std::span<const float> vector(std::size_t i) const {
    return {vectors.data() + i * dim, dim};
  }
  void add(std::span<const float> v, PatchOrigin origin);
};

struct AttentionPlane {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;

  float at(std::uint32_t row, std::uint32_t col) const {
    return values[std::size_t{row} * cols + col];
  }
};

struct CollectedFeatures {
  FeatureBag bag;
  std::vector<AttentionPlane> attention;  // one per selected frame
};

/// Pools every patch of every stride-th frame of each demonstration
/// (t = 0, stride, 2*stride, ...).
CollectedFeatures collect_features(const DemoDataset& dataset, std::uint32_t stride);

struct KMeansOptions {
  std::uint32_t clusters = 100;
  std::uint64_t seed = 0;
  std::uint32_t max_iter = 100;
  double tol = 1e-6;  // relative inertia improvement
};

struct Clustering {
  std::uint32_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> centroids;  // cluster_count() x dim, unit length
  std::vector<std::uint32_t> assignment;
  std::vector<double> inertia_trace;

  std::uint32_t cluster_count() const {
    return dim == 0 ? 0 : static_cast<std::uint32_t>(centroids.size() / dim);
  }
  std::span<const double> centroid(std::size_t j) const {
    return {centroids.data() + j * dim, dim};
  }
  std::vector<std::uint32_t> sizes() const;
};

/// Lloyd's algorithm on L2-normalized copies of the features with k-means++
/// seeding. Deterministic in (bag order, clusters, seed) and independent of
/// the worker count.
Clustering kmeans(const FeatureBag& bag, const KMeansOptions& options);

/// Mean attention of the patches of each image assigned to each cluster.
struct SaliencyTable {
  std::uint32_t image_count = 0;
  std::uint32_t cluster_count = 0;
  std::vector<double> attention_sum;      // image-major
  std::vector<std::uint32_t> patch_count;

  std::optional<double> sal(std::uint32_t image, std::uint32_t cluster) const;
  void set(std::uint32_t image, std::uint32_t cluster, double sal_value);
  static SaliencyTable empty(std::uint32_t images, std::uint32_t clusters);
};

SaliencyTable saliency(const Clustering& clustering, const FeatureBag& bag,
                       std::span<const AttentionPlane> attention);

/// Images whose saliency for a cluster strictly exceeds tau.
std::vector<std::uint32_t> count_votes(const SaliencyTable& table, double tau);

/// Ranks clusters by votes (ties to the lower cluster index) and keeps the
/// top `keep` centroids.
ReferenceSet vote_and_select(const SaliencyTable& table, const Clustering& clustering,
                             double tau, std::uint32_t keep);

struct InitConfig {
  std::uint32_t clusters = 100;
  std::uint32_t keep = 50;
  double tau = 0.2;
  std::uint64_t seed = 0;
  std::uint32_t stride = 5;
  std::uint32_t max_iter = 100;
  double tol = 1e-6;
};

struct InitResult {
  ReferenceSet refs;
  Clustering clustering;
  std::vector<std::uint32_t> votes;     // per candidate cluster
  std::vector<std::uint32_t> selected;  // candidate index of each reference
  std::uint32_t image_count = 0;
  std::size_t feature_count = 0;
};

InitResult init_references(const DemoDataset& dataset, const InitConfig& config);

/// Per-cluster votes and sizes as a JSON document (clusters.json).
std::string clusters_report(const InitResult& result);

}  // namespace dvk
