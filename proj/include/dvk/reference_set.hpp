#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dvk {

struct ReferenceConfig {
  std::uint32_t clusters = 100;  // M, candidate clusters
  std::uint32_t keep = 50;       // m, retained references
  float tau = 0.2f;              // saliency voting threshold
  std::uint64_t seed = 0;

  bool operator==(const ReferenceConfig&) const = default;
};

/// The m retained cluster centroids, ordered by vote count (descending).
struct ReferenceSet {
  std::uint32_t dim = 0;
  std::vector<float> centroids;  // size() x dim, row-major
  std::vector<std::uint32_t> votes;
  ReferenceConfig config;

  std::size_t size() const { return votes.size(); }
  std::span<const float> centroid(std::size_t k) const {
    return {centroids.data() + k * dim, dim};
  }
  /// True when no cluster received a single vote; selection then fell back to
  /// cluster-index order.
  bool no_salient_votes() const { return !votes.empty() && votes.front() == 0; }

  bool operator==(const ReferenceSet&) const = default;
};

void validate(const ReferenceSet& refs);

std::vector<std::uint8_t> encode_refs(const ReferenceSet& refs);
ReferenceSet decode_refs(std::span<const std::uint8_t> bytes);

void write_refs(const ReferenceSet& refs, const std::filesystem::path& path);
ReferenceSet read_refs(const std::filesystem::path& path);

}  // namespace dvk
