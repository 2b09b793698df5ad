#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvk/patch_grid.hpp"
#include "dvk/reference_set.hpp"

namespace dvk {

/// Cosine similarity clamped to [-1, 1]. Throws ZeroNorm or DimMismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

struct Keypoint {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double u = 0.0;  // (col + 0.5) / cols
  double v = 0.0;  // (row + 0.5) / rows
  double similarity = 0.0;

  bool operator==(const Keypoint&) const = default;
};

/// One keypoint per reference, in reference order.
struct KeypointVector {
  std::vector<Keypoint> points;
  std::size_t size() const { return points.size(); }
};

/// Cosine scores closer than this to the maximum count as tied; collinear
/// patches of different scale otherwise differ by rounding alone.
inline constexpr double kCosineTieTolerance = 1e-12;

/// Locates, for every reference centroid, the grid cell whose embedding has
/// the highest cosine similarity with it. Ties resolve to the smallest
/// row-major cell index. A reference always yields a point, even when its
/// concept is absent from the frame.
class KeypointExtractor {
 public:
  explicit KeypointExtractor(const ReferenceSet& refs);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return inv_norm_.size(); }
  KeypointVector extract(const PatchGrid& grid) const;

 private:
  std::uint32_t dim_;
  std::vector<double> refs_;
  std::vector<double> inv_norm_;
};

KeypointVector extract_keypoints(const PatchGrid& grid, const ReferenceSet& refs);

/// [u_1, v_1, ..., u_m, v_m, proprio...]; similarities are not included.
std::vector<double> policy_input(const KeypointVector& keypoints,
                                 std::span<const double> proprio);

}  // namespace dvk
