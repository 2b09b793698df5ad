#include "dvk/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dvk/error.hpp"

namespace dvk {
namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimMismatch, "cosine of unequal dims");
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double{a[i]} * b[i];
    aa += double{a[i]} * a[i];
    bb += double{b[i]} * b[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw Error(ErrorCode::ZeroNorm, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

KeypointExtractor::KeypointExtractor(const ReferenceSet& refs) : dim_(refs.dim) {
  validate(refs);
  refs_.assign(refs.centroids.begin(), refs.centroids.end());
  inv_norm_.reserve(refs.size());
  for (std::size_t k = 0; k < refs.size(); ++k) {
    double sq = 0.0;
    for (float v : refs.centroid(k)) sq += double{v} * v;
    inv_norm_.push_back(1.0 / std::sqrt(sq));
  }
}

KeypointVector KeypointExtractor::extract(const PatchGrid& grid) const {
  if (grid.dim != dim_) {
    throw Error(ErrorCode::DimMismatch, "grid dim " + std::to_string(grid.dim) +
                                            " vs reference dim " + std::to_string(dim_));
  }
  const std::size_t cells = grid.cell_count();
  std::vector<double> patches(grid.embeddings.begin(), grid.embeddings.end());
  std::vector<double> inv_patch(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double* h = patches.data() + c * dim_;
    double sq = 0.0;
    for (std::uint32_t d = 0; d < dim_; ++d) sq += h[d] * h[d];
    if (!(sq > 0.0)) throw Error(ErrorCode::ZeroNormPatch, "patch " + std::to_string(c));
    inv_patch[c] = 1.0 / std::sqrt(sq);
  }

  KeypointVector out;
  out.points.reserve(size());
  std::vector<double> scores(cells);
  for (std::size_t k = 0; k < size(); ++k) {
    const double* f = refs_.data() + k * dim_;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cells; ++c) {
      const double* h = patches.data() + c * dim_;
      double dot = 0.0;
      for (std::uint32_t d = 0; d < dim_; ++d) dot += f[d] * h[d];
      scores[c] = dot * inv_norm_[k] * inv_patch[c];
      best = std::max(best, scores[c]);
    }
    std::size_t best_cell = 0;
    while (scores[best_cell] < best - kCosineTieTolerance) ++best_cell;
    Keypoint p;
    p.row = static_cast<std::uint32_t>(best_cell / grid.cols);
    p.col = static_cast<std::uint32_t>(best_cell % grid.cols);
    p.u = (p.col + 0.5) / grid.cols;
    p.v = (p.row + 0.5) / grid.rows;
    p.similarity = std::clamp(best, -1.0, 1.0);
    out.points.push_back(p);
  }
  return out;
}

KeypointVector extract_keypoints(const PatchGrid& grid, const ReferenceSet& refs) {
  return KeypointExtractor(refs).extract(grid);
}

std::vector<double> policy_input(const KeypointVector& keypoints,
                                 std::span<const double> proprio) {
  std::vector<double> out;
  out.reserve(2 * keypoints.size() + proprio.size());
  for (const auto& p : keypoints.points) {
    out.push_back(p.u);
    out.push_back(p.v);
  }
  out.insert(out.end(), proprio.begin(), proprio.end());
  return out;
}

}  // namespace dvk
