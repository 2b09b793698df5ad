#include "dvk/synth/features.hpp"

#include <algorithm>
#include <cmath>

namespace dvk::synth {

std::vector<double> gem_pool(const PatchGrid& grid, double p) {
  std::vector<double> acc(grid.dim, 0.0);
  const std::size_t n = grid.cell_count();
  for (std::size_t cell = 0; cell < n; ++cell) {
    const auto v = grid.patch(cell);
    for (std::uint32_t d = 0; d < grid.dim; ++d) {
      acc[d] += std::pow(std::max(static_cast<double>(v[d]), kGemFloor), p);
    }
  }
  for (double& a : acc) a = std::pow(a / static_cast<double>(n), 1.0 / p);
  return acc;
}

std::vector<double> attention_mean(const PatchGrid& grid) {
  std::vector<double> acc(grid.dim, 0.0);
  const std::size_t n = grid.cell_count();
  double total = 0.0;
  for (std::size_t cell = 0; cell < n; ++cell) {
    const double w = grid.attention ? (*grid.attention)[cell] : 1.0;
    total += w;
    const auto v = grid.patch(cell);
    for (std::uint32_t d = 0; d < grid.dim; ++d) acc[d] += w * v[d];
  }
  if (total <= 0.0) {
    PatchGrid flat = grid;
    flat.attention.reset();
    return attention_mean(flat);
  }
  for (double& a : acc) a /= total;
  return acc;
}

std::vector<double> pooled_baseline_input(const PatchGrid& grid) {
  std::vector<double> out = gem_pool(grid);
  const std::vector<double> m = attention_mean(grid);
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

std::vector<double> cls_like_input(const PatchGrid& grid) { return attention_mean(grid); }

}  // namespace dvk::synth
