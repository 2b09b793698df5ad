#pragma once

#include <vector>

#include "dvk/patch_grid.hpp"

namespace dvk::synth {

inline constexpr double kGemPower = 3.0;
inline constexpr double kGemFloor = 1e-6;

/// Generalized-mean pooling per dimension; inputs are clamped below at
/// kGemFloor so the cube root stays real.
std::vector<double> gem_pool(const PatchGrid& grid, double p = kGemPower);

/// Attention-weighted mean embedding; plain mean when the grid has no
/// attention plane or the weights sum to zero.
std::vector<double> attention_mean(const PatchGrid& grid);

/// Flat-feature baseline: GeM pooling followed by the attention-weighted mean
/// (length 2 * dim).
std::vector<double> pooled_baseline_input(const PatchGrid& grid);

/// Global-token analog on its own (length dim).
std::vector<double> cls_like_input(const PatchGrid& grid);

}  // namespace dvk::synth
