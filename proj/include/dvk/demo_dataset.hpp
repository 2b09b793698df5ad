#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dvk/patch_grid.hpp"

namespace dvk {

struct DemoStep {
  /// Path of the frame file relative to the dataset root, as in index.jsonl.
  std::string frame_ref;
  /// Resident copy of the frame; null when the frame is loaded from disk on
  /// demand.
  std::shared_ptr<const PatchGrid> frame;
  std::vector<double> proprio;
  std::vector<double> action;
};

struct Demonstration {
  std::vector<DemoStep> steps;
};

/// Expert demonstrations: time-ordered (frame, proprioceptive state, action)
/// triples grouped by trajectory.
struct DemoDataset {
  std::filesystem::path root;
  std::vector<Demonstration> demos;
  std::size_t proprio_dim = 0;
  std::size_t action_dim = 0;

  std::size_t step_count() const;
  std::shared_ptr<const PatchGrid> load_frame(const DemoStep& step) const;
};

/// Reads and validates `dir/index.jsonl`. Every referenced frame is parsed
/// once for validation; unless `keep_frames` is set, frames are dropped again
/// and reloaded lazily through load_frame().
DemoDataset read_demos(const std::filesystem::path& dir, bool keep_frames = false);

/// Writes frames and index.jsonl under `dir`. Every step must hold a resident
/// frame.
void write_demos(const DemoDataset& dataset, const std::filesystem::path& dir);

}  // namespace dvk
