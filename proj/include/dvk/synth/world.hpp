#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvk/demo_dataset.hpp"
#include "dvk/patch_grid.hpp"

namespace dvk::synth {

/// Index into WorldSpec::prototypes.
using PrototypeId = std::uint32_t;
inline constexpr PrototypeId kBackground = 0;
inline constexpr PrototypeId kGripper = 1;
inline constexpr PrototypeId kHandle = 2;
/// body_(k+1); k is zero-based.
constexpr PrototypeId body_part(std::uint32_t k) { return 3 + k; }

inline constexpr std::uint32_t kMaxSteps = 30;
inline constexpr double kStepSize = 0.08;
inline constexpr double kGraspRadius = 1.5;   // cell widths
inline constexpr double kExpertGraspRadius = 1.0;
inline constexpr double kExpertJitter = 0.05;

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct AttentionLevels {
  double background = 0.05;
  double object = 0.6;
  double gripper = 0.8;
};

struct WorldOptions {
  std::uint64_t seed = 0;
  std::uint32_t rows = 14;
  std::uint32_t cols = 14;
  std::uint32_t dim = 32;
  std::uint32_t body_parts = 10;
  double sigma = 0.05;
  /// Norm of the per-cell clutter texture added to background cells.
  double texture = 0.9;
  AttentionLevels attention;
};

/// Part prototypes and the background texture that stand in for a frozen
/// encoder's part-semantic embeddings.
struct WorldSpec {
  WorldOptions options;
  std::vector<std::vector<double>> prototypes;  // unit vectors
  std::vector<std::vector<double>> background;  // per cell, unit vectors

  std::uint32_t rows() const { return options.rows; }
  std::uint32_t cols() const { return options.cols; }
  std::uint32_t dim() const { return options.dim; }
  std::uint64_t seed() const { return options.seed; }
  double max_prototype_cosine() const;
  /// Noise-free embedding of a cell of the given role.
  const std::vector<double>& clean_embedding(PrototypeId role, Cell cell) const;
};

WorldSpec make_world(std::uint64_t seed);
WorldSpec make_world(const WorldOptions& options);

struct Part {
  PrototypeId role = kBackground;
  std::vector<Cell> cells;
};

struct Pose {
  int row_offset = 0;
  int col_offset = 0;
  int quarter_turns = 0;
};

struct ObjectInstance {
  std::string class_id;
  std::vector<Part> parts;
  Cell handle_cell;
  Pose pose;
  std::uint64_t appearance_seed = 0;

  std::optional<PrototypeId> role_at(Cell cell) const;
  std::vector<Cell> cells_of(PrototypeId role) const;
  /// Part roles in part order, e.g. {body_1, body_2, handle}.
  std::vector<PrototypeId> role_multiset() const;
};

/// Places a seeded variation of a catalog object: per-class shape jitter, one
/// of four rotations and a uniform offset on the table.
ObjectInstance spawn_object(const WorldSpec& world, const std::string& class_id,
                            std::uint64_t variation_seed);

struct EnvState {
  double u = 0.5;  // gripper column coordinate in [0, 1]
  double v = 0.0;  // gripper row coordinate in [0, 1]
  bool grasped = false;
  ObjectInstance object;
  std::uint32_t t = 0;
};

struct Action {
  double dx = 0.0;
  double dy = 0.0;
  double g = 0.0;
};

struct StepResult {
  EnvState state;
  bool done = false;
  bool success = false;
};

EnvState reset(const WorldSpec& world, ObjectInstance object, std::uint64_t episode_seed);

Cell gripper_cell(const WorldSpec& world, const EnvState& state);
/// Euclidean gripper-to-handle-centre distance in cell widths.
double handle_distance(const WorldSpec& world, const EnvState& state);
std::vector<double> proprio(const EnvState& state);
std::vector<double> to_vector(const Action& action);

PatchGrid render(const WorldSpec& world, const EnvState& state);
StepResult step(const WorldSpec& world, const EnvState& state, const Action& action);
Action expert_action(const WorldSpec& world, const EnvState& state);

using Controller = std::function<Action(const PatchGrid& frame, const EnvState& state)>;

struct EpisodeResult {
  bool success = false;
  std::uint32_t steps = 0;
};

EpisodeResult run_episode(const WorldSpec& world, const ObjectInstance& object,
                          std::uint64_t episode_seed, const Controller& controller);

/// Expert demonstrations, n per object, object-major. Writes the dataset to
/// `out_dir` when it is non-empty; frames stay resident either way.
DemoDataset collect_demos(const WorldSpec& world, std::span<const std::string> objects,
                          std::uint32_t n_per_object, std::uint64_t seed,
                          const std::filesystem::path& out_dir = {});

}  // namespace dvk::synth
