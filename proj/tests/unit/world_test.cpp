#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dvk/file_util.hpp"
#include "dvk/keypoints.hpp"
#include "dvk/synth/catalog.hpp"
#include "dvk/synth/world.hpp"
#include "test_support.hpp"

using namespace dvk;
using namespace dvk::synth;
using dvk::testing::error_of;
using dvk::testing::TempDir;

namespace {

double cos_to(std::span<const float> a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += double(a[i]) * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

std::vector<std::string> all_classes() {
  std::vector<std::string> ids;
  for (const auto& t : catalog()) ids.push_back(t.id);
  return ids;
}

EnvState state_at(const WorldSpec& w, const ObjectInstance& obj, Cell cell) {
  EnvState s;
  s.object = obj;
  s.u = (cell.col + 0.5) / w.cols();
  s.v = (cell.row + 0.5) / w.rows();
  return s;
}

}  // namespace

TEST(World, SameSeedSamePrototypes) {
  const WorldSpec a = make_world(5), b = make_world(5);
  EXPECT_EQ(a.prototypes, b.prototypes);
  EXPECT_EQ(a.background, b.background);
}

TEST(World, DifferentSeedsDiffer) {
  EXPECT_NE(make_world(1).prototypes, make_world(2).prototypes);
}

TEST(World, PrototypesAreUnitAndNearlyOrthogonal) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const WorldSpec w = make_world(seed);
    EXPECT_EQ(w.prototypes.size(), 13u);
    EXPECT_LE(w.max_prototype_cosine(), 0.2);
    for (const auto& p : w.prototypes) {
      double n = 0;
      for (double x : p) n += x * x;
      EXPECT_NEAR(n, 1.0, 1e-12);
    }
  }
}

TEST(World, BackgroundCellsStayAwayFromParts) {
  const WorldSpec w = make_world(3);
  for (const auto& cell : w.background) {
    for (std::size_t p = 1; p < w.prototypes.size(); ++p) {
      double dot = 0;
      for (std::size_t i = 0; i < cell.size(); ++i) dot += cell[i] * w.prototypes[p][i];
      EXPECT_LE(dot, 0.2 + 1e-12);
    }
  }
}

TEST(World, ImpossibleConstraintFails) {
  WorldOptions o;
  o.dim = 2;
  EXPECT_EQ(error_of([&] { make_world(o); }), ErrorCode::PrototypeSamplingFailed);
  o = WorldOptions{};
  o.sigma = -1;
  EXPECT_EQ(error_of([&] { make_world(o); }), ErrorCode::BadConfig);
}

TEST(Spawn, SameClassAndSeedSameInstance) {
  const WorldSpec w = make_world(0);
  for (const auto& id : all_classes()) {
    const ObjectInstance a = spawn_object(w, id, 77), b = spawn_object(w, id, 77);
    EXPECT_EQ(a.handle_cell, b.handle_cell);
    EXPECT_EQ(a.appearance_seed, b.appearance_seed);
    ASSERT_EQ(a.parts.size(), b.parts.size());
    for (std::size_t i = 0; i < a.parts.size(); ++i) EXPECT_EQ(a.parts[i].cells, b.parts[i].cells);
  }
}

TEST(Spawn, IntraFamilyKeepsRolesAndVariesCells) {
  const WorldSpec w = make_world(0);
  for (const auto& id : intra_objects()) {
    const ObjectInstance a = spawn_object(w, id, 1);
    bool any_diff = false;
    for (std::uint64_t s = 2; s < 12; ++s) {
      const ObjectInstance b = spawn_object(w, id, s);
      EXPECT_EQ(a.role_multiset(), b.role_multiset());
      for (std::size_t i = 0; i < a.parts.size(); ++i) any_diff |= a.parts[i].cells != b.parts[i].cells;
    }
    EXPECT_TRUE(any_diff) << id;
  }
}

TEST(Spawn, HeldOutCatalogIsLargeAndDistinct) {
  const auto held_out = inter_test_objects();
  EXPECT_GE(held_out.size(), 6u);
  for (const auto& id : held_out) {
    for (const auto& train_id : inter_train_objects()) EXPECT_NE(id, train_id);
  }
  // Morphologies differ: unrotated shapes from the same seed are pairwise different.
  std::set<std::vector<std::pair<PrototypeId, std::vector<Cell>>>> shapes;
  for (const auto& id : held_out) {
    dvk::Rng rng(1);
    const LocalShape s = find_template(id).build(rng);
    std::vector<std::pair<PrototypeId, std::vector<Cell>>> key;
    for (const auto& p : s.parts) key.emplace_back(p.role, p.cells);
    shapes.insert(key);
  }
  EXPECT_EQ(shapes.size(), held_out.size());
}

TEST(Spawn, InstancesAreValid) {
  const WorldSpec w = make_world(4);
  for (const auto& id : all_classes()) {
    std::set<int> turns;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const ObjectInstance obj = spawn_object(w, id, s);
      turns.insert(obj.pose.quarter_turns);
      std::set<Cell> seen;
      std::size_t handle_parts = 0;
      for (const auto& part : obj.parts) {
        handle_parts += part.role == kHandle;
        EXPECT_LT(part.role, w.prototypes.size());
        EXPECT_NE(part.role, kBackground);
        EXPECT_NE(part.role, kGripper);
        for (const Cell& c : part.cells) {
          EXPECT_GE(c.row, 3);
          EXPECT_LT(c.row, int(w.rows()));
          EXPECT_GE(c.col, 0);
          EXPECT_LT(c.col, int(w.cols()));
          EXPECT_TRUE(seen.insert(c).second) << id << " overlaps at " << c.row << "," << c.col;
        }
      }
      EXPECT_EQ(handle_parts, 1u) << id;
      EXPECT_EQ(obj.role_at(obj.handle_cell), kHandle) << id;
    }
    EXPECT_EQ(turns.size(), 4u) << id;
  }
}

TEST(Spawn, UnknownClass) {
  const WorldSpec w = make_world(0);
  EXPECT_EQ(error_of([&] { spawn_object(w, "teapot", 1); }), ErrorCode::UnknownClass);
}

TEST(Spawn, TooLargeForGrid) {
  WorldOptions o;
  o.rows = 6;
  o.cols = 6;
  const WorldSpec w = make_world(o);
  EXPECT_EQ(error_of([&] { spawn_object(w, "mug_tall", 1); }), ErrorCode::DoesNotFit);
}

TEST(Render, NoiselessHandleEqualsPrototype) {
  WorldOptions o;
  o.sigma = 0.0;
  const WorldSpec w = make_world(o);
  const ObjectInstance obj = spawn_object(w, "mug", 3);
  const EnvState s = reset(w, obj, 1);
  const PatchGrid g = render(w, s);
  for (const Cell& c : obj.cells_of(kHandle)) {
    const auto patch = g.patch(std::uint32_t(c.row), std::uint32_t(c.col));
    for (std::size_t i = 0; i < patch.size(); ++i) {
      EXPECT_EQ(patch[i], static_cast<float>(w.prototypes[kHandle][i]));
    }
  }
}

TEST(Render, GripperOverridesCell) {
  const WorldSpec w = make_world(0);
  const ObjectInstance obj = spawn_object(w, "pan", 2);
  EnvState s = reset(w, obj, 5);
  const Cell gc = gripper_cell(w, s);
  ASSERT_FALSE(obj.role_at(gc).has_value());
  PatchGrid g = render(w, s);
  EXPECT_GT(cos_to(g.patch(std::uint32_t(gc.row), std::uint32_t(gc.col)), w.prototypes[kGripper]), 0.95);
  EXPECT_NEAR((*g.attention)[g.cell_index(gc.row, gc.col)], 0.8, 0.1);

  // Over the handle the gripper still wins.
  s = state_at(w, obj, obj.handle_cell);
  g = render(w, s);
  const auto cell = g.patch(std::uint32_t(obj.handle_cell.row), std::uint32_t(obj.handle_cell.col));
  EXPECT_GT(cos_to(cell, w.prototypes[kGripper]), 0.95);
}

TEST(Render, NoisyCellsStayCloseToTheirPrototype) {
  const WorldSpec w = make_world(9);
  double worst = 1.0;
  const auto classes = all_classes();
  for (int i = 0; i < 10000; ++i) {
    const ObjectInstance obj = spawn_object(w, classes[i % classes.size()], std::uint64_t(i));
    EnvState s = reset(w, obj, std::uint64_t(i) * 7 + 1);
    s.t = std::uint32_t(i % 30);
    const PatchGrid g = render(w, s);
    const Cell gc = gripper_cell(w, s);
    for (std::uint32_t r = 0; r < g.rows; ++r) {
      for (std::uint32_t c = 0; c < g.cols; ++c) {
        const Cell cell{int(r), int(c)};
        PrototypeId role = kBackground;
        if (cell == gc) {
          role = kGripper;
        } else if (auto o = obj.role_at(cell)) {
          role = *o;
        }
        worst = std::min(worst, cos_to(g.patch(r, c), w.clean_embedding(role, cell)));
      }
    }
  }
  EXPECT_GT(worst, 0.95);
}

TEST(Render, DeterministicAndAttentionBounded) {
  const WorldSpec w = make_world(2);
  const EnvState s = reset(w, spawn_object(w, "kettle", 4), 8);
  const PatchGrid a = render(w, s), b = render(w, s);
  EXPECT_EQ(a, b);
  for (float x : *a.attention) {
    EXPECT_GE(x, 0.0f);
    EXPECT_LE(x, 1.0f);
  }
  EXPECT_NO_THROW(validate(a));
}

TEST(Step, GraspNextToHandleSucceeds) {
  const WorldSpec w = make_world(0);
  const ObjectInstance obj = spawn_object(w, "mug", 1);
  const Cell h = obj.handle_cell;
  const EnvState s = state_at(w, obj, Cell{h.row, h.col - 1 >= 0 ? h.col - 1 : h.col + 1});
  const StepResult r = step(w, s, {0, 0, 1});
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.state.grasped);
}

TEST(Step, GraspFarFromHandleFails) {
  const WorldSpec w = make_world(0);
  const ObjectInstance obj = spawn_object(w, "mug", 1);
  EnvState s = state_at(w, obj, obj.handle_cell);
  s.u = s.u > 0.5 ? 0.0 : 1.0;
  const StepResult r = step(w, s, {0, 0, 0.9});
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.success);
}

TEST(Step, TimeLimitEndsEpisode) {
  const WorldSpec w = make_world(0);
  EnvState s = reset(w, spawn_object(w, "pan", 1), 1);
  std::uint32_t steps = 0;
  while (true) {
    const StepResult r = step(w, s, {0.3, -0.2, 0.5});
    ++steps;
    s = r.state;
    if (r.done) {
      EXPECT_FALSE(r.success);
      break;
    }
  }
  EXPECT_EQ(steps, kMaxSteps);
  EXPECT_EQ(s.t, kMaxSteps);
}

TEST(Step, MovesByStepSizeAndClamps) {
  const WorldSpec w = make_world(0);
  EnvState s = reset(w, spawn_object(w, "pan", 1), 1);
  s.u = 0.5;
  s.v = 0.04;
  const StepResult r = step(w, s, {1.0, -1.0, 0.0});
  EXPECT_DOUBLE_EQ(r.state.u, 0.5 + kStepSize);
  EXPECT_EQ(r.state.v, 0.0);
  const StepResult big = step(w, s, {7.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(big.state.u, 0.5 + kStepSize);
}

TEST(Expert, AtHandleCentreGrasps) {
  const WorldSpec w = make_world(0);
  const ObjectInstance obj = spawn_object(w, "screwdriver", 5);
  const Action a = expert_action(w, state_at(w, obj, obj.handle_cell));
  EXPECT_NEAR(a.dx, 0.0, 0.25);
  EXPECT_NEAR(a.dy, 0.0, 0.25);
  EXPECT_EQ(a.g, 1.0);
}

TEST(Expert, SucceedsOnEveryCatalogObject) {
  const WorldSpec w = make_world(1);
  const Controller expert = [&](const PatchGrid&, const EnvState& s) { return expert_action(w, s); };
  for (const auto& id : all_classes()) {
    int wins = 0;
    for (int e = 0; e < 500; ++e) {
      const ObjectInstance obj = spawn_object(w, id, std::uint64_t(e));
      wins += run_episode(w, obj, std::uint64_t(e) + 1000, expert).success;
    }
    EXPECT_GE(wins, 490) << id;
  }
}

TEST(Expert, WorstCasePathFitsTimeLimit) {
  const WorldSpec w = make_world(2);
  ObjectInstance obj = spawn_object(w, "mug", 1);
  for (int row = 3; row < int(w.rows()); ++row) {
    for (int col = 0; col < int(w.cols()); ++col) {
      obj.handle_cell = {row, col};
      for (double u : {0.1, 0.9}) {
        for (double v : {0.02, 0.15}) {
          EnvState s;
          s.object = obj;
          s.u = u;
          s.v = v;
          StepResult r;
          do {
            r = step(w, s, expert_action(w, s));
            s = r.state;
          } while (!r.done);
          EXPECT_TRUE(r.success) << row << "," << col;
          EXPECT_LT(s.t, kMaxSteps);
        }
      }
    }
  }
}

TEST(Episodes, RelabelingBodyPartsKeepsOutcome) {
  const WorldSpec w = make_world(3);
  // A frame-driven controller: move toward the cell most similar to the
  // handle prototype, grasp when on it.
  const Controller seek = [&](const PatchGrid& frame, const EnvState& s) {
    ReferenceSet refs;
    refs.dim = w.dim();
    for (double x : w.prototypes[kHandle]) refs.centroids.push_back(float(x));
    refs.votes = {1};
    refs.config = {1, 1, 0.2f, 0};
    const Keypoint k = extract_keypoints(frame, refs).points[0];
    const double du = k.u - s.u, dv = k.v - s.v;
    return Action{std::clamp(du / kStepSize, -1.0, 1.0), std::clamp(dv / kStepSize, -1.0, 1.0),
                  std::hypot(du * w.cols(), dv * w.rows()) < 0.6 ? 1.0 : 0.0};
  };
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ObjectInstance obj = spawn_object(w, "kettle", seed);
    ObjectInstance relabeled = obj;
    for (auto& part : relabeled.parts) {
      if (part.role >= body_part(0)) part.role = body_part((part.role - body_part(0) + 3) % 10);
    }
    const EpisodeResult a = run_episode(w, obj, seed, seek);
    const EpisodeResult b = run_episode(w, relabeled, seed, seek);
    EXPECT_EQ(a.success, b.success);
    EXPECT_EQ(a.steps, b.steps);
  }
}

TEST(CollectDemos, SingleDemo) {
  const WorldSpec w = make_world(0);
  const std::vector<std::string> objs{"mug"};
  const DemoDataset ds = collect_demos(w, objs, 1, 4);
  ASSERT_EQ(ds.demos.size(), 1u);
  EXPECT_GE(ds.demos[0].steps.size(), 1u);
  EXPECT_LE(ds.demos[0].steps.size(), kMaxSteps);
  EXPECT_EQ(ds.proprio_dim, 3u);
  EXPECT_EQ(ds.action_dim, 3u);
  EXPECT_EQ(ds.demos[0].steps.back().action[2], 1.0);
}

TEST(CollectDemos, SixtyPerObjectAcrossThreeObjects) {
  const WorldSpec w = make_world(0);
  const auto objs = inter_train_objects();
  TempDir dir;
  const DemoDataset ds = collect_demos(w, objs, 60, 1, dir / "demos");
  EXPECT_EQ(ds.demos.size(), 180u);
  const DemoDataset back = read_demos(dir / "demos");
  EXPECT_EQ(back.demos.size(), 180u);
  EXPECT_EQ(back.step_count(), ds.step_count());
}

TEST(CollectDemos, RerunIsByteIdentical) {
  const WorldSpec w = make_world(6);
  const std::vector<std::string> objs{"pan", "toy"};
  TempDir dir;
  collect_demos(w, objs, 5, 2, dir / "a");
  collect_demos(w, objs, 5, 2, dir / "b");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir / "a");
    EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(dir / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
}
