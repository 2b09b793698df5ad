#include "dvk/synth/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dvk/error.hpp"
#include "dvk/file_util.hpp"
#include "dvk/random.hpp"
#include "dvk/synth/catalog.hpp"

namespace dvk::synth {
namespace {

constexpr int kTopMargin = 3;  // object rows start below the gripper's start band
constexpr int kMaxRejections = 10000;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(Rng& rng, std::uint32_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

// Per-cell clutter texture in the subspace orthogonal to every prototype.
std::vector<std::vector<double>> make_background(const WorldOptions& o,
                                                 const std::vector<std::vector<double>>& protos,
                                                 Rng& rng) {
  std::vector<std::vector<double>> basis;
  for (std::vector<double> b : protos) {
    for (const auto& q : basis) {
      const double proj = dot(b, q);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= proj * q[i];
    }
    if (std::sqrt(dot(b, b)) < 1e-9) continue;
    normalize(b);
    basis.push_back(std::move(b));
  }
  const std::uint32_t free_dims = o.dim > basis.size() ? o.dim - std::uint32_t(basis.size()) : 0;
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < free_dims) {
    std::vector<double> d = gaussian_vector(rng, o.dim);
    for (const auto& b : basis) {
      const double proj = dot(d, b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= proj * b[i];
    }
    if (std::sqrt(dot(d, d)) < 1e-6) continue;
    normalize(d);
    basis.push_back(d);
    dirs.push_back(std::move(d));
  }

  std::vector<std::vector<double>> background;
  background.reserve(std::size_t{o.rows} * o.cols);
  for (std::uint32_t cell = 0; cell < o.rows * o.cols; ++cell) {
    std::vector<double> v = protos[kBackground];
    if (!dirs.empty()) {
      std::vector<double> coeff = gaussian_vector(rng, std::uint32_t(dirs.size()));
      normalize(coeff);
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.texture * coeff[k] * dirs[k][i];
      }
    }
    normalize(v);
    background.push_back(std::move(v));
  }
  return background;
}

Cell rotate(Cell c, int quarter_turns) {
  for (int k = 0; k < quarter_turns; ++k) c = Cell{c.col, -c.row};
  return c;
}

}  // namespace

double WorldSpec::max_prototype_cosine() const {
  double best = -1.0;
  for (std::size_t i = 0; i < prototypes.size(); ++i) {
    for (std::size_t j = i + 1; j < prototypes.size(); ++j) {
      best = std::max(best, dot(prototypes[i], prototypes[j]));
    }
  }
  return best;
}

const std::vector<double>& WorldSpec::clean_embedding(PrototypeId role, Cell cell) const {
  if (role == kBackground) {
    return background[static_cast<std::size_t>(cell.row) * options.cols +
                      static_cast<std::size_t>(cell.col)];
  }
  return prototypes.at(role);
}

WorldSpec make_world(std::uint64_t seed) {
  WorldOptions o;
  o.seed = seed;
  return make_world(o);
}

WorldSpec make_world(const WorldOptions& options) {
  if (options.rows == 0 || options.cols == 0 || options.dim == 0) {
    throw Error(ErrorCode::BadConfig, "world dimensions must be positive");
  }
  if (!(options.sigma >= 0.0) || !(options.texture >= 0.0)) {
    throw Error(ErrorCode::BadConfig, "sigma and texture must be non-negative");
  }
  WorldSpec world;
  world.options = options;
  Rng rng(mix_seed({options.seed, 0x776f726c64ULL}));

  const std::size_t count = 3 + options.body_parts;
  int rejections = 0;
  while (world.prototypes.size() < count) {
    std::vector<double> candidate = gaussian_vector(rng, options.dim);
    normalize(candidate);
    bool ok = true;
    for (const auto& p : world.prototypes) {
      if (dot(candidate, p) > 0.2) {
        ok = false;
        break;
      }
    }
    if (ok) {
      world.prototypes.push_back(std::move(candidate));
    } else if (++rejections >= kMaxRejections) {
      throw Error(ErrorCode::PrototypeSamplingFailed,
                  "could not place " + std::to_string(count) + " prototypes in dimension " +
                      std::to_string(options.dim));
    }
  }
  world.background = make_background(options, world.prototypes, rng);
  return world;
}

std::optional<PrototypeId> ObjectInstance::role_at(Cell cell) const {
  for (const Part& p : parts) {
    if (std::find(p.cells.begin(), p.cells.end(), cell) != p.cells.end()) return p.role;
  }
  return std::nullopt;
}

std::vector<Cell> ObjectInstance::cells_of(PrototypeId role) const {
  std::vector<Cell> out;
  for (const Part& p : parts) {
    if (p.role == role) out.insert(out.end(), p.cells.begin(), p.cells.end());
  }
  return out;
}

std::vector<PrototypeId> ObjectInstance::role_multiset() const {
  std::vector<PrototypeId> roles;
  for (const Part& p : parts) roles.push_back(p.role);
  return roles;
}

ObjectInstance spawn_object(const WorldSpec& world, const std::string& class_id,
                            std::uint64_t variation_seed) {
  const ObjectTemplate& tmpl = find_template(class_id);
  const std::uint64_t class_hash = stable_hash(class_id);
  Rng rng(mix_seed({world.seed(), class_hash, variation_seed}));
  LocalShape shape = tmpl.build(rng);

  ObjectInstance obj;
  obj.class_id = class_id;
  obj.pose.quarter_turns = std::uniform_int_distribution<int>(0, 3)(rng);

  int min_r = 1 << 20, min_c = 1 << 20, max_r = -(1 << 20), max_c = -(1 << 20);
  for (Part& p : shape.parts) {
    for (Cell& c : p.cells) {
      c = rotate(c, obj.pose.quarter_turns);
      min_r = std::min(min_r, c.row);
      min_c = std::min(min_c, c.col);
      max_r = std::max(max_r, c.row);
      max_c = std::max(max_c, c.col);
    }
  }
  const int height = max_r - min_r + 1;
  const int width = max_c - min_c + 1;
  const int avail_rows = static_cast<int>(world.rows()) - kTopMargin;
  const int avail_cols = static_cast<int>(world.cols());
  if (height > avail_rows || width > avail_cols) {
    throw Error(ErrorCode::DoesNotFit, class_id + " does not fit the grid");
  }
  obj.pose.row_offset =
      kTopMargin + std::uniform_int_distribution<int>(0, avail_rows - height)(rng);
  obj.pose.col_offset = std::uniform_int_distribution<int>(0, avail_cols - width)(rng);

  auto place = [&](Cell c) {
    return Cell{c.row - min_r + obj.pose.row_offset, c.col - min_c + obj.pose.col_offset};
  };
  for (Part& p : shape.parts) {
    for (Cell& c : p.cells) c = place(c);
  }
  obj.handle_cell = place(rotate(shape.handle, obj.pose.quarter_turns));
  obj.parts = std::move(shape.parts);
  obj.appearance_seed = mix_seed({class_hash, variation_seed, 0x61707065ULL});
  return obj;
}

EnvState reset(const WorldSpec& world, ObjectInstance object, std::uint64_t episode_seed) {
  Rng rng(mix_seed({world.seed(), episode_seed, 0x7265736574ULL}));
  EnvState s;
  s.u = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
  s.v = std::uniform_real_distribution<double>(0.02, 0.15)(rng);
  s.object = std::move(object);
  return s;
}

Cell gripper_cell(const WorldSpec& world, const EnvState& state) {
  const int col = std::min(static_cast<int>(world.cols()) - 1,
                           static_cast<int>(std::floor(state.u * world.cols())));
  const int row = std::min(static_cast<int>(world.rows()) - 1,
                           static_cast<int>(std::floor(state.v * world.rows())));
  return Cell{row, col};
}

double handle_distance(const WorldSpec& world, const EnvState& state) {
  const double x = state.u * world.cols();
  const double y = state.v * world.rows();
  const Cell h = state.object.handle_cell;
  return std::hypot(x - (h.col + 0.5), y - (h.row + 0.5));
}

std::vector<double> proprio(const EnvState& state) {
  return {state.u, state.v, state.grasped ? 1.0 : 0.0};
}

std::vector<double> to_vector(const Action& action) { return {action.dx, action.dy, action.g}; }

PatchGrid render(const WorldSpec& world, const EnvState& state) {
  const std::uint32_t rows = world.rows(), cols = world.cols(), dim = world.dim();
  PatchGrid g;
  g.rows = rows;
  g.cols = cols;
  g.dim = dim;
  g.embeddings.resize(std::size_t{rows} * cols * dim);
  std::vector<float> attention(std::size_t{rows} * cols);

  const double sigma = world.options.sigma;
  const double comp_sigma = sigma / std::sqrt(double(dim));
  const AttentionLevels& levels = world.options.attention;
  Rng rng(mix_seed({world.seed(), state.object.appearance_seed, state.t, 0x72656e646572ULL}));
  std::normal_distribution<double> noise(0.0, 1.0);
  const Cell gripper = gripper_cell(world, state);

  std::vector<double> e(dim);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      const Cell cell{static_cast<int>(r), static_cast<int>(c)};
      PrototypeId role = kBackground;
      double level = levels.background;
      if (cell == gripper) {
        role = kGripper;
        level = levels.gripper;
      } else if (auto obj_role = state.object.role_at(cell)) {
        role = *obj_role;
        level = levels.object;
      }
      const std::vector<double>& clean = world.clean_embedding(role, cell);
      const std::size_t idx = g.cell_index(r, c);
      float* out = g.embeddings.data() + idx * dim;
      if (sigma == 0.0) {
        for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(clean[i]);
        attention[idx] = static_cast<float>(level);
        continue;
      }
      double norm2 = 0.0;
      for (std::uint32_t i = 0; i < dim; ++i) {
        e[i] = clean[i] + comp_sigma * noise(rng);
        norm2 += e[i] * e[i];
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(e[i] * inv);
      const double a = level + 0.25 * sigma * noise(rng);
      attention[idx] = static_cast<float>(std::clamp(a, 0.0, 1.0));
    }
  }
  g.attention = std::move(attention);
  char id[64];
  std::snprintf(id, sizeof id, "%016llx_t%02u",
                static_cast<unsigned long long>(state.object.appearance_seed), state.t);
  g.frame_id = id;
  return g;
}

StepResult step(const WorldSpec& world, const EnvState& state, const Action& action) {
  StepResult r;
  r.state = state;
  const double dx = std::clamp(action.dx, -1.0, 1.0);
  const double dy = std::clamp(action.dy, -1.0, 1.0);
  r.state.u = std::clamp(state.u + kStepSize * dx, 0.0, 1.0);
  r.state.v = std::clamp(state.v + kStepSize * dy, 0.0, 1.0);
  r.state.t = state.t + 1;
  if (action.g > 0.5) {
    r.done = true;
    r.success = handle_distance(world, r.state) < kGraspRadius;
    r.state.grasped = r.success;
  } else if (r.state.t >= kMaxSteps) {
    r.done = true;
  }
  return r;
}

Action expert_action(const WorldSpec& world, const EnvState& state) {
  const Cell h = state.object.handle_cell;
  const double du = (h.col + 0.5) / world.cols() - state.u;
  const double dv = (h.row + 0.5) / world.rows() - state.v;
  Rng rng(mix_seed({world.seed(), state.object.appearance_seed, state.t, 0x657870ULL}));
  std::normal_distribution<double> jitter(0.0, kExpertJitter);
  Action a;
  a.dx = std::clamp(du / kStepSize + jitter(rng), -1.0, 1.0);
  a.dy = std::clamp(dv / kStepSize + jitter(rng), -1.0, 1.0);
  a.g = handle_distance(world, state) < kExpertGraspRadius ? 1.0 : 0.0;
  return a;
}

EpisodeResult run_episode(const WorldSpec& world, const ObjectInstance& object,
                          std::uint64_t episode_seed, const Controller& controller) {
  EnvState state = reset(world, object, episode_seed);
  EpisodeResult result;
  while (true) {
    const PatchGrid frame = render(world, state);
    const StepResult r = step(world, state, controller(frame, state));
    state = r.state;
    if (r.done) {
      result.success = r.success;
      result.steps = state.t;
      return result;
    }
  }
}

DemoDataset collect_demos(const WorldSpec& world, std::span<const std::string> objects,
                          std::uint32_t n_per_object, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
  if (n_per_object == 0) throw Error(ErrorCode::InvalidArgument, "n_per_object must be >= 1");
  DemoDataset ds;
  ds.proprio_dim = 3;
  ds.action_dim = 3;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    for (std::uint32_t i = 0; i < n_per_object; ++i) {
      const std::size_t d = ds.demos.size();
      const ObjectInstance obj =
          spawn_object(world, objects[o], mix_seed({seed, o, i, 0x64656d6fULL}));
      EnvState state = reset(world, obj, mix_seed({seed, o, i, 0x7374617274ULL}));
      Demonstration demo;
      while (true) {
        DemoStep s;
        char ref[64];
        std::snprintf(ref, sizeof ref, "frames/d%04zu_t%02u.dvkemb", d, state.t);
        s.frame_ref = ref;
        auto frame = std::make_shared<PatchGrid>(render(world, state));
        frame->frame_id = std::filesystem::path(ref).stem().string();
        s.frame = std::move(frame);
        const Action a = expert_action(world, state);
        s.proprio = proprio(state);
        s.action = to_vector(a);
        demo.steps.push_back(std::move(s));
        const StepResult r = step(world, state, a);
        state = r.state;
        if (r.done) break;
      }
      ds.demos.push_back(std::move(demo));
    }
  }
  if (!out_dir.empty()) {
    StagingDir staging(out_dir);
    write_demos(ds, staging.path());
    staging.commit();
    ds.root = out_dir;
  }
  return ds;
}

}  // namespace dvk::synth
