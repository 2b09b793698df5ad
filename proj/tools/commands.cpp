#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dvk/config_json.hpp"
#include "dvk/error.hpp"
#include "dvk/file_util.hpp"
#include "dvk/keypoints.hpp"
#include "dvk/reference_init.hpp"
#include "dvk/synth/bench.hpp"
#include "dvk/synth/catalog.hpp"
#include "dvk/synth/features.hpp"
#include "dvk/synth/world.hpp"
#include "dvk/train.hpp"

namespace dvk::cli {
namespace fs = std::filesystem;
using namespace dvk::synth;

namespace {

struct WorldArgs {
  std::uint64_t seed = 0;
  double sigma = 0.05;
};

struct GenDemosArgs {
  WorldArgs world;
  std::string objects = "mug,pan,screwdriver";
  std::uint32_t n = 60;
  std::uint64_t seed = 0;
  std::string out;
};

struct InitRefsArgs {
  std::string demos;
  InitConfig init;
  std::string out;
};

struct ExtractArgs {
  std::string refs;
  std::vector<std::string> grids;
  bool overlay = false;
  std::string out;
};

struct TrainArgs {
  std::string demos;
  std::string refs;
  std::string method = "dvk";
  TrainConfig train;
  std::string hidden = "128,128";
  std::string activation = "relu";
  std::string optimizer = "adam";
  std::string out;
};

struct EvalArgs {
  WorldArgs world;
  std::string policy;
  std::string refs;
  std::string method = "dvk";
  std::string objects;
  std::uint32_t episodes = 50;
  std::uint64_t seed = 0;
  std::string out;
};

struct BenchArgs {
  WorldArgs world;
  std::string suite = "inter";
  std::string methods = "dvk,pooled";
  std::uint32_t seeds = 3;
  std::uint32_t episodes = 50;
  std::uint32_t demos = 60;
  std::uint64_t seed = 0;
  InitConfig init;
  TrainConfig train;
  std::string hidden = "128,128";
  std::string activation = "relu";
  std::string optimizer = "adam";
  bool rollout_selection = false;
  std::uint32_t selection_episodes = 10;
  std::string out;
};

struct RerunArgs {
  std::string run;
  std::string out;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> dims;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0) {
      throw Error(ErrorCode::BadConfig, "bad hidden layer width '" + item + "'");
    }
    dims.push_back(v);
  }
  return dims;
}

WorldSpec build_world(const WorldArgs& a) {
  WorldOptions o;
  o.seed = a.seed;
  o.sigma = a.sigma;
  return make_world(o);
}

void add_world_options(CLI::App* sub, WorldArgs& a) {
  sub->add_option("--world-seed", a.seed, "Seed of the synthetic world's part prototypes");
  sub->add_option("--sigma", a.sigma, "Appearance noise of rendered embeddings")
      ->check(CLI::NonNegativeNumber);
}

void add_train_options(CLI::App* sub, TrainConfig& t, std::string& hidden,
                       std::string& activation, std::string& optimizer,
                       const std::string& seed_flag) {
  sub->add_option("--epochs", t.epochs, "Training epochs");
  sub->add_option("--batch", t.batch_size, "Minibatch size");
  sub->add_option("--lr", t.learning_rate, "Learning rate");
  sub->add_option(seed_flag, t.seed, "Seed of initialization and shuffling");
  sub->add_option("--eval-every", t.eval_every, "Checkpoint candidate interval in epochs");
  sub->add_option("--hidden", hidden, "Hidden layer widths, comma separated");
  sub->add_option("--activation", activation, "Hidden activation")
      ->check(CLI::IsMember({"relu", "tanh"}));
  sub->add_option("--optimizer", optimizer, "Optimizer")->check(CLI::IsMember({"adam", "sgd"}));
}

void finish_train_config(TrainConfig& t, const std::string& hidden, const std::string& activation,
                         const std::string& optimizer) {
  t.hidden = parse_hidden(hidden);
  t.activation = parse_activation(activation);
  t.optimizer.kind = parse_optimizer(optimizer);
  validate(t);
}

void add_init_options(CLI::App* sub, InitConfig& c) {
  sub->add_option("--clusters", c.clusters, "Number of k-means clusters (M)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--keep", c.keep, "Number of references kept after voting (m)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--tau", c.tau, "Saliency threshold for a vote")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--stride", c.stride, "Use every stride-th frame of each demonstration")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", c.max_iter, "Maximum Lloyd iterations");
  sub->add_option("--tol", c.tol, "Relative inertia improvement to continue");
}

// Every option of the subcommand with its effective value; enough to replay
// the invocation.
Json echo_options(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->get_type_size_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->get_items_expected_max() > 1) {
      j[name] = opt->results();
    } else {
      j[name] = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
    }
  }
  return j;
}

std::string run_json(const CLI::App& sub, const Json& config) {
  Json j;
  j["command"] = sub.get_name();
  j["options"] = echo_options(sub);
  j["config"] = config;
  return j.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Json keypoints_json(const KeypointVector& kp) {
  Json arr = Json::array();
  for (const auto& p : kp.points) {
    arr.push_back({{"row", p.row}, {"col", p.col}, {"u", p.u}, {"v", p.v}, {"sim", p.similarity}});
  }
  return arr;
}

// Attention as grey levels, keypoint cells in red, 8 pixels per cell.
std::string overlay_ppm(const PatchGrid& grid, const KeypointVector& kp) {
  constexpr std::uint32_t kScale = 8;
  const std::uint32_t w = grid.cols * kScale, h = grid.rows * kScale;
  std::string img = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<bool> marked(grid.cell_count(), false);
  for (const auto& p : kp.points) marked[grid.cell_index(p.row, p.col)] = true;
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const std::size_t cell = grid.cell_index(y / kScale, x / kScale);
      const double a = grid.attention ? (*grid.attention)[cell] : 0.5;
      const auto grey = static_cast<char>(static_cast<unsigned char>(a * 255.0 + 0.5));
      if (marked[cell]) {
        img += {static_cast<char>(255), 0, 0};
      } else {
        img += {grey, grey, grey};
      }
    }
  }
  return img;
}

InputEncoder encoder_for(const std::string& method, const std::string& refs_path) {
  const Method m = parse_method(method);
  if (m == Method::Dvk) {
    if (refs_path.empty()) throw Error(ErrorCode::InvalidArgument, "--refs is required for dvk");
    return keypoint_encoder(read_refs(refs_path));
  }
  if (m == Method::Expert) throw Error(ErrorCode::InvalidArgument, "expert has no policy");
  return [m](const PatchGrid& frame, std::span<const double> p) {
    std::vector<double> in =
        m == Method::Pooled ? pooled_baseline_input(frame) : cls_like_input(frame);
    in.insert(in.end(), p.begin(), p.end());
    return in;
  };
}

int cmd_gen_demos(const CLI::App& sub, const GenDemosArgs& a) {
  const WorldSpec world = build_world(a.world);
  const auto objects = split_list(a.objects);
  for (const auto& o : objects) find_template(o);
  const DemoDataset ds = collect_demos(world, objects, a.n, a.seed);
  Json cfg;
  cfg["world"] = to_json(world.options);
  cfg["objects"] = objects;
  cfg["n_per_object"] = a.n;
  cfg["seed"] = a.seed;
  StagingDir staging(a.out);
  write_demos(ds, staging.path());
  write_text(staging.path() / "run.json", run_json(sub, cfg));
  staging.commit();
  std::cout << "wrote " << ds.demos.size() << " demos (" << ds.step_count() << " steps) to "
            << a.out << "\n";
  return 0;
}

int cmd_init_refs(const CLI::App& sub, const InitRefsArgs& a) {
  const DemoDataset ds = read_demos(a.demos);
  const InitResult result = init_references(ds, a.init);
  StagingDir staging(a.out);
  write_refs(result.refs, staging.path() / "refs.dvkref");
  write_text(staging.path() / "clusters.json", clusters_report(result));
  Json cfg = to_json(a.init);
  write_text(staging.path() / "run.json", run_json(sub, {{"init", cfg}, {"demos", a.demos}}));
  staging.commit();
  std::cout << "kept " << result.refs.size() << " of " << result.clustering.cluster_count()
            << " clusters from " << result.image_count << " frames\n";
  if (result.refs.no_salient_votes()) {
    std::cerr << "warning: no cluster received a saliency vote\n";
  }
  return 0;
}

int cmd_extract(const CLI::App& sub, const ExtractArgs& a) {
  const ReferenceSet refs = read_refs(a.refs);
  const KeypointExtractor extractor(refs);
  std::ostringstream lines;
  std::vector<std::pair<std::string, std::string>> overlays;
  for (const auto& path : a.grids) {
    const PatchGrid grid = read_grid(path);
    Json line;
    line["frame"] = grid.frame_id;
    const KeypointVector kp = extractor.extract(grid);
    line["points"] = keypoints_json(kp);
    lines << line.dump() << "\n";
    if (a.overlay) overlays.emplace_back(grid.frame_id + ".ppm", overlay_ppm(grid, kp));
  }
  StagingDir staging(a.out);
  for (const auto& [name, image] : overlays) write_text(staging.path() / name, image);
  write_text(staging.path() / "keypoints.jsonl", lines.str());
  write_text(staging.path() / "run.json", run_json(sub, {{"refs", a.refs}, {"grids", a.grids}}));
  staging.commit();
  return 0;
}

int cmd_train(const CLI::App& sub, TrainArgs a) {
  finish_train_config(a.train, a.hidden, a.activation, a.optimizer);
  const DemoDataset ds = read_demos(a.demos);
  const InputEncoder encoder = encoder_for(a.method, a.refs);
  const TrainReport report = train_samples(build_samples(ds, encoder), a.train);
  Json summary;
  summary["best_epoch"] = report.best_epoch;
  summary["final_loss"] = report.loss_curve.back();
  summary["loss_curve"] = report.loss_curve;
  Json scores = Json::array();
  for (const auto& [epoch, score] : report.checkpoint_scores) scores.push_back({epoch, score});
  summary["checkpoint_scores"] = scores;

  StagingDir staging(a.out);
  write_policy(report.checkpoint, staging.path() / "policy.dvkpol");
  write_text(staging.path() / "train.json", summary.dump(2) + "\n");
  write_text(staging.path() / "run.json",
             run_json(sub, {{"method", a.method}, {"train", to_json(a.train)}}));
  staging.commit();
  std::cout << "best epoch " << report.best_epoch << ", final loss "
            << report.loss_curve.back() << "\n";
  return 0;
}

int cmd_eval(const CLI::App& sub, const EvalArgs& a) {
  const WorldSpec world = build_world(a.world);
  const Policy policy = read_policy(a.policy);
  const InputEncoder encoder = encoder_for(a.method, a.refs);
  const Controller controller = [&](const PatchGrid& frame, const EnvState& state) {
    const std::vector<double> p = proprio(state);
    const Eigen::VectorXd out = policy.forward(encoder(frame, p));
    if (out.size() != 3) throw Error(ErrorCode::DimMismatch, "policy must output 3 actions");
    return Action{out[0], out[1], out[2]};
  };
  auto objects = split_list(a.objects);
  if (objects.empty()) objects = inter_test_objects();
  Json per_object = Json::array();
  double total = 0.0;
  for (const auto& o : objects) {
    const ObjectScore s = evaluate_object(world, o, a.episodes, a.seed, controller);
    per_object.push_back(
        {{"object", o}, {"successes", s.successes}, {"episodes", s.episodes}, {"rate", s.rate()}});
    total += s.rate();
    std::cout << o << ": " << s.successes << "/" << s.episodes << "\n";
  }
  Json result;
  result["mean_success"] = total / double(objects.size());
  result["objects"] = per_object;
  StagingDir staging(a.out);
  write_text(staging.path() / "eval.json", result.dump(2) + "\n");
  write_text(staging.path() / "run.json",
             run_json(sub, {{"world", to_json(world.options)}, {"objects", objects}}));
  staging.commit();
  return 0;
}

int cmd_bench(const CLI::App& sub, BenchArgs a) {
  BenchConfig c;
  c.suite = parse_suite(a.suite);
  c.methods.clear();
  for (const auto& m : split_list(a.methods)) c.methods.push_back(parse_method(m));
  c.seeds = a.seeds;
  c.episodes = a.episodes;
  c.demos_per_object = a.demos;
  c.base_seed = a.seed;
  c.world.seed = a.world.seed;
  c.world.sigma = a.world.sigma;
  c.init = a.init;
  finish_train_config(a.train, a.hidden, a.activation, a.optimizer);
  c.train = a.train;
  c.rollout_selection = a.rollout_selection;
  c.selection_episodes = a.selection_episodes;

  const BenchReport report = run_benchmark(c);
  const std::string text = report_json(report);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  fs::path run_path = out;
  run_path.replace_extension(".run.json");
  atomic_write_text(run_path, run_json(sub, Json::parse(text)["config"]));
  atomic_write_text(out, text);
  for (const auto& s : report.summary) {
    std::printf("%-8s train %.3f +- %.3f   ood %.3f +- %.3f\n", to_string(s.method), s.train_mean,
                s.train_std, s.test_mean, s.test_std);
  }
  return 0;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io:
    case ErrorCode::Diverged:
    case ErrorCode::PrototypeSamplingFailed:
      return 1;
    default:
      return 2;
  }
}

std::vector<std::string> replay_args(const Json& run, const std::string& out_override) {
  std::vector<std::string> args{"dvk", run.at("command").get<std::string>()};
  for (const auto& [name, value] : run.at("options").items()) {
    const std::string flag = "--" + name;
    if (name == "out" && !out_override.empty()) {
      args.push_back(flag);
      args.push_back(out_override);
    } else if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        args.push_back(flag);
        args.push_back(v.get<std::string>());
      }
    } else if (!value.get<std::string>().empty()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    }
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Dense visual keypoints: reference extraction, behaviour cloning and a synthetic "
               "grasping benchmark"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GenDemosArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-demos", "Record expert demonstrations in a synthetic world");
  add_world_options(gen_cmd, gen.world);
  gen_cmd->add_option("--objects", gen.objects, "Object classes, comma separated");
  gen_cmd->add_option("--n", gen.n, "Demonstrations per object")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Demonstration seed");
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();

  InitRefsArgs init;
  auto* init_cmd = app.add_subcommand("init-refs", "Cluster demo patches and vote for references");
  init_cmd->add_option("--demos", init.demos, "Demonstration directory")->required();
  add_init_options(init_cmd, init.init);
  init_cmd->add_option("--seed", init.init.seed, "Clustering seed");
  init_cmd->add_option("--out", init.out, "Output directory")->required();

  ExtractArgs ex;
  auto* ex_cmd = app.add_subcommand("extract", "Locate reference keypoints in grid files");
  ex_cmd->add_option("--refs", ex.refs, "Reference set file")->required();
  ex_cmd->add_option("--grid", ex.grids, "Grid file (repeatable)")->required();
  ex_cmd->add_flag("--overlay", ex.overlay, "Also write a PPM image per frame marking keypoints");
  ex_cmd->add_option("--out", ex.out, "Output directory")->required();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Behaviour-clone a policy from demonstrations");
  tr_cmd->add_option("--demos", tr.demos, "Demonstration directory")->required();
  tr_cmd->add_option("--refs", tr.refs, "Reference set file (dvk method)");
  tr_cmd->add_option("--method", tr.method, "Policy input")
      ->check(CLI::IsMember({"dvk", "pooled", "cls_like"}));
  add_train_options(tr_cmd, tr.train, tr.hidden, tr.activation, tr.optimizer, "--seed");
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Roll out a trained policy in the synthetic world");
  add_world_options(ev_cmd, ev.world);
  ev_cmd->add_option("--policy", ev.policy, "Policy file")->required();
  ev_cmd->add_option("--refs", ev.refs, "Reference set file (dvk method)");
  ev_cmd->add_option("--method", ev.method, "Policy input")
      ->check(CLI::IsMember({"dvk", "pooled", "cls_like"}));
  ev_cmd->add_option("--objects", ev.objects,
                     "Object classes, comma separated (default: held-out templates)");
  ev_cmd->add_option("--episodes", ev.episodes, "Episodes per object")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--seed", ev.seed, "Evaluation seed");
  ev_cmd->add_option("--out", ev.out, "Output directory")->required();

  BenchArgs be;
  auto* be_cmd = app.add_subcommand("bench", "Run the intra- or inter-class benchmark");
  add_world_options(be_cmd, be.world);
  be_cmd->add_option("--suite", be.suite, "intra or inter");
  be_cmd->add_option("--methods", be.methods, "dvk, pooled, cls_like, expert; comma separated");
  be_cmd->add_option("--seeds", be.seeds, "Benchmark repetitions")->check(CLI::PositiveNumber);
  be_cmd->add_option("--episodes", be.episodes, "Episodes per object per seed")
      ->check(CLI::PositiveNumber);
  be_cmd->add_option("--demos-per-object", be.demos, "Demonstrations per training object")
      ->check(CLI::PositiveNumber);
  be_cmd->add_option("--seed", be.seed, "Base seed");
  add_init_options(be_cmd, be.init);
  add_train_options(be_cmd, be.train, be.hidden, be.activation, be.optimizer,
                    "--train-seed");
  be_cmd->add_flag("--rollout-selection", be.rollout_selection,
                   "Select checkpoints by rollout success on training objects");
  be_cmd->add_option("--selection-episodes", be.selection_episodes,
                     "Episodes per training object for rollout selection");
  be_cmd->add_option("--out", be.out, "Report file")->required();

  RerunArgs re;
  auto* re_cmd = app.add_subcommand("rerun", "Repeat a run from its run.json");
  re_cmd->add_option("--run", re.run, "run.json of an earlier run")->required();
  re_cmd->add_option("--out", re.out, "Output location override");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen_demos(*gen_cmd, gen);
    if (*init_cmd) return cmd_init_refs(*init_cmd, init);
    if (*ex_cmd) return cmd_extract(*ex_cmd, ex);
    if (*tr_cmd) return cmd_train(*tr_cmd, tr);
    if (*ev_cmd) return cmd_eval(*ev_cmd, ev);
    if (*be_cmd) return cmd_bench(*be_cmd, be);
    if (*re_cmd) {
      Json run_doc;
      try {
        const auto bytes = read_file_bytes(re.run);
        run_doc = Json::parse(bytes.begin(), bytes.end());
        return run(replay_args(run_doc, re.out));
      } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed run file: " << e.what() << "\n";
        return 2;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dvk::cli
