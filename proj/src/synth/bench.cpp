#include "dvk/synth/bench.hpp"

#include <cmath>
#include <numeric>

#include "dvk/config_json.hpp"
#include "dvk/error.hpp"
#include "dvk/parallel.hpp"
#include "dvk/random.hpp"
#include "dvk/synth/catalog.hpp"
#include "dvk/synth/features.hpp"

namespace dvk::synth {
namespace {

Controller policy_controller(const Policy& policy, const InputEncoder& encoder) {
  return [&policy, encoder](const PatchGrid& frame, const EnvState& state) {
    const std::vector<double> p = proprio(state);
    const std::vector<double> in = encoder(frame, p);
    const Eigen::VectorXd out = policy.forward(in);
    return Action{out[0], out[1], out[2]};
  };
}

InputEncoder flat_encoder(Method method) {
  return [method](const PatchGrid& frame, std::span<const double> p) {
    std::vector<double> in =
        method == Method::Pooled ? pooled_baseline_input(frame) : cls_like_input(frame);
    in.insert(in.end(), p.begin(), p.end());
    return in;
  };
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(xs.size() - 1));
}

double success_mean(const std::vector<ObjectScore>& scores, bool held_out) {
  std::vector<double> rates;
  for (const auto& s : scores) {
    if (s.held_out == held_out) rates.push_back(s.rate());
  }
  return mean(rates);
}

}  // namespace

const char* to_string(Suite suite) { return suite == Suite::Intra ? "intra" : "inter"; }

const char* to_string(Method method) {
  switch (method) {
    case Method::Dvk: return "dvk";
    case Method::Pooled: return "pooled";
    case Method::ClsLike: return "cls_like";
    case Method::Expert: return "expert";
  }
  return "?";
}

Suite parse_suite(const std::string& name) {
  if (name == "intra") return Suite::Intra;
  if (name == "inter") return Suite::Inter;
  throw Error(ErrorCode::InvalidArgument, "unknown suite '" + name + "'");
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Dvk, Method::Pooled, Method::ClsLike, Method::Expert}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

std::vector<Fold> folds(Suite suite) {
  std::vector<Fold> out;
  if (suite == Suite::Inter) {
    out.push_back({"inter", inter_train_objects(), inter_test_objects()});
    return out;
  }
  const auto mugs = intra_objects();
  for (std::size_t i = 0; i < mugs.size(); ++i) {
    Fold f;
    f.name = "holdout_" + mugs[i];
    for (std::size_t j = 0; j < mugs.size(); ++j) {
      (j == i ? f.test : f.train).push_back(mugs[j]);
    }
    out.push_back(std::move(f));
  }
  return out;
}

const MethodSummary& BenchReport::method(Method m) const {
  for (const auto& s : summary) {
    if (s.method == m) return s;
  }
  throw Error(ErrorCode::InvalidArgument, std::string("method not in report: ") + to_string(m));
}

std::uint64_t bench_seed(const BenchConfig& config, std::uint32_t s) {
  return mix_seed({config.base_seed, s, 0x62656e6368ULL});
}

ObjectScore evaluate_object(const WorldSpec& world, const std::string& object,
                            std::uint32_t episodes, std::uint64_t stream,
                            const Controller& controller) {
  const std::uint64_t class_hash = stable_hash(object);
  std::vector<std::uint8_t> wins(episodes, 0);
  parallel_for(episodes, [&](std::size_t e) {
    const ObjectInstance obj =
        spawn_object(world, object, mix_seed({stream, class_hash, e, 0x6f626aULL}));
    const EpisodeResult r =
        run_episode(world, obj, mix_seed({stream, class_hash, e, 0x6570ULL}), controller);
    wins[e] = r.success ? 1 : 0;
  });
  ObjectScore score;
  score.object = object;
  score.episodes = episodes;
  score.successes = static_cast<std::uint32_t>(std::accumulate(wins.begin(), wins.end(), 0u));
  return score;
}

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.seeds == 0 || config.episodes == 0 || config.demos_per_object == 0) {
    throw Error(ErrorCode::BadConfig, "seeds, episodes and demos per object must be >= 1");
  }
  if (config.methods.empty()) throw Error(ErrorCode::BadConfig, "no methods selected");
  validate(config.train);

  BenchReport report;
  report.config = config;
  const std::vector<Fold> fold_list = folds(config.suite);

  for (std::uint32_t s = 0; s < config.seeds; ++s) {
    const std::uint64_t seed = bench_seed(config, s);
    WorldOptions wo = config.world;
    wo.seed = seed;
    const WorldSpec world = make_world(wo);

    for (std::size_t f = 0; f < fold_list.size(); ++f) {
      const Fold& fold = fold_list[f];
      const std::uint64_t fold_seed = mix_seed({seed, f});
      const std::uint64_t eval_stream = mix_seed({fold_seed, 0x6576616cULL});
      const std::uint64_t select_stream = mix_seed({fold_seed, 0x73656cULL});

      DemoDataset demos;
      bool have_demos = false;
      std::optional<ReferenceSet> refs;

      for (Method method : config.methods) {
        Controller controller;
        std::optional<Policy> policy;
        InputEncoder encoder;
        if (method == Method::Expert) {
          controller = [&world](const PatchGrid&, const EnvState& st) {
            return expert_action(world, st);
          };
        } else {
          if (!have_demos) {
            demos = collect_demos(world, fold.train, config.demos_per_object,
                                  mix_seed({fold_seed, 0x64656d6fULL}));
            have_demos = true;
          }
          if (method == Method::Dvk) {
            if (!refs) {
              InitConfig ic = config.init;
              ic.seed = mix_seed({fold_seed, config.init.seed, 0x726566ULL});
              refs = init_references(demos, ic).refs;
            }
            encoder = keypoint_encoder(*refs);
          } else {
            encoder = flat_encoder(method);
          }
          TrainConfig tc = config.train;
          tc.seed = mix_seed({fold_seed, config.train.seed, 0x7472ULL});
          CheckpointScore scorer;
          if (config.rollout_selection) {
            scorer = [&](const Policy& candidate, std::uint32_t) {
              const Controller c = policy_controller(candidate, encoder);
              std::uint32_t wins = 0, total = 0;
              for (const auto& obj : fold.train) {
                const ObjectScore sc =
                    evaluate_object(world, obj, config.selection_episodes, select_stream, c);
                wins += sc.successes;
                total += sc.episodes;
              }
              return double(wins) / double(total);
            };
          }
          const SampleSet samples = build_samples(demos, encoder);
          policy = train_samples(samples, tc, scorer).checkpoint;
          controller = policy_controller(*policy, encoder);
        }

        RunScore run;
        run.fold = fold.name;
        run.seed_index = s;
        run.method = method;
        for (const auto& obj : fold.train) {
          run.objects.push_back(evaluate_object(world, obj, config.episodes, eval_stream, controller));
        }
        for (const auto& obj : fold.test) {
          ObjectScore sc = evaluate_object(world, obj, config.episodes, eval_stream, controller);
          sc.held_out = true;
          run.objects.push_back(std::move(sc));
        }
        run.train_rate = success_mean(run.objects, false);
        run.test_rate = success_mean(run.objects, true);
        report.runs.push_back(std::move(run));
      }
    }
  }

  for (Method method : config.methods) {
    MethodSummary sum;
    sum.method = method;
    for (std::uint32_t s = 0; s < config.seeds; ++s) {
      std::vector<double> tr, te;
      for (const auto& run : report.runs) {
        if (run.method == method && run.seed_index == s) {
          tr.push_back(run.train_rate);
          te.push_back(run.test_rate);
        }
      }
      sum.train_per_seed.push_back(mean(tr));
      sum.test_per_seed.push_back(mean(te));
    }
    sum.train_mean = mean(sum.train_per_seed);
    sum.train_std = sample_std(sum.train_per_seed);
    sum.test_mean = mean(sum.test_per_seed);
    sum.test_std = sample_std(sum.test_per_seed);
    report.summary.push_back(std::move(sum));
  }
  return report;
}

std::string report_json(const BenchReport& report) {
  const BenchConfig& c = report.config;
  Json j;
  Json cfg;
  cfg["suite"] = to_string(c.suite);
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  cfg["methods"] = methods;
  cfg["seeds"] = c.seeds;
  cfg["episodes"] = c.episodes;
  cfg["demos_per_object"] = c.demos_per_object;
  cfg["base_seed"] = c.base_seed;
  cfg["rollout_selection"] = c.rollout_selection;
  cfg["selection_episodes"] = c.selection_episodes;
  cfg["world"] = to_json(c.world);
  cfg["init"] = to_json(c.init);
  cfg["train"] = to_json(c.train);
  j["config"] = cfg;

  Json seeds = Json::array();
  for (std::uint32_t s = 0; s < c.seeds; ++s) seeds.push_back(bench_seed(c, s));
  j["seeds"] = seeds;

  Json summary = Json::object();
  for (const auto& s : report.summary) {
    Json m;
    m["Train Avg."] = {{"mean", s.train_mean}, {"std", s.train_std}, {"per_seed", s.train_per_seed}};
    m["Out-Of-Distribution Avg."] = {
        {"mean", s.test_mean}, {"std", s.test_std}, {"per_seed", s.test_per_seed}};
    m["episodes_per_object"] = c.episodes;
    summary[to_string(s.method)] = m;
  }
  j["summary"] = summary;

  Json runs = Json::array();
  for (const auto& r : report.runs) {
    Json jr;
    jr["fold"] = r.fold;
    jr["seed_index"] = r.seed_index;
    jr["method"] = to_string(r.method);
    jr["train_success"] = r.train_rate;
    jr["test_success"] = r.test_rate;
    Json objs = Json::array();
    for (const auto& o : r.objects) {
      objs.push_back({{"object", o.object},
                      {"split", o.held_out ? "test" : "train"},
                      {"successes", o.successes},
                      {"episodes", o.episodes},
                      {"rate", o.rate()}});
    }
    jr["objects"] = objs;
    runs.push_back(jr);
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

}  // namespace dvk::synth
