#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvk/reference_init.hpp"
#include "dvk/synth/world.hpp"
#include "dvk/train.hpp"

namespace dvk::synth {

enum class Suite { Intra, Inter };
enum class Method { Dvk, Pooled, ClsLike, Expert };

const char* to_string(Suite suite);
const char* to_string(Method method);
Suite parse_suite(const std::string& name);
Method parse_method(const std::string& name);

struct Fold {
  std::string name;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Intra: leave one mug variant out (four folds). Inter: one fold, three
/// training classes and the held-out templates.
std::vector<Fold> folds(Suite suite);

struct BenchConfig {
  Suite suite = Suite::Inter;
  std::vector<Method> methods{Method::Dvk, Method::Pooled};
  std::uint32_t seeds = 3;
  std::uint32_t episodes = 50;  // per object, per seed
  std::uint32_t demos_per_object = 60;
  std::uint64_t base_seed = 0;
  WorldOptions world;  // world.seed is replaced per benchmark seed
  InitConfig init;
  TrainConfig train;
  /// Pick the checkpoint by rollout success on the training objects instead
  /// of training loss.
  bool rollout_selection = false;
  std::uint32_t selection_episodes = 10;
};

struct ObjectScore {
  std::string object;
  bool held_out = false;
  std::uint32_t successes = 0;
  std::uint32_t episodes = 0;

  double rate() const { return episodes == 0 ? 0.0 : double(successes) / episodes; }
};

struct RunScore {
  std::string fold;
  std::uint32_t seed_index = 0;
  Method method = Method::Dvk;
  std::vector<ObjectScore> objects;
  double train_rate = 0.0;
  double test_rate = 0.0;
};

struct MethodSummary {
  Method method = Method::Dvk;
  std::vector<double> train_per_seed;
  std::vector<double> test_per_seed;
  double train_mean = 0.0;
  double train_std = 0.0;
  double test_mean = 0.0;
  double test_std = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<RunScore> runs;
  std::vector<MethodSummary> summary;

  const MethodSummary& method(Method m) const;
};

/// Seed of benchmark seed index `s`; it drives the world, demos, clustering
/// and training of that repetition.
std::uint64_t bench_seed(const BenchConfig& config, std::uint32_t s);

/// Rollout success of `controller` on fresh instances of `object`. Episode
/// streams depend on (stream, object, episode) only, so every method faces the
/// same placements.
ObjectScore evaluate_object(const WorldSpec& world, const std::string& object,
                            std::uint32_t episodes, std::uint64_t stream,
                            const Controller& controller);

BenchReport run_benchmark(const BenchConfig& config);

std::string report_json(const BenchReport& report);

}  // namespace dvk::synth
