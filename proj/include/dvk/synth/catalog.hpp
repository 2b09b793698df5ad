#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dvk/random.hpp"
#include "dvk/synth/world.hpp"

namespace dvk::synth {

/// Object morphology in template-local coordinates.
struct LocalShape {
  std::vector<Part> parts;
  Cell handle;
};

struct ObjectTemplate {
  std::string id;
  std::string description;
  std::function<LocalShape(Rng&)> build;
};

/// Every object class known to the benchmark.
const std::vector<ObjectTemplate>& catalog();
const ObjectTemplate& find_template(const std::string& id);

/// Four mug variants for leave-one-out cross-validation.
std::vector<std::string> intra_objects();
/// Mug-like, pan-like and tool-like training objects.
std::vector<std::string> inter_train_objects();
/// Held-out templates for cross-class transfer.
std::vector<std::string> inter_test_objects();

std::uint64_t stable_hash(const std::string& text);

}  // namespace dvk::synth
