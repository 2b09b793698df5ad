#pragma once

#include "dvk/reference_init.hpp"
#include "dvk/synth/world.hpp"
#include "dvk/train.hpp"
#include "json.hpp"

namespace dvk {

using Json = nlohmann::ordered_json;

// Missing keys keep their defaults; present keys must have the right type.
Json to_json(const InitConfig& config);
InitConfig init_config_from_json(const Json& j);

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);

Json to_json(const synth::WorldOptions& options);
synth::WorldOptions world_options_from_json(const Json& j);

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

}  // namespace dvk
