#include "dvk/config_json.hpp"

#include "dvk/error.hpp"

namespace dvk {
namespace {

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const InitConfig& c) {
  Json j;
  j["clusters"] = c.clusters;
  j["keep"] = c.keep;
  j["tau"] = c.tau;
  j["seed"] = c.seed;
  j["stride"] = c.stride;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  return j;
}

InitConfig init_config_from_json(const Json& j) {
  InitConfig c;
  read_key(j, "clusters", c.clusters);
  read_key(j, "keep", c.keep);
  read_key(j, "tau", c.tau);
  read_key(j, "seed", c.seed);
  read_key(j, "stride", c.stride);
  read_key(j, "max_iter", c.max_iter);
  read_key(j, "tol", c.tol);
  return c;
}

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw Error(ErrorCode::BadConfig, "unknown optimizer '" + name + "'");
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["optimizer"] = to_string(c.optimizer.kind);
  j["beta1"] = c.optimizer.beta1;
  j["beta2"] = c.optimizer.beta2;
  j["epsilon"] = c.optimizer.epsilon;
  j["hidden"] = c.hidden;
  j["activation"] = to_string(c.activation);
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  read_key(j, "epochs", c.epochs);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "seed", c.seed);
  read_key(j, "eval_every", c.eval_every);
  std::string opt = to_string(c.optimizer.kind);
  read_key(j, "optimizer", opt);
  c.optimizer.kind = parse_optimizer(opt);
  read_key(j, "beta1", c.optimizer.beta1);
  read_key(j, "beta2", c.optimizer.beta2);
  read_key(j, "epsilon", c.optimizer.epsilon);
  read_key(j, "hidden", c.hidden);
  std::string act = to_string(c.activation);
  read_key(j, "activation", act);
  c.activation = parse_activation(act);
  return c;
}

Json to_json(const synth::WorldOptions& o) {
  Json j;
  j["seed"] = o.seed;
  j["rows"] = o.rows;
  j["cols"] = o.cols;
  j["dim"] = o.dim;
  j["body_parts"] = o.body_parts;
  j["sigma"] = o.sigma;
  j["texture"] = o.texture;
  j["attention"] = {{"background", o.attention.background},
                    {"object", o.attention.object},
                    {"gripper", o.attention.gripper}};
  return j;
}

synth::WorldOptions world_options_from_json(const Json& j) {
  synth::WorldOptions o;
  read_key(j, "seed", o.seed);
  read_key(j, "rows", o.rows);
  read_key(j, "cols", o.cols);
  read_key(j, "dim", o.dim);
  read_key(j, "body_parts", o.body_parts);
  read_key(j, "sigma", o.sigma);
  read_key(j, "texture", o.texture);
  if (j.contains("attention")) {
    const Json& a = j.at("attention");
    read_key(a, "background", o.attention.background);
    read_key(a, "object", o.attention.object);
    read_key(a, "gripper", o.attention.gripper);
  }
  return o;
}

}  // namespace dvk
