#pragma once

#include <json.hpp>

#include "gazesense/error.hpp"
#include "gazesense/model.hpp"

namespace gazesense::detail {

inline nlohmann::json train_config_json(const model::TrainConfig& c) {
  return {{"penalty", model::to_string(c.penalty)}, {"alpha", c.alpha},       {"C", c.C},
          {"class_weight", model::to_string(c.class_weight)}, {"tol", c.tol}, {"max_iter", c.max_iter},
          {"seed", c.seed}};
}

// Keys missing from `j` keep their value in `base`; unknown keys are rejected.
inline model::TrainConfig train_config_from_json(const nlohmann::json& j, model::TrainConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "train config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "penalty") base.penalty = model::parse_penalty(value.get<std::string>());
    else if (key == "alpha") base.alpha = value.get<double>();
    else if (key == "C") base.C = value.get<double>();
    else if (key == "class_weight") base.class_weight = model::parse_class_weight(value.get<std::string>());
    else if (key == "tol") base.tol = value.get<double>();
    else if (key == "max_iter") base.max_iter = value.get<int>();
    else if (key == "seed") base.seed = value.get<std::uint64_t>();
    else throw Error(ErrorCode::BadConfig, "unknown train key '" + key + "'");
  }
  return base;
}

}  // namespace gazesense::detail
