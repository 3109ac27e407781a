#ifndef KGCOREF_CONFIG_H_
#define KGCOREF_CONFIG_H_

#include <string>

#include <nlohmann/json.hpp>

#include "kgcoref/model.h"
#include "kgcoref/train.h"

namespace kgcoref {

nlohmann::json ModelConfigToJson(const ModelConfig& config);
// Missing keys keep the values already in `config`; unknown keys are a
// ValidationError.
void ApplyModelConfig(const nlohmann::json& j, ModelConfig* config);

nlohmann::json TrainConfigToJson(const TrainConfig& config);
void ApplyTrainConfig(const nlohmann::json& j, TrainConfig* config);

// Config file with optional "model" and "train" objects.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};
RunConfig LoadRunConfig(const std::string& path);
nlohmann::json RunConfigToJson(const RunConfig& config);

}  // namespace kgcoref

#endif  // KGCOREF_CONFIG_H_
