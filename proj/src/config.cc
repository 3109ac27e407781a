#include "kgcoref/config.h"

#include <fstream>
#include <set>

#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "config";

void CheckKeys(const nlohmann::json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw ValidationError(kModule, std::string(what) + " config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ValidationError(kModule, "unknown " + std::string(what) + " config key '" + key + "'");
    }
  }
}

}  // namespace

nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},           {"lstm_hidden", c.lstm_hidden},
          {"ffn_hidden", c.ffn_hidden},         {"length_bucket_dim", c.length_bucket_dim},
          {"dropout_rate", c.dropout_rate},     {"max_knowledge", c.max_knowledge},
          {"max_span_width", c.max_span_width}, {"vocab_min_count", c.vocab_min_count},
          {"seed", c.seed},                     {"variant", VariantName(c.variant)}};
}

void ApplyModelConfig(const nlohmann::json& j, ModelConfig* c) {
  CheckKeys(j,
            {"embed_dim", "lstm_hidden", "ffn_hidden", "length_bucket_dim", "dropout_rate",
             "max_knowledge", "max_span_width", "vocab_min_count", "seed", "variant"},
            "model");
  try {
    if (j.contains("embed_dim")) c->embed_dim = j["embed_dim"].get<int>();
    if (j.contains("lstm_hidden")) c->lstm_hidden = j["lstm_hidden"].get<int>();
    if (j.contains("ffn_hidden")) c->ffn_hidden = j["ffn_hidden"].get<int>();
    if (j.contains("length_bucket_dim")) c->length_bucket_dim = j["length_bucket_dim"].get<int>();
    if (j.contains("dropout_rate")) c->dropout_rate = j["dropout_rate"].get<double>();
    if (j.contains("max_knowledge")) c->max_knowledge = j["max_knowledge"].get<int>();
    if (j.contains("max_span_width")) c->max_span_width = j["max_span_width"].get<int>();
    if (j.contains("vocab_min_count")) c->vocab_min_count = j["vocab_min_count"].get<int>();
    if (j.contains("seed")) c->seed = j["seed"].get<uint64_t>();
    if (j.contains("variant")) c->variant = ParseVariant(j["variant"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(kModule, std::string("bad model config value: ") + e.what());
  }
}

nlohmann::json TrainConfigToJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon},
          {"max_epochs", c.max_epochs},       {"shuffle_seed", c.shuffle_seed},
          {"select_on_dev", c.select_on_dev}, {"clip_norm", c.clip_norm},
          {"dev_threshold", c.dev_threshold}, {"threads", c.threads}};
}

void ApplyTrainConfig(const nlohmann::json& j, TrainConfig* c) {
  CheckKeys(j,
            {"learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "max_epochs",
             "shuffle_seed", "select_on_dev", "clip_norm", "dev_threshold", "threads"},
            "train");
  try {
    if (j.contains("learning_rate")) c->learning_rate = j["learning_rate"].get<double>();
    if (j.contains("adam_beta1")) c->adam_beta1 = j["adam_beta1"].get<double>();
    if (j.contains("adam_beta2")) c->adam_beta2 = j["adam_beta2"].get<double>();
    if (j.contains("adam_epsilon")) c->adam_epsilon = j["adam_epsilon"].get<double>();
    if (j.contains("max_epochs")) c->max_epochs = j["max_epochs"].get<int>();
    if (j.contains("shuffle_seed")) c->shuffle_seed = j["shuffle_seed"].get<uint64_t>();
    if (j.contains("select_on_dev")) c->select_on_dev = j["select_on_dev"].get<bool>();
    if (j.contains("clip_norm")) c->clip_norm = j["clip_norm"].get<double>();
    if (j.contains("dev_threshold")) c->dev_threshold = j["dev_threshold"].get<double>();
    if (j.contains("threads")) c->threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(kModule, std::string("bad train config value: ") + e.what());
  }
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError(kModule, "cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(kModule, "config file '" + path + "': " + e.what());
  }
  CheckKeys(j, {"model", "train"}, "top-level");
  RunConfig config;
  if (j.contains("model")) ApplyModelConfig(j["model"], &config.model);
  if (j.contains("train")) ApplyTrainConfig(j["train"], &config.train);
  return config;
}

nlohmann::json RunConfigToJson(const RunConfig& config) {
  return {{"model", ModelConfigToJson(config.model)}, {"train", TrainConfigToJson(config.train)}};
}

}  // namespace kgcoref
