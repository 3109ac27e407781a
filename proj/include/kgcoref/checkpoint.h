#ifndef KGCOREF_CHECKPOINT_H_
#define KGCOREF_CHECKPOINT_H_

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kgcoref/model.h"

namespace kgcoref {

// File layout: "KWC\x01", uint32 little-endian header length, JSON header
// (format_version, config, vocab, blocks with names and shapes, metadata),
// then every block as little-endian float32 in header order, column-major.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  nlohmann::json metadata = nlohmann::json::object();  // e.g. threshold
};

std::string SerializeCheckpoint(const Model& model,
                                const nlohmann::json& metadata = nlohmann::json::object());
// Throws ParseError for a bad magic, version, truncated data or shape mismatch.
Checkpoint DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string& path, const Model& model,
                    const nlohmann::json& metadata = nlohmann::json::object());
// Throws LookupError when the file cannot be opened.
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace kgcoref

#endif  // KGCOREF_CHECKPOINT_H_
