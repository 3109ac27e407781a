#include "kgcoref/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kgcoref/config.h"
#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "checkpoint";
constexpr char kMagic[4] = {'K', 'W', 'C', '\x01'};

void AppendU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t ReadU32(std::string_view bytes, size_t offset) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

void AppendFloat(std::string* out, double value) {
  const uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(value));
  AppendU32(out, bits);
}

}  // namespace

std::string SerializeCheckpoint(const Model& model, const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = ModelConfigToJson(model.config);
  header["vocab"] = model.vocab.words();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& [name, m] : model.params.Blocks()) {
    blocks.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  }
  header["blocks"] = blocks;
  header["metadata"] = metadata;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  AppendU32(&out, static_cast<uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + 4 * model.params.NumValues());
  for (const auto& [name, m] : model.params.Blocks()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) AppendFloat(&out, m->data()[i]);
  }
  return out;
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError(kModule, "not a checkpoint file (bad magic)");
  }
  const uint32_t header_len = ReadU32(bytes, 4);
  if (bytes.size() < 8 + static_cast<size_t>(header_len)) {
    throw ParseError(kModule, "truncated checkpoint header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(kModule, std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("format_version", -1) != kCheckpointVersion) {
    throw ParseError(kModule, "unsupported checkpoint format version");
  }

  Checkpoint ckpt;
  try {
    ApplyModelConfig(header.at("config"), &ckpt.model.config);
    ckpt.model.config.Validate();
    std::vector<std::string> words = header.at("vocab").get<std::vector<std::string>>();
    if (words.empty() || words[0] != Vocabulary::kUnknownWord) {
      throw ParseError(kModule, "vocabulary must start with the reserved entry");
    }
    words.erase(words.begin());
    ckpt.model.vocab = Vocabulary(words);
    if (header.contains("metadata")) ckpt.metadata = header["metadata"];
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(kModule, std::string("bad checkpoint header: ") + e.what());
  }
  ckpt.model.params = InitParameters(ckpt.model.config, ckpt.model.vocab.size(), 0);

  const nlohmann::json& declared = header.at("blocks");
  auto blocks = ckpt.model.params.Blocks();
  if (!declared.is_array() || declared.size() != blocks.size()) {
    throw ParseError(kModule, "checkpoint block list does not match the configuration");
  }
  size_t offset = 8 + header_len;
  for (size_t b = 0; b < blocks.size(); ++b) {
    Eigen::MatrixXd& m = *blocks[b].second;
    if (declared[b].value("name", "") != blocks[b].first ||
        declared[b].value("rows", -1) != m.rows() || declared[b].value("cols", -1) != m.cols()) {
      throw ParseError(kModule, "shape mismatch for block '" + blocks[b].first + "'");
    }
    if (bytes.size() < offset + 4 * static_cast<size_t>(m.size())) {
      throw ParseError(kModule, "truncated data for block '" + blocks[b].first + "'");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i, offset += 4) {
      m.data()[i] = std::bit_cast<float>(ReadU32(bytes, offset));
    }
  }
  if (offset != bytes.size()) throw ParseError(kModule, "trailing bytes after parameter data");
  if (!ckpt.model.params.AllFinite()) throw ParseError(kModule, "non-finite parameter values");
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Model& model, const nlohmann::json& metadata) {
  const std::string bytes = SerializeCheckpoint(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LookupError(kModule, "cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LookupError(kModule, "failed writing checkpoint '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError(kModule, "cannot open checkpoint '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DeserializeCheckpoint(buffer.str());
}

}  // namespace kgcoref
