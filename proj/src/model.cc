#include "kgcoref/model.h"

#include <cctype>
#include <cmath>
#include <map>

#include "kgcoref/error.h"
#include "kgcoref/rng.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "neural";

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void FillUniform(Eigen::MatrixXd& m, double limit, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.Uniform(-limit, limit);
  }
}

FeedForward MakeFeedForward(int in, int hidden, Rng& rng) {
  FeedForward f;
  f.w1.resize(hidden, in);
  f.w2.resize(hidden, hidden);
  f.w3.resize(1, hidden);
  FillUniform(f.w1, std::sqrt(3.0 / in), rng);
  FillUniform(f.w2, std::sqrt(3.0 / hidden), rng);
  FillUniform(f.w3, std::sqrt(3.0 / hidden), rng);
  f.b1 = Eigen::MatrixXd::Zero(hidden, 1);
  f.b2 = Eigen::MatrixXd::Zero(hidden, 1);
  f.b3 = Eigen::MatrixXd::Zero(1, 1);
  return f;
}

LstmWeights MakeLstm(int in, int hidden, Rng& rng) {
  LstmWeights l;
  l.w.resize(4 * hidden, in + hidden);
  FillUniform(l.w, std::sqrt(3.0 / (in + hidden)), rng);
  l.b = Eigen::MatrixXd::Zero(4 * hidden, 1);
  l.b.block(hidden, 0, hidden, 1).setOnes();
  return l;
}

template <typename Params, typename BlockT>
std::vector<BlockT> CollectBlocks(Params& p) {
  std::vector<BlockT> blocks = {
      {"embeddings", &p.embeddings},
      {"lstm_forward.w", &p.lstm_forward.w},
      {"lstm_forward.b", &p.lstm_forward.b},
      {"lstm_backward.w", &p.lstm_backward.w},
      {"lstm_backward.b", &p.lstm_backward.b},
      {"length_buckets", &p.length_buckets},
  };
  const std::pair<const char*, decltype(&p.nn_alpha)> nets[] = {
      {"nn_alpha", &p.nn_alpha}, {"nn_beta", &p.nn_beta}, {"nn_m", &p.nn_m}, {"nn_c", &p.nn_c}};
  for (const auto& [name, net] : nets) {
    const std::string n(name);
    blocks.push_back({n + ".w1", &net->w1});
    blocks.push_back({n + ".b1", &net->b1});
    blocks.push_back({n + ".w2", &net->w2});
    blocks.push_back({n + ".b2", &net->b2});
    blocks.push_back({n + ".w3", &net->w3});
    blocks.push_back({n + ".b3", &net->b3});
  }
  return blocks;
}

}  // namespace

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kComplete:
      return "complete";
    case Variant::kWithoutKg:
      return "without_kg";
    case Variant::kWithoutAttention:
      return "without_attention";
  }
  return "complete";
}

Variant ParseVariant(std::string_view name) {
  std::string n = Lower(name);
  for (char& c : n) {
    if (c == '-') c = '_';
  }
  for (Variant v : {Variant::kComplete, Variant::kWithoutKg, Variant::kWithoutAttention}) {
    if (n == VariantName(v)) return v;
  }
  throw ValidationError(kModule, "unknown variant '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  if (embed_dim < 1 || lstm_hidden < 1 || ffn_hidden < 1 || length_bucket_dim < 1 ||
      max_knowledge < 1 || max_span_width < 1 || vocab_min_count < 1) {
    throw ValidationError(kModule, "model dimensions must all be at least 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError(kModule, "dropout rate must lie in [0, 1)");
  }
}

int ModelConfig::knowledge_dim() const {
  switch (variant) {
    case Variant::kComplete:
      return embed_dim;
    case Variant::kWithoutKg:
      return 0;
    case Variant::kWithoutAttention:
      return embed_dim * max_knowledge;
  }
  return embed_dim;
}

int LengthBucket(int width) {
  if (width <= 4) return width - 1;
  if (width <= 7) return 4;
  if (width <= 15) return 5;
  if (width <= 31) return 6;
  if (width <= 63) return 7;
  return 8;
}

Vocabulary::Vocabulary() {
  words_.push_back(kUnknownWord);
  ids_.emplace(kUnknownWord, kUnknown);
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) : Vocabulary() {
  for (const std::string& w : words) Add(w);
}

int Vocabulary::Id(std::string_view word) const {
  const auto it = ids_.find(Lower(word));
  return it == ids_.end() ? kUnknown : it->second;
}

int Vocabulary::Add(std::string_view word) {
  std::string lower = Lower(word);
  const auto [it, inserted] = ids_.emplace(lower, size());
  if (inserted) words_.push_back(std::move(lower));
  return it->second;
}

Vocabulary BuildVocabulary(const std::vector<Document>& corpus, const KnowledgeGraph& graph,
                           int min_count) {
  std::map<std::string, int> counts;
  std::vector<std::string> order;
  for (const Document& doc : corpus) {
    for (const Token& t : doc.tokens) {
      const std::string w = Lower(t.text);
      if (counts[w]++ == 0) order.push_back(w);
    }
  }
  Vocabulary vocab;
  for (const std::string& w : order) {
    if (counts[w] >= min_count) vocab.Add(w);
  }
  for (const Triplet& t : graph.triplets()) {
    for (const std::string& w : t.tail) vocab.Add(w);
  }
  return vocab;
}

std::vector<ModelParameters::Block> ModelParameters::Blocks() {
  return CollectBlocks<ModelParameters, Block>(*this);
}

std::vector<ModelParameters::ConstBlock> ModelParameters::Blocks() const {
  return CollectBlocks<const ModelParameters, ConstBlock>(*this);
}

size_t ModelParameters::NumValues() const {
  size_t n = 0;
  for (const auto& [name, m] : Blocks()) n += m->size();
  return n;
}

Eigen::VectorXd ModelParameters::Flatten() const {
  Eigen::VectorXd flat(NumValues());
  Eigen::Index offset = 0;
  for (const auto& [name, m] : Blocks()) {
    flat.segment(offset, m->size()) = m->reshaped();
    offset += m->size();
  }
  return flat;
}

void ModelParameters::Unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<size_t>(flat.size()) != NumValues()) {
    throw NumericError(kModule, "flat parameter vector has length " + std::to_string(flat.size()) +
                                    ", expected " + std::to_string(NumValues()));
  }
  Eigen::Index offset = 0;
  for (auto& [name, m] : Blocks()) {
    m->reshaped() = flat.segment(offset, m->size());
    offset += m->size();
  }
}

void ModelParameters::SetZero() {
  for (auto& [name, m] : Blocks()) m->setZero();
}

ModelParameters ModelParameters::ZerosLike() const {
  ModelParameters z = *this;
  z.SetZero();
  return z;
}

void ModelParameters::RoundToFloat() {
  for (auto& [name, m] : Blocks()) {
    m->reshaped() = m->reshaped().cast<float>().cast<double>();
  }
}

bool ModelParameters::AllFinite() const {
  for (const auto& [name, m] : Blocks()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

ModelParameters InitParameters(const ModelConfig& config, int vocab_size, uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  const int d = config.embed_dim;
  const int h = config.lstm_hidden;
  const int e = config.span_dim();
  const int o = config.knowledge_dim();
  const int f = config.ffn_hidden;

  ModelParameters p;
  p.embeddings.resize(d, vocab_size);
  FillUniform(p.embeddings, std::sqrt(3.0 / d), rng);
  p.embeddings.col(Vocabulary::kUnknown).setZero();
  p.lstm_forward = MakeLstm(d, h, rng);
  p.lstm_backward = MakeLstm(d, h, rng);
  p.length_buckets.resize(config.length_bucket_dim, kNumLengthBuckets);
  FillUniform(p.length_buckets, std::sqrt(3.0 / config.length_bucket_dim), rng);
  p.nn_alpha = MakeFeedForward(config.contextual_dim(), f, rng);
  // NN_beta is never evaluated without knowledge, but keeping its shape fixed
  // keeps the block list identical across variants.
  p.nn_beta = MakeFeedForward(2 * e + d, f, rng);
  p.nn_m = MakeFeedForward(e + o, f, rng);
  p.nn_c = MakeFeedForward(3 * e + 3 * o, f, rng);
  return p;
}

Model CreateModel(const ModelConfig& config, Vocabulary vocab) {
  Model m;
  m.config = config;
  m.params = InitParameters(config, vocab.size(), config.seed);
  m.vocab = std::move(vocab);
  return m;
}

}  // namespace kgcoref
