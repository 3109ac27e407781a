#ifndef KGCOREF_MODEL_H_
#define KGCOREF_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kgcoref/corpus.h"
#include "kgcoref/kg.h"

namespace kgcoref {

enum class Variant { kComplete, kWithoutKg, kWithoutAttention };

const char* VariantName(Variant v);  // "complete", "without_kg", "without_attention"
Variant ParseVariant(std::string_view name);

struct ModelConfig {
  int embed_dim = 50;
  int lstm_hidden = 200;
  int ffn_hidden = 150;
  int length_bucket_dim = 20;
  double dropout_rate = 0.2;
  int max_knowledge = 16;  // arity of the concatenation in WithoutAttention
  int max_span_width = kDefaultMaxSpanWidth;
  int vocab_min_count = 1;
  uint64_t seed = 1;
  Variant variant = Variant::kComplete;

  // Throws ValidationError when a dimension is < 1 or dropout is outside [0, 1).
  void Validate() const;

  int contextual_dim() const { return 2 * lstm_hidden; }
  int span_dim() const { return 2 * contextual_dim() + embed_dim + length_bucket_dim; }
  int knowledge_dim() const;  // dimension of o for the configured variant
};

inline constexpr int kNumLengthBuckets = 9;

// Buckets {1, 2, 3, 4, 5-7, 8-15, 16-31, 32-63, 64+} mapped to 0..8.
int LengthBucket(int width);

// Lowercased word list. Id 0 is reserved for out-of-vocabulary words and its
// embedding is pinned to zero.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr const char* kUnknownWord = "<unk>";

  Vocabulary();
  // `words` excludes the reserved entry.
  explicit Vocabulary(const std::vector<std::string>& words);

  int Id(std::string_view word) const;
  int Add(std::string_view word);
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }  // includes <unk>

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Corpus words seen at least min_count times plus every knowledge tail word.
Vocabulary BuildVocabulary(const std::vector<Document>& corpus, const KnowledgeGraph& graph,
                           int min_count);

// Two ReLU hidden layers and a scalar linear output.
struct FeedForward {
  Eigen::MatrixXd w1, b1, w2, b2, w3, b3;
};

// Gate rows ordered input, forget, cell, output; w acts on [x; h_prev].
struct LstmWeights {
  Eigen::MatrixXd w, b;
};

struct ModelParameters {
  Eigen::MatrixXd embeddings;      // embed_dim x vocab (one column per word)
  LstmWeights lstm_forward;
  LstmWeights lstm_backward;
  Eigen::MatrixXd length_buckets;  // length_bucket_dim x 9
  FeedForward nn_alpha;            // contextual token -> inner-span logit
  FeedForward nn_beta;             // [e_s, e_p, k] -> knowledge logit
  FeedForward nn_m;                // mention score
  FeedForward nn_c;                // coreference score

  using Block = std::pair<std::string, Eigen::MatrixXd*>;
  using ConstBlock = std::pair<std::string, const Eigen::MatrixXd*>;

  // Fixed order; this is the flat-view and checkpoint order.
  std::vector<Block> Blocks();
  std::vector<ConstBlock> Blocks() const;

  size_t NumValues() const;
  Eigen::VectorXd Flatten() const;
  // Throws NumericError if flat.size() != NumValues().
  void Unflatten(const Eigen::VectorXd& flat);
  void SetZero();
  ModelParameters ZerosLike() const;
  // Rounds every value to the nearest 32-bit float.
  void RoundToFloat();
  bool AllFinite() const;
};

// Uniform(+-sqrt(3 / fan_in)) weights, zero biases, forget-gate bias 1.
ModelParameters InitParameters(const ModelConfig& config, int vocab_size, uint64_t seed);

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  ModelParameters params;
};

Model CreateModel(const ModelConfig& config, Vocabulary vocab);

}  // namespace kgcoref

#endif  // KGCOREF_MODEL_H_
