#ifndef KGCOREF_NEURAL_H_
#define KGCOREF_NEURAL_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kgcoref/corpus.h"
#include "kgcoref/kg.h"
#include "kgcoref/model.h"
#include "kgcoref/nn.h"

namespace kgcoref {

// BiLSTM encoding of a contiguous range of sentences. The recurrent state is
// reset at every sentence boundary, so encoding a sub-range gives the same
// vectors as encoding the whole document.
struct Encoding {
  int first_token = 0;               // document index of column 0
  std::vector<int> ids;              // vocabulary ids
  Eigen::MatrixXd embeddings;        // x, embed_dim x n
  Eigen::MatrixXd contextual;        // x*, 2 * lstm_hidden x n

  struct Sentence {
    int begin = 0;  // local column
    int length = 0;
    LstmTrace forward, backward;
  };
  std::vector<Sentence> sentences;
  Eigen::MatrixXd input_mask, output_mask;  // empty without dropout

  int size() const { return static_cast<int>(ids.size()); }
  int Local(int doc_token) const { return doc_token - first_token; }
};

// Encodes sentences [first_sentence, last_sentence]; last_sentence < 0 means
// through the end. Throws ValidationError for an empty range.
Encoding EncodeDocument(const Model& model, const Document& doc, Dropout* dropout,
                        int first_sentence = 0, int last_sentence = -1);

// Inner-span attention representation e = [x*_start, x*_end, x_hat, phi].
struct SpanRepresentation {
  Span span;
  Eigen::VectorXd e;
  Eigen::VectorXd attention;  // a_t over the span tokens
};
SpanRepresentation RepresentSpan(const Model& model, const Encoding& encoding, Span span);

// Mean of the tail word embeddings; out-of-vocabulary words count as zero
// vectors. Throws ValidationError for an empty tail.
Eigen::VectorXd KnowledgeEmbedding(const Model& model, const Triplet& triplet);

struct KnowledgeAttention {
  Eigen::VectorXd o;
  Eigen::VectorXd weights;
};
// Softmax over NN_beta([e_s, e_p, k]) and the weighted sum of K. Empty K gives
// o = 0. Throws NumericError on a dimension mismatch.
KnowledgeAttention KnowledgeAttend(const Model& model, const Eigen::VectorXd& e_s,
                                   const Eigen::VectorXd& e_p,
                                   const std::vector<Eigen::VectorXd>& knowledge);

// Textual and knowledge representation of one span. For kWithoutKg, o is
// empty; for kWithoutAttention it is the zero-padded concatenation.
struct SpanContext {
  Span span;
  Eigen::VectorXd e;
  Eigen::VectorXd o;
};

// F(s, p) = NN_m([e_s, o_s]) + NN_c([e_s, o_s, e_p, o_p, e_s*e_p, o_s*o_p]).
double ScorePair(const Model& model, const SpanContext& s, const SpanContext& p);

struct ScoredCandidate {
  Span span;
  double score = 0;       // F
  double normalized = 0;  // F_hat
};

// Softmax-normalizes the scores over the whole list and keeps candidates with
// F_hat > threshold, in input order. Throws ValidationError for an empty list.
std::vector<ScoredCandidate> Normalize(std::span<const Span> spans, std::span<const double> scores);
std::vector<ScoredCandidate> Select(std::span<const Span> spans, std::span<const double> scores,
                                    double threshold);

// A pronoun with its candidates and retrieved knowledge, ready for repeated
// forward passes.
struct PreparedInstance {
  const Document* doc = nullptr;
  int pronoun_index = 0;
  int first_sentence = 0;
  int last_sentence = 0;
  std::vector<Span> candidates;
  std::vector<char> is_gold;  // per candidate
  // Knowledge tails as vocabulary ids; one entry per candidate followed by
  // one for the pronoun.
  std::vector<std::vector<std::vector<int>>> knowledge;

  const PronounInstance& pronoun() const { return doc->pronouns[pronoun_index]; }
  // True when the gold set is non-empty and fully contained in candidates.
  bool CoversGold() const;
};

PreparedInstance PrepareInstance(const Model& model, const KnowledgeGraph& graph,
                                 const Document& doc, int pronoun_index,
                                 std::vector<Span> candidates);

// Scores F for every candidate (evaluation mode).
std::vector<double> ScoreCandidates(const Model& model, const PreparedInstance& instance);

struct LossResult {
  double loss = 0;
  std::vector<double> scores;
};

// -log( sum_gold exp F / sum_all exp F ). With a non-null dropout generator
// the pass runs in training mode. When grad is non-null the gradient of the
// loss is accumulated into it. Throws CoverageError when the pronoun has no
// gold antecedent or one of them is missing from the candidates.
LossResult InstanceLoss(const Model& model, const PreparedInstance& instance, Rng* dropout_rng,
                        ModelParameters* grad);

// Convenience form over raw inputs.
LossResult Loss(const Model& model, const Document& doc, const PronounInstance& pronoun,
                const std::vector<Span>& candidates, const KnowledgeGraph& graph,
                Rng* dropout_rng, ModelParameters* grad);

}  // namespace kgcoref

#endif  // KGCOREF_NEURAL_H_
