#ifndef KGCOREF_EVAL_H_
#define KGCOREF_EVAL_H_

#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgcoref/corpus.h"
#include "kgcoref/kg.h"
#include "kgcoref/model.h"
#include "kgcoref/neural.h"
#include "kgcoref/train.h"

namespace kgcoref {

struct Counts {
  long predicted = 0;
  long gold = 0;
  long matched = 0;

  Counts& operator+=(const Counts& o) {
    predicted += o.predicted;
    gold += o.gold;
    matched += o.matched;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// P = 0 when nothing is predicted; F1 = 0 when P + R = 0.
Prf ComputePrf(const Counts& counts);

struct MetricReport {
  std::array<Counts, kNumPronounTypes> per_type{};

  Counts overall() const;
  Prf type_prf(int type) const { return ComputePrf(per_type[type]); }
  Prf overall_prf() const { return ComputePrf(overall()); }
  bool operator==(const MetricReport&) const = default;
};

nlohmann::json ReportToJson(const MetricReport& report);

// Cached forward scores for every pronoun of a corpus.
struct PronounScores {
  int doc = 0;
  int pronoun = 0;
  std::vector<Span> candidates;
  std::vector<double> scores;
};

// Scores all pronouns, splitting documents over `threads` workers. The result
// is ordered by (doc, pronoun) regardless of the thread count.
std::vector<PronounScores> ScoreCorpus(const Model& model, const std::vector<Document>& corpus,
                                       const KnowledgeGraph& graph, bool gold_mode, int threads);

// Span-level exact-match counts at a selection threshold.
MetricReport ReportAtThreshold(const std::vector<Document>& corpus,
                               const std::vector<PronounScores>& scores, double threshold);

// Throws ValidationError for an empty corpus or a negative threshold.
MetricReport Evaluate(const Model& model, const std::vector<Document>& corpus,
                      const KnowledgeGraph& graph, double threshold, bool gold_mode,
                      int threads = 1);

struct SweepPoint {
  double threshold = 0;
  MetricReport report;
  double max_normalization_error = 0;  // max |sum F_hat - 1| over pronouns
};

// Scores once and reapplies each threshold. The grid must be non-empty and
// ascending.
std::vector<SweepPoint> ThresholdSweep(const Model& model, const std::vector<Document>& corpus,
                                       const KnowledgeGraph& graph, const std::vector<double>& grid,
                                       bool gold_mode, int threads = 1);
std::string SweepToCsv(const std::vector<SweepPoint>& sweep);

struct PredictionResult {
  std::string doc_id;
  PronounInstance pronoun;
  std::vector<ScoredCandidate> selected;
  double threshold = 0;
  Variant variant = Variant::kComplete;
};

std::vector<PredictionResult> Predict(const Model& model, const std::vector<Document>& corpus,
                                      const KnowledgeGraph& graph, double threshold,
                                      bool gold_mode, int threads = 1);
std::string PredictionToJson(const PredictionResult& result, const Document& doc);

// One trained system per domain together with that domain's test data.
struct DomainSetup {
  std::string name;
  const Model* model = nullptr;
  double threshold = 1e-2;  // the threshold the model was trained with
  const std::vector<Document>* test = nullptr;
  const KnowledgeGraph* graph = nullptr;  // knowledge available in this domain
};

struct CrossDomainMatrix {
  std::array<std::string, 2> names;
  // f1[i][j]: model trained on domain i evaluated on domain j with the
  // knowledge graph of domain j.
  std::array<std::array<double, 2>, 2> f1{};
  std::array<std::array<MetricReport, 2>, 2> reports{};
};

// Throws ValidationError when a domain lacks a model, test set or graph.
CrossDomainMatrix CrossDomain(const std::array<DomainSetup, 2>& domains, int threads = 1);
std::string CrossDomainTable(const CrossDomainMatrix& matrix);

// Retraining inputs for an ablation; the model config is taken from the
// complete model.
struct AblationTraining {
  const std::vector<Document>* train = nullptr;
  const std::vector<Document>* dev = nullptr;
  TrainConfig train_config;
};

struct AblationResult {
  std::set<KnowledgeSource> dropped;
  MetricReport complete;
  MetricReport ablated;
  double delta_f1 = 0;  // ablated overall F1 minus complete overall F1
  size_t remaining_triplets = 0;
  bool retrained = false;
};

// Removes the given sources from the graph and either retrains (non-null
// training) or re-evaluates the complete model on the reduced graph. An
// empty drop set reuses the complete result.
AblationResult AblateKnowledge(const std::set<KnowledgeSource>& drop, const Model& complete,
                               const KnowledgeGraph& graph, const std::vector<Document>& test,
                               double threshold, const AblationTraining* training,
                               int threads = 1);

// Aligned text table with one row per system and P/R/F1 per pronoun type and
// overall.
std::string FormatReportTable(const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace kgcoref

#endif  // KGCOREF_EVAL_H_
