#include "kgcoref/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "eval";

void CheckCorpus(const std::vector<Document>& corpus) {
  if (corpus.empty()) throw ValidationError(kModule, "empty evaluation corpus");
}

std::vector<PronounScores> ScoreDocument(const Model& model, const Document& doc, int doc_index,
                                         const KnowledgeGraph& graph, bool gold_mode) {
  std::vector<PronounScores> out;
  for (size_t p = 0; p < doc.pronouns.size(); ++p) {
    PronounScores s;
    s.doc = doc_index;
    s.pronoun = static_cast<int>(p);
    s.candidates =
        EnumerateCandidates(doc, doc.pronouns[p], model.config.max_span_width, gold_mode);
    if (!s.candidates.empty()) {
      const PreparedInstance inst =
          PrepareInstance(model, graph, doc, static_cast<int>(p), s.candidates);
      s.scores = ScoreCandidates(model, inst);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Span> SelectedSpans(const PronounScores& s, double threshold) {
  std::vector<Span> spans;
  if (s.candidates.empty()) return spans;
  for (const ScoredCandidate& c : Select(s.candidates, s.scores, threshold)) spans.push_back(c.span);
  return spans;
}

std::string Fixed(double v, int width = 6, int precision = 1) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << std::setw(width) << v;
  return out.str();
}

}  // namespace

Prf ComputePrf(const Counts& c) {
  Prf r;
  r.precision = c.predicted > 0 ? static_cast<double>(c.matched) / c.predicted : 0.0;
  r.recall = c.gold > 0 ? static_cast<double>(c.matched) / c.gold : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

Counts MetricReport::overall() const {
  Counts total;
  for (const Counts& c : per_type) total += c;
  return total;
}

nlohmann::json ReportToJson(const MetricReport& report) {
  auto entry = [](const Counts& c) {
    const Prf prf = ComputePrf(c);
    return nlohmann::json{{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1},
                          {"predicted", c.predicted},   {"gold", c.gold},     {"matched", c.matched}};
  };
  nlohmann::json j;
  for (int t = 0; t < kNumPronounTypes; ++t) {
    j["per_type"][PronounTypeName(static_cast<PronounType>(t))] = entry(report.per_type[t]);
  }
  j["overall"] = entry(report.overall());
  return j;
}

std::vector<PronounScores> ScoreCorpus(const Model& model, const std::vector<Document>& corpus,
                                       const KnowledgeGraph& graph, bool gold_mode, int threads) {
  const int n = static_cast<int>(corpus.size());
  std::vector<std::vector<PronounScores>> per_doc(n);
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int d = 0; d < n; ++d) per_doc[d] = ScoreDocument(model, corpus[d], d, graph, gold_mode);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int d = w; d < n; d += workers) {
            per_doc[d] = ScoreDocument(model, corpus[d], d, graph, gold_mode);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<PronounScores> out;
  for (auto& doc_scores : per_doc) {
    for (auto& s : doc_scores) out.push_back(std::move(s));
  }
  return out;
}

MetricReport ReportAtThreshold(const std::vector<Document>& corpus,
                               const std::vector<PronounScores>& scores, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError(kModule, "threshold must be >= 0");
  MetricReport report;
  for (const PronounScores& s : scores) {
    const PronounInstance& pronoun = corpus[s.doc].pronouns[s.pronoun];
    const std::vector<Span> selected = SelectedSpans(s, threshold);
    Counts& c = report.per_type[static_cast<int>(pronoun.type)];
    c.predicted += static_cast<long>(selected.size());
    c.gold += static_cast<long>(pronoun.gold_antecedents.size());
    for (const Span& span : selected) {
      if (std::binary_search(pronoun.gold_antecedents.begin(), pronoun.gold_antecedents.end(),
                             span)) {
        ++c.matched;
      }
    }
  }
  return report;
}

MetricReport Evaluate(const Model& model, const std::vector<Document>& corpus,
                      const KnowledgeGraph& graph, double threshold, bool gold_mode, int threads) {
  CheckCorpus(corpus);
  if (!(threshold >= 0.0)) throw ValidationError(kModule, "threshold must be >= 0");
  return ReportAtThreshold(corpus, ScoreCorpus(model, corpus, graph, gold_mode, threads), threshold);
}

std::vector<SweepPoint> ThresholdSweep(const Model& model, const std::vector<Document>& corpus,
                                       const KnowledgeGraph& graph, const std::vector<double>& grid,
                                       bool gold_mode, int threads) {
  CheckCorpus(corpus);
  if (grid.empty()) throw ValidationError(kModule, "empty threshold grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ValidationError(kModule, "threshold grid must be ascending");
  }
  const std::vector<PronounScores> scores = ScoreCorpus(model, corpus, graph, gold_mode, threads);
  double norm_error = 0;
  for (const PronounScores& s : scores) {
    if (s.candidates.empty()) continue;
    double sum = 0;
    for (const ScoredCandidate& c : Normalize(s.candidates, s.scores)) sum += c.normalized;
    norm_error = std::max(norm_error, std::abs(sum - 1.0));
  }
  std::vector<SweepPoint> out;
  for (double t : grid) out.push_back({t, ReportAtThreshold(corpus, scores, t), norm_error});
  return out;
}

std::string SweepToCsv(const std::vector<SweepPoint>& sweep) {
  std::ostringstream out;
  out.precision(10);
  out << "t,P,R,F1\n";
  for (const SweepPoint& p : sweep) {
    const Prf prf = p.report.overall_prf();
    out << p.threshold << ',' << prf.precision << ',' << prf.recall << ',' << prf.f1 << '\n';
  }
  return out.str();
}

std::vector<PredictionResult> Predict(const Model& model, const std::vector<Document>& corpus,
                                      const KnowledgeGraph& graph, double threshold,
                                      bool gold_mode, int threads) {
  CheckCorpus(corpus);
  if (!(threshold >= 0.0)) throw ValidationError(kModule, "threshold must be >= 0");
  std::vector<PredictionResult> out;
  for (const PronounScores& s : ScoreCorpus(model, corpus, graph, gold_mode, threads)) {
    PredictionResult r;
    r.doc_id = corpus[s.doc].id;
    r.pronoun = corpus[s.doc].pronouns[s.pronoun];
    if (!s.candidates.empty()) r.selected = Select(s.candidates, s.scores, threshold);
    r.threshold = threshold;
    r.variant = model.config.variant;
    out.push_back(std::move(r));
  }
  return out;
}

std::string PredictionToJson(const PredictionResult& r, const Document& doc) {
  auto span_json = [&](Span s) {
    return nlohmann::json{{"start", s.start}, {"end", s.end}, {"text", doc.SpanText(s)}};
  };
  nlohmann::json j;
  j["doc_id"] = r.doc_id;
  j["pronoun"] = span_json(r.pronoun.span);
  j["pronoun"]["type"] = PronounTypeName(r.pronoun.type);
  j["gold"] = nlohmann::json::array();
  for (Span s : r.pronoun.gold_antecedents) j["gold"].push_back(span_json(s));
  j["selected"] = nlohmann::json::array();
  for (const ScoredCandidate& c : r.selected) {
    nlohmann::json s = span_json(c.span);
    s["F"] = c.score;
    s["F_hat"] = c.normalized;
    j["selected"].push_back(s);
  }
  j["threshold"] = r.threshold;
  j["variant"] = VariantName(r.variant);
  return j.dump();
}

CrossDomainMatrix CrossDomain(const std::array<DomainSetup, 2>& domains, int threads) {
  for (const DomainSetup& d : domains) {
    if (!d.model) throw ValidationError(kModule, "missing checkpoint for domain '" + d.name + "'");
    if (!d.test || !d.graph) {
      throw ValidationError(kModule, "missing test data or graph for domain '" + d.name + "'");
    }
  }
  CrossDomainMatrix m;
  for (int i = 0; i < 2; ++i) {
    m.names[i] = domains[i].name;
    for (int j = 0; j < 2; ++j) {
      m.reports[i][j] = Evaluate(*domains[i].model, *domains[j].test, *domains[j].graph,
                                 domains[i].threshold, false, threads);
      m.f1[i][j] = m.reports[i][j].overall_prf().f1;
    }
  }
  return m;
}

std::string CrossDomainTable(const CrossDomainMatrix& m) {
  size_t w = 12;
  for (const auto& n : m.names) w = std::max(w, n.size() + 2);
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(w)) << "train\\test";
  for (const auto& n : m.names) out << std::right << std::setw(static_cast<int>(w)) << n;
  out << '\n';
  for (int i = 0; i < 2; ++i) {
    out << std::left << std::setw(static_cast<int>(w)) << m.names[i];
    for (int j = 0; j < 2; ++j) out << Fixed(100 * m.f1[i][j], static_cast<int>(w));
    out << '\n';
  }
  return out.str();
}

AblationResult AblateKnowledge(const std::set<KnowledgeSource>& drop, const Model& complete,
                               const KnowledgeGraph& graph, const std::vector<Document>& test,
                               double threshold, const AblationTraining* training, int threads) {
  AblationResult r;
  r.dropped = drop;
  r.complete = Evaluate(complete, test, graph, threshold, false, threads);
  if (drop.empty()) {
    r.ablated = r.complete;
    r.remaining_triplets = graph.size();
    return r;
  }
  const KnowledgeGraph reduced = graph.WithoutSources(drop);
  r.remaining_triplets = reduced.size();
  if (reduced.empty()) {
    spdlog::warn("every knowledge source was dropped; the model runs without knowledge");
  }
  if (training) {
    if (!training->train) throw ValidationError(kModule, "ablation retraining needs a train corpus");
    TrainResult trained =
        Train(*training->train, training->dev, reduced, complete.config, training->train_config);
    r.ablated = Evaluate(trained.model, test, reduced, threshold, false, threads);
    r.retrained = true;
  } else {
    r.ablated = Evaluate(complete, test, reduced, threshold, false, threads);
  }
  r.delta_f1 = r.ablated.overall_prf().f1 - r.complete.overall_prf().f1;
  return r;
}

std::string FormatReportTable(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  size_t name_width = 8;
  for (const auto& [name, report] : rows) name_width = std::max(name_width, name.size() + 2);
  const int cell = 7;
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "";
  const char* groups[] = {"third_personal", "possessive", "demonstrative", "all"};
  for (const char* g : groups) {
    std::string label = g;
    if (label.size() > 3 * cell - 1) label = label.substr(0, 3 * cell - 1);
    out << std::left << std::setw(3 * cell) << (" " + label);
  }
  out << '\n' << std::left << std::setw(static_cast<int>(name_width)) << "model";
  for (int g = 0; g < 4; ++g) out << std::right << std::setw(cell) << "P" << std::setw(cell) << "R" << std::setw(cell) << "F1";
  out << '\n';
  for (const auto& [name, report] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name;
    for (int g = 0; g < 4; ++g) {
      const Prf prf = g < 3 ? report.type_prf(g) : report.overall_prf();
      out << Fixed(100 * prf.precision, cell) << Fixed(100 * prf.recall, cell) << Fixed(100 * prf.f1, cell);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace kgcoref
