#ifndef KGCOREF_SYNTH_H_
#define KGCOREF_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "kgcoref/corpus.h"
#include "kgcoref/kg.h"

namespace kgcoref {

enum class SynthStyle { kGeneral, kMedical };
const char* SynthStyleName(SynthStyle style);
SynthStyle ParseSynthStyle(std::string_view name);

struct SynthSpec {
  int n_docs = 100;
  int vocab_size = 40;   // filler nouns; verb and tail lexicons scale with it
  int n_entities = 60;
  uint64_t seed = 1;
  double knowledge_dependence = 1.0;
  std::string domain_tag = "general";
  int distractors_per_span = 0;  // each entity gets d..d+3 unrelated triplets
  SynthStyle style = SynthStyle::kGeneral;

  // Throws ValidationError for n_docs < 1, n_entities < 4, vocab_size < 1 or
  // knowledge_dependence outside [0, 1].
  void Validate() const;
};

// Per-document bookkeeping for tests and analysis.
struct SynthDocInfo {
  std::string kind;  // plurality, ag, sp_nsubj, sp_dobj, medical or none
  bool knowledge_dependent = false;
  Span gold;
  Span distractor;  // equals gold when there is none
};

struct SynthOutput {
  std::vector<Document> corpus;
  std::vector<SynthDocInfo> info;
  KnowledgeGraph triplets;  // commonsense-style and medical-class triplets
  std::vector<Markup> markups;
  std::vector<DepEdge> dep_edges;
};

// Content words (predicates, fillers, tails) depend only on the domain tag;
// entities depend on the seed as well. Two tags give disjoint content words.
SynthOutput GenerateSynthetic(const SynthSpec& spec);

// The graph the model sees: triplets, linguistic markups, mined selectional
// preferences (P > 0.1, count > 10) and the pronoun table.
KnowledgeGraph SynthKnowledgeGraph(const SynthOutput& out);

// Sentence patterns that can carry a pronoun of the given type; {P} marks
// the pronoun slot.
std::vector<std::string> SynthPronounTemplates(PronounType type);

// Writes corpus.jsonl, triplets.tsv, markups.tsv and edges.tsv into dir.
void WriteSynthetic(const SynthOutput& out, const std::string& dir);

}  // namespace kgcoref

#endif  // KGCOREF_SYNTH_H_
