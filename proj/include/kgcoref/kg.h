#ifndef KGCOREF_KG_H_
#define KGCOREF_KG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgcoref {

enum class KnowledgeSource { kOmcs, kMedical, kPlurality, kAg, kSpNsubj, kSpDobj, kOther };

const char* SourceName(KnowledgeSource source);
// Accepts the names produced by SourceName, case-insensitively.
std::optional<KnowledgeSource> ParseSource(std::string_view name);

// Expands a resource group name ("ling", "sp", "omcs", "medical", "other")
// into the sources it covers. Throws ValidationError for unknown names.
std::set<KnowledgeSource> SourceGroup(std::string_view group);

struct Triplet {
  std::vector<std::string> head;
  std::string relation;
  std::vector<std::string> tail;
  double confidence = 1.0;
  KnowledgeSource source = KnowledgeSource::kOther;
};

// Lowercases ASCII letters and joins tokens with single spaces.
std::string NormalizePhrase(std::span<const std::string> words);
std::string NormalizePhrase(std::string_view text);
std::vector<std::string> SplitWords(std::string_view text);

// Triplets indexed by normalized head. Insertion order is preserved and is the
// retrieval order.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(std::vector<Triplet> triplets);

  // Throws ValidationError for an empty head/tail or non-finite confidence.
  void Add(Triplet triplet);

  const std::vector<Triplet>& triplets() const { return triplets_; }
  size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }

  // Ids of all triplets whose normalized head equals the normalized span text.
  const std::vector<int>& Lookup(std::span<const std::string> span_words) const;
  std::vector<Triplet> Retrieve(std::span<const std::string> span_words) const;

  KnowledgeGraph WithoutSources(const std::set<KnowledgeSource>& drop) const;
  std::map<KnowledgeSource, size_t> CountBySource() const;

 private:
  std::vector<Triplet> triplets_;
  std::unordered_map<std::string, std::vector<int>> head_index_;
};

// Triplet TSV: head, relation, tail, [confidence], [source]. Rows whose
// confidence is not strictly greater than min_confidence are dropped. Rows
// without a source column get default_source. Throws ParseError with the row
// number for malformed rows.
KnowledgeGraph LoadTriplets(const std::string& path, double min_confidence,
                            KnowledgeSource default_source = KnowledgeSource::kOther);
KnowledgeGraph ParseTriplets(std::string_view text, double min_confidence,
                             KnowledgeSource default_source = KnowledgeSource::kOther);
std::string TripletsToTsv(const KnowledgeGraph& graph);
void SaveTriplets(const KnowledgeGraph& graph, const std::string& path);

// Concatenation in argument order. Triplets with identical head, relation,
// tail and source collapse to the first occurrence, keeping the maximum
// confidence.
KnowledgeGraph MergeGraphs(std::span<const KnowledgeGraph> graphs);

enum class DepRelation { kNsubj, kDobj };
const char* DepRelationName(DepRelation relation);

struct DepEdge {
  std::string predicate;
  std::string argument;
  DepRelation relation = DepRelation::kNsubj;
  int64_t count = 1;
};

// DepEdge TSV: predicate, argument, relation, [count]. Missing count means 1.
std::vector<DepEdge> LoadDepEdges(const std::string& path);
std::vector<DepEdge> ParseDepEdges(std::string_view text);
std::string DepEdgesToTsv(std::span<const DepEdge> edges);

// Aggregated predicate-argument counts for one or more relations. Partial
// counts from disjoint shards combine with Merge.
class SpCounts {
 public:
  // Throws ValidationError for a non-positive count.
  void Add(const DepEdge& edge);
  void Merge(const SpCounts& other);

  struct Key {
    DepRelation relation;
    std::string predicate;
    std::string argument;
    auto operator<=>(const Key&) const = default;
  };
  const std::map<Key, int64_t>& pair_counts() const { return pair_counts_; }
  int64_t PredicateCount(DepRelation relation, const std::string& predicate) const;

 private:
  std::map<Key, int64_t> pair_counts_;
  std::map<std::pair<DepRelation, std::string>, int64_t> predicate_counts_;
};

// Keeps (predicate, relation, argument) iff
//   Count_r(p, a) / Count_r(p) > prob_threshold  and  Count_r(p, a) > count_threshold.
// Emitted triplets are oriented for retrieval by argument text: head =
// argument, tail = predicate, confidence = the posterior probability. Output
// is sorted by (relation, predicate, argument).
std::vector<Triplet> ExtractSp(const SpCounts& counts, double prob_threshold,
                               int64_t count_threshold);
// Counts the edges in `threads` disjoint shards, merges, then filters.
std::vector<Triplet> ExtractSp(std::span<const DepEdge> edges, double prob_threshold,
                               int64_t count_threshold, int threads = 1);

enum class Plurality { kSingular, kPlural, kUnknown };
enum class AnimacyGender { kMale, kFemale, kNeutral, kInanimate, kUnknown };

const char* PluralityName(Plurality p);      // "Singular" / "Plural"
const char* AnimacyGenderName(AnimacyGender ag);  // "male" / "female" / ...

struct Markup {
  std::vector<std::string> phrase;
  Plurality plurality = Plurality::kUnknown;
  AnimacyGender ag = AnimacyGender::kUnknown;
};

// Markup TSV: phrase, plurality, ag. Values are matched case-insensitively.
std::vector<Markup> LoadMarkups(const std::string& path);
std::vector<Markup> ParseMarkups(std::string_view text);
std::string MarkupsToTsv(std::span<const Markup> markups);

// (phrase, plurality, value) and (phrase, AG, value), skipping Unknown values.
std::vector<Triplet> GenLinguisticTriplets(std::span<const Markup> markups);

// Plurality and animacy/gender markups for the sixteen supported pronouns.
const std::vector<Markup>& PronounMarkups();
std::vector<Triplet> PronounTriplets();

// Merged graph in the order: base triplets, linguistic triplets from the
// markups, selectional preferences mined from the edges, then (optionally)
// the pronoun table.
KnowledgeGraph BuildKnowledgeGraph(const KnowledgeGraph& base, std::span<const Markup> markups,
                                   std::span<const DepEdge> edges, double sp_prob,
                                   int64_t sp_count, bool include_pronouns, int threads = 1);

}  // namespace kgcoref

#endif  // KGCOREF_KG_H_
