#include "kgcoref/kg.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "kg";

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError(kModule, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LookupError(kModule, "cannot write " + path);
  out << content;
}

// Calls fn(row_number, fields) for every non-blank line.
template <typename Fn>
void ForEachRow(std::string_view text, Fn&& fn) {
  int row = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    fn(row, fields);
  }
}

[[noreturn]] void BadRow(int row, const std::string& what) {
  throw ParseError(kModule, "row " + std::to_string(row) + ": " + what);
}

double ParseDouble(int row, std::string_view field) {
  const std::string s(field);
  size_t used = 0;
  double value = 0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    BadRow(row, "invalid number '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(value)) BadRow(row, "invalid number '" + s + "'");
  return value;
}

int64_t ParseCount(int row, std::string_view field) {
  int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    BadRow(row, "invalid count '" + std::string(field) + "'");
  }
  return value;
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

const std::vector<int> kNoTriplets;

}  // namespace

const char* SourceName(KnowledgeSource source) {
  switch (source) {
    case KnowledgeSource::kOmcs:
      return "omcs";
    case KnowledgeSource::kMedical:
      return "medical";
    case KnowledgeSource::kPlurality:
      return "plurality";
    case KnowledgeSource::kAg:
      return "ag";
    case KnowledgeSource::kSpNsubj:
      return "sp_nsubj";
    case KnowledgeSource::kSpDobj:
      return "sp_dobj";
    case KnowledgeSource::kOther:
      return "other";
  }
  return "other";
}

std::optional<KnowledgeSource> ParseSource(std::string_view name) {
  const std::string lower = Lower(name);
  for (KnowledgeSource s : {KnowledgeSource::kOmcs, KnowledgeSource::kMedical,
                            KnowledgeSource::kPlurality, KnowledgeSource::kAg,
                            KnowledgeSource::kSpNsubj, KnowledgeSource::kSpDobj,
                            KnowledgeSource::kOther}) {
    if (lower == SourceName(s)) return s;
  }
  return std::nullopt;
}

std::set<KnowledgeSource> SourceGroup(std::string_view group) {
  const std::string g = Lower(group);
  if (g == "ling") return {KnowledgeSource::kPlurality, KnowledgeSource::kAg};
  if (g == "sp") return {KnowledgeSource::kSpNsubj, KnowledgeSource::kSpDobj};
  if (auto s = ParseSource(g)) return {*s};
  throw ValidationError(kModule, "unknown knowledge source group '" + std::string(group) + "'");
}

std::string NormalizePhrase(std::span<const std::string> words) {
  std::string out;
  for (const std::string& w : words) {
    for (const std::string& piece : SplitWords(w)) {
      if (!out.empty()) out += ' ';
      out += Lower(piece);
    }
  }
  return out;
}

std::string NormalizePhrase(std::string_view text) {
  const std::vector<std::string> words = SplitWords(text);
  return NormalizePhrase(std::span<const std::string>(words));
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

KnowledgeGraph::KnowledgeGraph(std::vector<Triplet> triplets) {
  triplets_.reserve(triplets.size());
  for (Triplet& t : triplets) Add(std::move(t));
}

void KnowledgeGraph::Add(Triplet triplet) {
  if (triplet.head.empty() || triplet.tail.empty()) {
    throw ValidationError(kModule, "triplet with empty head or tail");
  }
  if (!std::isfinite(triplet.confidence)) {
    throw ValidationError(kModule, "triplet with non-finite confidence");
  }
  const std::string key = NormalizePhrase(std::span<const std::string>(triplet.head));
  if (key.empty()) throw ValidationError(kModule, "triplet with blank head");
  head_index_[key].push_back(static_cast<int>(triplets_.size()));
  triplets_.push_back(std::move(triplet));
}

const std::vector<int>& KnowledgeGraph::Lookup(std::span<const std::string> span_words) const {
  const auto it = head_index_.find(NormalizePhrase(span_words));
  return it == head_index_.end() ? kNoTriplets : it->second;
}

std::vector<Triplet> KnowledgeGraph::Retrieve(std::span<const std::string> span_words) const {
  std::vector<Triplet> out;
  for (int id : Lookup(span_words)) out.push_back(triplets_[id]);
  return out;
}

KnowledgeGraph KnowledgeGraph::WithoutSources(const std::set<KnowledgeSource>& drop) const {
  KnowledgeGraph out;
  for (const Triplet& t : triplets_) {
    if (!drop.count(t.source)) out.Add(t);
  }
  return out;
}

std::map<KnowledgeSource, size_t> KnowledgeGraph::CountBySource() const {
  std::map<KnowledgeSource, size_t> counts;
  for (const Triplet& t : triplets_) ++counts[t.source];
  return counts;
}

KnowledgeGraph ParseTriplets(std::string_view text, double min_confidence,
                             KnowledgeSource default_source) {
  KnowledgeGraph graph;
  ForEachRow(text, [&](int row, const std::vector<std::string_view>& f) {
    if (f.size() < 3 || f.size() > 5) BadRow(row, "expected 3 to 5 tab-separated fields");
    Triplet t;
    t.head = SplitWords(f[0]);
    t.relation = std::string(f[1]);
    t.tail = SplitWords(f[2]);
    if (t.head.empty() || t.tail.empty() || t.relation.empty()) {
      BadRow(row, "empty head, relation or tail");
    }
    if (f.size() >= 4 && !f[3].empty()) t.confidence = ParseDouble(row, f[3]);
    t.source = default_source;
    if (f.size() == 5) {
      const auto source = ParseSource(f[4]);
      if (!source) BadRow(row, "unknown source '" + std::string(f[4]) + "'");
      t.source = *source;
    }
    if (t.confidence > min_confidence) graph.Add(std::move(t));
  });
  return graph;
}

KnowledgeGraph LoadTriplets(const std::string& path, double min_confidence,
                            KnowledgeSource default_source) {
  return ParseTriplets(ReadFile(path), min_confidence, default_source);
}

std::string TripletsToTsv(const KnowledgeGraph& graph) {
  std::ostringstream out;
  out.precision(17);
  for (const Triplet& t : graph.triplets()) {
    out << Join(t.head) << '\t' << t.relation << '\t' << Join(t.tail) << '\t' << t.confidence
        << '\t' << SourceName(t.source) << '\n';
  }
  return out.str();
}

void SaveTriplets(const KnowledgeGraph& graph, const std::string& path) {
  WriteFile(path, TripletsToTsv(graph));
}

KnowledgeGraph MergeGraphs(std::span<const KnowledgeGraph> graphs) {
  using Key = std::tuple<std::vector<std::string>, std::string, std::vector<std::string>,
                         KnowledgeSource>;
  std::map<Key, size_t> seen;
  std::vector<Triplet> merged;
  for (const KnowledgeGraph& g : graphs) {
    for (const Triplet& t : g.triplets()) {
      Key key{t.head, t.relation, t.tail, t.source};
      const auto [it, inserted] = seen.emplace(std::move(key), merged.size());
      if (inserted) {
        merged.push_back(t);
      } else {
        merged[it->second].confidence = std::max(merged[it->second].confidence, t.confidence);
      }
    }
  }
  return KnowledgeGraph(std::move(merged));
}

const char* DepRelationName(DepRelation relation) {
  return relation == DepRelation::kNsubj ? "nsubj" : "dobj";
}

std::vector<DepEdge> ParseDepEdges(std::string_view text) {
  std::vector<DepEdge> edges;
  ForEachRow(text, [&](int row, const std::vector<std::string_view>& f) {
    if (f.size() < 3 || f.size() > 4) BadRow(row, "expected 3 or 4 tab-separated fields");
    DepEdge e;
    e.predicate = NormalizePhrase(f[0]);
    e.argument = NormalizePhrase(f[1]);
    if (e.predicate.empty() || e.argument.empty()) BadRow(row, "empty predicate or argument");
    const std::string rel = Lower(f[2]);
    if (rel == "nsubj") {
      e.relation = DepRelation::kNsubj;
    } else if (rel == "dobj") {
      e.relation = DepRelation::kDobj;
    } else {
      BadRow(row, "unsupported relation '" + std::string(f[2]) + "'");
    }
    if (f.size() == 4 && !f[3].empty()) e.count = ParseCount(row, f[3]);
    if (e.count < 1) BadRow(row, "count must be positive");
    edges.push_back(std::move(e));
  });
  return edges;
}

std::vector<DepEdge> LoadDepEdges(const std::string& path) { return ParseDepEdges(ReadFile(path)); }

std::string DepEdgesToTsv(std::span<const DepEdge> edges) {
  std::ostringstream out;
  for (const DepEdge& e : edges) {
    out << e.predicate << '\t' << e.argument << '\t' << DepRelationName(e.relation) << '\t'
        << e.count << '\n';
  }
  return out.str();
}

void SpCounts::Add(const DepEdge& edge) {
  if (edge.count < 1) {
    throw ValidationError(kModule, "dependency edge (" + edge.predicate + ", " + edge.argument +
                                       ") has non-positive count");
  }
  pair_counts_[Key{edge.relation, edge.predicate, edge.argument}] += edge.count;
  predicate_counts_[{edge.relation, edge.predicate}] += edge.count;
}

void SpCounts::Merge(const SpCounts& other) {
  for (const auto& [key, n] : other.pair_counts_) pair_counts_[key] += n;
  for (const auto& [key, n] : other.predicate_counts_) predicate_counts_[key] += n;
}

int64_t SpCounts::PredicateCount(DepRelation relation, const std::string& predicate) const {
  const auto it = predicate_counts_.find({relation, predicate});
  return it == predicate_counts_.end() ? 0 : it->second;
}

std::vector<Triplet> ExtractSp(const SpCounts& counts, double prob_threshold,
                               int64_t count_threshold) {
  if (!(prob_threshold >= 0.0 && prob_threshold <= 1.0)) {
    throw ValidationError(kModule, "probability threshold must lie in [0, 1]");
  }
  if (count_threshold < 0) throw ValidationError(kModule, "count threshold must be non-negative");
  std::vector<Triplet> out;
  for (const auto& [key, n] : counts.pair_counts()) {
    const int64_t total = counts.PredicateCount(key.relation, key.predicate);
    const double probability = static_cast<double>(n) / static_cast<double>(total);
    if (probability > prob_threshold && n > count_threshold) {
      Triplet t;
      t.head = SplitWords(key.argument);
      t.relation = DepRelationName(key.relation);
      t.tail = SplitWords(key.predicate);
      t.confidence = probability;
      t.source = key.relation == DepRelation::kNsubj ? KnowledgeSource::kSpNsubj
                                                     : KnowledgeSource::kSpDobj;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<Triplet> ExtractSp(std::span<const DepEdge> edges, double prob_threshold,
                               int64_t count_threshold, int threads) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(edges.size()) / 1024 + 1));
  std::vector<SpCounts> shards(threads);
  if (threads == 1) {
    for (const DepEdge& e : edges) shards[0].Add(e);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> failures(threads);
    const size_t chunk = (edges.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          const size_t begin = std::min(edges.size(), t * chunk);
          const size_t end = std::min(edges.size(), begin + chunk);
          for (size_t i = begin; i < end; ++i) shards[t].Add(edges[i]);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
    for (int t = 1; t < threads; ++t) shards[0].Merge(shards[t]);
  }
  return ExtractSp(shards[0], prob_threshold, count_threshold);
}

const char* PluralityName(Plurality p) {
  switch (p) {
    case Plurality::kSingular:
      return "Singular";
    case Plurality::kPlural:
      return "Plural";
    case Plurality::kUnknown:
      return "Unknown";
  }
  return "Unknown";
}

const char* AnimacyGenderName(AnimacyGender ag) {
  switch (ag) {
    case AnimacyGender::kMale:
      return "male";
    case AnimacyGender::kFemale:
      return "female";
    case AnimacyGender::kNeutral:
      return "neutral";
    case AnimacyGender::kInanimate:
      return "inanimate";
    case AnimacyGender::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::vector<Markup> ParseMarkups(std::string_view text) {
  std::vector<Markup> markups;
  ForEachRow(text, [&](int row, const std::vector<std::string_view>& f) {
    if (f.size() != 3) BadRow(row, "expected 3 tab-separated fields");
    Markup m;
    m.phrase = SplitWords(f[0]);
    if (m.phrase.empty()) BadRow(row, "empty phrase");
    const std::string plurality = Lower(f[1]);
    if (plurality == "singular") {
      m.plurality = Plurality::kSingular;
    } else if (plurality == "plural") {
      m.plurality = Plurality::kPlural;
    } else if (plurality == "unknown") {
      m.plurality = Plurality::kUnknown;
    } else {
      BadRow(row, "unknown plurality '" + std::string(f[1]) + "'");
    }
    const std::string ag = Lower(f[2]);
    bool matched = false;
    for (AnimacyGender v : {AnimacyGender::kMale, AnimacyGender::kFemale, AnimacyGender::kNeutral,
                            AnimacyGender::kInanimate, AnimacyGender::kUnknown}) {
      if (ag == AnimacyGenderName(v)) {
        m.ag = v;
        matched = true;
      }
    }
    if (!matched) BadRow(row, "unknown animacy/gender '" + std::string(f[2]) + "'");
    markups.push_back(std::move(m));
  });
  return markups;
}

std::vector<Markup> LoadMarkups(const std::string& path) { return ParseMarkups(ReadFile(path)); }

std::string MarkupsToTsv(std::span<const Markup> markups) {
  std::ostringstream out;
  for (const Markup& m : markups) {
    out << Join(m.phrase) << '\t' << PluralityName(m.plurality) << '\t'
        << AnimacyGenderName(m.ag) << '\n';
  }
  return out.str();
}

std::vector<Triplet> GenLinguisticTriplets(std::span<const Markup> markups) {
  std::vector<Triplet> out;
  for (const Markup& m : markups) {
    if (m.plurality != Plurality::kUnknown) {
      out.push_back(Triplet{m.phrase, "plurality", {PluralityName(m.plurality)}, 1.0,
                            KnowledgeSource::kPlurality});
    }
    if (m.ag != AnimacyGender::kUnknown) {
      out.push_back(
          Triplet{m.phrase, "AG", {AnimacyGenderName(m.ag)}, 1.0, KnowledgeSource::kAg});
    }
  }
  return out;
}

const std::vector<Markup>& PronounMarkups() {
  using P = Plurality;
  using A = AnimacyGender;
  static const std::vector<Markup> table = {
      {{"he"}, P::kSingular, A::kMale},        {{"him"}, P::kSingular, A::kMale},
      {{"his"}, P::kSingular, A::kMale},       {{"she"}, P::kSingular, A::kFemale},
      {{"her"}, P::kSingular, A::kFemale},     {{"hers"}, P::kSingular, A::kFemale},
      {{"it"}, P::kSingular, A::kInanimate},   {{"its"}, P::kSingular, A::kInanimate},
      {{"they"}, P::kPlural, A::kUnknown},     {{"them"}, P::kPlural, A::kUnknown},
      {{"their"}, P::kPlural, A::kUnknown},    {{"theirs"}, P::kPlural, A::kUnknown},
      {{"this"}, P::kSingular, A::kUnknown},   {{"that"}, P::kSingular, A::kUnknown},
      {{"these"}, P::kPlural, A::kUnknown},    {{"those"}, P::kPlural, A::kUnknown},
  };
  return table;
}

std::vector<Triplet> PronounTriplets() { return GenLinguisticTriplets(PronounMarkups()); }

KnowledgeGraph BuildKnowledgeGraph(const KnowledgeGraph& base, std::span<const Markup> markups,
                                   std::span<const DepEdge> edges, double sp_prob,
                                   int64_t sp_count, bool include_pronouns, int threads) {
  std::vector<KnowledgeGraph> parts;
  parts.push_back(base);
  parts.emplace_back(GenLinguisticTriplets(markups));
  parts.emplace_back(ExtractSp(edges, sp_prob, sp_count, threads));
  if (include_pronouns) parts.emplace_back(PronounTriplets());
  return MergeGraphs(parts);
}

}  // namespace kgcoref
