#include "kgcoref/synth.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "kgcoref/error.h"

namespace kgcoref {
namespace {

std::string Fingerprint(const SynthOutput& out) {
  std::string s;
  for (const Document& d : out.corpus) s += DocumentToJson(d) + "\n";
  s += TripletsToTsv(out.triplets);
  s += MarkupsToTsv(out.markups);
  s += DepEdgesToTsv(out.dep_edges);
  return s;
}

TEST(SynthSpecTest, Validation) {
  SynthSpec spec;
  spec.n_docs = 0;
  EXPECT_THROW(GenerateSynthetic(spec), ValidationError);
  spec = SynthSpec();
  spec.knowledge_dependence = 1.5;
  EXPECT_THROW(spec.Validate(), ValidationError);
  spec = SynthSpec();
  spec.n_entities = 3;
  EXPECT_THROW(spec.Validate(), ValidationError);
  EXPECT_NO_THROW(SynthSpec().Validate());
  EXPECT_EQ(ParseSynthStyle("medical"), SynthStyle::kMedical);
  EXPECT_THROW(ParseSynthStyle("poetry"), ValidationError);
}

TEST(SynthTest, DeterministicUnderSeed) {
  SynthSpec spec;
  spec.n_docs = 60;
  spec.distractors_per_span = 2;
  EXPECT_EQ(Fingerprint(GenerateSynthetic(spec)), Fingerprint(GenerateSynthetic(spec)));
  SynthSpec other = spec;
  other.seed = 2;
  EXPECT_NE(Fingerprint(GenerateSynthetic(spec)), Fingerprint(GenerateSynthetic(other)));
}

TEST(SynthTest, WrittenFilesLoadBack) {
  SynthSpec spec;
  spec.n_docs = 20;
  const SynthOutput out = GenerateSynthetic(spec);
  const auto dir = std::filesystem::temp_directory_path() / "kgcoref_synth_test";
  std::filesystem::remove_all(dir);
  WriteSynthetic(out, dir.string());
  const auto corpus = LoadCorpus((dir / "corpus.jsonl").string());
  ASSERT_EQ(corpus.size(), out.corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(DocumentToJson(corpus[i]), DocumentToJson(out.corpus[i]));
  EXPECT_EQ(TripletsToTsv(LoadTriplets((dir / "triplets.tsv").string(), -1e300)), TripletsToTsv(out.triplets));
  EXPECT_EQ(MarkupsToTsv(LoadMarkups((dir / "markups.tsv").string())), MarkupsToTsv(out.markups));
  EXPECT_EQ(DepEdgesToTsv(LoadDepEdges((dir / "edges.tsv").string())), DepEdgesToTsv(out.dep_edges));
  std::filesystem::remove_all(dir);
}

TEST(SynthTest, GoldInsideWindowAndBalancedTypes) {
  SynthSpec spec;
  spec.n_docs = 301;
  const SynthOutput out = GenerateSynthetic(spec);
  ASSERT_EQ(out.corpus.size(), 301u);
  ASSERT_EQ(out.info.size(), 301u);
  std::map<PronounType, int> types;
  for (size_t i = 0; i < out.corpus.size(); ++i) {
    const Document& d = out.corpus[i];
    ASSERT_EQ(d.pronouns.size(), 1u);
    const PronounInstance& p = d.pronouns[0];
    ++types[p.type];
    ASSERT_EQ(p.gold_antecedents.size(), 1u);
    EXPECT_EQ(p.gold_antecedents[0], out.info[i].gold);
    for (bool gold_mode : {false, true}) {
      const auto cands = EnumerateCandidates(d, p, kDefaultMaxSpanWidth, gold_mode);
      EXPECT_NE(std::find(cands.begin(), cands.end(), out.info[i].gold), cands.end()) << d.id;
      EXPECT_NE(std::find(cands.begin(), cands.end(), out.info[i].distractor), cands.end()) << d.id;
    }
  }
  for (PronounType t : {PronounType::kThirdPersonal, PronounType::kPossessive, PronounType::kDemonstrative}) {
    EXPECT_GE(types[t], 100);
    EXPECT_LE(types[t], 101);
  }
}

TEST(SynthTest, AtLeastTwentyTemplatesPerType) {
  for (PronounType t : {PronounType::kThirdPersonal, PronounType::kPossessive, PronounType::kDemonstrative}) {
    const auto templates = SynthPronounTemplates(t);
    EXPECT_GE(std::set<std::string>(templates.begin(), templates.end()).size(), 20u) << PronounTypeName(t);
    for (const std::string& s : templates) EXPECT_NE(s.find("{P}"), std::string::npos);
  }
}

Markup Lookup(const std::vector<Markup>& markups, const std::string& phrase) {
  for (const Markup& m : markups) {
    if (NormalizePhrase(m.phrase) == phrase) return m;
  }
  return Markup{};
}

TEST(SynthTest, MarkupsAgreeWithPronounTable) {
  SynthSpec spec;
  spec.n_docs = 300;
  const SynthOutput out = GenerateSynthetic(spec);
  for (size_t i = 0; i < out.corpus.size(); ++i) {
    const Document& d = out.corpus[i];
    const PronounInstance& p = d.pronouns[0];
    const Markup pm = Lookup(PronounMarkups(), NormalizePhrase(d.SpanText(p.span)));
    const Markup gm = Lookup(out.markups, NormalizePhrase(d.SpanText(out.info[i].gold)));
    ASSERT_NE(gm.plurality, Plurality::kUnknown) << d.id;
    if (pm.plurality != Plurality::kUnknown) EXPECT_EQ(pm.plurality, gm.plurality) << d.id;
    if (pm.ag == AnimacyGender::kMale || pm.ag == AnimacyGender::kFemale) EXPECT_EQ(pm.ag, gm.ag) << d.id;
    if (pm.ag == AnimacyGender::kInanimate && pm.plurality == Plurality::kSingular) {
      EXPECT_EQ(gm.ag, AnimacyGender::kInanimate) << d.id;
    }
  }
}

TEST(SynthTest, KnowledgeDisambiguatesDependentDocuments) {
  SynthSpec spec;
  spec.n_docs = 300;
  const SynthOutput out = GenerateSynthetic(spec);
  const KnowledgeGraph graph = SynthKnowledgeGraph(out);
  std::map<std::string, int> kinds;
  for (size_t i = 0; i < out.corpus.size(); ++i) {
    const Document& d = out.corpus[i];
    const SynthDocInfo& info = out.info[i];
    ASSERT_TRUE(info.knowledge_dependent);
    ASSERT_NE(info.gold, info.distractor);
    ++kinds[info.kind];
    const std::string pronoun = NormalizePhrase(d.SpanText(d.pronouns[0].span));
    const Markup pm = Lookup(PronounMarkups(), pronoun);
    const Markup gm = Lookup(out.markups, NormalizePhrase(d.SpanText(info.gold)));
    const Markup dm = Lookup(out.markups, NormalizePhrase(d.SpanText(info.distractor)));
    if (info.kind == "plurality") {
      EXPECT_EQ(gm.plurality, pm.plurality) << d.id;
      EXPECT_NE(dm.plurality, pm.plurality) << d.id;
    } else if (info.kind == "ag") {
      EXPECT_EQ(gm.plurality, dm.plurality);
      EXPECT_NE(gm.ag, dm.ag) << d.id;
    } else if (info.kind == "sp_nsubj" || info.kind == "sp_dobj") {
      // The predicate next to the pronoun is preferred by the gold noun only.
      const int tok = d.pronouns[0].span.start;
      const std::string verb = d.tokens[info.kind == "sp_nsubj" ? tok + 1 : tok - 1].text;
      auto prefers = [&](Span s) {
        for (const Triplet& t : graph.Retrieve(d.SpanWords(s))) {
          if (t.relation == info.kind.substr(3) && NormalizePhrase(t.tail) == verb) return true;
        }
        return false;
      };
      EXPECT_TRUE(prefers(info.gold)) << d.id << " " << verb;
      EXPECT_FALSE(prefers(info.distractor)) << d.id << " " << verb;
      EXPECT_EQ(gm.plurality, dm.plurality);
      EXPECT_EQ(gm.ag, dm.ag);
    } else {
      ADD_FAILURE() << "unexpected kind " << info.kind;
    }
  }
  EXPECT_GT(kinds["plurality"], 0);
  EXPECT_GT(kinds["ag"], 0);
  EXPECT_GT(kinds["sp_nsubj"] + kinds["sp_dobj"], 0);
}

TEST(SynthTest, CandidatePositionsAreSymmetric) {
  SynthSpec spec;
  spec.n_docs = 400;
  const SynthOutput out = GenerateSynthetic(spec);
  int gold_first = 0;
  for (const SynthDocInfo& info : out.info) gold_first += info.gold < info.distractor;
  EXPECT_GT(gold_first, 160);
  EXPECT_LT(gold_first, 240);
}

TEST(SynthTest, KnowledgeDependenceFraction) {
  SynthSpec spec;
  spec.n_docs = 200;
  spec.knowledge_dependence = 0.0;
  for (const SynthDocInfo& info : GenerateSynthetic(spec).info) {
    EXPECT_FALSE(info.knowledge_dependent);
    EXPECT_EQ(info.kind, "none");
  }
  spec.knowledge_dependence = 0.5;
  int dependent = 0;
  for (const SynthDocInfo& info : GenerateSynthetic(spec).info) dependent += info.knowledge_dependent;
  EXPECT_GT(dependent, 70);
  EXPECT_LT(dependent, 130);
}

std::set<std::string> Words(const SynthOutput& out) {
  std::set<std::string> words;
  for (const Document& d : out.corpus) {
    for (const Token& t : d.tokens) words.insert(NormalizePhrase(t.text));
  }
  for (const Triplet& t : out.triplets.triplets()) {
    for (const auto& w : t.tail) words.insert(NormalizePhrase(w));
  }
  return words;
}

TEST(SynthTest, DomainsHaveDisjointContentWords) {
  SynthSpec a;
  a.n_docs = 150;
  a.distractors_per_span = 4;
  SynthSpec b = a;
  b.domain_tag = "medical";
  b.style = SynthStyle::kMedical;
  std::set<std::string> function_words;
  for (PronounType t : {PronounType::kThirdPersonal, PronounType::kPossessive, PronounType::kDemonstrative}) {
    for (const std::string& s : SynthPronounTemplates(t)) {
      for (const std::string& w : SplitWords(s)) function_words.insert(w);
    }
  }
  const SynthOutput oa = GenerateSynthetic(a), ob = GenerateSynthetic(b);
  std::set<std::string> shared;
  const auto wb = Words(ob);
  for (const std::string& w : Words(oa)) {
    if (wb.count(w) && !function_words.count(w) && ClassifyPronoun(w) == PronounType::kNotAPronoun) {
      shared.insert(w);
    }
  }
  // Only template and pronoun words may be shared.
  for (const Document& d : oa.corpus) {
    for (const PronounInstance& p : d.pronouns) shared.erase(NormalizePhrase(d.SpanText(p.span)));
  }
  std::string joined;
  for (const auto& w : shared) joined += w + " ";
  std::set<std::string> allowed = {"the", ".", ",", "and", "were", "near", "we", "saw", "next", "to",
                                   "stood", "beside", "today", "there", "was", "also", "met", "both",
                                   "appeared", "again", "or", "came", "by", "yesterday", "passed",
                                   "a", "seen", "nobody", "then"};
  for (const auto& w : shared) EXPECT_TRUE(allowed.count(w)) << "shared content word " << w;
}

TEST(SynthTest, SelectionalPreferencesRecoverable) {
  SynthSpec spec;
  spec.n_docs = 50;
  const SynthOutput out = GenerateSynthetic(spec);
  const auto sp = ExtractSp(out.dep_edges, 0.1, 10);
  std::map<std::string, std::set<std::string>> by_argument;
  for (const Triplet& t : sp) by_argument[NormalizePhrase(t.head)].insert(t.relation);
  std::set<std::string> entities;
  for (const Markup& m : out.markups) entities.insert(NormalizePhrase(m.phrase));
  ASSERT_EQ(entities.size(), static_cast<size_t>(spec.n_entities));
  for (const std::string& e : entities) {
    EXPECT_EQ(by_argument[e], (std::set<std::string>{"dobj", "nsubj"})) << e;
  }
  for (const DepEdge& e : out.dep_edges) EXPECT_GE(e.count, 1);
}

TEST(SynthTest, DistractorTriplets) {
  SynthSpec spec;
  spec.n_docs = 30;
  spec.distractors_per_span = 4;
  const SynthOutput out = GenerateSynthetic(spec);
  std::map<std::string, int> per_head;
  for (const Triplet& t : out.triplets.triplets()) {
    if (t.source == KnowledgeSource::kOmcs) ++per_head[NormalizePhrase(t.head)];
  }
  ASSERT_EQ(per_head.size(), static_cast<size_t>(spec.n_entities));
  for (const auto& [head, n] : per_head) {
    EXPECT_GE(n, 4) << head;
    EXPECT_LE(n, 7) << head;
  }
}

}  // namespace
}  // namespace kgcoref
