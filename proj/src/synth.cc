#include "kgcoref/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "kgcoref/error.h"
#include "kgcoref/rng.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "synth";

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> Tokens(std::string_view text) { return SplitWords(text); }

// Sentence patterns. {A} and {B} are the two entity slots, {F} a filler noun,
// {V} a verb and {P} the pronoun.
const std::vector<std::string> kEntityTemplates = {
    "the {A} and the {B} were near the {F} .",
    "we saw the {A} next to the {B} .",
    "the {A} stood beside the {B} today .",
    "there was the {A} and also the {B} .",
    "near the {F} , the {A} met the {B} .",
    "both the {A} and the {B} appeared again .",
    "the {A} or the {B} came by the {F} .",
    "yesterday the {A} passed the {B} .",
};

const std::vector<std::string> kFillerTemplates = {
    "the {F} {V} the {F} .",
    "a {F} was seen .",
    "nobody {V} the {F} .",
    "then the {F} {V} .",
};

enum class Form { kSubject, kObject, kPossessive };

const std::vector<std::string> kSubjectTemplates = {
    "{P} {V} the {F} again .",
    "then {P} {V} quietly .",
    "later {P} {V} near the {F} .",
    "and {P} {V} .",
    "after a while {P} {V} the {F} .",
    "soon {P} {V} once more .",
    "at noon {P} {V} by the {F} .",
    "{P} {V} , as usual .",
    "suddenly {P} {V} the {F} .",
    "in the end {P} {V} .",
};
const std::vector<std::string> kObjectTemplates = {
    "the {F} {V} {P} .",
    "someone {V} {P} later .",
    "we {V} {P} near the {F} .",
    "nobody {V} {P} .",
    "a {F} {V} {P} again .",
    "everyone {V} {P} at once .",
    "then a {F} {V} {P} .",
    "people say we {V} {P} .",
    "at dawn someone {V} {P} .",
    "the other {F} {V} {P} there .",
};
const std::vector<std::string> kPossessiveTemplates = {
    "{P} {F} was here .",
    "we saw {P} {F} .",
    "near {P} {F} , nothing moved .",
    "the {F} took {P} {F} .",
    "someone liked {P} {F} .",
    "{P} {F} looked new .",
    "nobody found {P} {F} .",
    "then {P} {F} fell over .",
    "a {F} sat on {P} {F} .",
    "we talked about {P} {F} .",
    "later {P} {F} was gone .",
    "{P} {F} stayed by the {F} .",
    "everyone noticed {P} {F} .",
    "the {F} hid {P} {F} again .",
    "beside {P} {F} lay a {F} .",
    "{P} old {F} was broken .",
    "somebody moved {P} {F} .",
    "after that {P} {F} was quiet .",
    "we never saw {P} {F} again .",
    "under {P} {F} was a {F} .",
};

const std::array<const char*, 3> kClassNames = {"test", "treatment", "problem"};
const std::vector<std::string> kDistractorRelations = {"RelatedTo",   "AtLocation", "UsedFor",
                                                       "HasProperty", "CapableOf",  "PartOf"};

struct Entity {
  std::string word;
  Plurality plurality = Plurality::kSingular;
  AnimacyGender ag = AnimacyGender::kInanimate;
  int cls = 0;
  std::string nsubj, dobj;
};

struct Lexicons {
  std::vector<std::string> nouns, verbs, tails, nsubj_preds, dobj_preds, class_preds;
};

std::string PseudoWord(Rng& rng) {
  static const std::string kConsonants = "bdfgklmnprstvz";
  static const std::string kVowels = "aeiou";
  std::string w;
  const int syllables = rng.Range(2, 3);
  for (int i = 0; i < syllables; ++i) {
    w += kConsonants[rng.Below(kConsonants.size())];
    w += kVowels[rng.Below(kVowels.size())];
  }
  if (rng.Bernoulli(0.3)) w += kConsonants[rng.Below(kConsonants.size())];
  return w;
}

std::vector<std::string> MakeWords(uint64_t seed, int n, std::set<std::string>* used) {
  Rng rng(seed);
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < n) {
    std::string w = PseudoWord(rng);
    if (used->insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::set<std::string> FunctionWords() {
  std::set<std::string> words;
  auto add = [&](const std::vector<std::string>& templates) {
    for (const std::string& t : templates) {
      for (const std::string& w : Tokens(t)) words.insert(w);
    }
  };
  add(kEntityTemplates);
  add(kFillerTemplates);
  add(kSubjectTemplates);
  add(kObjectTemplates);
  add(kPossessiveTemplates);
  for (const Markup& m : PronounMarkups()) words.insert(m.phrase[0]);
  for (const char* c : kClassNames) words.insert(c);
  for (const char* w : {"singular", "plural", "male", "female", "neutral", "inanimate", "is"}) {
    words.insert(w);
  }
  return words;
}

Lexicons DomainLexicons(const SynthSpec& spec, std::set<std::string>* used) {
  const uint64_t base = Fnv1a(spec.domain_tag);
  const int preds = std::max(12, (spec.n_entities + 4) / 5);
  Lexicons lex;
  lex.nouns = MakeWords(base ^ Fnv1a("nouns"), spec.vocab_size, used);
  lex.verbs = MakeWords(base ^ Fnv1a("verbs"), std::max(8, spec.vocab_size / 4), used);
  lex.tails = MakeWords(base ^ Fnv1a("tails"), std::max(16, spec.vocab_size / 2), used);
  lex.nsubj_preds = MakeWords(base ^ Fnv1a("nsubj"), preds, used);
  lex.dobj_preds = MakeWords(base ^ Fnv1a("dobj"), preds, used);
  lex.class_preds = MakeWords(base ^ Fnv1a("class"), 12, used);
  return lex;
}

std::string PronounFor(Form form, bool demonstrative, const Entity& e, Rng& rng) {
  if (demonstrative) {
    if (e.plurality == Plurality::kPlural) return rng.Bernoulli(0.5) ? "these" : "those";
    return rng.Bernoulli(0.5) ? "this" : "that";
  }
  if (e.plurality == Plurality::kPlural) {
    return form == Form::kSubject ? "they" : form == Form::kObject ? "them" : "their";
  }
  switch (e.ag) {
    case AnimacyGender::kMale:
      return form == Form::kSubject ? "he" : form == Form::kObject ? "him" : "his";
    case AnimacyGender::kFemale:
      return form == Form::kSubject ? "she" : "her";
    default:
      return form == Form::kPossessive ? "its" : "it";
  }
}

// Demonstratives only refer to plural or inanimate entities here.
bool DemonstrativeOk(const Entity& e) {
  return e.plurality == Plurality::kPlural || e.ag == AnimacyGender::kInanimate;
}

// Possessive "her" is indistinguishable from the object form, so female
// singular entities never take a possessive.
bool PossessiveOk(const Entity& e) {
  return e.plurality == Plurality::kPlural || e.ag != AnimacyGender::kFemale;
}

bool TypeOk(int type, const Entity& e) {
  return type == 2 ? DemonstrativeOk(e) : type == 1 ? PossessiveOk(e) : true;
}

struct Choice {
  std::string kind;
  int gold = -1;
  int distractor = -1;
  Form form = Form::kSubject;
  std::string verb;  // empty means a filler verb
};

class DocBuilder {
 public:
  DocBuilder(const Lexicons& lex, Rng& rng) : lex_(lex), rng_(rng) {}

  // Appends a sentence, filling slots; returns the document index of each
  // {A}, {B} and {P} slot (-1 if absent).
  struct Slots {
    int a = -1, b = -1, p = -1;
  };
  Slots Add(const std::string& pattern, const std::string& a, const std::string& b,
            const std::string& pronoun, const std::string& verb) {
    Slots slots;
    std::vector<std::string> sentence;
    for (const std::string& tok : Tokens(pattern)) {
      const int pos = offset_ + static_cast<int>(sentence.size());
      if (tok == "{A}") {
        slots.a = pos;
        mentions_.push_back({pos, pos});
        sentence.push_back(a);
      } else if (tok == "{B}") {
        slots.b = pos;
        mentions_.push_back({pos, pos});
        sentence.push_back(b);
      } else if (tok == "{P}") {
        slots.p = pos;
        sentence.push_back(pronoun);
      } else if (tok == "{F}") {
        mentions_.push_back({pos, pos});
        sentence.push_back(rng_.Pick(lex_.nouns));
      } else if (tok == "{V}") {
        sentence.push_back(verb.empty() ? rng_.Pick(lex_.verbs) : verb);
      } else {
        sentence.push_back(tok);
      }
    }
    offset_ += static_cast<int>(sentence.size());
    sentences_.push_back(std::move(sentence));
    return slots;
  }

  void AddFiller() { Add(rng_.Pick(kFillerTemplates), "", "", "", ""); }

  int num_sentences() const { return static_cast<int>(sentences_.size()); }
  const std::vector<std::vector<std::string>>& sentences() const { return sentences_; }
  int sentence_begin(int s) const {
    int begin = 0;
    for (int i = 0; i < s; ++i) begin += static_cast<int>(sentences_[i].size());
    return begin;
  }
  std::vector<Span> mentions() const {
    std::vector<Span> m = mentions_;
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    return m;
  }

 private:
  const Lexicons& lex_;
  Rng& rng_;
  int offset_ = 0;
  std::vector<std::vector<std::string>> sentences_;
  std::vector<Span> mentions_;
};

class Generator {
 public:
  Generator(const SynthSpec& spec, const Lexicons& lex, std::vector<Entity> entities)
      : spec_(spec), lex_(lex), entities_(std::move(entities)),
        rng_(spec.seed * 0x9e3779b97f4a7c15ULL ^ Fnv1a(spec.domain_tag) ^ 0x5eed) {}

  void Run(SynthOutput* out) {
    const int type_offset = rng_.Range(0, 2);
    for (int i = 0; i < spec_.n_docs; ++i) {
      const int type = (i + type_offset) % kNumPronounTypes;
      const bool dependent = rng_.Uniform() < spec_.knowledge_dependence;
      Choice c = dependent ? ChooseDependent(type) : ChooseIndependent(type);
      Emit(i, type, c, out);
    }
  }

 private:
  int RandomEntity() { return rng_.Below(entities_.size()); }

  Form SubjectOrObject() { return rng_.Bernoulli(0.5) ? Form::kSubject : Form::kObject; }

  Choice ChooseIndependent(int type) {
    Choice c;
    c.kind = "none";
    for (;;) {
      c.gold = RandomEntity();
      if (TypeOk(type, entities_[c.gold])) break;
    }
    c.distractor = -1;
    c.form = type == 1 ? Form::kPossessive : SubjectOrObject();
    return c;
  }

  // Tries to fill a choice for one knowledge kind with rejection sampling.
  bool TryKind(const std::string& kind, int type, Choice* c) {
    const bool dem = type == 2;
    c->kind = kind;
    c->verb.clear();
    c->form = type == 1 ? Form::kPossessive : SubjectOrObject();
    if (kind == "sp" || kind == "medical") {
      if (type == 1) return false;
      if (kind == "medical") c->form = Form::kSubject;
      c->kind = kind == "sp" ? (c->form == Form::kSubject ? "sp_nsubj" : "sp_dobj") : kind;
    }
    if (kind == "ag" && dem) return false;
    for (int attempt = 0; attempt < 400; ++attempt) {
      const Entity& g = entities_[c->gold = RandomEntity()];
      const Entity& d = entities_[c->distractor = RandomEntity()];
      if (c->gold == c->distractor) continue;
      if (!TypeOk(type, g)) continue;
      const bool same_features = g.plurality == d.plurality && g.ag == d.ag;
      if (kind == "plurality") {
        if (g.plurality != d.plurality) return true;
      } else if (kind == "ag") {
        if (g.plurality == Plurality::kSingular && d.plurality == Plurality::kSingular &&
            g.ag != d.ag) {
          return true;
        }
      } else if (kind == "sp") {
        const bool subj = c->form == Form::kSubject;
        const std::string& gp = subj ? g.nsubj : g.dobj;
        const std::string& dp = subj ? d.nsubj : d.dobj;
        if (same_features && gp != dp) {
          c->verb = gp;
          return true;
        }
      } else if (kind == "medical") {
        if (same_features && g.cls != d.cls) {
          c->verb = lex_.class_preds[g.cls * 4 + rng_.Below(4)];
          return true;
        }
      }
    }
    return false;
  }

  Choice ChooseDependent(int type) {
    std::vector<std::pair<std::string, double>> kinds;
    if (spec_.style == SynthStyle::kMedical) {
      kinds = {{"medical", 0.4}, {"plurality", 0.3}, {"sp", 0.3}};
    } else {
      kinds = {{"plurality", 0.4}, {"ag", 0.3}, {"sp", 0.3}};
    }
    // Drop kinds the pronoun type cannot express and renormalize.
    std::vector<std::pair<std::string, double>> allowed;
    double total = 0;
    for (const auto& [k, w] : kinds) {
      const bool ok = !(type == 1 && (k == "sp" || k == "medical")) && !(type == 2 && k == "ag");
      if (ok) {
        allowed.push_back({k, w});
        total += w;
      }
    }
    double r = rng_.Uniform() * total;
    std::string kind = allowed.back().first;
    for (const auto& [k, w] : allowed) {
      if (r < w) {
        kind = k;
        break;
      }
      r -= w;
    }
    Choice c;
    if (TryKind(kind, type, &c)) return c;
    for (const char* fallback : {"plurality", "ag"}) {
      if (TryKind(fallback, type, &c)) return c;
    }
    throw ValidationError(kModule, "cannot build a knowledge-dependent document");
  }

  void Emit(int index, int type, const Choice& c, SynthOutput* out) {
    DocBuilder doc(lex_, rng_);
    const Entity& g = entities_[c.gold];
    if (rng_.Bernoulli(0.3)) doc.AddFiller();

    std::string a = g.word;
    std::string b = c.distractor >= 0 ? entities_[c.distractor].word : rng_.Pick(lex_.nouns);
    const bool swap = rng_.Bernoulli(0.5);
    if (swap) std::swap(a, b);
    const DocBuilder::Slots es = doc.Add(rng_.Pick(kEntityTemplates), a, b, "", "");
    const Span gold_span = swap ? Span{es.b, es.b} : Span{es.a, es.a};
    const Span other_span = swap ? Span{es.a, es.a} : Span{es.b, es.b};

    if (rng_.Bernoulli(0.4)) doc.AddFiller();

    const bool dem = type == 2;
    const std::string pronoun = PronounFor(c.form, dem, g, rng_);
    const std::vector<std::string>& templates = c.form == Form::kSubject  ? kSubjectTemplates
                                                : c.form == Form::kObject ? kObjectTemplates
                                                                          : kPossessiveTemplates;
    const int ps = doc.num_sentences();
    const DocBuilder::Slots pslots = doc.Add(rng_.Pick(templates), "", "", pronoun, c.verb);

    PronounRecord record;
    record.sentence = ps;
    record.token = pslots.p - doc.sentence_begin(ps);
    record.antecedents = {gold_span};
    std::ostringstream id;
    id << spec_.domain_tag << "-" << spec_.seed << "-" << index;
    out->corpus.push_back(MakeDocument(id.str(), doc.sentences(), {record}, doc.mentions()));

    SynthDocInfo info;
    info.kind = c.kind;
    info.knowledge_dependent = c.distractor >= 0;
    info.gold = gold_span;
    info.distractor = c.distractor >= 0 ? other_span : gold_span;
    out->info.push_back(info);
  }

  const SynthSpec& spec_;
  const Lexicons& lex_;
  std::vector<Entity> entities_;
  Rng rng_;
};

std::vector<Entity> MakeEntities(const SynthSpec& spec, const Lexicons& lex,
                                 std::set<std::string>* used) {
  Rng rng(spec.seed ^ (Fnv1a(spec.domain_tag) * 31) ^ Fnv1a("entities"));
  std::vector<std::string> words =
      MakeWords(rng.Next(), spec.n_entities, used);
  std::vector<Entity> entities(spec.n_entities);
  for (int i = 0; i < spec.n_entities; ++i) {
    Entity& e = entities[i];
    e.word = words[i];
    e.plurality = rng.Bernoulli(0.4) ? Plurality::kPlural : Plurality::kSingular;
    const AnimacyGender ags[] = {AnimacyGender::kMale, AnimacyGender::kFemale,
                                 AnimacyGender::kInanimate};
    e.ag = ags[rng.Below(3)];
    e.cls = rng.Below(3);
  }
  // Fixed attributes for the first four so every knowledge kind is possible.
  entities[0].plurality = Plurality::kSingular;
  entities[0].ag = AnimacyGender::kMale;
  entities[1].plurality = Plurality::kPlural;
  entities[2].plurality = Plurality::kSingular;
  entities[2].ag = AnimacyGender::kFemale;
  entities[3].plurality = Plurality::kSingular;
  entities[3].ag = AnimacyGender::kInanimate;

  // Balanced predicate assignment: at most ceil(n / #predicates) <= 5
  // arguments per predicate.
  for (int pass = 0; pass < 2; ++pass) {
    const std::vector<std::string>& preds = pass == 0 ? lex.nsubj_preds : lex.dobj_preds;
    std::vector<int> order(spec.n_entities);
    for (int i = 0; i < spec.n_entities; ++i) order[i] = i;
    rng.Shuffle(order);
    for (int i = 0; i < spec.n_entities; ++i) {
      (pass == 0 ? entities[order[i]].nsubj : entities[order[i]].dobj) = preds[i % preds.size()];
    }
  }
  return entities;
}

}  // namespace

const char* SynthStyleName(SynthStyle style) {
  return style == SynthStyle::kMedical ? "medical" : "general";
}

SynthStyle ParseSynthStyle(std::string_view name) {
  const std::string n = NormalizePhrase(SplitWords(name));
  if (n == "general") return SynthStyle::kGeneral;
  if (n == "medical") return SynthStyle::kMedical;
  throw ValidationError(kModule, "unknown synthetic style '" + std::string(name) + "'");
}

void SynthSpec::Validate() const {
  if (n_docs < 1) throw ValidationError(kModule, "n_docs must be at least 1");
  if (n_entities < 4) throw ValidationError(kModule, "n_entities must be at least 4");
  if (vocab_size < 1) throw ValidationError(kModule, "vocab_size must be at least 1");
  if (!(knowledge_dependence >= 0.0 && knowledge_dependence <= 1.0)) {
    throw ValidationError(kModule, "knowledge_dependence must lie in [0, 1]");
  }
  if (distractors_per_span < 0) throw ValidationError(kModule, "distractors_per_span must be >= 0");
  if (domain_tag.empty()) throw ValidationError(kModule, "domain_tag must not be empty");
}

SynthOutput GenerateSynthetic(const SynthSpec& spec) {
  spec.Validate();
  std::set<std::string> used = FunctionWords();
  const Lexicons lex = DomainLexicons(spec, &used);
  std::vector<Entity> entities = MakeEntities(spec, lex, &used);

  SynthOutput out;
  Rng rng(spec.seed ^ Fnv1a(spec.domain_tag) ^ Fnv1a("knowledge"));
  for (const Entity& e : entities) {
    out.markups.push_back(Markup{{e.word}, e.plurality, e.ag});

    std::vector<Triplet> own;
    if (spec.distractors_per_span > 0) {
      const int n = rng.Range(spec.distractors_per_span, spec.distractors_per_span + 3);
      for (int i = 0; i < n; ++i) {
        Triplet t;
        t.head = {e.word};
        t.relation = rng.Pick(kDistractorRelations);
        t.tail = {rng.Pick(lex.tails)};
        if (rng.Bernoulli(0.3)) t.tail.push_back(rng.Pick(lex.tails));
        t.confidence = 3.0;
        t.source = KnowledgeSource::kOmcs;
        own.push_back(std::move(t));
      }
    }
    if (spec.style == SynthStyle::kMedical) {
      own.push_back(Triplet{{e.word}, "is", {kClassNames[e.cls]}, 3.0, KnowledgeSource::kMedical});
    }
    rng.Shuffle(own);
    for (Triplet& t : own) out.triplets.Add(std::move(t));

    out.dep_edges.push_back(DepEdge{e.nsubj, e.word, DepRelation::kNsubj, rng.Range(25, 35)});
    out.dep_edges.push_back(DepEdge{e.dobj, e.word, DepRelation::kDobj, rng.Range(25, 35)});
  }
  // Low-count noise that the count filter removes.
  for (int pass = 0; pass < 2; ++pass) {
    const auto& preds = pass == 0 ? lex.nsubj_preds : lex.dobj_preds;
    for (const std::string& p : preds) {
      for (int i = 0; i < 3; ++i) {
        out.dep_edges.push_back(DepEdge{p, entities[rng.Below(entities.size())].word,
                                        pass == 0 ? DepRelation::kNsubj : DepRelation::kDobj,
                                        rng.Range(1, 3)});
      }
    }
  }

  Generator(spec, lex, std::move(entities)).Run(&out);
  return out;
}

KnowledgeGraph SynthKnowledgeGraph(const SynthOutput& out) {
  return BuildKnowledgeGraph(out.triplets, out.markups, out.dep_edges, 0.1, 10, true);
}

std::vector<std::string> SynthPronounTemplates(PronounType type) {
  std::vector<std::string> out;
  if (type == PronounType::kPossessive) return kPossessiveTemplates;
  if (type == PronounType::kNotAPronoun) return out;
  out = kSubjectTemplates;
  out.insert(out.end(), kObjectTemplates.begin(), kObjectTemplates.end());
  return out;
}

void WriteSynthetic(const SynthOutput& out, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LookupError(kModule, "cannot create directory '" + dir + "'");
  const std::filesystem::path base(dir);
  SaveCorpus(out.corpus, (base / "corpus.jsonl").string());
  SaveTriplets(out.triplets, (base / "triplets.tsv").string());
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(base / name, std::ios::binary);
    if (!f) throw LookupError(kModule, "cannot write '" + (base / name).string() + "'");
    f << text;
  };
  write("markups.tsv", MarkupsToTsv(out.markups));
  write("edges.tsv", DepEdgesToTsv(out.dep_edges));
}

}  // namespace kgcoref
