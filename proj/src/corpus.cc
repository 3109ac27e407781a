#include "kgcoref/corpus.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "corpus";

constexpr std::array<std::string_view, 7> kThirdPersonal = {"she", "her", "he", "him",
                                                            "them", "they", "it"};
constexpr std::array<std::string_view, 5> kPossessive = {"his", "hers", "its", "their",
                                                         "theirs"};
constexpr std::array<std::string_view, 4> kDemonstrative = {"this", "that", "these", "those"};

template <size_t N>
bool InList(const std::array<std::string_view, N>& list, std::string_view word) {
  return std::find(list.begin(), list.end(), word) != list.end();
}

[[noreturn]] void Invalid(const std::string& doc_id, const std::string& what) {
  throw ValidationError(kModule, "document '" + doc_id + "': " + what);
}

std::string SpanString(Span s) {
  return "[" + std::to_string(s.start) + "," + std::to_string(s.end) + "]";
}

void CheckSpan(const Document& doc, Span s, const char* what) {
  if (s.start < 0 || s.end >= doc.num_tokens() || s.start > s.end) {
    Invalid(doc.id, std::string(what) + " " + SpanString(s) + " is out of range");
  }
  if (doc.SentenceOf(s.start) != doc.SentenceOf(s.end)) {
    Invalid(doc.id, std::string(what) + " " + SpanString(s) + " crosses a sentence boundary");
  }
}

Span ParseSpan(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw std::invalid_argument("span must be a [start, end] integer pair");
  }
  return Span{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

const char* PronounTypeName(PronounType type) {
  switch (type) {
    case PronounType::kThirdPersonal:
      return "third_personal";
    case PronounType::kPossessive:
      return "possessive";
    case PronounType::kDemonstrative:
      return "demonstrative";
    case PronounType::kNotAPronoun:
      return "not_a_pronoun";
  }
  return "unknown";
}

PronounType ClassifyPronoun(std::string_view token_text) {
  std::string lower(token_text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (InList(kThirdPersonal, lower)) return PronounType::kThirdPersonal;
  if (InList(kPossessive, lower)) return PronounType::kPossessive;
  if (InList(kDemonstrative, lower)) return PronounType::kDemonstrative;
  return PronounType::kNotAPronoun;
}

std::vector<std::string> Document::SpanWords(Span span) const {
  std::vector<std::string> words;
  words.reserve(span.width());
  for (int i = span.start; i <= span.end; ++i) words.push_back(tokens[i].text);
  return words;
}

std::string Document::SpanText(Span span) const {
  std::string text;
  for (int i = span.start; i <= span.end; ++i) {
    if (i > span.start) text += ' ';
    text += tokens[i].text;
  }
  return text;
}

Window CandidateWindow(const Document& doc, Span pronoun) {
  const int sentence = doc.SentenceOf(pronoun.start);
  return Window{doc.sentence_begin(std::max(0, sentence - 2)), pronoun.start};
}

Document MakeDocument(std::string id, const std::vector<std::vector<std::string>>& sentences,
                      const std::vector<PronounRecord>& pronouns,
                      std::optional<std::vector<Span>> gold_mentions) {
  Document doc;
  doc.id = std::move(id);
  doc.sentence_offsets.push_back(0);
  for (size_t s = 0; s < sentences.size(); ++s) {
    for (const std::string& word : sentences[s]) {
      if (word.empty()) Invalid(doc.id, "empty token in sentence " + std::to_string(s));
      doc.tokens.push_back(Token{word, static_cast<int>(s), doc.num_tokens()});
    }
    doc.sentence_offsets.push_back(doc.num_tokens());
  }

  if (gold_mentions) {
    for (Span s : *gold_mentions) CheckSpan(doc, s, "gold mention");
    std::sort(gold_mentions->begin(), gold_mentions->end());
    gold_mentions->erase(std::unique(gold_mentions->begin(), gold_mentions->end()),
                         gold_mentions->end());
  }
  doc.gold_mentions = std::move(gold_mentions);

  for (const PronounRecord& rec : pronouns) {
    if (rec.sentence < 0 || rec.sentence >= doc.num_sentences()) {
      Invalid(doc.id, "pronoun sentence " + std::to_string(rec.sentence) + " is out of range");
    }
    const int length = doc.sentence_end(rec.sentence) - doc.sentence_begin(rec.sentence);
    if (rec.token < 0 || rec.token >= length) {
      Invalid(doc.id, "pronoun token " + std::to_string(rec.token) + " is out of range in sentence " +
                          std::to_string(rec.sentence));
    }
    const int position = doc.sentence_begin(rec.sentence) + rec.token;
    PronounInstance p;
    p.span = Span{position, position};
    p.type = ClassifyPronoun(doc.tokens[position].text);
    if (p.type == PronounType::kNotAPronoun) {
      Invalid(doc.id, "token '" + doc.tokens[position].text + "' is not a pronoun");
    }
    for (const PronounInstance& other : doc.pronouns) {
      if (other.span == p.span) Invalid(doc.id, "duplicate pronoun at token " + std::to_string(position));
    }
    const Window window = CandidateWindow(doc, p.span);
    for (Span a : rec.antecedents) {
      CheckSpan(doc, a, "antecedent");
      if (a.start < window.begin || a.end >= window.end) {
        Invalid(doc.id, "antecedent " + SpanString(a) + " of pronoun at token " +
                            std::to_string(position) + " is outside its candidate window");
      }
      p.gold_antecedents.push_back(a);
    }
    std::sort(p.gold_antecedents.begin(), p.gold_antecedents.end());
    p.gold_antecedents.erase(std::unique(p.gold_antecedents.begin(), p.gold_antecedents.end()),
                             p.gold_antecedents.end());
    doc.pronouns.push_back(std::move(p));
  }
  return doc;
}

namespace {

Document ParseRecord(std::string_view json_line) {
  const nlohmann::json j = nlohmann::json::parse(json_line);
  if (!j.is_object()) throw std::invalid_argument("record must be a JSON object");
  std::string id = j.at("doc_id").get<std::string>();
  const auto sentences = j.at("sentences").get<std::vector<std::vector<std::string>>>();
  std::vector<PronounRecord> pronouns;
  if (j.contains("pronouns")) {
    for (const auto& pj : j.at("pronouns")) {
      PronounRecord rec;
      rec.sentence = pj.at("sent").get<int>();
      rec.token = pj.at("tok").get<int>();
      if (pj.contains("antecedents")) {
        for (const auto& aj : pj.at("antecedents")) rec.antecedents.push_back(ParseSpan(aj));
      }
      pronouns.push_back(std::move(rec));
    }
  }
  std::optional<std::vector<Span>> mentions;
  if (j.contains("gold_mentions") && !j.at("gold_mentions").is_null()) {
    mentions.emplace();
    for (const auto& mj : j.at("gold_mentions")) mentions->push_back(ParseSpan(mj));
  }
  return MakeDocument(std::move(id), sentences, pronouns, std::move(mentions));
}

}  // namespace

Document ParseDocument(std::string_view json_line) {
  try {
    return ParseRecord(json_line);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(kModule, e.what());
  }
}

std::string DocumentToJson(const Document& doc) {
  nlohmann::json j;
  j["doc_id"] = doc.id;
  nlohmann::json sentences = nlohmann::json::array();
  for (int s = 0; s < doc.num_sentences(); ++s) {
    nlohmann::json words = nlohmann::json::array();
    for (int t = doc.sentence_begin(s); t < doc.sentence_end(s); ++t) words.push_back(doc.tokens[t].text);
    sentences.push_back(std::move(words));
  }
  j["sentences"] = std::move(sentences);
  nlohmann::json pronouns = nlohmann::json::array();
  for (const PronounInstance& p : doc.pronouns) {
    const int sentence = doc.SentenceOf(p.span.start);
    nlohmann::json antecedents = nlohmann::json::array();
    for (Span a : p.gold_antecedents) antecedents.push_back({a.start, a.end});
    pronouns.push_back({{"sent", sentence},
                        {"tok", p.span.start - doc.sentence_begin(sentence)},
                        {"antecedents", std::move(antecedents)}});
  }
  j["pronouns"] = std::move(pronouns);
  if (doc.gold_mentions) {
    nlohmann::json mentions = nlohmann::json::array();
    for (Span m : *doc.gold_mentions) mentions.push_back({m.start, m.end});
    j["gold_mentions"] = std::move(mentions);
  }
  return j.dump();
}

std::vector<Document> ParseCorpus(std::string_view text) {
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    Document doc;
    try {
      doc = ParseRecord(line);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(kModule, "line " + std::to_string(line_number) + ": " + e.what());
    }
    if (!ids.insert(doc.id).second) Invalid(doc.id, "duplicate doc_id");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> LoadCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError(kModule, "cannot open corpus file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCorpus(buffer.str());
}

void SaveCorpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LookupError(kModule, "cannot write corpus file " + path);
  for (const Document& doc : docs) out << DocumentToJson(doc) << '\n';
}

std::vector<Span> EnumerateCandidates(const Document& doc, const PronounInstance& pronoun,
                                      int max_width, bool gold_mode) {
  const bool found = std::any_of(doc.pronouns.begin(), doc.pronouns.end(),
                                 [&](const PronounInstance& p) { return p.span == pronoun.span; });
  if (!found) {
    throw LookupError(kModule, "pronoun at token " + std::to_string(pronoun.span.start) +
                                   " not found in document '" + doc.id + "'");
  }
  const Window window = CandidateWindow(doc, pronoun.span);
  std::vector<Span> spans;
  if (gold_mode) {
    if (!doc.gold_mentions) {
      throw ValidationError(kModule, "document '" + doc.id + "' has no gold mentions");
    }
    for (Span m : *doc.gold_mentions) {
      if (m.start >= window.begin && m.end < window.end) spans.push_back(m);
    }
    return spans;  // already sorted and unique
  }
  if (max_width < 1) throw ValidationError(kModule, "max_width must be positive");
  for (int start = window.begin; start < window.end; ++start) {
    const int sentence_end = doc.sentence_end(doc.SentenceOf(start));
    const int last = std::min({start + max_width - 1, sentence_end - 1, window.end - 1});
    for (int end = start; end <= last; ++end) spans.push_back(Span{start, end});
  }
  return spans;
}

}  // namespace kgcoref
