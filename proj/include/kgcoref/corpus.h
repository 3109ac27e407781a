#ifndef KGCOREF_CORPUS_H_
#define KGCOREF_CORPUS_H_

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgcoref {

// Inclusive token range using document-level indices.
struct Span {
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  bool Contains(int token) const { return start <= token && token <= end; }
  auto operator<=>(const Span&) const = default;
};

enum class PronounType { kThirdPersonal, kPossessive, kDemonstrative, kNotAPronoun };

inline constexpr int kNumPronounTypes = 3;

const char* PronounTypeName(PronounType type);

// Case-insensitive membership test against the three closed pronoun lists.
PronounType ClassifyPronoun(std::string_view token_text);

struct Token {
  std::string text;
  int sentence_index = 0;
  int token_index = 0;  // document level
};

struct PronounInstance {
  Span span;  // always a single token
  PronounType type = PronounType::kThirdPersonal;
  std::vector<Span> gold_antecedents;  // sorted, unique
};

// A tokenized document. Treated as immutable once built by MakeDocument or
// LoadCorpus.
struct Document {
  std::string id;
  std::vector<Token> tokens;
  std::vector<int> sentence_offsets;  // num_sentences() + 1 entries
  std::vector<PronounInstance> pronouns;
  std::optional<std::vector<Span>> gold_mentions;

  int num_tokens() const { return static_cast<int>(tokens.size()); }
  int num_sentences() const { return static_cast<int>(sentence_offsets.size()) - 1; }
  int sentence_begin(int s) const { return sentence_offsets[s]; }
  int sentence_end(int s) const { return sentence_offsets[s + 1]; }  // exclusive
  int SentenceOf(int token) const { return tokens[token].sentence_index; }

  std::vector<std::string> SpanWords(Span span) const;
  std::string SpanText(Span span) const;
};

// One pronoun as written in the corpus file: position inside its sentence plus
// document-level antecedent spans.
struct PronounRecord {
  int sentence = 0;
  int token = 0;
  std::vector<Span> antecedents;
};

// Builds and validates a document. Throws ValidationError naming the doc id.
Document MakeDocument(std::string id, const std::vector<std::vector<std::string>>& sentences,
                      const std::vector<PronounRecord>& pronouns,
                      std::optional<std::vector<Span>> gold_mentions = std::nullopt);

// Parses one JSONL record. Throws ParseError for malformed JSON or a missing
// field and ValidationError for a violated invariant.
Document ParseDocument(std::string_view json_line);

// Serializes a document back to its JSONL record (no trailing newline).
std::string DocumentToJson(const Document& doc);

// Loads a JSONL corpus, one document per line, in file order. Blank lines are
// ignored. Throws ParseError with the line number for malformed lines and
// ValidationError with the doc id for invariant violations.
std::vector<Document> LoadCorpus(const std::string& path);
std::vector<Document> ParseCorpus(std::string_view text);

void SaveCorpus(const std::vector<Document>& docs, const std::string& path);

// First token and one-past-last token of the candidate window of a pronoun:
// the current sentence plus at most two preceding sentences, stopping before
// the pronoun token.
struct Window {
  int begin = 0;
  int end = 0;
};
Window CandidateWindow(const Document& doc, Span pronoun);

inline constexpr int kDefaultMaxSpanWidth = 10;

// Candidate antecedent spans of a pronoun, ordered by (start, end). In gold
// mode the document's gold mentions restricted to the window are returned,
// otherwise every span of width 1..max_width inside the window.
// Throws LookupError if the pronoun does not belong to doc.
std::vector<Span> EnumerateCandidates(const Document& doc, const PronounInstance& pronoun,
                                      int max_width, bool gold_mode);

}  // namespace kgcoref

#endif  // KGCOREF_CORPUS_H_
