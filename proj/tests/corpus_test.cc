#include "kgcoref/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "kgcoref/error.h"
#include "kgcoref/rng.h"

namespace kgcoref {
namespace {

std::string DataPath(const std::string& name) { return std::string(KGCOREF_TEST_DATA) + "/" + name; }

std::vector<std::vector<std::string>> Sentences(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  for (const std::string& line : lines) {
    std::vector<std::string> words;
    size_t pos = 0;
    while (pos < line.size()) {
      size_t next = line.find(' ', pos);
      if (next == std::string::npos) next = line.size();
      words.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    out.push_back(words);
  }
  return out;
}

TEST(ClassifyPronounTest, Examples) {
  EXPECT_EQ(ClassifyPronoun("his"), PronounType::kPossessive);
  EXPECT_EQ(ClassifyPronoun("those"), PronounType::kDemonstrative);
  EXPECT_EQ(ClassifyPronoun("table"), PronounType::kNotAPronoun);
  EXPECT_EQ(ClassifyPronoun("she"), PronounType::kThirdPersonal);
  EXPECT_EQ(ClassifyPronoun("himself"), PronounType::kNotAPronoun);
  EXPECT_EQ(ClassifyPronoun(""), PronounType::kNotAPronoun);
}

TEST(ClassifyPronounTest, ClosedListsAndCaseInsensitive) {
  const std::vector<std::string> third = {"she", "her", "he", "him", "them", "they", "it"};
  const std::vector<std::string> possessive = {"his", "hers", "its", "their", "theirs"};
  const std::vector<std::string> demonstrative = {"this", "that", "these", "those"};
  Rng rng(5);
  auto check = [&](const std::vector<std::string>& words, PronounType type) {
    for (const std::string& w : words) {
      for (int trial = 0; trial < 8; ++trial) {
        std::string cased = w;
        for (char& c : cased) {
          if (rng.Uniform() < 0.5) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        EXPECT_EQ(ClassifyPronoun(cased), type) << cased;
      }
    }
  };
  check(third, PronounType::kThirdPersonal);
  check(possessive, PronounType::kPossessive);
  check(demonstrative, PronounType::kDemonstrative);
}

TEST(LoadCorpusTest, EmptyFile) {
  EXPECT_TRUE(ParseCorpus("").empty());
  EXPECT_TRUE(ParseCorpus("\n\n").empty());
}

TEST(LoadCorpusTest, MinimalRecord) {
  const auto docs = ParseCorpus(
      R"({"doc_id":"d","sentences":[["I","saw","it"]],"pronouns":[{"sent":0,"tok":2,"antecedents":[]}]})");
  ASSERT_EQ(docs.size(), 1u);
  ASSERT_EQ(docs[0].pronouns.size(), 1u);
  EXPECT_EQ(docs[0].pronouns[0].span, (Span{2, 2}));
  EXPECT_EQ(docs[0].pronouns[0].type, PronounType::kThirdPersonal);
  EXPECT_TRUE(docs[0].pronouns[0].gold_antecedents.empty());
  EXPECT_FALSE(docs[0].gold_mentions.has_value());
}

TEST(LoadCorpusTest, TokenIndicesAndSentences) {
  const auto docs = ParseCorpus(
      R"({"doc_id":"d","sentences":[["the","dog","ran"],["it","barked"]],)"
      R"("pronouns":[{"sent":1,"tok":0,"antecedents":[[1,1],[0,1]]}],"gold_mentions":[[1,1],[0,1],[1,1]]})");
  ASSERT_EQ(docs.size(), 1u);
  const Document& d = docs[0];
  EXPECT_EQ(d.num_tokens(), 5);
  EXPECT_EQ(d.num_sentences(), 2);
  for (int t = 0; t < d.num_tokens(); ++t) EXPECT_EQ(d.tokens[t].token_index, t);
  EXPECT_EQ(d.SentenceOf(2), 0);
  EXPECT_EQ(d.SentenceOf(3), 1);
  EXPECT_EQ(d.pronouns[0].span, (Span{3, 3}));
  EXPECT_EQ(d.pronouns[0].gold_antecedents, (std::vector<Span>{{0, 1}, {1, 1}}));
  EXPECT_EQ(*d.gold_mentions, (std::vector<Span>{{0, 1}, {1, 1}}));
  EXPECT_EQ(d.SpanText({0, 1}), "the dog");
}

TEST(LoadCorpusTest, JsonRoundTrip) {
  const std::string line =
      R"({"doc_id":"d","gold_mentions":[[0,1]],"pronouns":[{"antecedents":[[0,1]],"sent":1,"tok":0}],)"
      R"("sentences":[["the","dog","ran"],["it","barked"]]})";
  const Document d = ParseDocument(line);
  const Document again = ParseDocument(DocumentToJson(d));
  EXPECT_EQ(DocumentToJson(again), DocumentToJson(d));
  EXPECT_EQ(again.pronouns[0].gold_antecedents, d.pronouns[0].gold_antecedents);
}

TEST(LoadCorpusTest, FileOrderPreserved) {
  std::string text;
  for (int i = 9; i >= 0; --i) {
    text += R"({"doc_id":"doc)" + std::to_string(i) + R"(","sentences":[["x"]],"pronouns":[]})" "\n";
  }
  const auto docs = ParseCorpus(text);
  ASSERT_EQ(docs.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(docs[i].id, "doc" + std::to_string(9 - i));
}

TEST(LoadCorpusTest, MissingFile) {
  EXPECT_THROW(LoadCorpus(DataPath("does_not_exist.jsonl")), LookupError);
}

TEST(LoadCorpusTest, BadJsonNamesLine) {
  try {
    LoadCorpus(DataPath("corpus_bad_json.jsonl"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ParseDocumentTest, MalformedRecordIsParseError) {
  EXPECT_THROW(ParseDocument("{not json"), ParseError);
  EXPECT_THROW(ParseDocument("[1, 2]"), ParseError);
  EXPECT_THROW(ParseDocument(R"({"doc_id": "d", "sentences": [["it"]], "pronouns": [{"tok": 0}]})"),
               ParseError);
  EXPECT_THROW(ParseDocument(R"({"doc_id": 3, "sentences": [["it"]]})"), ParseError);
  EXPECT_THROW(
      ParseDocument(R"({"doc_id": "d", "sentences": [["dog"]], "pronouns": [{"sent": 0, "tok": 0}]})"),
      ValidationError);
}

struct BadFixture {
  const char* file;
  bool parse_error;  // otherwise a validation error naming the doc id
};

class MalformedCorpusTest : public ::testing::TestWithParam<BadFixture> {};

TEST_P(MalformedCorpusTest, Rejected) {
  const BadFixture f = GetParam();
  const std::string path = DataPath(f.file);
  if (f.parse_error) {
    EXPECT_THROW(LoadCorpus(path), ParseError);
    return;
  }
  try {
    LoadCorpus(path);
    FAIL() << "expected ValidationError for " << f.file;
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("d1"), std::string::npos) << e.what();
  }
}

INSTANTIATE_TEST_SUITE_P(
    Fixtures, MalformedCorpusTest,
    ::testing::Values(BadFixture{"corpus_bad_json.jsonl", true},
                      BadFixture{"corpus_missing_doc_id.jsonl", true},
                      BadFixture{"corpus_not_object.jsonl", true},
                      BadFixture{"corpus_span_crosses_sentence.jsonl", false},
                      BadFixture{"corpus_span_reversed.jsonl", false},
                      BadFixture{"corpus_span_out_of_range.jsonl", false},
                      BadFixture{"corpus_not_a_pronoun.jsonl", false},
                      BadFixture{"corpus_antecedent_after_pronoun.jsonl", false},
                      BadFixture{"corpus_antecedent_outside_window.jsonl", false},
                      BadFixture{"corpus_duplicate_doc_id.jsonl", false},
                      BadFixture{"corpus_duplicate_pronoun.jsonl", false},
                      BadFixture{"corpus_empty_token.jsonl", false},
                      BadFixture{"corpus_pronoun_sentence_out_of_range.jsonl", false},
                      BadFixture{"corpus_mention_out_of_range.jsonl", false}),
    [](const ::testing::TestParamInfo<BadFixture>& info) {
      std::string name = info.param.file;
      name = name.substr(0, name.find('.'));
      return name;
    });

TEST(CandidateWindowTest, ThreeSentences) {
  const Document d = MakeDocument(
      "w", Sentences({"a b", "c", "d e", "f g", "h it"}), {PronounRecord{4, 1, {}}});
  const Window w = CandidateWindow(d, d.pronouns[0].span);
  EXPECT_EQ(w.begin, d.sentence_begin(2));
  EXPECT_EQ(w.end, d.pronouns[0].span.start);
}

TEST(EnumerateCandidatesTest, FirstSentenceExample) {
  const Document d = MakeDocument("e", Sentences({"the dog it"}), {PronounRecord{0, 2, {}}});
  const auto spans = EnumerateCandidates(d, d.pronouns[0], 2, false);
  EXPECT_EQ(spans, (std::vector<Span>{{0, 0}, {0, 1}, {1, 1}}));
}

TEST(EnumerateCandidatesTest, LateSentenceSkipsEarlySentences) {
  const Document d = MakeDocument("e", Sentences({"a b", "c d", "e f", "g h", "i j", "k it"}),
                                  {PronounRecord{5, 1, {}}});
  const auto spans = EnumerateCandidates(d, d.pronouns[0], 10, false);
  ASSERT_FALSE(spans.empty());
  for (Span s : spans) EXPECT_GE(d.SentenceOf(s.start), 3);
}

TEST(EnumerateCandidatesTest, GoldModePassthrough) {
  const Document d = MakeDocument("g", Sentences({"the dog saw it"}), {PronounRecord{0, 3, {{0, 1}}}},
                                  std::vector<Span>{{0, 1}});
  EXPECT_EQ(EnumerateCandidates(d, d.pronouns[0], 10, true), (std::vector<Span>{{0, 1}}));
}

TEST(EnumerateCandidatesTest, GoldModeRestrictsToWindow) {
  const Document d = MakeDocument("g", Sentences({"a dog", "b", "c", "d cat", "then it"}),
                                  {PronounRecord{4, 1, {{5, 5}}}},
                                  std::vector<Span>{{1, 1}, {5, 5}, {6, 6}, {7, 7}});
  EXPECT_EQ(EnumerateCandidates(d, d.pronouns[0], 10, true), (std::vector<Span>{{5, 5}, {6, 6}}));
}

TEST(EnumerateCandidatesTest, ForeignPronounIsLookupError) {
  const Document d = MakeDocument("a", Sentences({"the dog saw it"}), {PronounRecord{0, 3, {}}});
  PronounInstance stranger;
  stranger.span = Span{1, 1};
  EXPECT_THROW(EnumerateCandidates(d, stranger, 10, false), LookupError);
}

Document RandomDocument(Rng& rng, int index) {
  const std::vector<std::string> pronouns = {"it", "he", "his", "those", "they", "this"};
  std::vector<std::vector<std::string>> sentences;
  std::vector<PronounRecord> records;
  const int n_sent = 1 + static_cast<int>(rng.Below(6));
  for (int s = 0; s < n_sent; ++s) {
    const int len = 1 + static_cast<int>(rng.Below(8));
    std::vector<std::string> words;
    for (int t = 0; t < len; ++t) {
      if (rng.Uniform() < 0.2) {
        words.push_back(pronouns[rng.Below(pronouns.size())]);
        records.push_back(PronounRecord{s, t, {}});
      } else {
        words.push_back("w" + std::to_string(rng.Below(20)));
      }
    }
    sentences.push_back(words);
  }
  return MakeDocument("r" + std::to_string(index), sentences, records);
}

TEST(EnumerateCandidatesTest, RandomProperties) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Document d = RandomDocument(rng, trial);
    const int max_width = 1 + static_cast<int>(rng.Below(5));
    std::set<int> pronoun_tokens;
    for (const PronounInstance& p : d.pronouns) pronoun_tokens.insert(p.span.start);
    for (const PronounInstance& p : d.pronouns) {
      const auto spans = EnumerateCandidates(d, p, max_width, false);
      EXPECT_EQ(spans, EnumerateCandidates(d, p, max_width, false));
      EXPECT_TRUE(std::is_sorted(spans.begin(), spans.end()));
      EXPECT_EQ(std::adjacent_find(spans.begin(), spans.end()), spans.end());
      const int ps = d.SentenceOf(p.span.start);
      size_t expected = 0;
      for (int s = std::max(0, ps - 2); s <= ps; ++s) {
        const int end = s == ps ? p.span.start : d.sentence_end(s);
        const int n = end - d.sentence_begin(s);
        for (int w = 1; w <= std::min(n, max_width); ++w) expected += n - w + 1;
      }
      EXPECT_EQ(spans.size(), expected);
      for (Span s : spans) {
        EXPECT_LE(s.start, s.end);
        EXPECT_LE(s.width(), max_width);
        EXPECT_LT(s.end, p.span.start);
        EXPECT_EQ(d.SentenceOf(s.start), d.SentenceOf(s.end));
        EXPECT_GE(d.SentenceOf(s.start), ps - 2);
        EXPECT_FALSE(s.Contains(p.span.start));
      }
    }
  }
}

}  // namespace
}  // namespace kgcoref
