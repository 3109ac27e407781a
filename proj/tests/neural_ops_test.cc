#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "kgcoref/error.h"
#include "kgcoref/neural.h"
#include "toy.h"

namespace kgcoref {
namespace {

using testing::MakeToyInstance;
using testing::ToyConfig;
using testing::ToyVocabulary;

Model ToyModel(const testing::ToyInstance& toy, Variant variant, uint64_t seed = 3) {
  Model model = CreateModel(ToyConfig(variant), ToyVocabulary(toy));
  model.params = InitParameters(model.config, model.vocab.size(), seed);
  for (auto& [name, m] : model.params.Blocks()) {
    if (name == "embeddings") continue;
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] += 0.01 * std::sin(1.0 + i);
  }
  return model;
}

TEST(LengthBucketTest, Table) {
  const std::vector<std::pair<int, int>> cases = {{1, 0},  {2, 1},  {3, 2},  {4, 3},  {5, 4},
                                                  {7, 4},  {8, 5},  {15, 5}, {16, 6}, {31, 6},
                                                  {32, 7}, {63, 7}, {64, 8}, {500, 8}};
  for (auto [width, bucket] : cases) EXPECT_EQ(LengthBucket(width), bucket) << width;
}

TEST(EncodeTest, ShapesAndOovColumn) {
  Rng rng(1);
  testing::ToyInstance toy = MakeToyInstance(rng);
  Model model = ToyModel(toy, Variant::kComplete);
  const Encoding enc = EncodeDocument(model, toy.doc, nullptr);
  EXPECT_EQ(enc.size(), toy.doc.num_tokens());
  EXPECT_EQ(enc.contextual.rows(), model.config.contextual_dim());
  EXPECT_EQ(enc.contextual.cols(), toy.doc.num_tokens());
  EXPECT_EQ(enc.embeddings.rows(), model.config.embed_dim);
  EXPECT_TRUE(model.params.embeddings.col(Vocabulary::kUnknown).isZero());
  EXPECT_THROW(EncodeDocument(model, toy.doc, nullptr, 1, 0), ValidationError);
}

TEST(EncodeTest, SentenceResetMakesSubrangesExact) {
  const Document doc = MakeDocument(
      "d", {{"the", "dog", "runs"}, {"the", "dog", "runs"}, {"it", "eats", "the", "apple"}},
      {PronounRecord{2, 0, {{0, 1}}}});
  Vocabulary vocab({"the", "dog", "runs", "it", "eats", "apple"});
  Model model = CreateModel(ToyConfig(Variant::kComplete), vocab);
  const Encoding full = EncodeDocument(model, doc, nullptr);
  EXPECT_TRUE(full.contextual.leftCols(3).isApprox(full.contextual.middleCols(3, 3), 0.0));
  const Encoding tail = EncodeDocument(model, doc, nullptr, 1, 2);
  EXPECT_EQ(tail.first_token, 3);
  EXPECT_EQ((tail.contextual - full.contextual.rightCols(7)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EncodeTest, UnknownWordsEmbedToZero) {
  const Document doc = MakeDocument("d", {{"blorf", "dog", "it"}}, {PronounRecord{0, 2, {}}});
  Model model = CreateModel(ToyConfig(Variant::kComplete), Vocabulary({"dog", "it"}));
  const Encoding enc = EncodeDocument(model, doc, nullptr);
  EXPECT_EQ(enc.ids[0], Vocabulary::kUnknown);
  EXPECT_TRUE(enc.embeddings.col(0).isZero());
  EXPECT_FALSE(enc.embeddings.col(1).isZero());
}

TEST(RepresentSpanTest, WidthOneAndAttentionSimplex) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    testing::ToyInstance toy = MakeToyInstance(rng);
    Model model = ToyModel(toy, Variant::kComplete);
    const Encoding enc = EncodeDocument(model, toy.doc, nullptr);
    const int h = model.config.contextual_dim();
    const int d = model.config.embed_dim;
    for (Span s : toy.candidates) {
      const SpanRepresentation r = RepresentSpan(model, enc, s);
      ASSERT_EQ(r.e.size(), model.config.span_dim());
      ASSERT_EQ(r.attention.size(), s.width());
      EXPECT_NEAR(r.attention.sum(), 1.0, 1e-12);
      EXPECT_GE(r.attention.minCoeff(), 0.0);
      EXPECT_EQ(r.e.segment(0, h), enc.contextual.col(enc.Local(s.start)));
      EXPECT_EQ(r.e.segment(h, h), enc.contextual.col(enc.Local(s.end)));
      EXPECT_EQ(r.e.tail(model.config.length_bucket_dim),
                model.params.length_buckets.col(LengthBucket(s.width())));
      Eigen::VectorXd hull = Eigen::VectorXd::Zero(d);
      for (int t = 0; t < s.width(); ++t) hull += r.attention[t] * enc.embeddings.col(enc.Local(s.start) + t);
      EXPECT_TRUE(r.e.segment(2 * h, d).isApprox(hull, 1e-12) || hull.isZero());
      if (s.width() == 1) {
        EXPECT_DOUBLE_EQ(r.attention[0], 1.0);
        EXPECT_EQ(r.e.segment(2 * h, d), enc.embeddings.col(enc.Local(s.start)));
      }
    }
  }
}

TEST(KnowledgeEmbeddingTest, MeanOfTailWords) {
  Model model = CreateModel(ToyConfig(Variant::kComplete), Vocabulary({"healthy", "food"}));
  model.params.embeddings.setRandom();
  model.params.embeddings.col(0).setZero();
  const Triplet both{{"the", "apple"}, "IsA", {"healthy", "food"}, 1.0, KnowledgeSource::kOmcs};
  const Eigen::VectorXd k = KnowledgeEmbedding(model, both);
  const Eigen::VectorXd expected =
      0.5 * (model.params.embeddings.col(model.vocab.Id("healthy")) +
             model.params.embeddings.col(model.vocab.Id("food")));
  EXPECT_TRUE(k.isApprox(expected, 1e-15));

  const Triplet oov{{"x"}, "r", {"food", "zzq"}, 1.0, KnowledgeSource::kOther};
  EXPECT_TRUE(KnowledgeEmbedding(model, oov).isApprox(
      0.5 * model.params.embeddings.col(model.vocab.Id("food")), 1e-15));
  const Triplet empty{{"x"}, "r", {}, 1.0, KnowledgeSource::kOther};
  EXPECT_THROW(KnowledgeEmbedding(model, empty), ValidationError);
}

TEST(KnowledgeAttendTest, ConvexCombination) {
  Rng rng(3);
  testing::ToyInstance toy = MakeToyInstance(rng);
  Model model = ToyModel(toy, Variant::kComplete);
  const int d = model.config.embed_dim;
  const Eigen::VectorXd es = Eigen::VectorXd::Random(model.config.span_dim());
  const Eigen::VectorXd ep = Eigen::VectorXd::Random(model.config.span_dim());
  std::vector<Eigen::VectorXd> ks;
  for (int i = 0; i < 4; ++i) ks.push_back(Eigen::VectorXd::Random(d));
  const KnowledgeAttention att = KnowledgeAttend(model, es, ep, ks);
  ASSERT_EQ(att.weights.size(), 4);
  EXPECT_NEAR(att.weights.sum(), 1.0, 1e-12);
  EXPECT_GE(att.weights.minCoeff(), 0.0);
  Eigen::VectorXd combo = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < 4; ++i) combo += att.weights[i] * ks[i];
  EXPECT_TRUE(att.o.isApprox(combo, 1e-12));
  for (int j = 0; j < d; ++j) {
    double lo = ks[0][j], hi = ks[0][j];
    for (const auto& k : ks) lo = std::min(lo, k[j]), hi = std::max(hi, k[j]);
    EXPECT_GE(att.o[j], lo - 1e-12);
    EXPECT_LE(att.o[j], hi + 1e-12);
  }

  const KnowledgeAttention single = KnowledgeAttend(model, es, ep, {ks[2]});
  EXPECT_DOUBLE_EQ(single.weights[0], 1.0);
  EXPECT_TRUE(single.o.isApprox(ks[2], 1e-15));

  const KnowledgeAttention none = KnowledgeAttend(model, es, ep, {});
  EXPECT_EQ(none.o.size(), d);
  EXPECT_TRUE(none.o.isZero());

  EXPECT_THROW(KnowledgeAttend(model, es.head(3), ep, ks), NumericError);
}

TEST(ScorePairTest, ZeroCoreferenceNetworkLeavesMentionScore) {
  Rng rng(4);
  testing::ToyInstance toy = MakeToyInstance(rng);
  Model model = ToyModel(toy, Variant::kComplete);
  model.params.nn_c.w3.setZero();
  model.params.nn_c.b3.setZero();
  SpanContext s{{0, 0}, Eigen::VectorXd::Random(model.config.span_dim()),
                Eigen::VectorXd::Random(model.config.knowledge_dim())};
  SpanContext p{{4, 4}, Eigen::VectorXd::Random(model.config.span_dim()),
                Eigen::VectorXd::Random(model.config.knowledge_dim())};
  Eigen::VectorXd input(s.e.size() + s.o.size());
  input << s.e, s.o;
  FeedForwardTrace trace;
  const double fm = FeedForwardForward(model.params.nn_m, input, nullptr, &trace);
  EXPECT_NEAR(ScorePair(model, s, p), fm, 1e-12);

  SpanContext bad = s;
  bad.o = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(ScorePair(model, bad, p), NumericError);
}

TEST(SelectTest, StrictThresholdAndNormalization) {
  const std::vector<Span> spans = {{0, 0}, {1, 1}};
  const std::vector<double> equal = {0.0, 0.0};
  EXPECT_EQ(Select(spans, equal, 0.4).size(), 2u);
  EXPECT_TRUE(Select(spans, equal, 0.5).empty());
  EXPECT_EQ(Select(spans, equal, 0.0).size(), 2u);

  const std::vector<double> scores = {1000.0, 0.0};
  const auto norm = Normalize(spans, scores);
  ASSERT_EQ(norm.size(), 2u);
  EXPECT_DOUBLE_EQ(norm[0].normalized, 1.0);
  EXPECT_TRUE(std::isfinite(norm[1].normalized));
  EXPECT_DOUBLE_EQ(norm[0].score, 1000.0);

  const std::vector<Span> three = {{0, 0}, {1, 1}, {2, 2}};
  const std::vector<double> s3 = {std::log(1.0), std::log(2.0), std::log(7.0)};
  const auto n3 = Normalize(three, s3);
  EXPECT_NEAR(n3[0].normalized, 0.1, 1e-15);
  EXPECT_NEAR(n3[1].normalized, 0.2, 1e-15);
  EXPECT_NEAR(n3[2].normalized, 0.7, 1e-15);
  const auto picked = Select(three, s3, 0.15);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0].span, (Span{1, 1}));
  EXPECT_EQ(picked[1].span, (Span{2, 2}));

  EXPECT_THROW(Select(std::vector<Span>{}, std::vector<double>{}, 0.1), ValidationError);
  EXPECT_THROW(Select(spans, equal, -0.1), ValidationError);
}

TEST(LossTest, MatchesLogSumExpAndEdgeCases) {
  Rng rng(5);
  for (Variant v : {Variant::kComplete, Variant::kWithoutKg, Variant::kWithoutAttention}) {
    for (int trial = 0; trial < 5; ++trial) {
      testing::ToyInstance toy = MakeToyInstance(rng);
      Model model = ToyModel(toy, v);
      const PreparedInstance inst = PrepareInstance(model, toy.graph, toy.doc, 0, toy.candidates);
      const LossResult r = InstanceLoss(model, inst, nullptr, nullptr);
      const std::vector<double> scores = ScoreCandidates(model, inst);
      ASSERT_EQ(r.scores.size(), scores.size());
      double all = 0, gold = 0;
      for (size_t i = 0; i < scores.size(); ++i) {
        EXPECT_NEAR(r.scores[i], scores[i], 1e-12);
        all += std::exp(scores[i]);
        if (inst.is_gold[i]) gold += std::exp(scores[i]);
      }
      EXPECT_NEAR(r.loss, std::log(all) - std::log(gold), 1e-10);
      EXPECT_GE(r.loss, 0.0);
    }
  }

  const Document doc = MakeDocument("d", {{"the", "dog", "saw", "it"}}, {PronounRecord{0, 3, {{1, 1}}}});
  Model model = CreateModel(ToyConfig(Variant::kComplete), Vocabulary({"the", "dog", "saw", "it"}));
  KnowledgeGraph graph;
  EXPECT_DOUBLE_EQ(Loss(model, doc, doc.pronouns[0], {{1, 1}}, graph, nullptr, nullptr).loss, 0.0);
  EXPECT_THROW(Loss(model, doc, doc.pronouns[0], {{0, 0}, {2, 2}}, graph, nullptr, nullptr),
               CoverageError);
  const Document none = MakeDocument("n", {{"the", "dog", "saw", "it"}}, {PronounRecord{0, 3, {}}});
  EXPECT_THROW(Loss(model, none, none.pronouns[0], {{1, 1}}, graph, nullptr, nullptr), CoverageError);
}

// The fused instance graph must agree with composing the public operations.
TEST(ScoreCandidatesTest, AgreesWithPublicOperations) {
  Rng rng(6);
  for (Variant v : {Variant::kComplete, Variant::kWithoutKg, Variant::kWithoutAttention}) {
    for (int trial = 0; trial < 6; ++trial) {
      testing::ToyInstance toy = MakeToyInstance(rng);
      Model model = ToyModel(toy, v, 10 + trial);
      const PreparedInstance inst = PrepareInstance(model, toy.graph, toy.doc, 0, toy.candidates);
      const std::vector<double> fused = ScoreCandidates(model, inst);
      const Encoding enc = EncodeDocument(model, toy.doc, nullptr, inst.first_sentence, inst.last_sentence);
      const Span ps = toy.doc.pronouns[0].span;
      const SpanRepresentation rp = RepresentSpan(model, enc, ps);
      auto knowledge = [&](Span s) {
        std::vector<Eigen::VectorXd> ks;
        for (const Triplet& t : toy.graph.Retrieve(toy.doc.SpanWords(s))) ks.push_back(KnowledgeEmbedding(model, t));
        return ks;
      };
      auto concat = [&](const std::vector<Eigen::VectorXd>& ks) {
        Eigen::VectorXd o = Eigen::VectorXd::Zero(model.config.knowledge_dim());
        const int d = model.config.embed_dim;
        for (int i = 0; i < std::min<int>(ks.size(), model.config.max_knowledge); ++i) o.segment(i * d, d) = ks[i];
        return o;
      };
      const auto kp = knowledge(ps);
      for (size_t c = 0; c < toy.candidates.size(); ++c) {
        const Span s = toy.candidates[c];
        const SpanRepresentation rs = RepresentSpan(model, enc, s);
        SpanContext cs{s, rs.e, {}}, cp{ps, rp.e, {}};
        if (v == Variant::kComplete) {
          cs.o = KnowledgeAttend(model, rs.e, rp.e, knowledge(s)).o;
          cp.o = KnowledgeAttend(model, rs.e, rp.e, kp).o;
        } else if (v == Variant::kWithoutAttention) {
          cs.o = concat(knowledge(s));
          cp.o = concat(kp);
        }
        EXPECT_NEAR(fused[c], ScorePair(model, cs, cp), 1e-10) << VariantName(v) << " " << c;
      }
    }
  }
}

TEST(ParametersTest, FlattenRoundTrip) {
  Rng rng(7);
  testing::ToyInstance toy = MakeToyInstance(rng);
  Model model = ToyModel(toy, Variant::kComplete);
  const Eigen::VectorXd flat = model.params.Flatten();
  EXPECT_EQ(static_cast<size_t>(flat.size()), model.params.NumValues());
  ModelParameters other = model.params.ZerosLike();
  other.Unflatten(flat);
  EXPECT_EQ(other.Flatten(), flat);
  EXPECT_THROW(other.Unflatten(flat.head(flat.size() - 1)), NumericError);

  ModelParameters rounded = model.params;
  rounded.RoundToFloat();
  const Eigen::VectorXd r = rounded.Flatten();
  for (Eigen::Index i = 0; i < r.size(); ++i) ASSERT_EQ(r[i], static_cast<double>(static_cast<float>(r[i])));
  rounded.RoundToFloat();
  EXPECT_EQ(rounded.Flatten(), r);
  EXPECT_TRUE(model.params.AllFinite());
  rounded.nn_m.b1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(rounded.AllFinite());
}

TEST(ParametersTest, InitIsSeededAndPinsOov) {
  const ModelConfig cfg = ToyConfig(Variant::kComplete);
  const ModelParameters a = InitParameters(cfg, 9, 42);
  const ModelParameters b = InitParameters(cfg, 9, 42);
  const ModelParameters c = InitParameters(cfg, 9, 43);
  EXPECT_EQ(a.Flatten(), b.Flatten());
  EXPECT_NE(a.Flatten(), c.Flatten());
  EXPECT_TRUE(a.embeddings.col(0).isZero());
  EXPECT_EQ(a.embeddings.cols(), 9);
}

}  // namespace
}  // namespace kgcoref
