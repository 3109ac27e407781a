#include "kgcoref/neural.h"

#include <algorithm>
#include <cmath>

#include "kgcoref/error.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "neural";

// Offsets of the blocks inside the NN_c input
// [e_s, o_s, e_p, o_p, e_s*e_p, o_s*o_p]; o blocks are empty for kWithoutKg.
struct CorefLayout {
  Eigen::Index e, o;
  Eigen::Index es() const { return 0; }
  Eigen::Index os() const { return e; }
  Eigen::Index ep() const { return e + o; }
  Eigen::Index op() const { return 2 * e + o; }
  Eigen::Index esep() const { return 2 * e + 2 * o; }
  Eigen::Index osop() const { return 3 * e + 2 * o; }
  Eigen::Index size() const { return 3 * e + 3 * o; }
};

Eigen::VectorXd MentionInput(const Eigen::VectorXd& e_s, const Eigen::VectorXd& o_s) {
  Eigen::VectorXd in(e_s.size() + o_s.size());
  in << e_s, o_s;
  return in;
}

Eigen::VectorXd CorefInput(const CorefLayout& l, const Eigen::VectorXd& e_s,
                           const Eigen::VectorXd& o_s, const Eigen::VectorXd& e_p,
                           const Eigen::VectorXd& o_p) {
  Eigen::VectorXd in(l.size());
  in.segment(l.es(), l.e) = e_s;
  in.segment(l.os(), l.o) = o_s;
  in.segment(l.ep(), l.e) = e_p;
  in.segment(l.op(), l.o) = o_p;
  in.segment(l.esep(), l.e) = e_s.cwiseProduct(e_p);
  in.segment(l.osop(), l.o) = o_s.cwiseProduct(o_p);
  return in;
}

// e = [x*_start, x*_end, sum_t a_t x_t, phi(width)] given per-token logits.
Eigen::VectorXd BuildSpanVector(const Model& model, const Encoding& enc, Span span,
                                const std::vector<double>& alpha, Eigen::VectorXd* attention) {
  const ModelConfig& cfg = model.config;
  const int a = enc.Local(span.start);
  const int b = enc.Local(span.end);
  if (a < 0 || b >= enc.size() || a > b) {
    throw LookupError(kModule, "span outside the encoded range");
  }
  Eigen::VectorXd logits(b - a + 1);
  for (int t = a; t <= b; ++t) logits[t - a] = alpha[t];
  *attention = Softmax(logits);
  const int c = cfg.contextual_dim();
  Eigen::VectorXd e(cfg.span_dim());
  e.segment(0, c) = enc.contextual.col(a);
  e.segment(c, c) = enc.contextual.col(b);
  e.segment(2 * c, cfg.embed_dim) = enc.embeddings.middleCols(a, b - a + 1) * *attention;
  e.segment(2 * c + cfg.embed_dim, cfg.length_bucket_dim) =
      model.params.length_buckets.col(LengthBucket(span.width()));
  return e;
}

Eigen::VectorXd MeanEmbedding(const ModelParameters& params, const std::vector<int>& tail_ids) {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(params.embeddings.rows());
  for (int id : tail_ids) k += params.embeddings.col(id);
  return k / static_cast<double>(tail_ids.size());
}

void EncodeBackward(const Model& model, const Encoding& enc, Eigen::MatrixXd dcontextual,
                    const Eigen::MatrixXd& dembeddings, ModelParameters* grad) {
  const int h = model.config.lstm_hidden;
  if (enc.output_mask.size()) dcontextual.array() *= enc.output_mask.array();
  Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(model.config.embed_dim, enc.size());
  Eigen::MatrixXd dx;
  for (const Encoding::Sentence& s : enc.sentences) {
    LstmBackward(model.params.lstm_forward, s.forward,
                 dcontextual.block(0, s.begin, h, s.length), &grad->lstm_forward, &dx);
    dinput.middleCols(s.begin, s.length) += dx;
    const Eigen::MatrixXd dback = dcontextual.block(h, s.begin, h, s.length).rowwise().reverse();
    LstmBackward(model.params.lstm_backward, s.backward, dback, &grad->lstm_backward, &dx);
    dinput.middleCols(s.begin, s.length) += dx.rowwise().reverse();
  }
  if (enc.input_mask.size()) dinput.array() *= enc.input_mask.array();
  dinput += dembeddings;
  for (int t = 0; t < enc.size(); ++t) {
    if (enc.ids[t] != Vocabulary::kUnknown) grad->embeddings.col(enc.ids[t]) += dinput.col(t);
  }
}

// Forward pass over one prepared pronoun instance with everything the
// backward pass needs kept alive.
class InstanceGraph {
 public:
  InstanceGraph(const Model& model, const PreparedInstance& inst, Dropout* dropout);

  const std::vector<double>& scores() const { return scores_; }
  void Backward(const std::vector<double>& dscores, ModelParameters* grad) const;

 private:
  struct Attention {
    Eigen::VectorXd o, weights;
    std::vector<FeedForwardTrace> traces;
  };
  struct Pair {
    Eigen::VectorXd o_s, o_p;
    Attention att_s, att_p;
    FeedForwardTrace mention, coref;
  };

  Attention Attend(const Eigen::VectorXd& pre_context, int span_index, Dropout* dropout) const;
  void AttendBackward(const Attention& att, int span_index, const Eigen::VectorXd& d_o,
                      Eigen::VectorXd* d_pre_context, std::vector<Eigen::VectorXd>* dk_span,
                      std::vector<Eigen::VectorXd>* dproj_span, ModelParameters* grad) const;

  const Model& model_;
  const PreparedInstance& inst_;
  CorefLayout layout_;
  int pronoun_slot_;
  Encoding enc_;
  std::vector<double> alpha_;
  std::vector<char> alpha_used_;
  std::vector<FeedForwardTrace> alpha_traces_;
  std::vector<Span> spans_;
  std::vector<Eigen::VectorXd> e_;
  std::vector<Eigen::VectorXd> attention_;
  std::vector<std::vector<Eigen::VectorXd>> k_;
  std::vector<std::vector<Eigen::VectorXd>> kproj_;
  Eigen::VectorXd pronoun_context_;
  Eigen::VectorXd fixed_o_p_;
  std::vector<Eigen::VectorXd> fixed_o_;
  std::vector<Pair> pairs_;
  std::vector<double> scores_;
};

InstanceGraph::InstanceGraph(const Model& model, const PreparedInstance& inst, Dropout* dropout)
    : model_(model), inst_(inst) {
  const ModelConfig& cfg = model.config;
  const ModelParameters& p = model.params;
  const Variant variant = cfg.variant;
  layout_ = CorefLayout{cfg.span_dim(), cfg.knowledge_dim()};

  enc_ = EncodeDocument(model, *inst.doc, dropout, inst.first_sentence, inst.last_sentence);

  spans_ = inst.candidates;
  spans_.push_back(inst.pronoun().span);
  pronoun_slot_ = static_cast<int>(spans_.size()) - 1;

  alpha_.assign(enc_.size(), 0.0);
  alpha_used_.assign(enc_.size(), 0);
  alpha_traces_.resize(enc_.size());
  for (const Span& s : spans_) {
    for (int t = s.start; t <= s.end; ++t) alpha_used_[enc_.Local(t)] = 1;
  }
  for (int t = 0; t < enc_.size(); ++t) {
    if (!alpha_used_[t]) continue;
    alpha_[t] = FeedForwardForward(p.nn_alpha, enc_.contextual.col(t), dropout, &alpha_traces_[t]);
  }

  e_.resize(spans_.size());
  attention_.resize(spans_.size());
  for (size_t j = 0; j < spans_.size(); ++j) {
    e_[j] = BuildSpanVector(model, enc_, spans_[j], alpha_, &attention_[j]);
  }

  const int d = cfg.embed_dim;
  const int e = cfg.span_dim();
  k_.resize(spans_.size());
  if (variant != Variant::kWithoutKg) {
    for (size_t j = 0; j < spans_.size(); ++j) {
      for (const std::vector<int>& tail : inst.knowledge[j]) {
        k_[j].push_back(MeanEmbedding(p, tail));
      }
    }
  }

  if (variant == Variant::kComplete) {
    const auto proj = p.nn_beta.w1.middleCols(2 * e, d);
    kproj_.resize(spans_.size());
    for (size_t j = 0; j < spans_.size(); ++j) {
      for (const Eigen::VectorXd& k : k_[j]) kproj_[j].push_back(proj * k);
    }
    pronoun_context_ = p.nn_beta.w1.middleCols(e, e) * e_[pronoun_slot_];
  } else {
    auto concat = [&](int j) {
      Eigen::VectorXd o = Eigen::VectorXd::Zero(layout_.o);
      for (size_t i = 0; i < k_[j].size(); ++i) o.segment(i * d, d) = k_[j][i];
      return o;
    };
    fixed_o_.resize(spans_.size());
    for (size_t j = 0; j < spans_.size(); ++j) fixed_o_[j] = concat(static_cast<int>(j));
  }

  const Eigen::VectorXd& e_p = e_[pronoun_slot_];
  pairs_.resize(inst.candidates.size());
  scores_.resize(inst.candidates.size());
  for (size_t s = 0; s < inst.candidates.size(); ++s) {
    Pair& pair = pairs_[s];
    if (variant == Variant::kComplete) {
      const Eigen::VectorXd pre_context =
          p.nn_beta.w1.leftCols(e) * e_[s] + pronoun_context_ + p.nn_beta.b1;
      pair.att_s = Attend(pre_context, static_cast<int>(s), dropout);
      pair.att_p = Attend(pre_context, pronoun_slot_, dropout);
      pair.o_s = pair.att_s.o;
      pair.o_p = pair.att_p.o;
    } else {
      pair.o_s = fixed_o_[s];
      pair.o_p = fixed_o_[pronoun_slot_];
    }
    const double f_m =
        FeedForwardForward(p.nn_m, MentionInput(e_[s], pair.o_s), dropout, &pair.mention);
    const double f_c = FeedForwardForward(p.nn_c, CorefInput(layout_, e_[s], pair.o_s, e_p, pair.o_p),
                                          dropout, &pair.coref);
    scores_[s] = f_m + f_c;
  }
}

InstanceGraph::Attention InstanceGraph::Attend(const Eigen::VectorXd& pre_context, int span_index,
                                               Dropout* dropout) const {
  Attention att;
  const auto& ks = k_[span_index];
  att.o = Eigen::VectorXd::Zero(model_.config.embed_dim);
  if (ks.empty()) return att;
  Eigen::VectorXd logits(ks.size());
  att.traces.resize(ks.size());
  for (size_t i = 0; i < ks.size(); ++i) {
    logits[i] = FeedForwardFromPre(model_.params.nn_beta, pre_context + kproj_[span_index][i],
                                   dropout, &att.traces[i]);
  }
  att.weights = Softmax(logits);
  for (size_t i = 0; i < ks.size(); ++i) att.o += att.weights[i] * ks[i];
  return att;
}

void InstanceGraph::AttendBackward(const Attention& att, int span_index, const Eigen::VectorXd& d_o,
                                   Eigen::VectorXd* d_pre_context,
                                   std::vector<Eigen::VectorXd>* dk_span,
                                   std::vector<Eigen::VectorXd>* dproj_span,
                                   ModelParameters* grad) const {
  const auto& ks = k_[span_index];
  if (ks.empty()) return;
  Eigen::VectorXd dw(ks.size());
  for (size_t i = 0; i < ks.size(); ++i) {
    (*dk_span)[i] += att.weights[i] * d_o;
    dw[i] = ks[i].dot(d_o);
  }
  const double mean = att.weights.dot(dw);
  for (size_t i = 0; i < ks.size(); ++i) {
    const double dlogit = att.weights[i] * (dw[i] - mean);
    const Eigen::VectorXd dpre =
        FeedForwardBackwardToPre(model_.params.nn_beta, att.traces[i], dlogit, &grad->nn_beta);
    *d_pre_context += dpre;
    (*dproj_span)[i] += dpre;
  }
}

void InstanceGraph::Backward(const std::vector<double>& dscores, ModelParameters* grad) const {
  const ModelConfig& cfg = model_.config;
  const ModelParameters& p = model_.params;
  const int e = cfg.span_dim();
  const int d = cfg.embed_dim;
  const CorefLayout& l = layout_;
  const Eigen::VectorXd& e_p = e_[pronoun_slot_];

  std::vector<Eigen::VectorXd> de(spans_.size(), Eigen::VectorXd::Zero(e));
  std::vector<std::vector<Eigen::VectorXd>> dk(spans_.size());
  std::vector<std::vector<Eigen::VectorXd>> dproj(spans_.size());
  for (size_t j = 0; j < spans_.size(); ++j) {
    dk[j].assign(k_[j].size(), Eigen::VectorXd::Zero(d));
    dproj[j].assign(k_[j].size(), Eigen::VectorXd::Zero(cfg.ffn_hidden));
  }
  Eigen::VectorXd d_fixed_o_p = Eigen::VectorXd::Zero(l.o);

  for (size_t s = 0; s < pairs_.size(); ++s) {
    const double df = dscores[s];
    if (df == 0.0) continue;
    const Pair& pair = pairs_[s];
    const Eigen::VectorXd dm = FeedForwardBackward(p.nn_m, pair.mention, df, &grad->nn_m);
    const Eigen::VectorXd dc = FeedForwardBackward(p.nn_c, pair.coref, df, &grad->nn_c);
    de[s] += dm.head(e) + dc.segment(l.es(), e) + dc.segment(l.esep(), e).cwiseProduct(e_p);
    de[pronoun_slot_] += dc.segment(l.ep(), e) + dc.segment(l.esep(), e).cwiseProduct(e_[s]);
    const Eigen::VectorXd d_o_s = dm.tail(l.o) + dc.segment(l.os(), l.o) +
                                  dc.segment(l.osop(), l.o).cwiseProduct(pair.o_p);
    const Eigen::VectorXd d_o_p =
        dc.segment(l.op(), l.o) + dc.segment(l.osop(), l.o).cwiseProduct(pair.o_s);

    if (cfg.variant == Variant::kComplete) {
      Eigen::VectorXd d_pre_context = Eigen::VectorXd::Zero(cfg.ffn_hidden);
      AttendBackward(pair.att_s, static_cast<int>(s), d_o_s, &d_pre_context, &dk[s], &dproj[s], grad);
      AttendBackward(pair.att_p, pronoun_slot_, d_o_p, &d_pre_context, &dk[pronoun_slot_],
                     &dproj[pronoun_slot_], grad);
      grad->nn_beta.w1.leftCols(e).noalias() += d_pre_context * e_[s].transpose();
      grad->nn_beta.w1.middleCols(e, e).noalias() += d_pre_context * e_p.transpose();
      grad->nn_beta.b1 += d_pre_context;
      de[s].noalias() += p.nn_beta.w1.leftCols(e).transpose() * d_pre_context;
      de[pronoun_slot_].noalias() += p.nn_beta.w1.middleCols(e, e).transpose() * d_pre_context;
    } else if (cfg.variant == Variant::kWithoutAttention) {
      for (size_t i = 0; i < k_[s].size(); ++i) dk[s][i] += d_o_s.segment(i * d, d);
      d_fixed_o_p += d_o_p;
    }
  }
  if (cfg.variant == Variant::kWithoutAttention) {
    for (size_t i = 0; i < k_[pronoun_slot_].size(); ++i) {
      dk[pronoun_slot_][i] += d_fixed_o_p.segment(i * d, d);
    }
  }

  // Knowledge vectors: projection into NN_beta, then back to the tail words.
  for (size_t j = 0; j < spans_.size(); ++j) {
    for (size_t i = 0; i < k_[j].size(); ++i) {
      if (cfg.variant == Variant::kComplete) {
        grad->nn_beta.w1.middleCols(2 * e, d).noalias() += dproj[j][i] * k_[j][i].transpose();
        dk[j][i].noalias() += p.nn_beta.w1.middleCols(2 * e, d).transpose() * dproj[j][i];
      }
      const std::vector<int>& tail = inst_.knowledge[j][i];
      const double scale = 1.0 / static_cast<double>(tail.size());
      for (int id : tail) {
        if (id != Vocabulary::kUnknown) grad->embeddings.col(id) += scale * dk[j][i];
      }
    }
  }

  // Span vectors back to token-level gradients.
  const int c = cfg.contextual_dim();
  Eigen::MatrixXd dcontextual = Eigen::MatrixXd::Zero(c, enc_.size());
  Eigen::MatrixXd dembeddings = Eigen::MatrixXd::Zero(d, enc_.size());
  std::vector<double> dalpha(enc_.size(), 0.0);
  for (size_t j = 0; j < spans_.size(); ++j) {
    const Span span = spans_[j];
    const int a = enc_.Local(span.start);
    const int width = span.width();
    dcontextual.col(a) += de[j].segment(0, c);
    dcontextual.col(enc_.Local(span.end)) += de[j].segment(c, c);
    const Eigen::VectorXd dxhat = de[j].segment(2 * c, d);
    grad->length_buckets.col(LengthBucket(width)) += de[j].segment(2 * c + d, cfg.length_bucket_dim);
    const Eigen::VectorXd& att = attention_[j];
    Eigen::VectorXd datt(width);
    for (int t = 0; t < width; ++t) {
      dembeddings.col(a + t) += att[t] * dxhat;
      datt[t] = enc_.embeddings.col(a + t).dot(dxhat);
    }
    const double mean = att.dot(datt);
    for (int t = 0; t < width; ++t) dalpha[a + t] += att[t] * (datt[t] - mean);
  }
  for (int t = 0; t < enc_.size(); ++t) {
    if (!alpha_used_[t]) continue;
    dcontextual.col(t) += FeedForwardBackward(p.nn_alpha, alpha_traces_[t], dalpha[t], &grad->nn_alpha);
  }
  EncodeBackward(model_, enc_, std::move(dcontextual), dembeddings, grad);
}

}  // namespace

Encoding EncodeDocument(const Model& model, const Document& doc, Dropout* dropout,
                        int first_sentence, int last_sentence) {
  if (last_sentence < 0) last_sentence = doc.num_sentences() - 1;
  if (first_sentence < 0 || last_sentence >= doc.num_sentences() || first_sentence > last_sentence) {
    throw ValidationError(kModule, "document '" + doc.id + "' has no sentences to encode");
  }
  const ModelConfig& cfg = model.config;
  const ModelParameters& p = model.params;
  Encoding enc;
  enc.first_token = doc.sentence_begin(first_sentence);
  const int n = doc.sentence_end(last_sentence) - enc.first_token;
  if (n == 0) throw ValidationError(kModule, "document '" + doc.id + "' is empty");
  enc.ids.resize(n);
  enc.embeddings.resize(cfg.embed_dim, n);
  for (int t = 0; t < n; ++t) {
    enc.ids[t] = model.vocab.Id(doc.tokens[enc.first_token + t].text);
    enc.embeddings.col(t) = p.embeddings.col(enc.ids[t]);
  }
  Eigen::MatrixXd lstm_input = enc.embeddings;
  if (dropout) {
    enc.input_mask = dropout->Mask(cfg.embed_dim, n);
    if (enc.input_mask.size()) lstm_input.array() *= enc.input_mask.array();
  }
  const int h = cfg.lstm_hidden;
  enc.contextual.resize(2 * h, n);
  for (int s = first_sentence; s <= last_sentence; ++s) {
    Encoding::Sentence sent;
    sent.begin = doc.sentence_begin(s) - enc.first_token;
    sent.length = doc.sentence_end(s) - doc.sentence_begin(s);
    if (sent.length == 0) continue;
    LstmForward(p.lstm_forward, lstm_input.middleCols(sent.begin, sent.length), &sent.forward);
    LstmForward(p.lstm_backward, lstm_input.middleCols(sent.begin, sent.length).rowwise().reverse(),
                &sent.backward);
    enc.contextual.block(0, sent.begin, h, sent.length) = sent.forward.h;
    enc.contextual.block(h, sent.begin, h, sent.length) = sent.backward.h.rowwise().reverse();
    enc.sentences.push_back(std::move(sent));
  }
  if (dropout) {
    enc.output_mask = dropout->Mask(2 * h, n);
    if (enc.output_mask.size()) enc.contextual.array() *= enc.output_mask.array();
  }
  return enc;
}

SpanRepresentation RepresentSpan(const Model& model, const Encoding& encoding, Span span) {
  std::vector<double> alpha(encoding.size(), 0.0);
  FeedForwardTrace trace;
  for (int t = span.start; t <= span.end; ++t) {
    const int local = encoding.Local(t);
    if (local < 0 || local >= encoding.size()) throw LookupError(kModule, "span outside the encoded range");
    alpha[local] = FeedForwardForward(model.params.nn_alpha, encoding.contextual.col(local), nullptr, &trace);
  }
  SpanRepresentation r;
  r.span = span;
  r.e = BuildSpanVector(model, encoding, span, alpha, &r.attention);
  return r;
}

Eigen::VectorXd KnowledgeEmbedding(const Model& model, const Triplet& triplet) {
  if (triplet.tail.empty()) throw ValidationError(kModule, "knowledge triplet with empty tail");
  std::vector<int> ids;
  for (const std::string& w : triplet.tail) ids.push_back(model.vocab.Id(w));
  return MeanEmbedding(model.params, ids);
}

KnowledgeAttention KnowledgeAttend(const Model& model, const Eigen::VectorXd& e_s,
                                   const Eigen::VectorXd& e_p,
                                   const std::vector<Eigen::VectorXd>& knowledge) {
  const ModelConfig& cfg = model.config;
  if (e_s.size() != cfg.span_dim() || e_p.size() != cfg.span_dim()) {
    throw NumericError(kModule, "span representation has the wrong dimension");
  }
  KnowledgeAttention result;
  result.o = Eigen::VectorXd::Zero(cfg.embed_dim);
  if (knowledge.empty()) return result;
  Eigen::VectorXd logits(knowledge.size());
  Eigen::VectorXd input(2 * cfg.span_dim() + cfg.embed_dim);
  FeedForwardTrace trace;
  for (size_t i = 0; i < knowledge.size(); ++i) {
    if (knowledge[i].size() != cfg.embed_dim) {
      throw NumericError(kModule, "knowledge vector has the wrong dimension");
    }
    input << e_s, e_p, knowledge[i];
    logits[i] = FeedForwardForward(model.params.nn_beta, input, nullptr, &trace);
  }
  result.weights = Softmax(logits);
  for (size_t i = 0; i < knowledge.size(); ++i) result.o += result.weights[i] * knowledge[i];
  return result;
}

double ScorePair(const Model& model, const SpanContext& s, const SpanContext& p) {
  const CorefLayout layout{model.config.span_dim(), model.config.knowledge_dim()};
  if (s.e.size() != layout.e || p.e.size() != layout.e || s.o.size() != layout.o ||
      p.o.size() != layout.o) {
    throw NumericError(kModule, "span context has the wrong dimension");
  }
  FeedForwardTrace trace;
  const double f_m = FeedForwardForward(model.params.nn_m, MentionInput(s.e, s.o), nullptr, &trace);
  const double f_c =
      FeedForwardForward(model.params.nn_c, CorefInput(layout, s.e, s.o, p.e, p.o), nullptr, &trace);
  return f_m + f_c;
}

std::vector<ScoredCandidate> Normalize(std::span<const Span> spans, std::span<const double> scores) {
  if (spans.empty()) throw ValidationError(kModule, "cannot select from an empty candidate list");
  if (spans.size() != scores.size()) throw NumericError(kModule, "span/score count mismatch");
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(scores.data(), scores.size());
  const Eigen::VectorXd normalized = Softmax(f);
  std::vector<ScoredCandidate> out(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) out[i] = ScoredCandidate{spans[i], scores[i], normalized[i]};
  return out;
}

std::vector<ScoredCandidate> Select(std::span<const Span> spans, std::span<const double> scores,
                                    double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError(kModule, "selection threshold must be >= 0");
  std::vector<ScoredCandidate> all = Normalize(spans, scores);
  std::vector<ScoredCandidate> kept;
  for (const ScoredCandidate& c : all) {
    if (c.normalized > threshold) kept.push_back(c);
  }
  return kept;
}

bool PreparedInstance::CoversGold() const {
  const auto& gold = pronoun().gold_antecedents;
  if (gold.empty()) return false;
  return static_cast<size_t>(std::count(is_gold.begin(), is_gold.end(), 1)) == gold.size();
}

PreparedInstance PrepareInstance(const Model& model, const KnowledgeGraph& graph,
                                 const Document& doc, int pronoun_index,
                                 std::vector<Span> candidates) {
  PreparedInstance inst;
  inst.doc = &doc;
  inst.pronoun_index = pronoun_index;
  const PronounInstance& pronoun = doc.pronouns.at(pronoun_index);
  inst.last_sentence = doc.SentenceOf(pronoun.span.start);
  inst.first_sentence = std::max(0, inst.last_sentence - 2);
  for (const Span& c : candidates) {
    if (c.start < doc.sentence_begin(inst.first_sentence) || c.end >= pronoun.span.start) {
      throw ValidationError(kModule, "candidate outside the window of the pronoun in '" + doc.id + "'");
    }
  }
  inst.candidates = std::move(candidates);
  inst.is_gold.resize(inst.candidates.size());
  for (size_t i = 0; i < inst.candidates.size(); ++i) {
    inst.is_gold[i] = std::binary_search(pronoun.gold_antecedents.begin(),
                                         pronoun.gold_antecedents.end(), inst.candidates[i]);
  }

  const Variant variant = model.config.variant;
  const size_t limit = variant == Variant::kWithoutAttention
                           ? static_cast<size_t>(model.config.max_knowledge)
                           : graph.size();
  auto retrieve = [&](Span span) {
    std::vector<std::vector<int>> tails;
    if (variant == Variant::kWithoutKg) return tails;
    const std::vector<std::string> words = doc.SpanWords(span);
    for (int id : graph.Lookup(words)) {
      if (tails.size() >= limit) break;
      std::vector<int> tail;
      for (const std::string& w : graph.triplets()[id].tail) tail.push_back(model.vocab.Id(w));
      tails.push_back(std::move(tail));
    }
    return tails;
  };
  for (const Span& c : inst.candidates) inst.knowledge.push_back(retrieve(c));
  inst.knowledge.push_back(retrieve(pronoun.span));
  return inst;
}

std::vector<double> ScoreCandidates(const Model& model, const PreparedInstance& instance) {
  if (instance.candidates.empty()) return {};
  return InstanceGraph(model, instance, nullptr).scores();
}

LossResult InstanceLoss(const Model& model, const PreparedInstance& instance, Rng* dropout_rng,
                        ModelParameters* grad) {
  if (!instance.CoversGold()) {
    throw CoverageError(kModule, "pronoun at token " + std::to_string(instance.pronoun().span.start) +
                                     " in '" + instance.doc->id +
                                     "' has a gold antecedent outside its candidate set");
  }
  Dropout dropout(model.config.dropout_rate, dropout_rng);
  const InstanceGraph graph(model, instance, dropout_rng ? &dropout : nullptr);
  const std::vector<double>& f = graph.scores();
  const Eigen::VectorXd all = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
  std::vector<double> gold_scores;
  for (size_t i = 0; i < f.size(); ++i) {
    if (instance.is_gold[i]) gold_scores.push_back(f[i]);
  }
  const Eigen::VectorXd gold = Eigen::Map<const Eigen::VectorXd>(gold_scores.data(), gold_scores.size());
  const double lse_all = LogSumExp(all);
  const double lse_gold = LogSumExp(gold);
  LossResult result;
  result.loss = lse_all - lse_gold;
  result.scores = f;
  if (grad) {
    std::vector<double> df(f.size());
    for (size_t i = 0; i < f.size(); ++i) {
      df[i] = std::exp(f[i] - lse_all) - (instance.is_gold[i] ? std::exp(f[i] - lse_gold) : 0.0);
    }
    graph.Backward(df, grad);
  }
  return result;
}

LossResult Loss(const Model& model, const Document& doc, const PronounInstance& pronoun,
                const std::vector<Span>& candidates, const KnowledgeGraph& graph, Rng* dropout_rng,
                ModelParameters* grad) {
  int index = -1;
  for (size_t i = 0; i < doc.pronouns.size(); ++i) {
    if (doc.pronouns[i].span == pronoun.span) index = static_cast<int>(i);
  }
  if (index < 0) throw LookupError(kModule, "pronoun not found in document '" + doc.id + "'");
  return InstanceLoss(model, PrepareInstance(model, graph, doc, index, candidates), dropout_rng, grad);
}

}  // namespace kgcoref
