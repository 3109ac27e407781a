#include "kgcoref/train.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgcoref/error.h"
#include "kgcoref/eval.h"
#include "kgcoref/neural.h"
#include "kgcoref/rng.h"

namespace kgcoref {

namespace {

constexpr const char* kModule = "train";

void AdamUpdate(const TrainConfig& cfg, int64_t step, const double* g, double* p, double* m,
                double* v, Eigen::Index n) {
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
  for (Eigen::Index i = 0; i < n; ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
}

struct Instance {
  int doc = 0;
  int pronoun = 0;
  PreparedInstance prepared;
};

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError(kModule, "learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError(kModule, "Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError(kModule, "adam_epsilon must be positive");
  if (max_epochs < 1) throw ValidationError(kModule, "max_epochs must be at least 1");
  if (!(dev_threshold >= 0.0)) throw ValidationError(kModule, "dev_threshold must be >= 0");
  if (threads < 1) throw ValidationError(kModule, "threads must be at least 1");
}

void AdamStep(const TrainConfig& config, const Eigen::VectorXd& grad, Eigen::VectorXd* params,
              AdamState* state) {
  const Eigen::Index n = params->size();
  if (grad.size() != n || state->m.size() != n || state->v.size() != n) {
    throw NumericError(kModule, "gradient length does not match the parameters");
  }
  if (!grad.allFinite()) throw NumericError(kModule, "non-finite gradient");
  ++state->step;
  AdamUpdate(config, state->step, grad.data(), params->data(), state->m.data(), state->v.data(), n);
}

void AdamStep(const TrainConfig& config, const ModelParameters& grad, ModelParameters* params,
              AdamState* state) {
  const auto g = grad.Blocks();
  auto p = params->Blocks();
  const Eigen::Index n = static_cast<Eigen::Index>(params->NumValues());
  if (g.size() != p.size() || static_cast<Eigen::Index>(grad.NumValues()) != n ||
      state->m.size() != n || state->v.size() != n) {
    throw NumericError(kModule, "gradient shape does not match the parameters");
  }
  for (size_t b = 0; b < g.size(); ++b) {
    if (g[b].second->size() != p[b].second->size()) {
      throw NumericError(kModule, "gradient shape mismatch in block '" + p[b].first + "'");
    }
    if (!g[b].second->allFinite()) {
      throw NumericError(kModule, "non-finite gradient in block '" + g[b].first + "'");
    }
  }
  ++state->step;
  Eigen::Index offset = 0;
  for (size_t b = 0; b < g.size(); ++b) {
    const Eigen::Index size = p[b].second->size();
    AdamUpdate(config, state->step, g[b].second->data(), p[b].second->data(),
               state->m.data() + offset, state->v.data() + offset, size);
    offset += size;
  }
}

double ClipGlobalNorm(ModelParameters* grad, double max_norm) {
  double sq = 0;
  for (const auto& [name, m] : std::as_const(*grad).Blocks()) sq += m->squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, m] : grad->Blocks()) *m *= scale;
  }
  return norm;
}

TrainResult Train(const std::vector<Document>& train, const std::vector<Document>* dev,
                  const KnowledgeGraph& graph, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
  model_config.Validate();
  train_config.Validate();
  if (train.empty()) throw ValidationError(kModule, "empty training set");

  TrainResult result;
  result.model =
      CreateModel(model_config, BuildVocabulary(train, graph, model_config.vocab_min_count));
  Model& model = result.model;

  std::vector<Instance> instances;
  for (size_t d = 0; d < train.size(); ++d) {
    for (size_t p = 0; p < train[d].pronouns.size(); ++p) {
      const PronounInstance& pronoun = train[d].pronouns[p];
      std::vector<Span> candidates =
          EnumerateCandidates(train[d], pronoun, model_config.max_span_width, false);
      PreparedInstance prepared = PrepareInstance(model, graph, train[d], static_cast<int>(p),
                                                  std::move(candidates));
      if (!prepared.CoversGold()) {
        ++result.skipped;
        continue;
      }
      instances.push_back({static_cast<int>(d), static_cast<int>(p), std::move(prepared)});
    }
  }
  if (result.skipped > 0) {
    spdlog::warn("skipped {} training pronouns without gold antecedents in their window",
                 result.skipped);
  }
  result.instances = static_cast<int>(instances.size());
  if (instances.empty()) throw ValidationError(kModule, "no usable training instances");

  const bool use_dev = train_config.select_on_dev && dev != nullptr && !dev->empty();
  Rng shuffle_rng(train_config.shuffle_seed);
  Rng dropout_rng(model_config.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam(static_cast<Eigen::Index>(model.params.NumValues()));
  ModelParameters grad = model.params.ZerosLike();
  ModelParameters best = model.params;
  double best_f1 = -1;

  std::vector<int> order(instances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    shuffle_rng.Shuffle(order);
    double total = 0;
    for (int idx : order) {
      grad.SetZero();
      const LossResult r = InstanceLoss(model, instances[idx].prepared, &dropout_rng, &grad);
      total += r.loss;
      ClipGlobalNorm(&grad, train_config.clip_norm);
      AdamStep(train_config, grad, &model.params, &adam);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = total / static_cast<double>(instances.size());
    if (dev != nullptr && !dev->empty()) {
      entry.dev_f1 = Evaluate(model, *dev, graph, train_config.dev_threshold, false,
                              train_config.threads)
                         .overall_prf()
                         .f1;
    }
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    spdlog::info("epoch {} mean_loss {:.6f} dev_f1 {:.4f}", epoch, entry.mean_loss, entry.dev_f1);
    if (use_dev && entry.dev_f1 > best_f1) {
      best_f1 = entry.dev_f1;
      best = model.params;
      result.best_epoch = epoch;
    }
  }
  if (use_dev) {
    model.params = std::move(best);
  } else {
    result.best_epoch = train_config.max_epochs;
  }
  model.params.RoundToFloat();
  return result;
}

std::string TrainLogToCsv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,mean_loss,dev_f1,wall_seconds\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.mean_loss << ',';
    if (e.dev_f1 >= 0) out << e.dev_f1;
    out << ',' << e.wall_seconds << '\n';
  }
  return out.str();
}

}  // namespace kgcoref
