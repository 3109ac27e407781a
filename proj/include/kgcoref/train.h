#ifndef KGCOREF_TRAIN_H_
#define KGCOREF_TRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgcoref/corpus.h"
#include "kgcoref/kg.h"
#include "kgcoref/model.h"

namespace kgcoref {

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 100;
  uint64_t shuffle_seed = 7;
  bool select_on_dev = true;
  double clip_norm = 5.0;      // global gradient norm; <= 0 disables clipping
  double dev_threshold = 1e-2;  // selection threshold for dev F1
  int threads = 1;              // dev evaluation only

  // Throws ValidationError on a violated invariant.
  void Validate() const;
};

// Optimizer state over the flat parameter view.
struct AdamState {
  Eigen::VectorXd m, v;
  int64_t step = 0;

  explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// One bias-corrected Adam update; increments state->step. Throws NumericError
// on a length mismatch or a non-finite gradient.
void AdamStep(const TrainConfig& config, const Eigen::VectorXd& grad, Eigen::VectorXd* params,
              AdamState* state);
// Block-structured form. The error for a non-finite gradient names the block.
void AdamStep(const TrainConfig& config, const ModelParameters& grad, ModelParameters* params,
              AdamState* state);

// Scales grad in place so its global L2 norm is at most max_norm. Returns the
// norm before clipping.
double ClipGlobalNorm(ModelParameters* grad, double max_norm);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0;
  double dev_f1 = -1;  // -1 without a dev set
  double wall_seconds = 0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  int instances = 0;  // usable pronoun instances per epoch
  int skipped = 0;    // instances without gold coverage
  int best_epoch = 0;
};

// Per-pronoun Adam training. The vocabulary is built from the training corpus
// and the graph. With select_on_dev and a non-null dev corpus the epoch with
// the highest dev overall F1 is kept, otherwise the last one. Parameters are
// rounded to float32 on return so that a saved checkpoint reloads exactly.
// Throws ValidationError when no usable training instance exists.
TrainResult Train(const std::vector<Document>& train, const std::vector<Document>* dev,
                  const KnowledgeGraph& graph, const ModelConfig& model_config,
                  const TrainConfig& train_config);

std::string TrainLogToCsv(const std::vector<EpochLog>& log);

}  // namespace kgcoref

#endif  // KGCOREF_TRAIN_H_
