#ifndef KGCOREF_NN_H_
#define KGCOREF_NN_H_

#include <Eigen/Dense>

#include "kgcoref/model.h"
#include "kgcoref/rng.h"

namespace kgcoref {

// Inverted dropout. With a null generator (evaluation) every mask is empty
// and Apply is the identity.
class Dropout {
 public:
  Dropout(double rate, Rng* rng) : rate_(rate), rng_(rate > 0.0 ? rng : nullptr) {}

  bool active() const { return rng_ != nullptr; }

  // Mask of 0 / (1 / (1 - rate)) entries, or an empty vector when inactive.
  Eigen::VectorXd Mask(Eigen::Index n);
  Eigen::MatrixXd Mask(Eigen::Index rows, Eigen::Index cols);

 private:
  double rate_;
  Rng* rng_;
};

// Numerically stable softmax: exp(v - max(v)) / sum.
Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);
double LogSumExp(const Eigen::VectorXd& v);

struct FeedForwardTrace {
  Eigen::VectorXd input;  // empty when the caller supplied the pre-activation
  Eigen::VectorXd pre1, h1, pre2, h2;
  Eigen::VectorXd mask1, mask2;  // empty without dropout
};

// Forward pass from the first-layer pre-activation W1 x + b1.
double FeedForwardFromPre(const FeedForward& net, const Eigen::VectorXd& pre1, Dropout* dropout,
                          FeedForwardTrace* trace);
double FeedForwardForward(const FeedForward& net, const Eigen::VectorXd& input,
                          Dropout* dropout, FeedForwardTrace* trace);

// Accumulates gradients of w2, b2, w3, b3 into grad and returns d(pre1).
// The caller owns the gradients of w1 and b1.
Eigen::VectorXd FeedForwardBackwardToPre(const FeedForward& net, const FeedForwardTrace& trace,
                                         double dout, FeedForward* grad);
// Full backward pass; returns d(input).
Eigen::VectorXd FeedForwardBackward(const FeedForward& net, const FeedForwardTrace& trace,
                                    double dout, FeedForward* grad);

struct LstmTrace {
  Eigen::MatrixXd x;                // inputs, one column per step
  Eigen::MatrixXd h, c;             // states after each step
  Eigen::MatrixXd i, f, g, o;       // gate activations
};

// Runs one direction over the columns of `inputs` from zero state.
void LstmForward(const LstmWeights& lstm, const Eigen::MatrixXd& inputs, LstmTrace* trace);
// Backpropagation through time. dh holds the external gradient for every h
// column; gradients accumulate into grad and d(inputs) is written to dinputs.
void LstmBackward(const LstmWeights& lstm, const LstmTrace& trace, const Eigen::MatrixXd& dh,
                  LstmWeights* grad, Eigen::MatrixXd* dinputs);

}  // namespace kgcoref

#endif  // KGCOREF_NN_H_
