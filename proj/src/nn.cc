#include "kgcoref/nn.h"

#include <cmath>

namespace kgcoref {

namespace {

Eigen::VectorXd Sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

Eigen::VectorXd Dropout::Mask(Eigen::Index n) {
  if (!active()) return {};
  Eigen::VectorXd mask(n);
  const double keep = 1.0 / (1.0 - rate_);
  for (Eigen::Index i = 0; i < n; ++i) mask[i] = rng_->Uniform() < rate_ ? 0.0 : keep;
  return mask;
}

Eigen::MatrixXd Dropout::Mask(Eigen::Index rows, Eigen::Index cols) {
  if (!active()) return {};
  Eigen::MatrixXd mask(rows, cols);
  const double keep = 1.0 / (1.0 - rate_);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = rng_->Uniform() < rate_ ? 0.0 : keep;
  }
  return mask;
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  const Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

double LogSumExp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

double FeedForwardFromPre(const FeedForward& net, const Eigen::VectorXd& pre1, Dropout* dropout,
                          FeedForwardTrace* trace) {
  trace->pre1 = pre1;
  trace->h1 = pre1.cwiseMax(0.0);
  if (dropout) {
    trace->mask1 = dropout->Mask(trace->h1.size());
    if (trace->mask1.size()) trace->h1.array() *= trace->mask1.array();
  }
  trace->pre2 = net.w2 * trace->h1 + net.b2;
  trace->h2 = trace->pre2.cwiseMax(0.0);
  if (dropout) {
    trace->mask2 = dropout->Mask(trace->h2.size());
    if (trace->mask2.size()) trace->h2.array() *= trace->mask2.array();
  }
  return (net.w3 * trace->h2)(0, 0) + net.b3(0, 0);
}

double FeedForwardForward(const FeedForward& net, const Eigen::VectorXd& input, Dropout* dropout,
                          FeedForwardTrace* trace) {
  trace->input = input;
  return FeedForwardFromPre(net, net.w1 * input + net.b1, dropout, trace);
}

Eigen::VectorXd FeedForwardBackwardToPre(const FeedForward& net, const FeedForwardTrace& trace,
                                         double dout, FeedForward* grad) {
  grad->w3.noalias() += dout * trace.h2.transpose();
  grad->b3(0, 0) += dout;
  Eigen::VectorXd dh2 = dout * net.w3.transpose();
  if (trace.mask2.size()) dh2.array() *= trace.mask2.array();
  const Eigen::VectorXd dpre2 = (trace.pre2.array() > 0.0).select(dh2.array(), 0.0).matrix();
  grad->w2.noalias() += dpre2 * trace.h1.transpose();
  grad->b2 += dpre2;
  Eigen::VectorXd dh1 = net.w2.transpose() * dpre2;
  if (trace.mask1.size()) dh1.array() *= trace.mask1.array();
  return (trace.pre1.array() > 0.0).select(dh1.array(), 0.0).matrix();
}

Eigen::VectorXd FeedForwardBackward(const FeedForward& net, const FeedForwardTrace& trace,
                                    double dout, FeedForward* grad) {
  const Eigen::VectorXd dpre1 = FeedForwardBackwardToPre(net, trace, dout, grad);
  grad->w1.noalias() += dpre1 * trace.input.transpose();
  grad->b1 += dpre1;
  return net.w1.transpose() * dpre1;
}

void LstmForward(const LstmWeights& lstm, const Eigen::MatrixXd& inputs, LstmTrace* trace) {
  const Eigen::Index hidden = lstm.b.rows() / 4;
  const Eigen::Index in = inputs.rows();
  const Eigen::Index steps = inputs.cols();
  trace->x = inputs;
  trace->h.resize(hidden, steps);
  trace->c.resize(hidden, steps);
  trace->i.resize(hidden, steps);
  trace->f.resize(hidden, steps);
  trace->g.resize(hidden, steps);
  trace->o.resize(hidden, steps);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::VectorXd z =
        lstm.w.leftCols(in) * inputs.col(t) + lstm.w.rightCols(hidden) * h + lstm.b;
    trace->i.col(t) = Sigmoid(z.segment(0, hidden));
    trace->f.col(t) = Sigmoid(z.segment(hidden, hidden));
    trace->g.col(t) = z.segment(2 * hidden, hidden).array().tanh();
    trace->o.col(t) = Sigmoid(z.segment(3 * hidden, hidden));
    c = trace->f.col(t).cwiseProduct(c) + trace->i.col(t).cwiseProduct(trace->g.col(t));
    h = trace->o.col(t).cwiseProduct(c.array().tanh().matrix());
    trace->c.col(t) = c;
    trace->h.col(t) = h;
  }
}

void LstmBackward(const LstmWeights& lstm, const LstmTrace& trace, const Eigen::MatrixXd& dh,
                  LstmWeights* grad, Eigen::MatrixXd* dinputs) {
  const Eigen::Index hidden = lstm.b.rows() / 4;
  const Eigen::Index in = trace.x.rows();
  const Eigen::Index steps = trace.x.cols();
  dinputs->setZero(in, steps);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dz(4 * hidden);
  Eigen::VectorXd joint(in + hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::VectorXd dht = dh.col(t) + dh_next;
    const Eigen::ArrayXd tc = trace.c.col(t).array().tanh();
    const Eigen::ArrayXd i = trace.i.col(t).array();
    const Eigen::ArrayXd f = trace.f.col(t).array();
    const Eigen::ArrayXd g = trace.g.col(t).array();
    const Eigen::ArrayXd o = trace.o.col(t).array();
    Eigen::ArrayXd c_prev = Eigen::ArrayXd::Zero(hidden);
    if (t > 0) c_prev = trace.c.col(t - 1).array();
    const Eigen::ArrayXd dc = dht.array() * o * (1.0 - tc * tc) + dc_next.array();
    dz.segment(0, hidden) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(hidden, hidden) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.segment(2 * hidden, hidden) = (dc * i * (1.0 - g * g)).matrix();
    dz.segment(3 * hidden, hidden) = (dht.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    joint.head(in) = trace.x.col(t);
    if (t > 0) {
      joint.tail(hidden) = trace.h.col(t - 1);
    } else {
      joint.tail(hidden).setZero();
    }
    grad->w.noalias() += dz * joint.transpose();
    grad->b += dz;
    const Eigen::VectorXd djoint = lstm.w.transpose() * dz;
    dinputs->col(t) = djoint.head(in);
    dh_next = djoint.tail(hidden);
  }
}

}  // namespace kgcoref
