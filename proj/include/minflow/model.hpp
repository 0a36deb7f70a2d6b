#ifndef MINFLOW_MODEL_HPP_
#define MINFLOW_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "minflow/graph.hpp"
#include "minflow/runtime.hpp"
#include "minflow/tensor.hpp"

namespace minflow {

/// Weights [2,1] and bias [1] of the two-feature logistic classifier.
struct ClassifierParams {
  Tensor W = Tensor::zeros(Shape{2, 1});
  Tensor b = Tensor::zeros(Shape{1});

  static ClassifierParams make(double w0, double w1, double b0) {
    return {Tensor::matrix(2, 1, {w0, w1}), Tensor::vector({b0})};
  }

  void validate() const {
    if (W.shape() != Shape{2, 1} || b.shape() != Shape{1})
      throw Error(Errc::ShapeMismatch, "classifier params must be W[2,1], b[1], got W" + W.shape().to_string() +
                                           ", b" + b.shape().to_string());
  }
};

struct ClassifierInit {
  InitializerSpec weights = NormalInit{0.0, 0.01};
  InitializerSpec bias = NormalInit{0.0, 0.01};

  static ClassifierInit from(const ClassifierParams& p) { return {ExplicitInit{p.W}, ExplicitInit{p.b}}; }
};

/// Handles into a graph holding the classifier.
struct LinearModelGraph {
  NodeId X;  // placeholder [?,2]
  NodeId Z;  // placeholder [?]
  NodeId W;
  NodeId b;
  NodeId Y;  // sigmoid(X W + b), [?,1]
  NodeId E;  // summed cross-entropy, rank 0
  TrainStep step;  // empty for forward-only builds
};

/// Node and edge counts produced by build_classifier_forward.
inline constexpr std::size_t kClassifierForwardNodes = 17;
inline constexpr std::size_t kClassifierForwardEdges = 19;

/// Adds Y = sigmoid(X W + b) and E = -(Z . log Y + (1 - Z) . log(1 - Y)) to `g`.
inline LinearModelGraph build_classifier_forward(Graph& g, const ClassifierInit& init = {}) {
  LinearModelGraph m;
  m.X = g.add_placeholder("X", NodeShape{kUnknownDim, 2});
  m.Z = g.add_placeholder("Z", NodeShape{kUnknownDim});
  m.W = g.add_variable("W", NodeShape{2, 1}, init.weights);
  m.b = g.add_variable("b", NodeShape{1}, init.bias);

  const NodeId xw = g.add_op(OpKind::MatMul, {m.X, m.W}, "XW");
  const NodeId logits = g.add_op(OpKind::AddRowBroadcast, {xw, m.b}, "logits");
  m.Y = g.add_op(OpKind::Sigmoid, {logits}, "Y");

  const NodeId y = g.add_reshape(m.Y, NodeShape{kUnknownDim}, "y");
  const NodeId log_y = g.add_op(OpKind::Log, {y}, "log_y");
  const NodeId positive = g.add_op(OpKind::Dot, {m.Z, log_y}, "z_dot_log_y");
  const NodeId one = g.add_const("one", Tensor::scalar(1.0));
  const NodeId not_z = g.add_op(OpKind::Sub, {one, m.Z}, "one_minus_z");
  const NodeId not_y = g.add_op(OpKind::Sub, {one, y}, "one_minus_y");
  const NodeId log_not_y = g.add_op(OpKind::Log, {not_y}, "log_one_minus_y");
  const NodeId negative = g.add_op(OpKind::Dot, {not_z, log_not_y}, "not_z_dot_log_not_y");
  const NodeId loglik = g.add_op(OpKind::Add, {positive, negative}, "loglikelihood");
  m.E = g.add_op(OpKind::Neg, {loglik}, "E");
  m.step = TrainStep{m.E, {}};
  return m;
}

struct ClassifierGraph {
  Graph graph;
  LinearModelGraph model;
};

/// Forward graph plus a gradient-descent step over {W, b}. Sessions keep a pointer to `graph`,
/// so the returned object must stay in place while a session uses it.
inline ClassifierGraph build_linear_classifier(double learning_rate, const ClassifierInit& init = {}) {
  ClassifierGraph out;
  out.model = build_classifier_forward(out.graph, init);
  out.model.step = build_gradient_descent_step(out.graph, out.model.E, learning_rate);
  return out;
}

inline ClassifierParams params_from_session(const Session& s, const LinearModelGraph& m) {
  return {s.variable(m.W), s.variable(m.b)};
}

inline FeedDict classifier_feeds(const LinearModelGraph& m, const Tensor& X, const Tensor& Z) {
  return {{m.X, X}, {m.Z, Z}};
}

// ---------------------------------------------------------------------------
// Closed-form reference path. Plain loops, no graph machinery.
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t check_classifier_inputs(const Tensor& X, const Tensor* Z, const ClassifierParams& p) {
  p.validate();
  if (X.rank() != 2 || X.shape()[1] != 2)
    throw Error(Errc::ShapeMismatch, "features must be [n,2], got " + X.shape().to_string());
  const std::size_t n = X.shape()[0];
  if (Z && (Z->rank() != 1 || Z->shape()[0] != n))
    throw Error(Errc::ShapeMismatch, "labels must be [" + std::to_string(n) + "], got " + Z->shape().to_string());
  return n;
}

}  // namespace detail

inline Tensor ref_predict(const Tensor& X, const ClassifierParams& p) {
  const std::size_t n = detail::check_classifier_inputs(X, nullptr, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = stable_sigmoid(X.at(i, 0) * p.W[0] + X.at(i, 1) * p.W[1] + p.b[0]);
  }
  return Tensor::vector(std::move(y));
}

/// Negative log-likelihood summed over the batch.
inline double ref_loss(const Tensor& X, const Tensor& Z, const ClassifierParams& p, const LogClamp& clamp = {}) {
  const std::size_t n = detail::check_classifier_inputs(X, &Z, p);
  const Tensor y = ref_predict(X, p);
  double positive = 0.0;
  double negative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    positive += Z[i] * std::log(clamp.apply(y[i]));
    negative += (1.0 - Z[i]) * std::log(clamp.apply(1.0 - y[i]));
  }
  return -(positive + negative);
}

struct ClassifierGradient {
  Tensor dW;  // X^T (Y - Z), [2,1]
  Tensor db;  // sum(Y - Z), [1]
};

inline ClassifierGradient ref_gradient(const Tensor& X, const Tensor& Z, const ClassifierParams& p) {
  const std::size_t n = detail::check_classifier_inputs(X, &Z, p);
  const Tensor y = ref_predict(X, p);
  double dw0 = 0.0, dw1 = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - Z[i];
    dw0 += X.at(i, 0) * r;
    dw1 += X.at(i, 1) * r;
    db += r;
  }
  return {Tensor::matrix(2, 1, {dw0, dw1}), Tensor::vector({db})};
}

struct RefTrainResult {
  ClassifierParams params;
  std::vector<double> losses;  // loss before each epoch's update
};

/// Called once per epoch with the parameters and loss before that epoch's update.
using EpochObserver = std::function<void(std::size_t epoch, const ClassifierParams& before, double loss)>;

/// Full-batch gradient descent on the summed loss.
inline RefTrainResult ref_train(const Tensor& X, const Tensor& Z, std::size_t epochs, double learning_rate,
                                const ClassifierParams& start, const EpochObserver& observer = {}) {
  if (epochs == 0) throw Error(Errc::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error(Errc::InvalidArgument, "learning rate must be finite and >= 0");
  detail::check_classifier_inputs(X, &Z, start);
  RefTrainResult result{start, {}};
  result.losses.reserve(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    ClassifierParams& p = result.params;
    const double loss = ref_loss(X, Z, p);
    result.losses.push_back(loss);
    if (observer) observer(e, p, loss);
    const ClassifierGradient g = ref_gradient(X, Z, p);
    p = ClassifierParams::make(p.W[0] - learning_rate * g.dW[0], p.W[1] - learning_rate * g.dW[1],
                               p.b[0] - learning_rate * g.db[0]);
  }
  return result;
}

}  // namespace minflow

#endif  // MINFLOW_MODEL_HPP_
