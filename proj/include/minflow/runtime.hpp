#ifndef MINFLOW_RUNTIME_HPP_
#define MINFLOW_RUNTIME_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "minflow/autodiff.hpp"
#include "minflow/graph.hpp"
#include "minflow/tensor.hpp"

namespace minflow {

/// Standard normal deviates from a 64-bit Mersenne Twister (std::mt19937_64) through the basic
/// Box-Muller transform. Uniforms are the top 53 bits of a draw mapped onto (0, 1]; each pair of
/// uniforms yields the cosine deviate first and the sine deviate on the next call.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double standard() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * standard(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

using FeedDict = std::map<NodeId, Tensor>;

struct SessionOptions {
  LogClamp log_clamp;
};

struct VariableUpdate {
  NodeId variable;
  NodeId gradient;
  double learning_rate = 0.0;
};

/// One gradient-descent step: v <- v - learning_rate * d(loss)/dv for every update.
struct TrainStep {
  NodeId loss;
  std::vector<VariableUpdate> updates;
};

/// Adds gradient nodes for every trainable variable (ascending id) and packages the updates.
inline TrainStep build_gradient_descent_step(Graph& g, NodeId loss, double learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(Errc::InvalidArgument, "learning rate must be positive, got " + std::to_string(learning_rate));
  if (g.node(loss).shape.rank() != 0)
    throw Error(Errc::NotScalarLoss, "'" + g.node(loss).name + "' has shape " + g.node(loss).shape.to_string());
  std::vector<NodeId> variables;
  for (const Node& n : g.nodes())
    if (n.kind == OpKind::Variable && !n.backward) variables.push_back(n.id);
  if (variables.empty()) throw Error(Errc::NoTrainableVariables, "graph has no variables");

  const std::vector<NodeId> grads = gradients(g, loss, variables);
  TrainStep step{loss, {}};
  for (std::size_t i = 0; i < variables.size(); ++i) step.updates.push_back({variables[i], grads[i], learning_rate});
  return step;
}

/// Binds a frozen graph to variable storage. The graph must outlive the session.
class Session {
 public:
  Session(Graph& graph, std::uint64_t seed, SessionOptions options = {})
      : graph_(&graph), rng_(seed), options_(options) {
    if (graph.empty()) throw Error(Errc::EmptyGraph, "cannot create a session over an empty graph");
    graph.freeze();
  }

  const Graph& graph() const noexcept { return *graph_; }
  bool initialized() const noexcept { return initialized_; }
  const std::map<NodeId, Tensor>& store() const noexcept { return store_; }

  /// Fills every variable from its initializer. Normal draws are taken in ascending node id order.
  void initialize_variables() {
    if (initialized_) throw Error(Errc::AlreadyInitialized, "variables already initialized");
    for (const Node& n : graph_->nodes()) {
      if (n.kind != OpKind::Variable) continue;
      const Shape shape = n.shape.resolve(0);
      store_.insert_or_assign(n.id, std::visit(
          [&](const auto& init) -> Tensor {
            using T = std::decay_t<decltype(init)>;
            if constexpr (std::is_same_v<T, NormalInit>) {
              std::vector<double> values(shape.numel());
              for (double& v : values) v = rng_.normal(init.mean, init.stddev);
              return Tensor(shape, std::move(values));
            } else if constexpr (std::is_same_v<T, ZerosInit>) {
              return Tensor::zeros(shape);
            } else {
              return init.value;
            }
          },
          *n.init));
    }
    initialized_ = true;
  }

  const Tensor& variable(NodeId id) const {
    require_initialized();
    auto it = store_.find(id);
    if (it == store_.end()) throw Error(Errc::UnknownNode, "node " + std::to_string(id.index) + " is not a variable");
    return it->second;
  }

  void assign(NodeId id, Tensor value) {
    require_initialized();
    const Node& n = graph_->node(id);
    if (n.kind != OpKind::Variable) throw Error(Errc::InvalidArgument, "'" + n.name + "' is not a variable");
    if (!n.shape.matches(value.shape()))
      throw Error(Errc::ShapeMismatch, "'" + n.name + "' is " + n.shape.to_string() + ", got " +
                                           value.shape().to_string());
    store_.insert_or_assign(id, std::move(value));
  }

  /// Evaluates the fetches. Only their ancestors are computed and the store is left untouched.
  /// Feeding a node other than a placeholder overrides its value for this call.
  std::vector<Tensor> run(std::span<const NodeId> fetches, const FeedDict& feeds = {}) const {
    require_initialized();
    const Graph& g = *graph_;
    for (NodeId f : fetches) g.node(f);
    for (const auto& entry : feeds) g.node(entry.first);

    std::vector<bool> needed(g.size(), false);
    for (NodeId f : fetches) needed[f.index] = true;
    for (std::size_t i = g.size(); i-- > 0;) {
      if (!needed[i] || feeds.contains(NodeId{i})) continue;
      for (NodeId in : g.nodes()[i].inputs) needed[in.index] = true;
    }
    const std::optional<std::size_t> batch = bind_batch(needed, feeds);

    std::vector<std::optional<Tensor>> values(g.size());
    for (NodeId id : topo_order(g)) {
      if (!needed[id.index]) continue;
      const Node& n = g.node(id);
      auto fed = feeds.find(id);
      Tensor out = fed != feeds.end() ? fed->second : evaluate(n, values, batch);
      if (!n.shape.matches(out.shape(), batch))
        throw Error(Errc::ShapeMismatch, "'" + n.name + "' evaluated to " + out.shape().to_string() +
                                             ", declared " + n.shape.to_string());
      values[id.index] = std::move(out);
    }
    std::vector<Tensor> out;
    out.reserve(fetches.size());
    for (NodeId f : fetches) out.push_back(*values[f.index]);
    return out;
  }

  std::vector<Tensor> run(std::initializer_list<NodeId> fetches, const FeedDict& feeds = {}) const {
    return run(std::span<const NodeId>(fetches.begin(), fetches.size()), feeds);
  }

  Tensor run(NodeId fetch, const FeedDict& feeds = {}) const {
    const NodeId f[] = {fetch};
    return run(std::span<const NodeId>(f), feeds).front();
  }

  /// Evaluates the loss and all gradients against the current store, then applies every update.
  /// Returns the loss before the update.
  Tensor apply_step(const TrainStep& step, const FeedDict& feeds) {
    std::vector<NodeId> fetches{step.loss};
    for (const auto& u : step.updates) fetches.push_back(u.gradient);
    const std::vector<Tensor> results = run(fetches, feeds);

    std::vector<Tensor> updated;
    updated.reserve(step.updates.size());
    for (std::size_t i = 0; i < step.updates.size(); ++i) {
      const auto& u = step.updates[i];
      const Tensor& current = variable(u.variable);
      const Tensor& grad = results[i + 1];
      if (grad.shape() != current.shape())
        throw Error(Errc::ShapeMismatch, "gradient " + grad.shape().to_string() + " for variable " +
                                             current.shape().to_string());
      std::vector<double> next(current.size());
      for (std::size_t k = 0; k < next.size(); ++k) next[k] = current[k] - u.learning_rate * grad[k];
      updated.emplace_back(current.shape(), std::move(next));
    }
    for (std::size_t i = 0; i < step.updates.size(); ++i)
      store_.insert_or_assign(step.updates[i].variable, std::move(updated[i]));
    return results.front();
  }

  /// Releases variable storage. The session must be re-initialized before further use.
  void close() {
    store_.clear();
    initialized_ = false;
  }

 private:
  void require_initialized() const {
    if (!initialized_) throw Error(Errc::NotInitialized, "call initialize_variables() first");
  }

  // Every needed placeholder must be fed. Wildcards of all fed nodes bind to one batch size.
  std::optional<std::size_t> bind_batch(const std::vector<bool>& needed, const FeedDict& feeds) const {
    std::optional<std::size_t> batch;
    for (const Node& n : graph_->nodes()) {
      if (!needed[n.id.index]) continue;
      auto it = feeds.find(n.id);
      if (it == feeds.end()) {
        if (n.kind == OpKind::Placeholder) throw Error(Errc::MissingFeed, n.name);
        continue;
      }
      const Shape& fed = it->second.shape();
      if (!n.shape.matches(fed))
        throw Error(Errc::ShapeMismatch, "feed for '" + n.name + "' is " + fed.to_string() + ", expected " +
                                             n.shape.to_string());
      for (std::size_t axis = 0; axis < n.shape.rank(); ++axis) {
        if (!n.shape.is_unknown(axis)) continue;
        if (batch && *batch != fed[axis])
          throw Error(Errc::ShapeMismatch, "feed for '" + n.name + "' binds batch " + std::to_string(fed[axis]) +
                                               ", already bound to " + std::to_string(*batch));
        batch = fed[axis];
      }
    }
    return batch;
  }

  Tensor evaluate(const Node& n, const std::vector<std::optional<Tensor>>& values,
                  std::optional<std::size_t> batch) const {
    auto in = [&](std::size_t k) -> const Tensor& { return *values[n.inputs[k].index]; };
    const LogClamp& clamp = options_.log_clamp;
    switch (n.kind) {
      case OpKind::Placeholder: throw Error(Errc::MissingFeed, n.name);
      case OpKind::Variable: return store_.at(n.id);
      case OpKind::Const: return *n.value;
      case OpKind::MatMul: return matmul(in(0), in(1));
      case OpKind::AddRowBroadcast: return add_row_broadcast(in(0), in(1));
      case OpKind::Sigmoid: return map_unary(UnaryKind::Sigmoid, in(0));
      case OpKind::Relu: return map_unary(UnaryKind::Relu, in(0));
      case OpKind::Log: return map_unary(UnaryKind::Log, in(0), clamp);
      case OpKind::Neg: return map_unary(UnaryKind::Neg, in(0));
      case OpKind::Add: return binary_elementwise(BinaryKind::Add, in(0), in(1));
      case OpKind::Sub: return binary_elementwise(BinaryKind::Sub, in(0), in(1));
      case OpKind::Mul: return binary_elementwise(BinaryKind::Mul, in(0), in(1));
      case OpKind::ReduceSum: return reduce_sum(in(0));
      case OpKind::Dot: return dot(in(0), in(1));
      case OpKind::Reshape: return in(0).reshaped(n.shape.resolve(batch.value_or(0)));
      case OpKind::Transpose: return transpose(in(0));
      case OpKind::ColumnSum: return column_sum(in(0));
      case OpKind::BroadcastLike: return broadcast_to(in(0), in(1).shape());
      case OpKind::SigmoidGrad: return sigmoid_grad(in(0), in(1));
      case OpKind::ReluGrad: return relu_grad(in(0), in(1));
      case OpKind::LogGrad: return log_grad(in(0), in(1), clamp);
    }
    throw Error(Errc::InvalidArgument, "unknown op kind");
  }

  Graph* graph_;
  std::map<NodeId, Tensor> store_;
  NormalSampler rng_;
  SessionOptions options_;
  bool initialized_ = false;
};

inline Session create_session(Graph& g, std::uint64_t seed, SessionOptions options = {}) {
  return Session(g, seed, options);
}

}  // namespace minflow

#endif  // MINFLOW_RUNTIME_HPP_
