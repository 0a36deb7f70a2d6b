#ifndef MINFLOW_AUTODIFF_HPP_
#define MINFLOW_AUTODIFF_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "minflow/graph.hpp"

namespace minflow {

/// Forward node -> node holding d(loss)/d(node output).
struct AdjointMap {
  std::map<NodeId, NodeId> entries;

  std::optional<NodeId> find(NodeId forward) const {
    auto it = entries.find(forward);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

class GradBuilder {
 public:
  GradBuilder(Graph& g, const Node& forward) : g_(g), prefix_("grad/" + forward.name + "/") {}

  NodeId op(OpKind kind, std::initializer_list<NodeId> inputs) {
    return g_.add_op(kind, inputs, g_.unique_name(prefix_ + std::string(to_string(kind))));
  }

  NodeId reshape(NodeId input, const NodeShape& target) {
    return g_.add_reshape(input, target, g_.unique_name(prefix_ + "Reshape"));
  }

  // A scalar operand broadcast against a larger one receives the sum of its contributions.
  NodeId fit(NodeId contribution, const NodeShape& operand, const NodeShape& output) {
    if (operand.rank() == 0 && output.rank() != 0) return op(OpKind::ReduceSum, {contribution});
    return contribution;
  }

 private:
  Graph& g_;
  std::string prefix_;
};

}  // namespace detail

/// Appends the vector-Jacobian product nodes of `node_id` for the given upstream adjoint.
/// Returns one adjoint per input; inputs with `wanted[i] == false` get nullopt.
inline std::vector<std::optional<NodeId>> vjp_rule(Graph& g, NodeId node_id, NodeId upstream,
                                                   std::span<const bool> wanted = {}) {
  const Node node = g.node(node_id);  // copy: appends may reallocate the node table
  g.node(upstream);
  Graph::BackwardScope scope(g);
  detail::GradBuilder b(g, node);

  const std::size_t n_in = node.inputs.size();
  auto want = [&](std::size_t i) { return wanted.empty() || wanted[i]; };
  std::vector<std::optional<NodeId>> out(n_in);
  auto in_shape = [&](std::size_t i) { return g.node(node.inputs[i]).shape; };
  const NodeId a = n_in > 0 ? node.inputs[0] : NodeId{};
  const NodeId c = n_in > 1 ? node.inputs[1] : NodeId{};

  switch (node.kind) {
    case OpKind::MatMul:
      if (want(0)) out[0] = b.op(OpKind::MatMul, {upstream, b.op(OpKind::Transpose, {c})});
      if (want(1)) out[1] = b.op(OpKind::MatMul, {b.op(OpKind::Transpose, {a}), upstream});
      break;
    case OpKind::AddRowBroadcast:
      if (want(0)) out[0] = upstream;
      if (want(1)) out[1] = b.op(OpKind::ColumnSum, {upstream});
      break;
    case OpKind::Sigmoid:
      if (want(0)) out[0] = b.op(OpKind::SigmoidGrad, {node_id, upstream});
      break;
    case OpKind::Relu:
      if (want(0)) out[0] = b.op(OpKind::ReluGrad, {a, upstream});
      break;
    case OpKind::Log:
      if (want(0)) out[0] = b.op(OpKind::LogGrad, {a, upstream});
      break;
    case OpKind::Neg:
      if (want(0)) out[0] = b.op(OpKind::Neg, {upstream});
      break;
    case OpKind::Add:
      if (want(0)) out[0] = b.fit(upstream, in_shape(0), node.shape);
      if (want(1)) out[1] = b.fit(upstream, in_shape(1), node.shape);
      break;
    case OpKind::Sub:
      if (want(0)) out[0] = b.fit(upstream, in_shape(0), node.shape);
      if (want(1)) out[1] = b.fit(b.op(OpKind::Neg, {upstream}), in_shape(1), node.shape);
      break;
    case OpKind::Mul:
      if (want(0)) out[0] = b.fit(b.op(OpKind::Mul, {upstream, c}), in_shape(0), node.shape);
      if (want(1)) out[1] = b.fit(b.op(OpKind::Mul, {upstream, a}), in_shape(1), node.shape);
      break;
    case OpKind::ReduceSum:
      if (want(0)) out[0] = b.op(OpKind::BroadcastLike, {upstream, a});
      break;
    case OpKind::Dot:
      if (want(0)) out[0] = b.op(OpKind::Mul, {upstream, c});
      if (want(1)) out[1] = b.op(OpKind::Mul, {upstream, a});
      break;
    case OpKind::Reshape:
      if (want(0)) out[0] = b.reshape(upstream, in_shape(0));
      break;
    default:
      throw Error(Errc::NonDifferentiableKind, std::string(to_string(node.kind)) + " '" + node.name + "'");
  }
  return out;
}

/// Extends `g` with the adjoints of `loss` with respect to every node on a path from a target to
/// the loss. Targets the loss does not depend on map to zero-filled nodes.
inline AdjointMap backprop(Graph& g, NodeId loss, std::span<const NodeId> targets) {
  const Node& loss_node = g.node(loss);
  if (loss_node.shape.rank() != 0)
    throw Error(Errc::NotScalarLoss, "'" + loss_node.name + "' has shape " + loss_node.shape.to_string());
  if (loss_node.backward) throw Error(Errc::HigherOrderGradient, "'" + loss_node.name + "' is a gradient node");
  for (NodeId t : targets) {
    if (g.node(t).backward) throw Error(Errc::HigherOrderGradient, "'" + g.node(t).name + "' is a gradient node");
  }
  if (g.frozen()) throw Error(Errc::GraphFrozen, "cannot add gradient nodes to a frozen graph");

  const std::size_t end = loss.index + 1;
  const NodeId roots[] = {loss};
  std::vector<bool> relevant = ancestors(g, roots);
  std::vector<bool> downstream(end, false);
  for (NodeId t : targets)
    if (t.index < end) downstream[t.index] = true;
  for (std::size_t i = 0; i < end; ++i) {
    for (NodeId in : g.nodes()[i].inputs) downstream[i] = downstream[i] || downstream[in.index];
    relevant[i] = relevant[i] && downstream[i];
    if (relevant[i] && g.nodes()[i].backward)
      throw Error(Errc::HigherOrderGradient, "'" + g.nodes()[i].name + "' lies between the targets and the loss");
  }

  Graph::BackwardScope scope(g);
  AdjointMap adjoints;
  // (consumer id, input slot, contribution) per forward node.
  std::vector<std::vector<std::tuple<std::size_t, std::size_t, NodeId>>> pending(end);
  const std::string loss_name = loss_node.name;

  for (std::size_t i = end; i-- > 0;) {
    if (!relevant[i]) continue;
    NodeId adjoint;
    if (i == loss.index) {
      adjoint = g.add_const(g.unique_name("grad/" + loss_name + "/seed"), Tensor::scalar(1.0));
    } else {
      auto& parts = pending[i];
      std::ranges::sort(parts);
      adjoint = std::get<2>(parts.front());
      const std::string prefix = "grad/" + g.nodes()[i].name + "/accumulate";
      for (std::size_t k = 1; k < parts.size(); ++k) {
        adjoint = g.add_op(OpKind::Add, {adjoint, std::get<2>(parts[k])}, g.unique_name(prefix));
      }
    }
    adjoints.entries[NodeId{i}] = adjoint;

    const Node& fwd = g.nodes()[i];
    if (is_source(fwd.kind)) continue;
    const std::vector<NodeId> inputs = fwd.inputs;
    bool wanted[2] = {false, false};
    for (std::size_t k = 0; k < inputs.size(); ++k) wanted[k] = relevant[inputs[k].index];
    auto parts = vjp_rule(g, NodeId{i}, adjoint, std::span<const bool>(wanted, inputs.size()));
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (parts[k]) pending[inputs[k].index].emplace_back(i, k, *parts[k]);
    }
  }

  for (NodeId t : targets) {
    if (adjoints.entries.contains(t)) continue;
    const Node target = g.node(t);
    const std::string name = g.unique_name("grad/" + target.name + "/zero");
    if (target.shape.concrete()) {
      adjoints.entries[t] = g.add_const(name, Tensor::zeros(target.shape.resolve(0)));
    } else {
      NodeId zero = g.add_const(g.unique_name("grad/" + target.name + "/zero_scalar"), Tensor::scalar(0.0));
      adjoints.entries[t] = g.add_op(OpKind::BroadcastLike, {zero, t}, name);
    }
  }
  return adjoints;
}

/// One adjoint node per target, in target order.
inline std::vector<NodeId> gradients(Graph& g, NodeId loss, std::span<const NodeId> targets) {
  AdjointMap adjoints = backprop(g, loss, targets);
  std::vector<NodeId> out;
  out.reserve(targets.size());
  for (NodeId t : targets) out.push_back(adjoints.entries.at(t));
  return out;
}

inline std::vector<NodeId> gradients(Graph& g, NodeId loss, std::initializer_list<NodeId> targets) {
  return gradients(g, loss, std::span<const NodeId>(targets.begin(), targets.size()));
}

}  // namespace minflow

#endif  // MINFLOW_AUTODIFF_HPP_
