#ifndef MINFLOW_GRAPH_HPP_
#define MINFLOW_GRAPH_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "minflow/error.hpp"
#include "minflow/tensor.hpp"

namespace minflow {

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// Wildcard (batch) dimension, bound to a concrete size when placeholders are fed.
inline constexpr std::size_t kUnknownDim = std::numeric_limits<std::size_t>::max();

/// Declared shape of a node. May carry one wildcard dimension.
class NodeShape {
 public:
  NodeShape() = default;
  NodeShape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
  explicit NodeShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}
  explicit NodeShape(const Shape& concrete) : dims_(concrete.dims().begin(), concrete.dims().end()) {}

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::span<const std::size_t> dims() const noexcept { return dims_; }

  bool is_unknown(std::size_t axis) const { return dims_.at(axis) == kUnknownDim; }
  std::size_t wildcard_count() const { return static_cast<std::size_t>(std::ranges::count(dims_, kUnknownDim)); }
  bool concrete() const { return wildcard_count() == 0; }

  /// Substitutes the batch size for every wildcard.
  Shape resolve(std::size_t batch) const {
    std::vector<std::size_t> out = dims_;
    for (auto& d : out)
      if (d == kUnknownDim) d = batch;
    return Shape(std::move(out));
  }

  /// True when `s` agrees with every known dim; wildcards must equal `batch` when it is set.
  bool matches(const Shape& s, std::optional<std::size_t> batch = std::nullopt) const {
    if (s.rank() != rank()) return false;
    for (std::size_t i = 0; i < rank(); ++i) {
      if (dims_[i] == kUnknownDim) {
        if (batch && s[i] != *batch) return false;
      } else if (dims_[i] != s[i]) {
        return false;
      }
    }
    return true;
  }

  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i > 0) out += ",";
      out += dims_[i] == kUnknownDim ? std::string("?") : std::to_string(dims_[i]);
    }
    return out + "]";
  }

  friend bool operator==(const NodeShape&, const NodeShape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

enum class OpKind {
  Placeholder,
  Variable,
  Const,
  MatMul,
  AddRowBroadcast,
  Sigmoid,
  Relu,
  Log,
  Neg,
  Add,
  Sub,
  Mul,
  ReduceSum,
  Dot,
  Reshape,
  // Kinds emitted by the backward pass.
  Transpose,
  ColumnSum,
  BroadcastLike,
  SigmoidGrad,
  ReluGrad,
  LogGrad,
};

constexpr std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Placeholder: return "Placeholder";
    case OpKind::Variable: return "Variable";
    case OpKind::Const: return "Const";
    case OpKind::MatMul: return "MatMul";
    case OpKind::AddRowBroadcast: return "AddRowBroadcast";
    case OpKind::Sigmoid: return "Sigmoid";
    case OpKind::Relu: return "Relu";
    case OpKind::Log: return "Log";
    case OpKind::Neg: return "Neg";
    case OpKind::Add: return "Add";
    case OpKind::Sub: return "Sub";
    case OpKind::Mul: return "Mul";
    case OpKind::ReduceSum: return "ReduceSum";
    case OpKind::Dot: return "Dot";
    case OpKind::Reshape: return "Reshape";
    case OpKind::Transpose: return "Transpose";
    case OpKind::ColumnSum: return "ColumnSum";
    case OpKind::BroadcastLike: return "BroadcastLike";
    case OpKind::SigmoidGrad: return "SigmoidGrad";
    case OpKind::ReluGrad: return "ReluGrad";
    case OpKind::LogGrad: return "LogGrad";
  }
  return "Unknown";
}

constexpr std::size_t arity(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Placeholder:
    case OpKind::Variable:
    case OpKind::Const:
      return 0;
    case OpKind::Sigmoid:
    case OpKind::Relu:
    case OpKind::Log:
    case OpKind::Neg:
    case OpKind::ReduceSum:
    case OpKind::Reshape:
    case OpKind::Transpose:
    case OpKind::ColumnSum:
      return 1;
    default:
      return 2;
  }
}

constexpr bool is_source(OpKind kind) noexcept { return arity(kind) == 0; }

struct NormalInit {
  double mean = 0.0;
  double stddev = 1.0;
};
struct ZerosInit {};
struct ExplicitInit {
  Tensor value;
};
using InitializerSpec = std::variant<NormalInit, ZerosInit, ExplicitInit>;

struct Node {
  NodeId id;
  OpKind kind = OpKind::Const;
  std::vector<NodeId> inputs;
  NodeShape shape;
  std::string name;
  std::optional<InitializerSpec> init;  // Variable only
  std::optional<Tensor> value;          // Const only
  bool backward = false;                // created by the backward pass
};

namespace detail {

inline std::size_t unify_dim(std::size_t a, std::size_t b, OpKind kind) {
  if (a == b) return a;
  if (a == kUnknownDim) return b;
  if (b == kUnknownDim) return a;
  throw Error(Errc::ShapeMismatch, std::string(to_string(kind)) + ": dim " + std::to_string(a) + " vs " +
                                       std::to_string(b));
}

inline NodeShape unify_shapes(const NodeShape& a, const NodeShape& b, OpKind kind) {
  if (a.rank() != b.rank()) {
    throw Error(Errc::ShapeMismatch,
                std::string(to_string(kind)) + ": " + a.to_string() + " vs " + b.to_string());
  }
  std::vector<std::size_t> out(a.rank());
  for (std::size_t i = 0; i < a.rank(); ++i) out[i] = unify_dim(a[i], b[i], kind);
  return NodeShape(std::move(out));
}

inline void require_rank(const NodeShape& s, std::size_t rank, OpKind kind) {
  if (s.rank() != rank) {
    throw Error(Errc::ShapeMismatch, std::string(to_string(kind)) + " needs rank " + std::to_string(rank) +
                                         ", got " + s.to_string());
  }
}

}  // namespace detail

/// Output shape of `kind` applied to inputs of the given shapes.
inline NodeShape infer_shape(OpKind kind, std::span<const NodeShape> in) {
  using detail::require_rank;
  switch (kind) {
    case OpKind::MatMul: {
      require_rank(in[0], 2, kind);
      require_rank(in[1], 2, kind);
      detail::unify_dim(in[0][1], in[1][0], kind);
      return NodeShape{in[0][0], in[1][1]};
    }
    case OpKind::AddRowBroadcast: {
      require_rank(in[0], 2, kind);
      require_rank(in[1], 1, kind);
      return NodeShape{in[0][0], detail::unify_dim(in[0][1], in[1][0], kind)};
    }
    case OpKind::Sigmoid:
    case OpKind::Relu:
    case OpKind::Log:
    case OpKind::Neg:
      return in[0];
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
      if (in[0].rank() == 0) return in[1];
      if (in[1].rank() == 0) return in[0];
      return detail::unify_shapes(in[0], in[1], kind);
    case OpKind::ReduceSum:
      return NodeShape{};
    case OpKind::Dot:
      require_rank(in[0], 1, kind);
      require_rank(in[1], 1, kind);
      detail::unify_dim(in[0][0], in[1][0], kind);
      return NodeShape{};
    case OpKind::Transpose:
      require_rank(in[0], 2, kind);
      return NodeShape{in[0][1], in[0][0]};
    case OpKind::ColumnSum:
      require_rank(in[0], 2, kind);
      return NodeShape{in[0][1]};
    case OpKind::BroadcastLike:
      require_rank(in[0], 0, kind);
      return in[1];
    case OpKind::SigmoidGrad:
    case OpKind::ReluGrad:
    case OpKind::LogGrad:
      return detail::unify_shapes(in[0], in[1], kind);
    default:
      throw Error(Errc::InvalidArgument, std::string(to_string(kind)) + " has no inference rule");
  }
}

/// Append-only dataflow graph. Inputs always refer to earlier nodes, so the graph is acyclic.
class Graph {
 public:
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }

  const Node& node(NodeId id) const {
    if (id.index >= nodes_.size()) throw Error(Errc::UnknownNode, "node " + std::to_string(id.index));
    return nodes_[id.index];
  }

  std::optional<NodeId> find(std::string_view name) const {
    auto it = names_.find(std::string(name));
    if (it == names_.end()) return std::nullopt;
    return it->second;
  }

  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  NodeId add_placeholder(std::string name, NodeShape shape) {
    if (shape.rank() > kMaxRank) throw Error(Errc::InvalidShape, "placeholder rank exceeds 2");
    for (std::size_t i = 0; i < shape.rank(); ++i) {
      if (shape.is_unknown(i) && i != 0)
        throw Error(Errc::InvalidShape, "wildcard only allowed in the leading dim: " + shape.to_string());
      if (shape[i] == 0) throw Error(Errc::InvalidShape, "zero dim in " + shape.to_string());
    }
    Node n;
    n.kind = OpKind::Placeholder;
    n.shape = std::move(shape);
    n.name = std::move(name);
    return append(std::move(n));
  }

  NodeId add_variable(std::string name, NodeShape shape, InitializerSpec init) {
    if (shape.rank() > kMaxRank) throw Error(Errc::InvalidShape, "variable rank exceeds 2");
    if (!shape.concrete()) throw Error(Errc::InvalidShape, "variable '" + name + "' has a wildcard dim");
    for (std::size_t d : shape.dims())
      if (d == 0) throw Error(Errc::InvalidShape, "zero dim in " + shape.to_string());
    if (const auto* n = std::get_if<NormalInit>(&init); n && !(n->stddev >= 0.0)) {
      throw Error(Errc::InvalidArgument, "negative stddev for '" + name + "'");
    }
    if (const auto* e = std::get_if<ExplicitInit>(&init); e && !shape.matches(e->value.shape())) {
      throw Error(Errc::InvalidShape,
                  "initializer " + e->value.shape().to_string() + " does not match " + shape.to_string());
    }
    Node n;
    n.kind = OpKind::Variable;
    n.shape = std::move(shape);
    n.name = std::move(name);
    n.init = std::move(init);
    return append(std::move(n));
  }

  NodeId add_const(std::string name, Tensor value) {
    Node n;
    n.kind = OpKind::Const;
    n.shape = NodeShape(value.shape());
    n.name = std::move(name);
    n.value = std::move(value);
    return append(std::move(n));
  }

  /// Appends an operation node with an inferred shape. An empty name is replaced by "<Kind>_<id>".
  NodeId add_op(OpKind kind, std::span<const NodeId> inputs, std::string name = {}) {
    if (is_source(kind)) {
      throw Error(Errc::ArityError, std::string(to_string(kind)) + " is a source node; use its add_* method");
    }
    if (kind == OpKind::Reshape) throw Error(Errc::InvalidArgument, "use add_reshape for Reshape");
    check_inputs(kind, inputs);
    std::vector<NodeShape> shapes;
    for (NodeId id : inputs) shapes.push_back(nodes_[id.index].shape);
    Node n;
    n.kind = kind;
    n.inputs.assign(inputs.begin(), inputs.end());
    n.shape = infer_shape(kind, shapes);
    if (n.shape.wildcard_count() > 1)
      throw Error(Errc::InvalidShape, std::string(to_string(kind)) + " would produce " + n.shape.to_string());
    n.name = std::move(name);
    return append(std::move(n));
  }

  NodeId add_op(OpKind kind, std::initializer_list<NodeId> inputs, std::string name = {}) {
    return add_op(kind, std::span<const NodeId>(inputs.begin(), inputs.size()), std::move(name));
  }

  /// Reinterprets the input's elements under `target`. A wildcard in `target` takes the batch size.
  NodeId add_reshape(NodeId input, NodeShape target, std::string name = {}) {
    const NodeId in[] = {input};
    check_inputs(OpKind::Reshape, in);
    const NodeShape& src = nodes_[input.index].shape;
    if (target.rank() > kMaxRank || target.wildcard_count() > 1)
      throw Error(Errc::InvalidShape, "bad reshape target " + target.to_string());
    if (target.wildcard_count() != src.wildcard_count())
      throw Error(Errc::InvalidShape, "reshape " + src.to_string() + " -> " + target.to_string() +
                                          " must keep the batch wildcard");
    auto known = [](const NodeShape& s) {
      std::size_t p = 1;
      for (std::size_t d : s.dims())
        if (d != kUnknownDim) p *= d;
      return p;
    };
    if (known(src) != known(target))
      throw Error(Errc::ShapeMismatch, "reshape " + src.to_string() + " -> " + target.to_string());
    Node n;
    n.kind = OpKind::Reshape;
    n.inputs = {input};
    n.shape = std::move(target);
    n.name = std::move(name);
    return append(std::move(n));
  }

  /// `prefix` if unused, else the first free `prefix_<k>`.
  std::string unique_name(const std::string& prefix) const {
    if (!names_.contains(prefix)) return prefix;
    for (std::size_t k = 1;; ++k) {
      std::string candidate = prefix + "_" + std::to_string(k);
      if (!names_.contains(candidate)) return candidate;
    }
  }

  /// Marks every node added from now on as part of a backward pass until the guard is released.
  class BackwardScope {
   public:
    explicit BackwardScope(Graph& g) : g_(g), previous_(g.backward_) { g_.backward_ = true; }
    ~BackwardScope() { g_.backward_ = previous_; }
    BackwardScope(const BackwardScope&) = delete;
    BackwardScope& operator=(const BackwardScope&) = delete;

   private:
    Graph& g_;
    bool previous_;
  };

 private:
  void check_inputs(OpKind kind, std::span<const NodeId> inputs) const {
    if (inputs.size() != arity(kind)) {
      throw Error(Errc::ArityError, std::string(to_string(kind)) + " takes " + std::to_string(arity(kind)) +
                                        " inputs, got " + std::to_string(inputs.size()));
    }
    for (NodeId id : inputs)
      if (id.index >= nodes_.size()) throw Error(Errc::UnknownInput, "input " + std::to_string(id.index));
  }

  NodeId append(Node n) {
    if (frozen_) throw Error(Errc::GraphFrozen, "graph is frozen");
    if (n.name.empty()) n.name = unique_name(std::string(to_string(n.kind)) + "_" + std::to_string(nodes_.size()));
    if (names_.contains(n.name)) throw Error(Errc::DuplicateName, "'" + n.name + "'");
    n.id = NodeId{nodes_.size()};
    n.backward = backward_;
    names_.emplace(n.name, n.id);
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> names_;
  bool frozen_ = false;
  bool backward_ = false;
};

/// Every node appears after its inputs. Insertion order already satisfies this.
inline std::vector<NodeId> topo_order(const Graph& g) {
  std::vector<NodeId> order(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = NodeId{i};
  return order;
}

/// Marks the roots and every node they transitively depend on.
inline std::vector<bool> ancestors(const Graph& g, std::span<const NodeId> roots) {
  std::vector<bool> mark(g.size(), false);
  for (NodeId r : roots) mark.at(g.node(r).id.index) = true;
  for (std::size_t i = g.size(); i-- > 0;) {
    if (!mark[i]) continue;
    for (NodeId in : g.nodes()[i].inputs) mark[in.index] = true;
  }
  return mark;
}

}  // namespace minflow

#endif  // MINFLOW_GRAPH_HPP_
