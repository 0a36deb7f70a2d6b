#ifndef MINFLOW_DOT_HPP_
#define MINFLOW_DOT_HPP_

#include <string>

#include "minflow/graph.hpp"

namespace minflow {

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

/// Graphviz rendering: one vertex per node, then one edge per input reference, both ordered by id.
inline std::string export_dot(const Graph& g) {
  std::string out = "digraph g {\n";
  for (const Node& n : g.nodes()) {
    out += "n" + std::to_string(n.id.index) + " [label=\"" + detail::dot_escape(n.name) + ": " +
           std::string(to_string(n.kind)) + " " + n.shape.to_string() + "\"];\n";
  }
  for (const Node& n : g.nodes()) {
    for (NodeId in : n.inputs) {
      out += "n" + std::to_string(in.index) + " -> n" + std::to_string(n.id.index) + ";\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace minflow

#endif  // MINFLOW_DOT_HPP_
