#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace walkbench {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge list as read from disk. Labels are densely indexed in order of first
/// appearance; `pairs` refer to those indexes.
struct RawEdges {
  std::vector<Edge> pairs;
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeId> label_map;

  std::size_t num_nodes() const noexcept { return labels.size(); }
};

/// Reads whitespace-separated "u v" lines; '#' starts a comment line.
RawEdges load_edge_list(std::istream& in);
RawEdges load_edge_list(const std::filesystem::path& path);

/// Immutable undirected simple graph in compressed adjacency form. Every
/// neighbor list is sorted ascending and free of duplicates and self-loops.
class Graph {
 public:
  Graph() = default;

  /// Canonicalizes an arbitrary edge list over nodes [0, n): self-loops are
  /// dropped, direction and duplicates collapsed. Isolated nodes are kept.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }

  std::size_t degree(NodeId u) const noexcept { return offsets_[u + 1] - offsets_[u]; }

  std::span<const NodeId> neighbors(NodeId u) const noexcept {
    return {neighbors_.data() + offsets_[u], degree(u)};
  }

  /// O(log deg(u)) membership test.
  bool has_edge(NodeId u, NodeId v) const noexcept;

  /// Each undirected edge once, as (u, v) with u < v, in ascending order.
  std::vector<Edge> edges() const;

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
};

/// Builds the canonical graph from parsed input; throws GraphError when no
/// edge survives self-loop removal.
Graph build_graph(const RawEdges& raw);

struct Subgraph {
  Graph graph;
  /// original[i] is the index in the parent graph of subgraph node i.
  std::vector<NodeId> original;
};

/// Induced subgraph on the largest connected component, reindexed densely in
/// ascending original order. Ties go to the component holding the smallest
/// node index.
Subgraph largest_component(const Graph& g);

enum class EdgeLabel : std::uint8_t { kNegative = 0, kPositive = 1 };

struct LabeledEdge {
  NodeId u;
  NodeId v;
  EdgeLabel label;

  friend bool operator==(const LabeledEdge&, const LabeledEdge&) = default;
};

/// Held-out positive edges followed by an equal number of sampled non-edges.
class LabeledEdgeSet {
 public:
  LabeledEdgeSet() = default;
  explicit LabeledEdgeSet(std::vector<LabeledEdge> edges);

  std::span<const LabeledEdge> edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return edges_.size(); }
  std::size_t num_positive() const noexcept { return n_pos_; }
  std::size_t num_negative() const noexcept { return edges_.size() - n_pos_; }

  /// 1 for positive, 0 for negative, aligned with edges().
  std::vector<std::uint8_t> label_vector() const;

  friend bool operator==(const LabeledEdgeSet&, const LabeledEdgeSet&) = default;

 private:
  std::vector<LabeledEdge> edges_;
  std::size_t n_pos_ = 0;
};

struct Split {
  Graph residual;
  LabeledEdgeSet labels;
};

/// Removes floor(fraction * |E|) uniformly chosen edges as positives and
/// samples as many non-edges of `g` as negatives. The residual keeps all
/// nodes of `g`. Deterministic in (g, fraction, seed).
Split split_labeled(const Graph& g, double fraction, std::uint64_t seed);

// Serialization.

/// "# <header>" line, then one "u v" line per edge of the canonical graph.
void write_graph(std::ostream& out, const Graph& g, const std::string& header);
/// Reads the format of write_graph; node count comes from "nodes=N" in the
/// header so isolated nodes survive.
Graph read_graph(std::istream& in, std::string* header = nullptr);

/// One "label<TAB>index" line per node.
void write_node_map(std::ostream& out, std::span<const std::string> labels);
std::vector<std::string> read_node_map(std::istream& in);

/// CSV with header "u,v,label", label 1 for positives and 0 for negatives.
void write_labeled_edges(std::ostream& out, const LabeledEdgeSet& set);
LabeledEdgeSet read_labeled_edges(std::istream& in);

}  // namespace walkbench
