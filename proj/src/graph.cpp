#include "walkbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "walkbench/rng.hpp"

namespace walkbench {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

bool is_blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::uint64_t pair_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

NodeId parse_index(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "expected a node index, got '" + s + "'");
  }
  if (used != s.size() || value > std::numeric_limits<NodeId>::max()) {
    throw ParseError(line, "expected a node index, got '" + s + "'");
  }
  return static_cast<NodeId>(value);
}

}  // namespace

RawEdges load_edge_list(std::istream& in) {
  RawEdges raw;
  auto intern = [&raw](const std::string& label) {
    auto [it, inserted] = raw.label_map.try_emplace(label, static_cast<NodeId>(raw.labels.size()));
    if (inserted) raw.labels.push_back(label);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 2) {
      throw ParseError(lineno, "expected 2 tokens, found " + std::to_string(tokens.size()));
    }
    const NodeId u = intern(tokens[0]);
    const NodeId v = intern(tokens[1]);
    raw.pairs.emplace_back(u, v);
  }
  if (raw.pairs.empty()) throw ParseError(lineno, "edge list is empty");
  return raw;
}

RawEdges load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return load_edge_list(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::vector<Edge> arcs;
  arcs.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw GraphError("edge endpoint out of range");
    if (u == v) continue;
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.offsets_.assign(n + 1, 0);
  for (const auto& a : arcs) ++g.offsets_[a.first + 1];
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.neighbors_.reserve(arcs.size());
  for (const auto& a : arcs) g.neighbors_.push_back(a.second);
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const noexcept {
  const auto adj = neighbors(u);
  return std::binary_search(adj.begin(), adj.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph build_graph(const RawEdges& raw) {
  Graph g = Graph::from_edges(raw.num_nodes(), raw.pairs);
  if (g.num_edges() == 0) throw GraphError("no edges survive self-loop removal");
  return g;
}

Subgraph largest_component(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr NodeId kUnseen = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> component(n, kUnseen);
  std::vector<NodeId> stack;
  NodeId best = kUnseen;
  std::size_t best_size = 0;
  NodeId next_id = 0;

  // Components are discovered in order of their smallest node, so a strict
  // comparison keeps the earliest on ties.
  for (NodeId root = 0; root < n; ++root) {
    if (component[root] != kUnseen) continue;
    const NodeId id = next_id++;
    std::size_t size = 0;
    component[root] = id;
    stack.push_back(root);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      ++size;
      for (NodeId v : g.neighbors(u)) {
        if (component[v] == kUnseen) {
          component[v] = id;
          stack.push_back(v);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = id;
    }
  }

  Subgraph sub;
  std::vector<NodeId> new_index(n, kUnseen);
  for (NodeId u = 0; u < n; ++u) {
    if (component[u] == best) {
      new_index[u] = static_cast<NodeId>(sub.original.size());
      sub.original.push_back(u);
    }
  }
  std::vector<Edge> edges;
  for (NodeId u : sub.original) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) edges.emplace_back(new_index[u], new_index[v]);
    }
  }
  sub.graph = Graph::from_edges(sub.original.size(), edges);
  return sub;
}

LabeledEdgeSet::LabeledEdgeSet(std::vector<LabeledEdge> edges) : edges_(std::move(edges)) {
  n_pos_ = static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(), [](const LabeledEdge& e) { return e.label == EdgeLabel::kPositive; }));
  if (n_pos_ * 2 != edges_.size()) {
    throw GraphError("labeled edge set is unbalanced: " + std::to_string(n_pos_) + " positives of " +
                     std::to_string(edges_.size()));
  }
}

std::vector<std::uint8_t> LabeledEdgeSet::label_vector() const {
  std::vector<std::uint8_t> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back(e.label == EdgeLabel::kPositive ? 1 : 0);
  return out;
}

Split split_labeled(const Graph& g, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw GraphError("split fraction must lie in (0, 1)");
  }
  const std::size_t n = g.num_nodes();
  std::vector<Edge> edges = g.edges();
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(edges.size())));
  if (k < 1) throw GraphError("graph has too few edges to hold out any");

  const std::uint64_t total_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t non_edges = total_pairs - edges.size();
  if (non_edges < k) {
    throw GraphError("graph too dense: " + std::to_string(k) + " non-edges requested, " +
                     std::to_string(non_edges) + " exist");
  }

  SplitMix64 rng(stream_key(seed, hash_name("split")));

  // Partial Fisher-Yates: the first k slots become the held-out positives.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + rng.below(edges.size() - i);
    std::swap(edges[i], edges[j]);
  }
  std::vector<LabeledEdge> labeled;
  labeled.reserve(2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    labeled.push_back({edges[i].first, edges[i].second, EdgeLabel::kPositive});
  }
  Graph residual = Graph::from_edges(n, std::span<const Edge>(edges).subspan(k));

  std::unordered_set<std::uint64_t> chosen;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 100 * k;
  while (chosen.size() < k && attempts < max_attempts) {
    ++attempts;
    const auto u = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<NodeId>(rng.below(n));
    if (u == v || g.has_edge(u, v)) continue;
    if (!chosen.insert(pair_key(u, v)).second) continue;
    labeled.push_back({std::min(u, v), std::max(u, v), EdgeLabel::kNegative});
  }
  if (chosen.size() < k) {
    std::vector<Edge> pool;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (!g.has_edge(u, v) && !chosen.contains(pair_key(u, v))) pool.emplace_back(u, v);
      }
    }
    const std::size_t need = k - chosen.size();
    for (std::size_t i = 0; i < need; ++i) {
      const auto j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      labeled.push_back({pool[i].first, pool[i].second, EdgeLabel::kNegative});
    }
  }
  return {std::move(residual), LabeledEdgeSet(std::move(labeled))};
}

void write_graph(std::ostream& out, const Graph& g, const std::string& header) {
  out << "# " << header << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph read_graph(std::istream& in, std::string* header) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw ParseError(1, "missing graph header line");
  }
  if (header) *header = line.substr(2);
  std::size_t n = 0;
  bool have_n = false;
  for (const auto& tok : split_ws(line)) {
    if (tok.rfind("nodes=", 0) == 0) {
      n = parse_index(tok.substr(6), 1);
      have_n = true;
    }
  }
  if (!have_n) throw ParseError(1, "graph header lacks nodes=N");
  std::vector<Edge> edges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 2) throw ParseError(lineno, "expected 2 tokens");
    edges.emplace_back(parse_index(tokens[0], lineno), parse_index(tokens[1], lineno));
  }
  return Graph::from_edges(n, edges);
}

void write_node_map(std::ostream& out, std::span<const std::string> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << labels[i] << '\t' << i << '\n';
}

std::vector<std::string> read_node_map(std::istream& in) {
  std::vector<std::string> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(lineno, "expected label<TAB>index");
    const NodeId index = parse_index(line.substr(tab + 1), lineno);
    if (index >= labels.size()) labels.resize(index + 1);
    labels[index] = line.substr(0, tab);
  }
  return labels;
}

void write_labeled_edges(std::ostream& out, const LabeledEdgeSet& set) {
  out << "u,v,label\n";
  for (const auto& e : set.edges()) {
    out << e.u << ',' << e.v << ',' << (e.label == EdgeLabel::kPositive ? 1 : 0) << '\n';
  }
}

LabeledEdgeSet read_labeled_edges(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "u,v,label") {
    throw ParseError(1, "expected header 'u,v,label'");
  }
  std::vector<LabeledEdge> edges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto tokens = split_ws(line);
    if (tokens.size() != 3 || (tokens[2] != "0" && tokens[2] != "1")) {
      throw ParseError(lineno, "expected u,v,label with label 0 or 1");
    }
    edges.push_back({parse_index(tokens[0], lineno), parse_index(tokens[1], lineno),
                     tokens[2] == "1" ? EdgeLabel::kPositive : EdgeLabel::kNegative});
  }
  return LabeledEdgeSet(std::move(edges));
}

}  // namespace walkbench
