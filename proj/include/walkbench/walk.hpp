#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "walkbench/graph.hpp"
#include "walkbench/rng.hpp"

namespace walkbench {

enum class WalkKind { kRandom, kDegree, kInverseDegree, kTrueSelfAvoiding, kNode2Vec };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the weight functions when the current node has no neighbors.
class DeadEnd : public std::runtime_error {
 public:
  explicit DeadEnd(NodeId u) : std::runtime_error("node " + std::to_string(u) + " has no neighbors") {}
};

struct WalkConfig {
  WalkKind kind = WalkKind::kRandom;
  double lambda = std::numbers::ln2;  // TSAW decay per visit
  double p = 1.0;                     // node2vec return parameter
  double q = 1.0;                     // node2vec in-out parameter
  std::uint32_t walks_per_node = 40;
  std::uint32_t max_length = 200;
  std::uint64_t seed = 0;

  static WalkConfig random() { return {}; }
  static WalkConfig degree() { return {.kind = WalkKind::kDegree}; }
  static WalkConfig inverse_degree() { return {.kind = WalkKind::kInverseDegree}; }
  static WalkConfig true_self_avoiding(double lambda = std::numbers::ln2) {
    return {.kind = WalkKind::kTrueSelfAvoiding, .lambda = lambda};
  }
  static WalkConfig node2vec(double p, double q) { return {.kind = WalkKind::kNode2Vec, .p = p, .q = q}; }

  /// Parses "rw", "dg", "id", "tsaw", "tsaw:lambda=X", "n2v:p=X,q=Y" (names
  /// case-insensitive; "N2V(1.5,0.5)" is accepted too).
  static WalkConfig parse(const std::string& text);

  /// Throws ConfigError when a bound is violated.
  void validate() const;

  /// Display name, e.g. "TSAW" or "N2V(1.5, 0.5)".
  std::string name() const;
  /// File-name safe identifier, e.g. "tsaw" or "n2v_p1.5_q0.5".
  std::string slug() const;
  /// Kind and parameters, e.g. "tsaw lambda=0.6931471805599453".
  std::string describe() const;
};

/// The nine strategies compared by default.
std::vector<WalkConfig> default_walks();

/// Per-walk memory. `visits` is dense over all nodes and only meaningful for
/// TSAW; it is cleared between walks by the walk generator.
struct WalkState {
  NodeId current = 0;
  std::optional<NodeId> previous;
  std::vector<std::uint32_t> visits;
};

/// Unnormalized TSAW weight exp(-lambda * visits); exactly 2^-visits at
/// lambda = ln 2.
double tsaw_visit_weight(std::uint32_t visits, double lambda);

// Transition distributions over neighbors(u), in adjacency order.
std::vector<double> rw_weights(const Graph& g, NodeId u);
std::vector<double> dg_weights(const Graph& g, NodeId u);
std::vector<double> id_weights(const Graph& g, NodeId u);
std::vector<double> tsaw_weights(const Graph& g, const WalkState& state, double lambda);
std::vector<double> n2v_weights(const Graph& g, const WalkState& state, double p, double q);

/// Fills `out` (resized to deg(current)) with the distribution `cfg` assigns
/// from `state`. Throws DeadEnd on an isolated node.
void transition_weights(const Graph& g, const WalkState& state, const WalkConfig& cfg,
                        std::vector<double>& out);

/// Inverse-CDF draw: returns j with probability weights[j]. One uniform is
/// consumed per call regardless of the weights.
std::size_t sample_step(std::span<const double> weights, SplitMix64& rng);

/// Random stream for walk `replica` starting at `start`.
SplitMix64 walk_stream(std::uint64_t seed, NodeId start, std::uint32_t replica);

/// One walk of at most cfg.max_length nodes. An isolated start yields a
/// singleton. `state` is scratch space reusable across calls.
std::vector<NodeId> generate_walk(const Graph& g, NodeId start, const WalkConfig& cfg,
                                  SplitMix64& rng, WalkState& state);
std::vector<NodeId> generate_walk(const Graph& g, NodeId start, const WalkConfig& cfg,
                                  SplitMix64& rng);

/// Flat storage of walk sequences in canonical order: sequence
/// start * walks_per_node + replica.
class WalkCorpus {
 public:
  WalkCorpus() = default;
  WalkCorpus(std::size_t num_nodes, std::vector<NodeId> tokens, std::vector<std::size_t> offsets);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_sequences() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_tokens() const noexcept { return tokens_.size(); }

  std::span<const NodeId> sequence(std::size_t i) const noexcept {
    return {tokens_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const NodeId> tokens() const noexcept { return tokens_; }

  friend bool operator==(const WalkCorpus&, const WalkCorpus&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<NodeId> tokens_;
  std::vector<std::size_t> offsets_;
};

/// walks_per_node walks from every node. The result depends only on (g, cfg),
/// not on `threads`.
WalkCorpus generate_corpus(const Graph& g, const WalkConfig& cfg, unsigned threads = 1);

/// Header "# walkbench-corpus v1 <describe()> beta=B alpha=A seed=S nodes=N",
/// then one space-separated walk per line.
void write_corpus(std::ostream& out, const WalkCorpus& corpus, const WalkConfig& cfg);
WalkCorpus read_corpus(std::istream& in, WalkConfig* cfg = nullptr);

}  // namespace walkbench
