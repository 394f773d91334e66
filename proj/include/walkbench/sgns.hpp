#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "walkbench/graph.hpp"
#include "walkbench/rng.hpp"
#include "walkbench/walk.hpp"

namespace walkbench {

enum class TrainMode {
  kDeterministic,  // one thread, bitwise reproducible
  kAsync,          // lock-free shared-state SGD across threads
};

struct TrainConfig {
  std::size_t dim = 128;
  std::size_t window = 10;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  double noise_power = 0.75;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kDeterministic;
  unsigned threads = 1;  // used only in async mode

  void validate() const;
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Token counts and the noise distribution proportional to count^power.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::uint64_t> freq, double noise_power);

  std::size_t size() const noexcept { return freq_.size(); }
  std::uint64_t frequency(NodeId w) const noexcept { return freq_[w]; }
  std::uint64_t total() const noexcept { return total_; }
  double noise_probability(NodeId w) const noexcept;

  /// One draw from the noise distribution.
  NodeId sample(SplitMix64& rng) const noexcept;

 private:
  std::vector<std::uint64_t> freq_;
  std::vector<double> cdf_;
  std::uint64_t total_ = 0;
};

Vocab build_vocab(const WalkCorpus& corpus, double noise_power);

/// Visits the skip-gram pairs of `sequence`. For each position a radius is
/// drawn uniformly from [1, window] (or fixed to `window` when `shrink` is
/// false) and every in-bounds neighbor within it is emitted as context.
template <class F>
void for_each_context_pair(std::span<const NodeId> sequence, std::size_t window, SplitMix64& rng,
                           F&& emit, bool shrink = true) {
  const std::size_t len = sequence.size();
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t r = shrink ? 1 + rng.below(window) : window;
    const std::size_t lo = t >= r ? t - r : 0;
    const std::size_t hi = std::min(len - 1, t + r);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != t) emit(sequence[t], sequence[j]);
    }
  }
}

std::vector<std::pair<NodeId, NodeId>> positive_pairs(std::span<const NodeId> sequence, std::size_t window,
                                                      SplitMix64& rng, bool shrink = true);

/// k noise draws; a draw equal to `exclude` is redrawn.
std::vector<NodeId> noise_sample(const Vocab& vocab, NodeId exclude, std::size_t k, SplitMix64& rng);

/// Input vectors (v_w) and output vectors (v'_w), row-major rows x dim.
template <class T>
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<T> input;
  std::vector<T> output;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim)
      : rows(rows), dim(dim), input(rows * dim), output(rows * dim) {}

  std::span<T> in(NodeId w) noexcept { return {input.data() + w * dim, dim}; }
  std::span<T> out(NodeId w) noexcept { return {output.data() + w * dim, dim}; }
  std::span<const T> in(NodeId w) const noexcept { return {input.data() + w * dim, dim}; }
  std::span<const T> out(NodeId w) const noexcept { return {output.data() + w * dim, dim}; }
};

/// One SGD step on
///   L = -log s(v'_ctx . v_c) - sum_neg log s(-v'_neg . v_c)
/// where s is the logistic function. All scores and gradients are taken at
/// the pre-step parameters. Returns L. `scratch` needs `dim` elements.
template <class T>
double sgns_pair_update(EmbeddingMatrix<T>& emb, NodeId center, NodeId context,
                        std::span<const NodeId> negatives, T lr, std::span<T> scratch);

template <class T>
double sgns_pair_update(EmbeddingMatrix<T>& emb, NodeId center, NodeId context,
                        std::span<const NodeId> negatives, T lr) {
  std::vector<T> scratch(emb.dim);
  return sgns_pair_update(emb, center, context, negatives, lr, std::span<T>(scratch));
}

/// Node vectors produced by training (the input matrix).
struct Embedding {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(NodeId w) const noexcept { return {values.data() + w * dim, dim}; }

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

struct TrainResult {
  Embedding embedding;
  /// Mean pair loss of each epoch.
  std::vector<double> epoch_loss;
  std::uint64_t pairs = 0;
};

/// Trains skip-gram with negative sampling over `corpus`. `num_nodes` is the
/// graph size; every node must occur in the corpus. The learning rate falls
/// linearly from lr_start to lr_end over the exact number of pairs.
TrainResult train_sgns(const WalkCorpus& corpus, const TrainConfig& cfg, std::size_t num_nodes);

/// Text format: "n d" header, then "index v1 ... vd" per row.
void write_embedding_text(std::ostream& out, const Embedding& emb);
/// Binary format: 8-byte magic "WBEMB\x01\0\0", u64 rows, u64 dim, then
/// rows*dim little-endian float32.
void write_embedding_binary(std::ostream& out, const Embedding& emb);
/// Reads either format, detected from the leading bytes.
Embedding read_embedding(std::istream& in);

}  // namespace walkbench
