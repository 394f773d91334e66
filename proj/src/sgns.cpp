#include "walkbench/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

namespace walkbench {

namespace {

// For a target with label y and score x, let z = x if y else -x. Returns
// log s(z) and stores dL/dx = s(x) - y in *coeff, from a single exp.
double logistic_terms(double x, bool positive, double* coeff) {
  const double z = positive ? x : -x;
  const double e = std::exp(-std::abs(z));
  const double s_neg_z = z >= 0 ? e / (1.0 + e) : 1.0 / (1.0 + e);  // 1 - s(z)
  *coeff = positive ? -s_neg_z : s_neg_z;
  return std::min(z, 0.0) - std::log1p(e);
}

// Eight-lane vectors (GCC/Clang extension). Lane-wise arithmetic is the same
// IEEE arithmetic as the scalar loop it replaces, so results do not depend on
// the target instruction set.
typedef float F8 __attribute__((vector_size(8 * sizeof(float))));
typedef double D8 __attribute__((vector_size(8 * sizeof(double))));
template <class T>
struct Lanes;
template <>
struct Lanes<float> {
  using type = F8;
};
template <>
struct Lanes<double> {
  using type = D8;
};
template <class T>
using Vec = typename Lanes<T>::type;

template <class T>
Vec<T> load8(const T* p) {
  Vec<T> x;
  std::memcpy(&x, p, sizeof x);
  return x;
}
template <class T>
void store8(T* p, Vec<T> x) {
  std::memcpy(p, &x, sizeof x);
}

// Eight independent partial sums in a fixed order, combined pairwise.
template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  Vec<T> acc = {};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) acc += load8(a + j) * load8(b + j);
  T tail = 0;
  for (; j < n; ++j) tail += a[j] * b[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// Element access for the two training modes. Shared rows are touched through
// relaxed atomics: concurrent updates may overwrite each other, which
// asynchronous SGD tolerates.
struct PlainAccess {
  template <class T>
  static T load(const T& x) { return x; }
  template <class T>
  static void add(T& x, T delta) { x += delta; }
};

struct RelaxedAccess {
  template <class T>
  static T load(const T& x) {
    return std::atomic_ref<T>(const_cast<T&>(x)).load(std::memory_order_relaxed);
  }
  template <class T>
  static void add(T& x, T delta) {
    std::atomic_ref<T> ref(x);
    ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
  }
};

template <class Access, class T>
T dot_access(const T* a, const T* b, std::size_t n) {
  if constexpr (std::is_same_v<Access, PlainAccess>) {
    return dot(a, b, n);
  } else {
    T s = 0;
    for (std::size_t j = 0; j < n; ++j) s += Access::load(a[j]) * Access::load(b[j]);
    return s;
  }
}

template <class Access, class T>
double pair_update(EmbeddingMatrix<T>& emb, NodeId center, NodeId context,
                   std::span<const NodeId> negatives, T lr, std::span<T> scratch) {
  const std::size_t d = emb.dim;
  T* v = emb.input.data() + static_cast<std::size_t>(center) * d;
  T* grad = scratch.data();
  if constexpr (!std::is_same_v<Access, PlainAccess>) std::fill(grad, grad + d, T(0));

  constexpr std::size_t kMaxTargets = 64;
  const std::size_t targets = negatives.size() + 1;
  if (targets > kMaxTargets) throw TrainError("too many negative samples per pair");
  T coeff[kMaxTargets];
  double loss = 0;

  T* rows[kMaxTargets];
  for (std::size_t i = 0; i < targets; ++i) {
    const NodeId w = i == 0 ? context : negatives[i - 1];
    rows[i] = emb.output.data() + static_cast<std::size_t>(w) * d;
    const double score = static_cast<double>(dot_access<Access>(rows[i], v, d));
    if (!std::isfinite(score)) throw TrainError("non-finite score during SGNS update");
    double c = 0;
    loss -= logistic_terms(score, i == 0, &c);
    coeff[i] = static_cast<T>(c);
  }

  if constexpr (std::is_same_v<Access, PlainAccess>) {
    // Blocked over dimensions. Within a block the center gradient reads every
    // output row before any row is written, then outputs and finally the
    // center are stepped: the same arithmetic, in the same order, as three
    // separate passes, including when a negative repeats.
    constexpr std::size_t kBlock = 16;
    const T neg_lr = -lr;
    std::size_t jb = 0;
    for (; jb + kBlock <= d; jb += kBlock) {
      Vec<T> g0 = {}, g1 = {};
      for (std::size_t i = 0; i < targets; ++i) {
        const T* o = rows[i] + jb;
        g0 += coeff[i] * load8(o);
        g1 += coeff[i] * load8(o + 8);
      }
      const Vec<T> v0 = load8(v + jb), v1 = load8(v + jb + 8);
      for (std::size_t i = 0; i < targets; ++i) {
        T* o = rows[i] + jb;
        const T step = neg_lr * coeff[i];
        store8(o, load8(o) + step * v0);
        store8(o + 8, load8(o + 8) + step * v1);
      }
      store8(v + jb, v0 + neg_lr * g0);
      store8(v + jb + 8, v1 + neg_lr * g1);
    }
    for (std::size_t j = jb; j < d; ++j) {
      T gj = 0;
      for (std::size_t i = 0; i < targets; ++i) gj += coeff[i] * rows[i][j];
      const T vj = v[j];
      for (std::size_t i = 0; i < targets; ++i) rows[i][j] += (neg_lr * coeff[i]) * vj;
      v[j] = vj + neg_lr * gj;
    }
    return loss;
  } else {
    for (std::size_t i = 0; i < targets; ++i) {
      for (std::size_t j = 0; j < d; ++j) grad[j] += coeff[i] * Access::load(rows[i][j]);
    }
    for (std::size_t i = 0; i < targets; ++i) {
      const T step = -lr * coeff[i];
      for (std::size_t j = 0; j < d; ++j) Access::add(rows[i][j], step * Access::load(v[j]));
    }
    // The center row is updated last so every output step above saw the
    // pre-step center vector.
    for (std::size_t j = 0; j < d; ++j) Access::add(v[j], -lr * grad[j]);
    return loss;
  }
}

void init_parameters(EmbeddingMatrix<float>& emb, std::uint64_t seed) {
  SplitMix64 rng(stream_key(seed, hash_name("init")));
  const double scale = 1.0 / static_cast<double>(emb.dim);
  for (float& x : emb.input) x = static_cast<float>((rng.uniform() - 0.5) * scale);
  std::fill(emb.output.begin(), emb.output.end(), 0.0f);
}

struct EpochTotals {
  double loss = 0;
  std::uint64_t pairs = 0;
};

// Window radii come from a stream per (epoch, sequence), independent of the
// visiting order, so the exact pair count can be taken before training.
SplitMix64 window_stream(std::uint64_t seed, std::size_t epoch, std::size_t sequence) {
  return SplitMix64(stream_key(stream_key(seed, hash_name("window"), epoch), sequence));
}

std::uint64_t count_pairs(const WalkCorpus& corpus, const TrainConfig& cfg, std::size_t epoch) {
  std::uint64_t pairs = 0;
  for (std::size_t s = 0; s < corpus.num_sequences(); ++s) {
    const std::size_t len = corpus.sequence(s).size();
    SplitMix64 wr = window_stream(cfg.seed, epoch, s);
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t r = 1 + wr.below(cfg.window);
      pairs += std::min(t, r) + std::min(len - 1 - t, r);
    }
  }
  return pairs;
}

struct Schedule {
  double lr_start;
  double lr_span;
  std::uint64_t pairs_total;

  float at(std::uint64_t done) const {
    return static_cast<float>(lr_start - lr_span * static_cast<double>(done) / static_cast<double>(pairs_total));
  }
};

template <class Access>
EpochTotals train_slice(EmbeddingMatrix<float>& emb, const WalkCorpus& corpus, const Vocab& vocab,
                        const TrainConfig& cfg, std::size_t epoch, std::span<const std::size_t> order,
                        SplitMix64& rng, const Schedule& schedule, std::atomic<std::uint64_t>& pairs_done) {
  std::vector<float> scratch(emb.dim);
  std::vector<NodeId> negs(cfg.negatives);
  EpochTotals totals;

  for (std::size_t s : order) {
    const auto seq = corpus.sequence(s);
    const std::size_t len = seq.size();
    SplitMix64 wr = window_stream(cfg.seed, epoch, s);
    const std::uint64_t start = pairs_done.load(std::memory_order_relaxed);
    std::uint64_t done = start;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t r = 1 + wr.below(cfg.window);
      const std::size_t lo = t >= r ? t - r : 0;
      const std::size_t hi = std::min(len - 1, t + r);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == t) continue;
        const NodeId context = seq[j];
        for (auto& n : negs) {
          do {
            n = vocab.sample(rng);
          } while (n == context);
        }
        totals.loss += pair_update<Access>(emb, seq[t], context, negs, schedule.at(done++), std::span<float>(scratch));
        ++totals.pairs;
      }
    }
    pairs_done.fetch_add(done - start, std::memory_order_relaxed);
  }
  return totals;
}

}  // namespace

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("embedding dimension must be at least 1");
  if (window < 1) throw ConfigError("context window must be at least 1");
  if (negatives < 1) throw ConfigError("negative samples must be at least 1");
  if (negatives > 63) throw ConfigError("at most 63 negative samples are supported");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(lr_end > 0 && lr_start >= lr_end)) throw ConfigError("learning rates need lr_start >= lr_end > 0");
  if (!(noise_power >= 0 && std::isfinite(noise_power))) throw ConfigError("noise power must be finite and >= 0");
}

Vocab::Vocab(std::vector<std::uint64_t> freq, double noise_power) : freq_(std::move(freq)) {
  total_ = std::accumulate(freq_.begin(), freq_.end(), std::uint64_t{0});
  if (total_ == 0) throw TrainError("vocabulary has no tokens");
  cdf_.resize(freq_.size());
  double running = 0;
  for (std::size_t i = 0; i < freq_.size(); ++i) {
    running += freq_[i] == 0 ? 0.0 : std::pow(static_cast<double>(freq_[i]), noise_power);
    cdf_[i] = running;
  }
  for (double& c : cdf_) c /= running;
}

double Vocab::noise_probability(NodeId w) const noexcept {
  return w == 0 ? cdf_[0] : cdf_[w] - cdf_[w - 1];
}

NodeId Vocab::sample(SplitMix64& rng) const noexcept {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  // Skip zero-probability entries that share the cumulative value.
  while (it != cdf_.begin() && *(it - 1) == *it) --it;
  return static_cast<NodeId>(it - cdf_.begin());
}

Vocab build_vocab(const WalkCorpus& corpus, double noise_power) {
  if (corpus.num_tokens() == 0) throw TrainError("corpus is empty");
  std::vector<std::uint64_t> freq(corpus.num_nodes(), 0);
  for (NodeId t : corpus.tokens()) ++freq[t];
  return Vocab(std::move(freq), noise_power);
}

std::vector<std::pair<NodeId, NodeId>> positive_pairs(std::span<const NodeId> sequence, std::size_t window,
                                                      SplitMix64& rng, bool shrink) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for_each_context_pair(
      sequence, window, rng, [&](NodeId c, NodeId x) { pairs.emplace_back(c, x); }, shrink);
  return pairs;
}

std::vector<NodeId> noise_sample(const Vocab& vocab, NodeId exclude, std::size_t k, SplitMix64& rng) {
  if (vocab.size() < 2) throw TrainError("noise sampling needs at least two words");
  if (vocab.noise_probability(exclude) >= 1.0) {
    throw TrainError("noise distribution has no mass outside the excluded word");
  }
  std::vector<NodeId> out(k);
  for (auto& w : out) {
    do {
      w = vocab.sample(rng);
    } while (w == exclude);
  }
  return out;
}

template <class T>
double sgns_pair_update(EmbeddingMatrix<T>& emb, NodeId center, NodeId context,
                        std::span<const NodeId> negatives, T lr, std::span<T> scratch) {
  if (center >= emb.rows || context >= emb.rows) throw std::out_of_range("pair index outside embedding");
  for (NodeId n : negatives) {
    if (n >= emb.rows) throw std::out_of_range("negative index outside embedding");
  }
  if (scratch.size() < emb.dim) throw std::invalid_argument("scratch smaller than embedding dimension");
  return pair_update<PlainAccess>(emb, center, context, negatives, lr, scratch);
}

template double sgns_pair_update<float>(EmbeddingMatrix<float>&, NodeId, NodeId, std::span<const NodeId>,
                                        float, std::span<float>);
template double sgns_pair_update<double>(EmbeddingMatrix<double>&, NodeId, NodeId, std::span<const NodeId>,
                                         double, std::span<double>);

TrainResult train_sgns(const WalkCorpus& corpus, const TrainConfig& cfg, std::size_t num_nodes) {
  cfg.validate();
  if (corpus.num_nodes() != num_nodes) {
    throw TrainError("corpus vocabulary has " + std::to_string(corpus.num_nodes()) + " nodes, graph has " +
                     std::to_string(num_nodes));
  }
  const Vocab vocab = build_vocab(corpus, cfg.noise_power);
  for (NodeId w = 0; w < num_nodes; ++w) {
    if (vocab.frequency(w) == 0) throw TrainError("node " + std::to_string(w) + " never occurs in the corpus");
  }
  if (num_nodes < 2) throw TrainError("training needs at least two nodes");

  EmbeddingMatrix<float> emb(num_nodes, cfg.dim);
  init_parameters(emb, cfg.seed);

  TrainResult result;
  std::vector<std::size_t> order(corpus.num_sequences());
  // Linear decay over every pair of every epoch.
  std::uint64_t pairs_total = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) pairs_total += count_pairs(corpus, cfg, epoch);
  const Schedule schedule{cfg.lr_start, cfg.lr_start - cfg.lr_end, std::max<std::uint64_t>(pairs_total, 1)};
  std::atomic<std::uint64_t> pairs_done{0};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffle_rng(stream_key(cfg.seed, hash_name("shuffle"), epoch));
    shuffle(order.begin(), order.end(), shuffle_rng);

    EpochTotals totals;
    const unsigned threads = cfg.mode == TrainMode::kAsync ? std::max(1u, cfg.threads) : 1u;
    if (threads == 1) {
      SplitMix64 rng(stream_key(cfg.seed, hash_name("train"), epoch));
      totals = train_slice<PlainAccess>(emb, corpus, vocab, cfg, epoch, order, rng, schedule, pairs_done);
    } else {
      std::vector<EpochTotals> partial(threads);
      {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (order.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
          const std::size_t lo = std::min(order.size(), t * chunk);
          const std::size_t hi = std::min(order.size(), lo + chunk);
          pool.emplace_back([&, t, lo, hi] {
            SplitMix64 rng(stream_key(cfg.seed, hash_name("train"), epoch * 1024 + t));
            partial[t] = train_slice<RelaxedAccess>(emb, corpus, vocab, cfg, epoch,
                                                    std::span<const std::size_t>(order).subspan(lo, hi - lo),
                                                    rng, schedule, pairs_done);
          });
        }
      }
      for (const auto& p : partial) {
        totals.loss += p.loss;
        totals.pairs += p.pairs;
      }
    }
    result.epoch_loss.push_back(totals.pairs ? totals.loss / static_cast<double>(totals.pairs) : 0.0);
    result.pairs += totals.pairs;
  }

  for (float x : emb.input) {
    if (!std::isfinite(x)) throw TrainError("training produced a non-finite embedding entry");
  }
  result.embedding = Embedding{num_nodes, cfg.dim, std::move(emb.input)};
  return result;
}

namespace {
constexpr char kEmbeddingMagic[8] = {'W', 'B', 'E', 'M', 'B', '\x01', '\0', '\0'};

void put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError(0, "truncated binary embedding");
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}
}  // namespace

void write_embedding_text(std::ostream& out, const Embedding& emb) {
  out << emb.rows << ' ' << emb.dim << '\n';
  char buf[32];
  for (std::size_t i = 0; i < emb.rows; ++i) {
    out << i;
    for (float x : emb.row(static_cast<NodeId>(i))) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out << ' ';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

void write_embedding_binary(std::ostream& out, const Embedding& emb) {
  out.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
  put_u64(out, emb.rows);
  put_u64(out, emb.dim);
  for (float x : emb.values) {
    const auto bits = std::bit_cast<std::uint32_t>(x);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

Embedding read_embedding(std::istream& in) {
  char head[8] = {};
  in.read(head, 8);
  const auto got = in.gcount();
  Embedding emb;
  if (got == 8 && std::memcmp(head, kEmbeddingMagic, 5) == 0) {
    if (head[5] != kEmbeddingMagic[5]) {
      throw ParseError(0, "binary embedding version " + std::to_string(static_cast<int>(head[5])) +
                              " from the embed stage is not supported");
    }
    emb.rows = get_u64(in);
    emb.dim = get_u64(in);
    emb.values.resize(emb.rows * emb.dim);
    for (float& x : emb.values) {
      unsigned char b[4];
      if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(0, "truncated binary embedding");
      std::uint32_t bits = 0;
      for (int i = 3; i >= 0; --i) bits = (bits << 8) | b[i];
      x = std::bit_cast<float>(bits);
    }
    return emb;
  }

  std::string text(head, static_cast<std::size_t>(got));
  text.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  std::istringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw ParseError(1, "empty embedding file");
  {
    std::istringstream h(line);
    if (!(h >> emb.rows >> emb.dim)) throw ParseError(1, "expected 'n d' header");
  }
  emb.values.assign(emb.rows * emb.dim, 0.0f);
  std::vector<bool> seen(emb.rows, false);
  std::size_t lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    std::size_t index = 0;
    auto [q, ec] = std::from_chars(p, end, index);
    if (ec != std::errc() || index >= emb.rows) throw ParseError(lineno, "bad row index");
    p = q;
    for (std::size_t j = 0; j < emb.dim; ++j) {
      while (p < end && *p == ' ') ++p;
      float x = 0;
      auto [r, ec2] = std::from_chars(p, end, x);
      if (ec2 != std::errc()) throw ParseError(lineno, "expected " + std::to_string(emb.dim) + " values");
      emb.values[index * emb.dim + j] = x;
      p = r;
    }
    seen[index] = true;
  }
  for (std::size_t i = 0; i < emb.rows; ++i) {
    if (!seen[i]) throw ParseError(lineno, "missing row " + std::to_string(i));
  }
  return emb;
}

}  // namespace walkbench
