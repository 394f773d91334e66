#include "walkbench/walk.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace walkbench {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_double(const std::string& s, const std::string& context) {
  double value = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("bad number '" + s + "' in '" + context + "'");
  }
  return value;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip_spaces(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

void normalize(std::vector<double>& w) {
  double sum = 0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
}

}  // namespace

double tsaw_visit_weight(std::uint32_t visits, double lambda) {
  // At lambda = ln 2 the weight is an exact power of two.
  const double base = lambda == std::numbers::ln2 ? 0.5 : std::exp(-lambda);
  return std::pow(base, static_cast<double>(visits));
}

WalkConfig WalkConfig::parse(const std::string& text) {
  const std::string spec = lower(strip_spaces(text));
  WalkConfig cfg;
  if (spec == "rw") return cfg;
  if (spec == "dg") return degree();
  if (spec == "id") return inverse_degree();
  if (spec == "tsaw") return true_self_avoiding();
  if (spec.rfind("tsaw:lambda=", 0) == 0) {
    return true_self_avoiding(parse_double(spec.substr(12), text));
  }
  if (spec.rfind("tsaw_l", 0) == 0) return true_self_avoiding(parse_double(spec.substr(6), text));
  if (spec.rfind("n2v(", 0) == 0 && spec.back() == ')') {
    const auto body = spec.substr(4, spec.size() - 5);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ConfigError("unknown walk '" + text + "'");
    return node2vec(parse_double(body.substr(0, comma), text), parse_double(body.substr(comma + 1), text));
  }
  if (spec.rfind("n2v:", 0) == 0 || spec.rfind("n2v_", 0) == 0) {
    double p = 1.0;
    double q = 1.0;
    std::string rest = spec.substr(4);
    std::replace(rest.begin(), rest.end(), '_', ',');
    std::istringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.rfind("p=", 0) == 0) {
        p = parse_double(item.substr(2), text);
      } else if (item.rfind("q=", 0) == 0) {
        q = parse_double(item.substr(2), text);
      } else if (item.size() > 1 && item[0] == 'p') {
        p = parse_double(item.substr(1), text);
      } else if (item.size() > 1 && item[0] == 'q') {
        q = parse_double(item.substr(1), text);
      } else {
        throw ConfigError("unknown node2vec parameter in '" + text + "'");
      }
    }
    return node2vec(p, q);
  }
  throw ConfigError("unknown walk '" + text + "'");
}

void WalkConfig::validate() const {
  if (walks_per_node < 1) throw ConfigError("walks per node must be at least 1");
  if (max_length < 1) throw ConfigError("walk length must be at least 1");
  if (kind == WalkKind::kTrueSelfAvoiding && !(lambda > 0 && std::isfinite(lambda))) {
    throw ConfigError("TSAW lambda must be positive");
  }
  if (kind == WalkKind::kNode2Vec &&
      !(p > 0 && q > 0 && std::isfinite(p) && std::isfinite(q))) {
    throw ConfigError("node2vec p and q must be positive");
  }
}

std::string WalkConfig::name() const {
  switch (kind) {
    case WalkKind::kRandom: return "RW";
    case WalkKind::kDegree: return "DG";
    case WalkKind::kInverseDegree: return "ID";
    case WalkKind::kTrueSelfAvoiding:
      return lambda == std::numbers::ln2 ? "TSAW" : "TSAW(" + format_double(lambda) + ")";
    case WalkKind::kNode2Vec: return "N2V(" + format_double(p) + ", " + format_double(q) + ")";
  }
  return "?";
}

std::string WalkConfig::slug() const {
  switch (kind) {
    case WalkKind::kRandom: return "rw";
    case WalkKind::kDegree: return "dg";
    case WalkKind::kInverseDegree: return "id";
    case WalkKind::kTrueSelfAvoiding:
      return lambda == std::numbers::ln2 ? "tsaw" : "tsaw_l" + format_double(lambda);
    case WalkKind::kNode2Vec: return "n2v_p" + format_double(p) + "_q" + format_double(q);
  }
  return "?";
}

std::string WalkConfig::describe() const {
  switch (kind) {
    case WalkKind::kRandom: return "rw";
    case WalkKind::kDegree: return "dg";
    case WalkKind::kInverseDegree: return "id";
    case WalkKind::kTrueSelfAvoiding: return "tsaw lambda=" + format_double(lambda);
    case WalkKind::kNode2Vec: return "n2v p=" + format_double(p) + " q=" + format_double(q);
  }
  return "?";
}

std::vector<WalkConfig> default_walks() {
  return {WalkConfig::random(),          WalkConfig::degree(),
          WalkConfig::inverse_degree(),  WalkConfig::true_self_avoiding(),
          WalkConfig::node2vec(1, 1),    WalkConfig::node2vec(1.5, 0.5),
          WalkConfig::node2vec(0.5, 1.5), WalkConfig::node2vec(2.0, 1.5),
          WalkConfig::node2vec(0.25, 0.5)};
}

void transition_weights(const Graph& g, const WalkState& state, const WalkConfig& cfg,
                        std::vector<double>& out) {
  const NodeId u = state.current;
  const auto adj = g.neighbors(u);
  if (adj.empty()) throw DeadEnd(u);
  out.resize(adj.size());

  switch (cfg.kind) {
    case WalkKind::kRandom: {
      const double w = 1.0 / static_cast<double>(adj.size());
      std::fill(out.begin(), out.end(), w);
      return;
    }
    case WalkKind::kDegree:
      for (std::size_t i = 0; i < adj.size(); ++i) out[i] = static_cast<double>(g.degree(adj[i]));
      break;
    case WalkKind::kInverseDegree:
      for (std::size_t i = 0; i < adj.size(); ++i) out[i] = 1.0 / static_cast<double>(g.degree(adj[i]));
      break;
    case WalkKind::kTrueSelfAvoiding: {
      // Shifting by the least-visited neighbor leaves the distribution
      // unchanged and keeps the largest weight at 1.
      std::uint32_t least = state.visits[adj[0]];
      for (NodeId v : adj) least = std::min(least, state.visits[v]);
      for (std::size_t i = 0; i < adj.size(); ++i) {
        out[i] = tsaw_visit_weight(state.visits[adj[i]] - least, cfg.lambda);
      }
      break;
    }
    case WalkKind::kNode2Vec: {
      if (!state.previous) {
        std::fill(out.begin(), out.end(), 1.0);
        break;
      }
      const NodeId prev = *state.previous;
      const double back = 1.0 / cfg.p;
      const double outward = 1.0 / cfg.q;
      for (std::size_t i = 0; i < adj.size(); ++i) {
        const NodeId x = adj[i];
        out[i] = x == prev ? back : g.has_edge(prev, x) ? 1.0 : outward;
      }
      break;
    }
  }
  normalize(out);
}

std::vector<double> rw_weights(const Graph& g, NodeId u) {
  std::vector<double> out;
  transition_weights(g, WalkState{.current = u, .previous = {}, .visits = {}}, WalkConfig::random(), out);
  return out;
}

std::vector<double> dg_weights(const Graph& g, NodeId u) {
  std::vector<double> out;
  transition_weights(g, WalkState{.current = u, .previous = {}, .visits = {}}, WalkConfig::degree(), out);
  return out;
}

std::vector<double> id_weights(const Graph& g, NodeId u) {
  std::vector<double> out;
  transition_weights(g, WalkState{.current = u, .previous = {}, .visits = {}}, WalkConfig::inverse_degree(), out);
  return out;
}

std::vector<double> tsaw_weights(const Graph& g, const WalkState& state, double lambda) {
  std::vector<double> out;
  transition_weights(g, state, WalkConfig::true_self_avoiding(lambda), out);
  return out;
}

std::vector<double> n2v_weights(const Graph& g, const WalkState& state, double p, double q) {
  std::vector<double> out;
  transition_weights(g, state, WalkConfig::node2vec(p, q), out);
  return out;
}

std::size_t sample_step(std::span<const double> weights, SplitMix64& rng) {
  if (weights.empty()) throw std::invalid_argument("empty weight vector");
  double total = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0) throw std::invalid_argument("weight is negative or not finite");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights do not sum to 1");

  const double u = rng.uniform();
  double cumulative = 0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > 0) last_positive = j;
    cumulative += weights[j];
    if (u < cumulative && weights[j] > 0) return j;
  }
  // u landed in the rounding gap above the final cumulative sum.
  return last_positive;
}

SplitMix64 walk_stream(std::uint64_t seed, NodeId start, std::uint32_t replica) {
  return SplitMix64(stream_key(seed, start, replica));
}

std::vector<NodeId> generate_walk(const Graph& g, NodeId start, const WalkConfig& cfg,
                                  SplitMix64& rng, WalkState& state) {
  if (start >= g.num_nodes()) throw std::out_of_range("walk start outside the graph");
  const bool track_visits = cfg.kind == WalkKind::kTrueSelfAvoiding;
  if (track_visits && state.visits.size() != g.num_nodes()) state.visits.assign(g.num_nodes(), 0);

  std::vector<NodeId> walk;
  walk.reserve(cfg.max_length);
  walk.push_back(start);
  state.current = start;
  state.previous.reset();
  if (track_visits) state.visits[start] = 1;

  std::vector<double> weights;
  while (walk.size() < cfg.max_length && g.degree(state.current) > 0) {
    transition_weights(g, state, cfg, weights);
    const NodeId next = g.neighbors(state.current)[sample_step(weights, rng)];
    state.previous = state.current;
    state.current = next;
    if (track_visits) ++state.visits[next];
    walk.push_back(next);
  }
  if (track_visits) {
    for (NodeId v : walk) state.visits[v] = 0;
  }
  return walk;
}

std::vector<NodeId> generate_walk(const Graph& g, NodeId start, const WalkConfig& cfg,
                                  SplitMix64& rng) {
  WalkState state;
  return generate_walk(g, start, cfg, rng, state);
}

WalkCorpus::WalkCorpus(std::size_t num_nodes, std::vector<NodeId> tokens, std::vector<std::size_t> offsets)
    : num_nodes_(num_nodes), tokens_(std::move(tokens)), offsets_(std::move(offsets)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != tokens_.size() ||
      !std::is_sorted(offsets_.begin(), offsets_.end())) {
    throw std::invalid_argument("corpus offsets are inconsistent with tokens");
  }
  for (NodeId t : tokens_) {
    if (t >= num_nodes_) throw std::invalid_argument("corpus token outside the vocabulary");
  }
}

WalkCorpus generate_corpus(const Graph& g, const WalkConfig& cfg, unsigned threads) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<NodeId>> per_start(n);

  auto work = [&](std::atomic<std::size_t>& next) {
    WalkState state;
    for (std::size_t s = next++; s < n; s = next++) {
      auto& out = per_start[s];
      out.reserve(static_cast<std::size_t>(cfg.walks_per_node) * cfg.max_length);
      for (std::uint32_t r = 0; r < cfg.walks_per_node; ++r) {
        auto rng = walk_stream(cfg.seed, static_cast<NodeId>(s), r);
        const auto walk = generate_walk(g, static_cast<NodeId>(s), cfg, rng, state);
        out.push_back(static_cast<NodeId>(walk.size()));
        out.insert(out.end(), walk.begin(), walk.end());
      }
    }
  };

  std::atomic<std::size_t> next{0};
  threads = std::max(1u, threads);
  if (threads == 1) {
    work(next);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back([&] { work(next); });
  }

  // Each per-start buffer is a run of (length, nodes...) records.
  std::vector<NodeId> tokens;
  std::vector<std::size_t> offsets{0};
  offsets.reserve(n * cfg.walks_per_node + 1);
  for (auto& buf : per_start) {
    for (std::size_t i = 0; i < buf.size();) {
      const std::size_t len = buf[i++];
      tokens.insert(tokens.end(), buf.begin() + static_cast<std::ptrdiff_t>(i),
                    buf.begin() + static_cast<std::ptrdiff_t>(i + len));
      offsets.push_back(tokens.size());
      i += len;
    }
    std::vector<NodeId>().swap(buf);
  }
  return WalkCorpus(n, std::move(tokens), std::move(offsets));
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus, const WalkConfig& cfg) {
  out << "# walkbench-corpus v1 " << cfg.describe() << " beta=" << cfg.walks_per_node
      << " alpha=" << cfg.max_length << " seed=" << cfg.seed << " nodes=" << corpus.num_nodes() << '\n';
  for (std::size_t i = 0; i < corpus.num_sequences(); ++i) {
    const auto seq = corpus.sequence(i);
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (j) out << ' ';
      out << seq[j];
    }
    out << '\n';
  }
}

WalkCorpus read_corpus(std::istream& in, WalkConfig* cfg) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty corpus file");
  std::istringstream header(line);
  std::string hash, magic, version, kind;
  header >> hash >> magic >> version >> kind;
  if (hash != "#" || magic != "walkbench-corpus") {
    throw ParseError(1, "not a corpus file (expected output of the walk stage)");
  }
  if (version != "v1") {
    throw ParseError(1, "corpus format " + version + " from the walk stage is not supported");
  }
  WalkConfig parsed;
  if (kind == "rw") {
    parsed = WalkConfig::random();
  } else if (kind == "dg") {
    parsed = WalkConfig::degree();
  } else if (kind == "id") {
    parsed = WalkConfig::inverse_degree();
  } else if (kind == "tsaw") {
    parsed = WalkConfig::true_self_avoiding();
  } else if (kind == "n2v") {
    parsed = WalkConfig::node2vec(1, 1);
  } else {
    throw ParseError(1, "unknown walk kind '" + kind + "'");
  }
  std::size_t nodes = 0;
  bool have_nodes = false;
  std::string tok;
  while (header >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto value = tok.substr(eq + 1);
    if (key == "lambda") parsed.lambda = parse_double(value, line);
    else if (key == "p") parsed.p = parse_double(value, line);
    else if (key == "q") parsed.q = parse_double(value, line);
    else if (key == "beta") parsed.walks_per_node = static_cast<std::uint32_t>(std::stoul(value));
    else if (key == "alpha") parsed.max_length = static_cast<std::uint32_t>(std::stoul(value));
    else if (key == "seed") parsed.seed = std::stoull(value);
    else if (key == "nodes") {
      nodes = std::stoull(value);
      have_nodes = true;
    }
  }
  if (!have_nodes) throw ParseError(1, "corpus header lacks nodes=N");

  std::vector<NodeId> tokens;
  std::vector<std::size_t> offsets{0};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const char* p = line.data();
    const char* end = p + line.size();
    std::size_t before = tokens.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      NodeId v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ParseError(lineno, "bad node index in walk");
      tokens.push_back(v);
      p = next;
    }
    if (tokens.size() == before) throw ParseError(lineno, "empty walk");
    offsets.push_back(tokens.size());
  }
  if (cfg) *cfg = parsed;
  try {
    return WalkCorpus(nodes, std::move(tokens), std::move(offsets));
  } catch (const std::invalid_argument& e) {
    throw ParseError(lineno, e.what());
  }
}

}  // namespace walkbench
