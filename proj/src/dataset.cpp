#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "walkbench/dataset.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "httplib.h"

namespace walkbench {

namespace {

// flock(2) on a sidecar file for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw std::runtime_error("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void verify_or_quarantine(const DatasetDescriptor& desc, const std::filesystem::path& file) {
  if (!desc.expected_checksum) return;
  const std::string actual = sha256_file(file);
  if (actual == *desc.expected_checksum) return;
  auto quarantine = file;
  quarantine += ".quarantine";
  std::filesystem::rename(file, quarantine);
  throw IntegrityError("dataset " + desc.name + ": checksum mismatch (expected " + *desc.expected_checksum +
                       ", got " + actual + "); file moved to " + quarantine.string());
}

}  // namespace

std::vector<DatasetDescriptor> read_manifest(std::istream& in) {
  std::vector<DatasetDescriptor> out;
  std::set<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw ParseError(lineno, "expected name<TAB>url<TAB>checksum");
    }
    DatasetDescriptor d{fields[0], fields[1], std::nullopt};
    if (fields.size() == 3 && !fields[2].empty() && fields[2] != "-") d.expected_checksum = fields[2];
    if (!names.insert(d.name).second) throw ParseError(lineno, "duplicate dataset name '" + d.name + "'");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DatasetDescriptor> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  return read_manifest(in);
}

std::string default_transport(const std::string& url) {
  if (url.rfind("file://", 0) == 0) {
    const std::filesystem::path path = url.substr(7);
    if (!std::filesystem::exists(path)) throw TransportError("no such file: " + path.string());
    return read_file(path);
  }
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("unsupported URL '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string host = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  auto res = client.Get(path);
  if (!res) throw TransportError("GET " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("GET " + url + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("WALKBENCH_CACHE"); env && *env) return env;
  return "cache";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::filesystem::path fetch_remote(const DatasetDescriptor& desc, const std::filesystem::path& cache_dir,
                                   const Transport& transport, int attempts) {
  std::filesystem::create_directories(cache_dir);
  const auto target = cache_dir / (desc.name + ".edges");
  FileLock lock(cache_dir / (desc.name + ".lock"));

  if (std::filesystem::exists(target)) {
    verify_or_quarantine(desc, target);
    return target;
  }
  if (desc.source_url.empty()) {
    throw TransportError("dataset " + desc.name + ": no source URL and no cached copy");
  }

  std::string body;
  for (int attempt = 1;; ++attempt) {
    try {
      body = transport(desc.source_url);
      break;
    } catch (const TransportError& e) {
      if (attempt >= attempts) throw TransportError("dataset " + desc.name + ": " + e.what());
    }
  }

  auto partial = target;
  partial += ".part";
  {
    std::ofstream out(partial, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("cannot write " + partial.string());
  }
  std::filesystem::rename(partial, target);
  verify_or_quarantine(desc, target);
  return target;
}

SelectionReport validate_selection(const Graph& g) {
  SelectionReport report;
  const std::size_t n = g.num_nodes();
  if (n < 150 || n > 5000) {
    report.warnings.push_back("node count " + std::to_string(n) + " outside [150, 5000]");
  }

  for (NodeId u = 0; u < n; ++u) {
    const auto adj = g.neighbors(u);
    for (std::size_t i = 0; i < adj.size(); ++i) {
      if (adj[i] == u) report.failures.push_back("self-loop at node " + std::to_string(u));
      if (i > 0 && adj[i] <= adj[i - 1]) {
        report.failures.push_back("unsorted or duplicate adjacency at node " + std::to_string(u));
      }
      if (!g.has_edge(adj[i], u)) {
        report.failures.push_back("asymmetric edge " + std::to_string(u) + "->" + std::to_string(adj[i]));
      }
    }
  }

  const std::size_t m = g.num_edges();
  const auto held_out = static_cast<std::size_t>(std::floor(0.25 * static_cast<double>(m)));
  if (held_out < 1) {
    report.failures.push_back("insufficient edges to split: floor(0.25 * " + std::to_string(m) + ") = 0");
  } else if (static_cast<std::uint64_t>(n) * (n - 1) / 2 - m < held_out) {
    report.failures.push_back("too dense to sample " + std::to_string(held_out) + " non-edges");
  }
  report.pass = report.failures.empty();
  return report;
}

}  // namespace walkbench
