#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "walkbench/graph.hpp"

namespace walkbench {

struct DatasetDescriptor {
  std::string name;
  std::string source_url;
  std::optional<std::string> expected_checksum;  // lowercase hex SHA-256
};

/// Transport failure; retrying may succeed.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checksum mismatch; the offending file has been moved aside.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Manifest: one "name<TAB>url<TAB>checksum" record per line; the checksum
/// column may be empty or "-". '#' lines are comments. Names must be unique.
std::vector<DatasetDescriptor> read_manifest(std::istream& in);
std::vector<DatasetDescriptor> read_manifest(const std::filesystem::path& path);

/// Downloads the body at a URL. Throws TransportError on failure.
using Transport = std::function<std::string(const std::string& url)>;

/// Supports file://, http:// and https:// URLs.
std::string default_transport(const std::string& url);

/// $WALKBENCH_CACHE if set, otherwise "cache".
std::filesystem::path default_cache_dir();

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Returns <cache_dir>/<name>.edges, downloading it on a cache miss. The
/// checksum, when given, is verified on every call; a mismatching file is
/// renamed to <name>.edges.quarantine and IntegrityError is thrown.
/// Concurrent fetches of the same name serialize on <name>.lock.
std::filesystem::path fetch_remote(const DatasetDescriptor& desc, const std::filesystem::path& cache_dir,
                                   const Transport& transport = default_transport, int attempts = 3);

struct SelectionReport {
  bool pass = true;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
};

/// Checks the benchmark selection rules: 150 <= n <= 5000 (warning only),
/// simple undirected form, and enough edges and non-edges for a 25% split.
SelectionReport validate_selection(const Graph& g);

}  // namespace walkbench
