#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rangeal/rng.hpp"

namespace rangeal {

using IndexSet = std::vector<std::size_t>;  // sorted ascending, no duplicates

struct ManifestEntry {
  std::filesystem::path scan_path;
  std::filesystem::path label_path;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

enum class Split : std::uint8_t { Unassigned, Pool, Test };

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<Split> split;  // parallel to entries
  std::uint64_t seed = 0;

  /// One "scan_path<TAB>label_path" per line; relative paths resolve against the manifest's directory.
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Draws the splits with split_pool and records them in `split`.
  void assign_splits(std::size_t pool_size, std::size_t test_size, std::uint64_t seed);
  IndexSet indices(Split which) const;
};

struct PoolSplit {
  IndexSet pool;
  IndexSet test;
};

/// Disjoint uniform random subsets of the manifest's entries. A pure function
/// of (entry count, sizes, seed).
PoolSplit split_pool(const DatasetManifest& manifest, std::size_t pool_size, std::size_t test_size,
                     std::uint64_t seed);

/// Fisher-Yates over 0..n-1 driven by `rng`; the first k entries are a uniform k-subset.
std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng);

}  // namespace rangeal
