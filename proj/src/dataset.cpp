#include "rangeal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "rangeal/error.hpp"

namespace rangeal {

std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

PoolSplit split_pool(const DatasetManifest& manifest, std::size_t pool_size, std::size_t test_size,
                     std::uint64_t seed) {
  const std::size_t n = manifest.entries.size();
  if (pool_size + test_size > n)
    throw Error(Errc::PoolTooLarge, "pool " + std::to_string(pool_size) + " + test " + std::to_string(test_size) +
                                        " exceeds " + std::to_string(n) + " entries");
  RngStream rng(seed, 0, 0);
  const auto perm = random_permutation(n, rng);
  PoolSplit out;
  out.pool.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(pool_size));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(pool_size),
                  perm.begin() + static_cast<std::ptrdiff_t>(pool_size + test_size));
  std::sort(out.pool.begin(), out.pool.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::StorageError, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  DatasetManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    ManifestEntry e;
    e.scan_path = resolve(line.substr(0, tab));
    if (tab != std::string::npos) e.label_path = resolve(line.substr(tab + 1));
    m.entries.push_back(std::move(e));
  }
  m.split.assign(m.entries.size(), Split::Unassigned);
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::StorageError, "cannot write manifest " + path.string());
  for (const auto& e : entries) out << e.scan_path.string() << '\t' << e.label_path.string() << '\n';
  if (!out) throw Error(Errc::StorageError, "write failed on " + path.string());
}

void DatasetManifest::assign_splits(std::size_t pool_size, std::size_t test_size, std::uint64_t s) {
  const PoolSplit ps = split_pool(*this, pool_size, test_size, s);
  seed = s;
  split.assign(entries.size(), Split::Unassigned);
  for (auto i : ps.pool) split[i] = Split::Pool;
  for (auto i : ps.test) split[i] = Split::Test;
}

IndexSet DatasetManifest::indices(Split which) const {
  IndexSet out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == which) out.push_back(i);
  return out;
}

}  // namespace rangeal
