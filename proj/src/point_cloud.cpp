#include "rangeal/point_cloud.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rangeal/error.hpp"

namespace rangeal {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

namespace {

template <typename T>
T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store_le(std::byte* p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

}  // namespace

LabelMap::LabelMap(std::map<std::uint16_t, ClassId> raw_to_train, std::set<std::uint16_t> ignore_ids,
                   bool strict)
    : raw_to_train_(std::move(raw_to_train)), ignore_ids_(std::move(ignore_ids)), strict_(strict) {
  std::set<ClassId> train_ids;
  for (const auto& [raw, train] : raw_to_train_) {
    if (ignore_ids_.count(raw)) throw Error(Errc::BadConfig, "raw id " + std::to_string(raw) + " is both mapped and ignored");
    if (train < 0) throw Error(Errc::BadConfig, "negative train id for raw id " + std::to_string(raw));
    train_ids.insert(train);
  }
  // Several raw ids may share a train id; the distinct train ids must be 0..C-1.
  int expected = 0;
  for (ClassId t : train_ids) {
    if (t != expected) throw Error(Errc::BadConfig, "train ids are not contiguous from 0");
    ++expected;
  }
  num_classes_ = expected;
}

LabelMap LabelMap::identity(int num_classes) {
  std::map<std::uint16_t, ClassId> table;
  for (int c = 0; c < num_classes; ++c) table[static_cast<std::uint16_t>(c)] = c;
  return LabelMap(std::move(table), {});
}

LabelMap LabelMap::load(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::StorageError, "cannot open label map " + path.string());
  std::map<std::uint16_t, ClassId> table;
  std::set<std::uint16_t> ignore;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    long raw = 0;
    std::string target;
    if (!(ls >> raw)) continue;
    if (!(ls >> target) || raw < 0 || raw > 0xffff)
      throw Error(Errc::BadConfig, "bad label map line: " + line);
    if (target == "ignore") {
      ignore.insert(static_cast<std::uint16_t>(raw));
    } else {
      table[static_cast<std::uint16_t>(raw)] = static_cast<ClassId>(std::stol(target));
    }
  }
  return LabelMap(std::move(table), std::move(ignore), strict);
}

ClassId LabelMap::lookup(std::uint16_t raw, bool& unknown) const {
  unknown = false;
  if (auto it = raw_to_train_.find(raw); it != raw_to_train_.end()) return it->second;
  if (ignore_ids_.count(raw)) return kIgnoreLabel;
  unknown = true;
  return kIgnoreLabel;
}

PointCloud parse_point_cloud(std::span<const std::byte> bytes) {
  if (bytes.size() % 16 != 0)
    throw Error(Errc::MalformedScan, "scan length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::byte* p = bytes.data() + 16 * k;
    Point& pt = cloud.points[k];
    pt.x = load_le<float>(p);
    pt.y = load_le<float>(p + 4);
    pt.z = load_le<float>(p + 8);
    pt.remission = load_le<float>(p + 12);
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z) || !std::isfinite(pt.remission))
      throw Error(Errc::MalformedScan, "non-finite value in point " + std::to_string(k));
  }
  return cloud;
}

std::vector<std::byte> serialize_point_cloud(const PointCloud& cloud) {
  std::vector<std::byte> out(cloud.points.size() * 16);
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    std::byte* p = out.data() + 16 * k;
    const Point& pt = cloud.points[k];
    store_le(p, pt.x);
    store_le(p + 4, pt.y);
    store_le(p + 8, pt.z);
    store_le(p + 12, pt.remission);
  }
  return out;
}

ParsedLabels parse_labels(std::span<const std::byte> bytes, const LabelMap& map) {
  if (bytes.size() % 4 != 0)
    throw Error(Errc::MalformedLabels, "label length " + std::to_string(bytes.size()) + " is not a multiple of 4");
  ParsedLabels out;
  const std::size_t n = bytes.size() / 4;
  out.classes.resize(n);
  out.instances.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto word = load_le<std::uint32_t>(bytes.data() + 4 * k);
    bool unknown = false;
    out.classes[k] = map.lookup(semantic_of(word), unknown);
    out.instances[k] = instance_of(word);
    if (unknown) {
      if (map.strict())
        throw Error(Errc::UnknownLabel, "raw semantic id " + std::to_string(semantic_of(word)) + " is not mapped");
      ++out.unknown_count;
    }
  }
  return out;
}

std::vector<std::byte> serialize_raw_labels(std::span<const std::uint16_t> semantic,
                                            std::span<const std::uint32_t> instances) {
  std::vector<std::byte> out(semantic.size() * 4);
  for (std::size_t k = 0; k < semantic.size(); ++k) {
    const std::uint32_t inst = k < instances.size() ? instances[k] : 0u;
    store_le(out.data() + 4 * k, pack_label(semantic[k], inst));
  }
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::StorageError, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    throw Error(Errc::StorageError, "short read on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::StorageError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::StorageError, "write failed on " + path.string());
}

PointCloud load_point_cloud(const std::filesystem::path& scan_path, const std::filesystem::path& label_path,
                            const LabelMap& map, std::size_t* unknown_labels) {
  PointCloud cloud = parse_point_cloud(read_file_bytes(scan_path));
  if (!label_path.empty()) {
    ParsedLabels labels = parse_labels(read_file_bytes(label_path), map);
    if (labels.classes.size() != cloud.size())
      throw Error(Errc::MalformedLabels, label_path.string() + " has " + std::to_string(labels.classes.size()) +
                                             " labels for " + std::to_string(cloud.size()) + " points");
    cloud.labels = std::move(labels.classes);
    cloud.instances = std::move(labels.instances);
    if (unknown_labels) *unknown_labels = labels.unknown_count;
  }
  return cloud;
}

}  // namespace rangeal
