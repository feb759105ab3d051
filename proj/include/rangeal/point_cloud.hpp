#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rangeal {

using ClassId = std::int32_t;

/// Label value for pixels/points excluded from training and evaluation.
inline constexpr ClassId kIgnoreLabel = -1;

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float remission = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  std::vector<ClassId> labels;           // empty or one per point
  std::vector<std::uint32_t> instances;  // empty or one per point

  std::size_t size() const { return points.size(); }
  bool has_labels() const { return !labels.empty(); }
  bool has_instances() const { return !instances.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Flat raw-id -> train-id table. Train ids must be exactly 0..C-1.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::map<std::uint16_t, ClassId> raw_to_train, std::set<std::uint16_t> ignore_ids,
           bool strict = false);

  /// Raw id k maps to train id k for k < num_classes.
  static LabelMap identity(int num_classes);

  /// Text format, one entry per line: "<raw> <train>" or "<raw> ignore". '#' starts a comment.
  static LabelMap load(const std::filesystem::path& path, bool strict = false);

  int num_classes() const { return num_classes_; }
  bool strict() const { return strict_; }
  const std::map<std::uint16_t, ClassId>& raw_to_train() const { return raw_to_train_; }
  const std::set<std::uint16_t>& ignore_ids() const { return ignore_ids_; }

  /// Resolves a raw id; `unknown` is set when the id is in neither table.
  ClassId lookup(std::uint16_t raw, bool& unknown) const;

 private:
  std::map<std::uint16_t, ClassId> raw_to_train_;
  std::set<std::uint16_t> ignore_ids_;
  int num_classes_ = 0;
  bool strict_ = false;
};

struct ParsedLabels {
  std::vector<ClassId> classes;
  std::vector<std::uint32_t> instances;
  std::size_t unknown_count = 0;  // raw ids mapped to ignore because they were not in the map
};

// Scan files are headerless little-endian float32 quadruples (x, y, z, remission).
PointCloud parse_point_cloud(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_point_cloud(const PointCloud& cloud);

// Label files hold one little-endian uint32 per point: low 16 bits semantic id,
// high 16 bits instance id.
ParsedLabels parse_labels(std::span<const std::byte> bytes, const LabelMap& map);
std::vector<std::byte> serialize_raw_labels(std::span<const std::uint16_t> semantic,
                                            std::span<const std::uint32_t> instances);

inline std::uint16_t semantic_of(std::uint32_t word) { return static_cast<std::uint16_t>(word & 0xffffu); }
inline std::uint32_t instance_of(std::uint32_t word) { return word >> 16; }
inline std::uint32_t pack_label(std::uint16_t semantic, std::uint32_t instance) {
  return (instance << 16) | semantic;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// Reads a scan and, when `label_path` is non-empty, its labels.
PointCloud load_point_cloud(const std::filesystem::path& scan_path,
                            const std::filesystem::path& label_path, const LabelMap& map,
                            std::size_t* unknown_labels = nullptr);

}  // namespace rangeal
