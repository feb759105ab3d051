#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rangeal/dataset.hpp"
#include "rangeal/point_cloud.hpp"
#include "rangeal/projection.hpp"

namespace rangeal {

/// Procedural street scenes: ground, building facades, box vehicles and
/// pole-like objects, each class with its own remission signature. Sample i
/// is variant (i % variants_per_scene) of base scene (i / variants_per_scene);
/// variants differ only by a small sensor pose jitter and measurement noise.
struct SceneSpec {
  int classes = 4;              // 2..4: {ground, building, vehicle, pole}, merged from the end when fewer
  int min_obstacles = 2;
  int max_obstacles = 8;
  double noise_floor = 0.02;    // range noise std, meters
  std::uint64_t seed = 0;
  int variants_per_scene = 5;
  double wet_fraction = 0.25;   // base scenes with a brighter, wet road
  double pose_jitter = 0.4;     // meters of sensor translation between variants
  SensorConfig beams;           // one ray per pixel centre of this grid

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Train ids used by the generator (when classes == 4).
enum SynthClass : ClassId { kSynthGround = 0, kSynthBuilding = 1, kSynthVehicle = 2, kSynthPole = 3 };

PointCloud generate_scene(const SceneSpec& spec, std::size_t index);

std::vector<PointCloud> generate_pool(const SceneSpec& spec, std::size_t n, std::size_t first_index = 0);

/// Writes scans, labels and a manifest ("manifest.txt") under `dir`.
DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, const SceneSpec& spec, std::size_t n);

}  // namespace rangeal
