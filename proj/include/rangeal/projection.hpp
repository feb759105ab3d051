#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "rangeal/point_cloud.hpp"

namespace rangeal {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct SensorConfig {
  double fov_up = deg_to_rad(3.0);     // radians above the horizon
  double fov_down = deg_to_rad(25.0);  // radians below the horizon
  int width = 1024;
  int height = 64;

  double fov() const { return fov_up + fov_down; }
  void validate() const;

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

enum Channel : int { kChannelX = 0, kChannelY = 1, kChannelRange = 2, kChannelRemission = 3 };
inline constexpr int kNumChannels = 4;

/// Planes are stored row-major: pixel (u, v) lives at index v * width + u.
/// Invalid pixels hold 0 in every channel, kIgnoreLabel, instance 0 and point index -1.
struct RangeImage {
  int width = 0;
  int height = 0;
  std::array<std::vector<float>, kNumChannels> channels;
  std::vector<ClassId> labels;
  std::vector<std::uint8_t> valid;
  std::vector<std::int32_t> point_index;
  std::vector<std::uint32_t> instance;  // empty when the source carried no instance ids

  RangeImage() = default;
  RangeImage(int w, int h, bool with_instances = false);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u); }
  bool has_instances() const { return !instance.empty(); }

  float& at(Channel c, std::size_t pixel) { return channels[c][pixel]; }
  float at(Channel c, std::size_t pixel) const { return channels[c][pixel]; }

  /// Resets pixel to the empty state.
  void clear_pixel(std::size_t pixel);

  friend bool operator==(const RangeImage&, const RangeImage&) = default;
};

/// Pixel-wise heuristic output. Scores on invalid pixels are 0 and ignored by consumers.
struct PixelScoreMap {
  int width = 0;
  int height = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> valid;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Spherical projection of a single point, clamped into the image.
/// The caller guarantees r > 0.
PixelCoord project_point(double x, double y, double z, const SensorConfig& cfg);

RangeImage project(const PointCloud& cloud, const SensorConfig& cfg);

double valid_fraction(const RangeImage& img);

}  // namespace rangeal
