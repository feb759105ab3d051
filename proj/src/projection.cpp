#include "rangeal/projection.hpp"

#include <algorithm>
#include <cmath>

#include "rangeal/error.hpp"

namespace rangeal {

void SensorConfig::validate() const {
  if (!(fov() > 0.0)) throw Error(Errc::BadParam, "vertical field of view must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::BadParam, "range image dimensions must be positive");
}

RangeImage::RangeImage(int w, int h, bool with_instances) : width(w), height(h) {
  const std::size_t n = pixel_count();
  for (auto& plane : channels) plane.assign(n, 0.0f);
  labels.assign(n, kIgnoreLabel);
  valid.assign(n, 0);
  point_index.assign(n, -1);
  if (with_instances) instance.assign(n, 0);
}

void RangeImage::clear_pixel(std::size_t pixel) {
  for (auto& plane : channels) plane[pixel] = 0.0f;
  labels[pixel] = kIgnoreLabel;
  valid[pixel] = 0;
  point_index[pixel] = -1;
  if (has_instances()) instance[pixel] = 0;
}

PixelCoord project_point(double x, double y, double z, const SensorConfig& cfg) {
  const double r = std::sqrt(x * x + y * y + z * z);
  const double pitch = std::asin(z / r);
  const double yaw = std::atan2(y, x);
  const double u = std::floor(0.5 * (1.0 - yaw / std::numbers::pi) * cfg.width);
  const double v = std::floor((1.0 - (pitch + cfg.fov_up) / cfg.fov()) * cfg.height);
  return {static_cast<int>(std::clamp(u, 0.0, static_cast<double>(cfg.width - 1))),
          static_cast<int>(std::clamp(v, 0.0, static_cast<double>(cfg.height - 1)))};
}

RangeImage project(const PointCloud& cloud, const SensorConfig& cfg) {
  cfg.validate();
  RangeImage img(cfg.width, cfg.height, cloud.has_instances());
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Point& p = cloud.points[k];
    const double x = p.x, y = p.y, z = p.z;
    const double r = std::sqrt(x * x + y * y + z * z);
    if (!(r > 0.0)) throw Error(Errc::DegeneratePoint, "point " + std::to_string(k) + " is at the origin");
    const PixelCoord pc = project_point(x, y, z, cfg);
    const std::size_t idx = img.index(pc.u, pc.v);
    const auto rf = static_cast<float>(r);
    if (img.valid[idx] && !(rf < img.channels[kChannelRange][idx])) continue;
    img.valid[idx] = 1;
    img.channels[kChannelX][idx] = p.x;
    img.channels[kChannelY][idx] = p.y;
    img.channels[kChannelRange][idx] = rf;
    img.channels[kChannelRemission][idx] = p.remission;
    img.labels[idx] = cloud.has_labels() ? cloud.labels[k] : kIgnoreLabel;
    img.point_index[idx] = static_cast<std::int32_t>(k);
    if (img.has_instances()) img.instance[idx] = cloud.instances[k];
  }
  return img;
}

double valid_fraction(const RangeImage& img) {
  if (img.pixel_count() == 0) return 0.0;
  const auto n = std::count(img.valid.begin(), img.valid.end(), std::uint8_t{1});
  return static_cast<double>(n) / static_cast<double>(img.pixel_count());
}

}  // namespace rangeal
