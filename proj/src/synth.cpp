#include "rangeal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>

#include "rangeal/error.hpp"

namespace rangeal {

namespace {

constexpr double kSensorHeight = 1.73;
constexpr double kMaxRange = 80.0;
constexpr double kRemissionNoise = 0.04;

struct Vec3 {
  double x, y, z;
};

struct Wall {
  double y, x0, x1, height;
};

struct Box {
  double cx, cy, yaw, half_l, half_w, height;
  std::uint32_t instance;
};

struct Pole {
  double cx, cy, radius, height;
  std::uint32_t instance;
};

struct Scene {
  std::vector<Wall> walls;
  std::vector<Box> boxes;
  std::vector<Pole> poles;
  bool wet = false;
  double remission_offset[4] = {0, 0, 0, 0};
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  ClassId cls = kIgnoreLabel;
  std::uint32_t instance = 0;
};

double uniform(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void add_facade(Scene& s, double y, RngStream& rng) {
  double x = -kMaxRange;
  while (x < kMaxRange) {
    const double len = uniform(rng, 8.0, 30.0);
    s.walls.push_back({y, x, x + len, uniform(rng, 4.0, 15.0)});
    x += len + (rng.uniform() < 0.4 ? uniform(rng, 2.0, 10.0) : 0.0);
  }
}

Scene make_scene(const SceneSpec& spec, std::size_t base) {
  RngStream rng(spec.seed, base, 0);
  Scene s;
  const double left = uniform(rng, 6.0, 14.0);
  const double right = -uniform(rng, 6.0, 14.0);
  add_facade(s, left, rng);
  add_facade(s, right, rng);
  s.wet = rng.uniform() < spec.wet_fraction;
  for (double& off : s.remission_offset) off = uniform(rng, -0.03, 0.03);

  std::uint32_t instance = 1;
  const int vehicles = static_cast<int>(rng.uniform_int(spec.min_obstacles, spec.max_obstacles));
  for (int k = 0; k < vehicles; ++k) {
    Box b{};
    do {
      b.cx = uniform(rng, -35.0, 35.0);
      b.cy = uniform(rng, right + 1.5, left - 1.5);
    } while (std::abs(b.cx) < 4.0 && std::abs(b.cy) < 2.5);
    b.yaw = uniform(rng, -0.3, 0.3) + (rng.uniform() < 0.5 ? std::numbers::pi : 0.0);
    b.half_l = 0.5 * uniform(rng, 3.8, 4.8);
    b.half_w = 0.5 * uniform(rng, 1.6, 2.0);
    b.height = uniform(rng, 1.4, 1.8);
    b.instance = instance++;
    s.boxes.push_back(b);
  }
  const int poles = static_cast<int>(rng.uniform_int(4, 10));
  for (int k = 0; k < poles; ++k) {
    Pole p{};
    const bool on_left = rng.uniform() < 0.5;
    p.cy = on_left ? left - uniform(rng, 0.5, 1.5) : right + uniform(rng, 0.5, 1.5);
    p.cx = uniform(rng, -25.0, 25.0);
    p.radius = uniform(rng, 0.3, 0.6);
    p.height = uniform(rng, 3.0, 7.0);
    p.instance = instance++;
    s.poles.push_back(p);
  }
  return s;
}

void consider(Hit& best, double t, ClassId cls, std::uint32_t instance) {
  if (t > 1e-6 && t < best.t) best = {t, cls, instance};
}

Hit cast(const Scene& s, const Vec3& o, const Vec3& d) {
  Hit best;
  const double ground = -kSensorHeight;
  if (d.z < 0.0) consider(best, (ground - o.z) / d.z, kSynthGround, 0);

  for (const Wall& w : s.walls) {
    if (d.y == 0.0) continue;
    const double t = (w.y - o.y) / d.y;
    if (t <= 0.0 || t >= best.t) continue;
    const double x = o.x + t * d.x;
    const double z = o.z + t * d.z;
    if (x >= w.x0 && x <= w.x1 && z >= ground && z <= ground + w.height) consider(best, t, kSynthBuilding, 0);
  }

  for (const Box& b : s.boxes) {
    const double c = std::cos(-b.yaw), sn = std::sin(-b.yaw);
    const double ox = o.x - b.cx, oy = o.y - b.cy;
    const double lo[3] = {-b.half_l, -b.half_w, ground};
    const double hi[3] = {b.half_l, b.half_w, ground + b.height};
    const double org[3] = {c * ox - sn * oy, sn * ox + c * oy, o.z};
    const double dir[3] = {c * d.x - sn * d.y, sn * d.x + c * d.y, d.z};
    double t0 = 0.0, t1 = best.t;
    bool hit = true;
    for (int a = 0; a < 3 && hit; ++a) {
      if (std::abs(dir[a]) < 1e-12) {
        hit = org[a] >= lo[a] && org[a] <= hi[a];
        continue;
      }
      double ta = (lo[a] - org[a]) / dir[a], tb = (hi[a] - org[a]) / dir[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      hit = t0 <= t1;
    }
    if (hit && t0 > 0.0) consider(best, t0, kSynthVehicle, b.instance);
  }

  for (const Pole& p : s.poles) {
    const double ox = o.x - p.cx, oy = o.y - p.cy;
    const double a = d.x * d.x + d.y * d.y;
    if (a < 1e-12) continue;
    const double bq = 2.0 * (ox * d.x + oy * d.y);
    const double cq = ox * ox + oy * oy - p.radius * p.radius;
    const double disc = bq * bq - 4.0 * a * cq;
    if (disc < 0.0) continue;
    const double t = (-bq - std::sqrt(disc)) / (2.0 * a);
    const double z = o.z + t * d.z;
    if (t > 0.0 && z >= ground && z <= ground + p.height) consider(best, t, kSynthPole, p.instance);
  }
  return best;
}

double class_remission(const Scene& s, ClassId cls) {
  switch (cls) {
    case kSynthGround: return s.wet ? 0.2 : 0.05;
    case kSynthBuilding: return 0.35;
    case kSynthVehicle: return 0.95;
    default: return 0.65;
  }
}

}  // namespace

PointCloud generate_scene(const SceneSpec& spec, std::size_t index) {
  if (spec.classes < 2 || spec.classes > 4) throw Error(Errc::BadParam, "synthetic scenes support 2 to 4 classes");
  if (spec.variants_per_scene < 1 || spec.min_obstacles < 0 || spec.min_obstacles > spec.max_obstacles)
    throw Error(Errc::BadParam, "invalid scene spec");
  spec.beams.validate();

  const auto k = static_cast<std::size_t>(spec.variants_per_scene);
  const std::size_t base = index / k;
  const Scene scene = make_scene(spec, base);

  RngStream pose_rng(spec.seed, base, 1 + index % k);
  const Vec3 origin{uniform(pose_rng, -spec.pose_jitter, spec.pose_jitter),
                    uniform(pose_rng, -spec.pose_jitter, spec.pose_jitter), 0.0};
  const double yaw_jitter = deg_to_rad(uniform(pose_rng, -2.0, 2.0));
  RngStream noise_rng(spec.seed ^ 0x6e6f697365ULL, index, 0);

  const SensorConfig& g = spec.beams;
  PointCloud cloud;
  for (int v = 0; v < g.height; ++v) {
    const double pitch = (1.0 - (v + 0.5) / g.height) * g.fov() - g.fov_up;
    for (int u = 0; u < g.width; ++u) {
      const double yaw = std::numbers::pi * (1.0 - 2.0 * (u + 0.5) / g.width);
      const Vec3 ds{std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
      // The sensor hangs upside down (rotated half a turn about its x axis),
      // so the rows of the projection look below the horizon.
      const Vec3 dm{ds.x, -ds.y, -ds.z};
      const double cw = std::cos(yaw_jitter), sw = std::sin(yaw_jitter);
      const Vec3 dw{cw * dm.x - sw * dm.y, sw * dm.x + cw * dm.y, dm.z};
      const Hit hit = cast(scene, origin, dw);
      const double noise = spec.noise_floor * noise_rng.normal();
      const double rem_noise = kRemissionNoise * noise_rng.normal();
      if (hit.cls == kIgnoreLabel || hit.t > kMaxRange) continue;
      const double t = std::max(0.1, hit.t + noise);
      const double rem = std::clamp(class_remission(scene, hit.cls) + scene.remission_offset[hit.cls] + rem_noise, 0.0, 1.0);
      cloud.points.push_back({static_cast<float>(t * ds.x), static_cast<float>(t * ds.y), static_cast<float>(t * ds.z),
                              static_cast<float>(rem)});
      cloud.labels.push_back(std::min<ClassId>(hit.cls, spec.classes - 1));
      cloud.instances.push_back(hit.instance);
    }
  }
  return cloud;
}

std::vector<PointCloud> generate_pool(const SceneSpec& spec, std::size_t n, std::size_t first_index) {
  std::vector<PointCloud> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scene(spec, first_index + i));
  return out;
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, const SceneSpec& spec, std::size_t n) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    const PointCloud cloud = generate_scene(spec, i);
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu", i);
    const std::string stem(name);
    write_file_bytes(dir / (stem + ".bin"), serialize_point_cloud(cloud));
    std::vector<std::uint16_t> semantic(cloud.labels.begin(), cloud.labels.end());
    write_file_bytes(dir / (stem + ".label"), serialize_raw_labels(semantic, cloud.instances));
    m.entries.push_back({stem + ".bin", stem + ".label"});
  }
  m.split.assign(n, Split::Unassigned);
  m.save(dir / "manifest.txt");
  return m;
}

}  // namespace rangeal
