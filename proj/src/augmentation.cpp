#include "rangeal/augmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "rangeal/error.hpp"

namespace rangeal {

namespace {

constexpr std::array<std::pair<AugmentationKind, std::string_view>, 6> kNames{{
    {AugmentationKind::RandomDropoutMask, "random_dropout_mask"},
    {AugmentationKind::CoarseDropout, "coarse_dropout"},
    {AugmentationKind::GaussianDepthNoise, "gaussian_depth_noise"},
    {AugmentationKind::GaussianRemissionNoise, "gaussian_remission_noise"},
    {AugmentationKind::CyclicShift, "cyclic_shift"},
    {AugmentationKind::InstanceCutPaste, "instance_cut_paste"},
}};

constexpr float kMinRange = 1e-3f;
constexpr double kMaxShiftDeg = 22.5;

double draw_in(double lo, double hi, RngStream& rng) {
  return hi > lo ? lo + (hi - lo) * rng.uniform() : lo;
}

}  // namespace

std::string_view augmentation_name(AugmentationKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<AugmentationKind> parse_augmentation(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

AugmentationSpec AugmentationSpec::defaults(AugmentationKind kind) {
  AugmentationSpec s;
  s.kind = kind;
  switch (kind) {
    case AugmentationKind::RandomDropoutMask: s.range_lo = 0.1; s.range_hi = 0.5; break;
    case AugmentationKind::CoarseDropout: break;
    case AugmentationKind::GaussianDepthNoise: s.range_lo = 0.05; s.range_hi = 0.1; break;
    case AugmentationKind::GaussianRemissionNoise: s.range_lo = 0.5; s.range_hi = 1.0; break;
    case AugmentationKind::CyclicShift: s.range_lo = -kMaxShiftDeg; s.range_hi = kMaxShiftDeg; break;
    case AugmentationKind::InstanceCutPaste: break;
  }
  return s;
}

AugmentationSpec AugmentationSpec::identity(AugmentationKind kind) {
  AugmentationSpec s;
  s.kind = kind;
  s.probability = 1.0;
  s.override_bounds = true;
  s.coarse = CoarseDropoutParams{0, 0, 1, 1, 1, 1};
  return s;
}

void AugmentationSpec::validate() const {
  if (!(probability >= 0.0 && probability <= 1.0)) throw Error(Errc::BadParam, "application probability outside [0,1]");
  if (range_lo > range_hi) throw Error(Errc::BadParam, "parameter range is inverted");
  if (coarse.min_holes < 0 || coarse.min_holes > coarse.max_holes || coarse.min_height < 1 ||
      coarse.min_height > coarse.max_height || coarse.min_width < 1 || coarse.min_width > coarse.max_width)
    throw Error(Errc::BadParam, "inconsistent coarse dropout parameters");
  if (kind == AugmentationKind::RandomDropoutMask && (range_lo < 0.0 || range_hi > 1.0))
    throw Error(Errc::BadParam, "dropout probability outside [0,1]");
  if ((kind == AugmentationKind::GaussianDepthNoise || kind == AugmentationKind::GaussianRemissionNoise) && range_lo < 0.0)
    throw Error(Errc::BadParam, "negative noise parameter");
  if (override_bounds) return;
  const AugmentationSpec d = defaults(kind);
  if (range_lo < d.range_lo || range_hi > d.range_hi)
    throw Error(Errc::BadParam, std::string(augmentation_name(kind)) + " range outside its default bounds");
  const CoarseDropoutParams& c = coarse;
  const CoarseDropoutParams& dc = d.coarse;
  if (c.min_holes < dc.min_holes || c.max_holes > dc.max_holes || c.min_height < dc.min_height ||
      c.max_height > dc.max_height || c.min_width < dc.min_width || c.max_width > dc.max_width)
    throw Error(Errc::BadParam, "coarse dropout parameters outside their default bounds");
}

RangeImage random_dropout_mask(const RangeImage& img, double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::BadParam, "dropout probability outside [0,1]");
  RangeImage out = img;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (rng.uniform() < p) out.clear_pixel(i);
  }
  return out;
}

CoarseDropoutResult coarse_dropout(const RangeImage& img, const CoarseDropoutParams& params, RngStream& rng) {
  CoarseDropoutResult res{img, {}};
  const int holes = static_cast<int>(rng.uniform_int(params.min_holes, params.max_holes));
  for (int h = 0; h < holes; ++h) {
    Rect r;
    r.height = std::min(static_cast<int>(rng.uniform_int(params.min_height, params.max_height)), img.height);
    r.width = std::min(static_cast<int>(rng.uniform_int(params.min_width, params.max_width)), img.width);
    r.v0 = static_cast<int>(rng.uniform_int(0, img.height - r.height));
    r.u0 = static_cast<int>(rng.uniform_int(0, img.width - r.width));
    for (int v = r.v0; v < r.v0 + r.height; ++v)
      for (int u = r.u0; u < r.u0 + r.width; ++u) res.image.clear_pixel(res.image.index(u, v));
    res.holes.push_back(r);
  }
  return res;
}

std::vector<double> gaussian_noise_samples(std::size_t n, double param, bool is_variance, RngStream& rng) {
  const double sigma = is_variance ? std::sqrt(param) : param;
  std::vector<double> out(n);
  for (auto& z : out) z = sigma * rng.normal();
  return out;
}

namespace {

template <typename Clamp>
RangeImage add_channel_noise(const RangeImage& img, Channel channel, double param, bool is_variance, RngStream& rng,
                             Clamp clamp) {
  if (!(param >= 0.0)) throw Error(Errc::BadParam, "negative noise parameter");
  RangeImage out = img;
  if (param == 0.0) return out;
  const auto n_valid = static_cast<std::size_t>(std::count(img.valid.begin(), img.valid.end(), std::uint8_t{1}));
  const auto noise = gaussian_noise_samples(n_valid, param, is_variance, rng);
  auto& plane = out.channels[channel];
  std::size_t k = 0;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (!out.valid[i]) continue;
    plane[i] = clamp(static_cast<float>(plane[i] + noise[k++]));
  }
  return out;
}

}  // namespace

RangeImage gaussian_depth_noise(const RangeImage& img, double sigma2, RngStream& rng, bool is_variance) {
  return add_channel_noise(img, kChannelRange, sigma2, is_variance, rng,
                           [](float r) { return std::max(r, kMinRange); });
}

RangeImage gaussian_remission_noise(const RangeImage& img, double sigma2, RngStream& rng, bool is_variance) {
  return add_channel_noise(img, kChannelRemission, sigma2, is_variance, rng,
                           [](float i) { return std::clamp(i, 0.0f, 1.0f); });
}

int shift_columns_for_angle(double angle_deg, int width) {
  return static_cast<int>(std::lround(angle_deg / 360.0 * width));
}

RangeImage shift_columns(const RangeImage& img, int k) {
  const int w = img.width;
  if (w == 0) return img;
  const int shift = ((k % w) + w) % w;
  if (shift == 0) return img;
  RangeImage out = img;
  auto roll = [&](const auto& src, auto& dst) {
    if (src.empty()) return;
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < w; ++u) dst[img.index((u + shift) % w, v)] = src[img.index(u, v)];
  };
  for (int c = 0; c < kNumChannels; ++c) roll(img.channels[c], out.channels[c]);
  roll(img.labels, out.labels);
  roll(img.valid, out.valid);
  roll(img.point_index, out.point_index);
  roll(img.instance, out.instance);
  return out;
}

RangeImage cyclic_shift(const RangeImage& img, double angle_deg) {
  if (!(std::abs(angle_deg) <= kMaxShiftDeg)) throw Error(Errc::BadParam, "shift angle beyond 22.5 degrees");
  return shift_columns(img, shift_columns_for_angle(angle_deg, img.width));
}

RangeImage instance_cut_paste(const RangeImage& dst, const RangeImage& src, const std::vector<ClassId>& classes,
                              RngStream& rng) {
  if (!src.has_instances()) throw Error(Errc::MissingInstances, "source scan has no instance plane");
  if (src.width != dst.width || src.height != dst.height)
    throw Error(Errc::BadParam, "cut-paste requires images of equal size");
  RangeImage out = dst;
  if (classes.empty()) return out;

  // Instance id 0 marks "no instance" (stuff classes).
  std::map<std::pair<ClassId, std::uint32_t>, bool> chosen;
  for (std::size_t i = 0; i < src.pixel_count(); ++i) {
    if (!src.valid[i] || src.instance[i] == 0) continue;
    if (std::find(classes.begin(), classes.end(), src.labels[i]) == classes.end()) continue;
    chosen.emplace(std::make_pair(src.labels[i], src.instance[i]), false);
  }
  if (chosen.empty()) return out;
  bool any = false;
  for (auto& [key, take] : chosen) {
    take = rng.uniform() < 0.5;
    any = any || take;
  }
  if (!any) {
    auto it = chosen.begin();
    std::advance(it, rng.uniform_int(0, static_cast<std::int64_t>(chosen.size()) - 1));
    it->second = true;
  }

  if (!out.has_instances()) out.instance.assign(out.pixel_count(), 0);
  for (std::size_t i = 0; i < src.pixel_count(); ++i) {
    if (!src.valid[i] || src.instance[i] == 0) continue;
    auto it = chosen.find({src.labels[i], src.instance[i]});
    if (it == chosen.end() || !it->second) continue;
    if (out.valid[i] && !(out.channels[kChannelRange][i] > src.channels[kChannelRange][i])) continue;
    for (int c = 0; c < kNumChannels; ++c) out.channels[c][i] = src.channels[c][i];
    out.labels[i] = src.labels[i];
    out.instance[i] = src.instance[i];
    out.valid[i] = 1;
    out.point_index[i] = -1;
  }
  return out;
}

RangeImage compose(const std::vector<AugmentationSpec>& specs, const RangeImage& img, RngStream& rng,
                   const RangeImage* partner) {
  RangeImage out = img;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const AugmentationSpec& spec = specs[s];
    RngStream sub = rng.derive(s + 1);
    if (!(sub.uniform() < spec.probability)) continue;
    switch (spec.kind) {
      case AugmentationKind::RandomDropoutMask:
        out = random_dropout_mask(out, draw_in(spec.range_lo, spec.range_hi, sub), sub);
        break;
      case AugmentationKind::CoarseDropout:
        out = coarse_dropout(out, spec.coarse, sub).image;
        break;
      case AugmentationKind::GaussianDepthNoise:
        out = gaussian_depth_noise(out, draw_in(spec.range_lo, spec.range_hi, sub), sub, spec.noise_is_variance);
        break;
      case AugmentationKind::GaussianRemissionNoise:
        out = gaussian_remission_noise(out, draw_in(spec.range_lo, spec.range_hi, sub), sub, spec.noise_is_variance);
        break;
      case AugmentationKind::CyclicShift: {
        const double angle = draw_in(spec.range_lo, spec.range_hi, sub);
        out = spec.override_bounds ? shift_columns(out, shift_columns_for_angle(angle, out.width))
                                   : cyclic_shift(out, angle);
        break;
      }
      case AugmentationKind::InstanceCutPaste:
        if (partner != nullptr && partner->has_instances())
          out = instance_cut_paste(out, *partner, spec.classes, sub);
        break;
    }
  }
  return out;
}

std::vector<AugmentationSpec> default_augmentations(const std::vector<ClassId>& paste_classes) {
  std::vector<AugmentationSpec> out;
  for (const auto& [kind, name] : kNames) out.push_back(AugmentationSpec::defaults(kind));
  out.back().classes = paste_classes;
  return out;
}

}  // namespace rangeal
