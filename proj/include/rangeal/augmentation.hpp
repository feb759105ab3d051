#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rangeal/projection.hpp"
#include "rangeal/rng.hpp"

namespace rangeal {

enum class AugmentationKind {
  RandomDropoutMask,
  CoarseDropout,
  GaussianDepthNoise,
  GaussianRemissionNoise,
  CyclicShift,
  InstanceCutPaste,
};

std::string_view augmentation_name(AugmentationKind kind);
std::optional<AugmentationKind> parse_augmentation(std::string_view name);

struct CoarseDropoutParams {
  int min_holes = 2;
  int max_holes = 5;
  int min_height = 1;
  int max_height = 16;
  int min_width = 1;
  int max_width = 64;

  friend bool operator==(const CoarseDropoutParams&, const CoarseDropoutParams&) = default;
};

/// One transform of the training-time pipeline. `range_lo`/`range_hi` is the
/// kind's scalar parameter range, drawn uniformly per application:
///   RandomDropoutMask       drop probability            default [0.1, 0.5]
///   GaussianDepthNoise      noise variance, m^2         default [0.05, 0.1]
///   GaussianRemissionNoise  noise variance              default [0.5, 1.0]
///   CyclicShift             shift angle, degrees        default [-22.5, 22.5]
/// CoarseDropout uses `coarse`, InstanceCutPaste uses `classes`.
struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::RandomDropoutMask;
  double range_lo = 0.0;
  double range_hi = 0.0;
  CoarseDropoutParams coarse;
  std::vector<ClassId> classes;
  bool noise_is_variance = true;  // false: the noise range holds standard deviations
  double probability = 0.5;
  bool override_bounds = false;   // allow ranges outside the default bounds

  static AugmentationSpec defaults(AugmentationKind kind);

  /// Spec whose application leaves every image bit-identical.
  static AugmentationSpec identity(AugmentationKind kind);

  void validate() const;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

struct Rect {
  int u0 = 0;  // first column
  int v0 = 0;  // first row
  int width = 0;
  int height = 0;

  bool contains(int u, int v) const { return u >= u0 && u < u0 + width && v >= v0 && v < v0 + height; }
};

struct CoarseDropoutResult {
  RangeImage image;
  std::vector<Rect> holes;
};

/// Drops every pixel independently with probability `p` (channels and target).
RangeImage random_dropout_mask(const RangeImage& img, double p, RngStream& rng);

CoarseDropoutResult coarse_dropout(const RangeImage& img, const CoarseDropoutParams& params, RngStream& rng);
inline RangeImage coarse_dropout(const RangeImage& img, RngStream& rng) {
  return coarse_dropout(img, CoarseDropoutParams{}, rng).image;
}

/// Zero-mean Gaussian draws, one per requested sample. `param` is a variance
/// when `is_variance` is set, otherwise a standard deviation.
std::vector<double> gaussian_noise_samples(std::size_t n, double param, bool is_variance, RngStream& rng);

/// Adds noise to the range of valid pixels, keeping r strictly positive.
RangeImage gaussian_depth_noise(const RangeImage& img, double sigma2, RngStream& rng, bool is_variance = true);

/// Adds noise to the remission of valid pixels, clamped to [0, 1].
RangeImage gaussian_remission_noise(const RangeImage& img, double sigma2, RngStream& rng, bool is_variance = true);

/// Column count for a rotation of `angle_deg` degrees on an image `width` columns wide.
int shift_columns_for_angle(double angle_deg, int width);

/// Rolls every plane so that column u moves to column (u + k) mod W.
RangeImage shift_columns(const RangeImage& img, int k);

/// Cyclic shift by an angle in [-22.5, 22.5] degrees.
RangeImage cyclic_shift(const RangeImage& img, double angle_deg);

/// Pastes a random non-empty subset of `src` instances whose class is in
/// `classes` onto `dst`. A pasted pixel replaces the destination only where
/// the destination is invalid or farther away.
RangeImage instance_cut_paste(const RangeImage& dst, const RangeImage& src, const std::vector<ClassId>& classes,
                              RngStream& rng);

/// Applies `specs` in order, each gated by its probability. `partner` is the
/// source scan for InstanceCutPaste; without one that transform is skipped.
RangeImage compose(const std::vector<AugmentationSpec>& specs, const RangeImage& img, RngStream& rng,
                   const RangeImage* partner = nullptr);

/// The six transforms with default parameters, in the order listed above.
std::vector<AugmentationSpec> default_augmentations(const std::vector<ClassId>& paste_classes);

}  // namespace rangeal
