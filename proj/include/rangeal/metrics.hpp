#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rangeal/point_cloud.hpp"
#include "rangeal/uncertainty.hpp"

namespace rangeal {

/// counts[target * C + predicted]
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::uint64_t> counts;

  explicit ConfusionMatrix(int c = 0) : classes(c), counts(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0) {}

  std::uint64_t at(int target, int predicted) const {
    return counts[static_cast<std::size_t>(target) * classes + predicted];
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Counts every valid pixel whose target is not kIgnoreLabel. Ids >= C throw BadClassId.
ConfusionMatrix confusion(std::span<const ClassId> pred, std::span<const ClassId> target,
                          std::span<const std::uint8_t> valid, int classes);
void accumulate(ConfusionMatrix& m, std::span<const ClassId> pred, std::span<const ClassId> target,
                std::span<const std::uint8_t> valid);

/// Per-class IoU; classes with zero union hold -1.
std::vector<double> class_iou(const ConfusionMatrix& m);

/// Mean IoU over classes with a non-empty union. Throws UndefinedMetric if there are none.
double mean_iou(const ConfusionMatrix& m);

struct CurvePoint {
  double n_labeled = 0.0;
  double miou = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;  // n_labeled strictly increasing
};

/// Smallest label count at which the curve first reaches `level`, linearly
/// interpolated between the surrounding points. Throws LevelUnreachable.
double labels_to_reach(const LearningCurve& curve, double level);

/// n_baseline(level) / n_other(level); values above 1 mean `other` needs fewer labels.
double labeling_efficiency(const LearningCurve& baseline, const LearningCurve& other, double level);

enum class StabilityKind { Variance, BALD };

/// Mean pixel-wise variance or BALD over every valid pixel of every tensor.
double mean_uncertainty_over_set(std::span<const McProbTensor> tensors, StabilityKind kind);

/// Running form of the above for callers that stream tensors one at a time.
struct UncertaintyAccumulator {
  double variance_sum = 0.0;
  double bald_sum = 0.0;
  std::size_t pixels = 0;

  void add(const McProbTensor& t);
  double mean_variance() const;
  double mean_bald() const;
};

}  // namespace rangeal
