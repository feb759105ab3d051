#include "rangeal/metrics.hpp"

#include <algorithm>

#include "rangeal/error.hpp"

namespace rangeal {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) throw Error(Errc::BadParam, "confusion matrices have different class counts");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

void accumulate(ConfusionMatrix& m, std::span<const ClassId> pred, std::span<const ClassId> target,
                std::span<const std::uint8_t> valid) {
  if (pred.size() != target.size() || pred.size() != valid.size())
    throw Error(Errc::BadParam, "prediction, target and mask sizes differ");
  const int c = m.classes;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i] || target[i] == kIgnoreLabel) continue;
    if (target[i] < 0 || target[i] >= c || pred[i] < 0 || pred[i] >= c)
      throw Error(Errc::BadClassId, "class id out of range at pixel " + std::to_string(i));
    ++m.counts[static_cast<std::size_t>(target[i]) * c + static_cast<std::size_t>(pred[i])];
  }
}

ConfusionMatrix confusion(std::span<const ClassId> pred, std::span<const ClassId> target,
                          std::span<const std::uint8_t> valid, int classes) {
  ConfusionMatrix m(classes);
  accumulate(m, pred, target, valid);
  return m;
}

std::vector<double> class_iou(const ConfusionMatrix& m) {
  std::vector<double> iou(static_cast<std::size_t>(m.classes), -1.0);
  for (int c = 0; c < m.classes; ++c) {
    std::uint64_t tp = m.at(c, c), fp = 0, fn = 0;
    for (int k = 0; k < m.classes; ++k) {
      if (k == c) continue;
      fp += m.at(k, c);
      fn += m.at(c, k);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni > 0) iou[static_cast<std::size_t>(c)] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return iou;
}

double mean_iou(const ConfusionMatrix& m) {
  double sum = 0.0;
  int n = 0;
  for (double v : class_iou(m)) {
    if (v < 0.0) continue;
    sum += v;
    ++n;
  }
  if (n == 0) throw Error(Errc::UndefinedMetric, "every class has an empty union");
  return sum / n;
}

double labels_to_reach(const LearningCurve& curve, double level) {
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].miou < level) continue;
    if (i == 0) return pts[0].n_labeled;
    const CurvePoint& a = pts[i - 1];
    const CurvePoint& b = pts[i];
    return a.n_labeled + (level - a.miou) / (b.miou - a.miou) * (b.n_labeled - a.n_labeled);
  }
  throw Error(Errc::LevelUnreachable, "curve never reaches mIoU " + std::to_string(level));
}

double labeling_efficiency(const LearningCurve& baseline, const LearningCurve& other, double level) {
  return labels_to_reach(baseline, level) / labels_to_reach(other, level);
}

void UncertaintyAccumulator::add(const McProbTensor& t) {
  for (std::size_t p = 0; p < t.pixel_count(); ++p) {
    if (!t.valid[p]) continue;
    const auto block = t.pixel(p);
    variance_sum += pixel_variance(block, t.classes, t.iterations);
    bald_sum += std::max(0.0, pixel_bald_raw(block, t.classes, t.iterations));
    ++pixels;
  }
}

double UncertaintyAccumulator::mean_variance() const {
  if (pixels == 0) throw Error(Errc::UndefinedMetric, "no valid pixels");
  return variance_sum / static_cast<double>(pixels);
}

double UncertaintyAccumulator::mean_bald() const {
  if (pixels == 0) throw Error(Errc::UndefinedMetric, "no valid pixels");
  return bald_sum / static_cast<double>(pixels);
}

double mean_uncertainty_over_set(std::span<const McProbTensor> tensors, StabilityKind kind) {
  if (tensors.empty()) throw Error(Errc::UndefinedMetric, "empty tensor list");
  UncertaintyAccumulator acc;
  for (const auto& t : tensors) acc.add(t);
  return kind == StabilityKind::Variance ? acc.mean_variance() : acc.mean_bald();
}

}  // namespace rangeal
