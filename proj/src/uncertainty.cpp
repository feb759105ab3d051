#include "rangeal/uncertainty.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "rangeal/dataset.hpp"
#include "rangeal/error.hpp"

namespace rangeal {

McProbTensor::McProbTensor(int w, int h, int c, int t)
    : width(w), height(h), classes(c), iterations(t), probs(pixel_count() * c * t, 0.0f), valid(pixel_count(), 0) {}

void McProbTensor::validate(double sum_tolerance) const {
  if (width <= 0 || height <= 0) throw Error(Errc::MalformedTensor, "non-positive spatial size");
  if (classes < 2) throw Error(Errc::MalformedTensor, "fewer than two classes");
  if (iterations < 1) throw Error(Errc::MalformedTensor, "no MC iterations");
  if (probs.size() != pixel_count() * classes * iterations || valid.size() != pixel_count())
    throw Error(Errc::MalformedTensor, "payload size does not match dimensions");
  for (std::size_t p = 0; p < pixel_count(); ++p) {
    if (!valid[p]) continue;
    for (int t = 0; t < iterations; ++t) {
      double s = 0.0;
      for (int c = 0; c < classes; ++c) {
        const float v = at(p, c, t);
        if (!(v >= 0.0f && v <= 1.0f)) throw Error(Errc::MalformedTensor, "probability outside [0,1]");
        s += v;
      }
      if (std::abs(s - 1.0) > sum_tolerance)
        throw Error(Errc::MalformedTensor, "probabilities of pixel " + std::to_string(p) + " do not sum to 1");
    }
  }
}

namespace {

constexpr std::array<std::pair<HeuristicKind, std::string_view>, 5> kHeuristicNames{{
    {HeuristicKind::Random, "random"},
    {HeuristicKind::Certainty, "certainty"},
    {HeuristicKind::Entropy, "entropy"},
    {HeuristicKind::Variance, "variance"},
    {HeuristicKind::BALD, "bald"},
}};

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double class_mean(std::span<const float> block, int c, int iterations) {
  double s = 0.0;
  for (int t = 0; t < iterations; ++t) s += block[static_cast<std::size_t>(c * iterations + t)];
  return s / iterations;
}

template <typename Kernel>
PixelScoreMap map_of(const McProbTensor& t, Kernel kernel) {
  PixelScoreMap m{t.width, t.height, std::vector<double>(t.pixel_count(), 0.0), t.valid};
  for (std::size_t p = 0; p < t.pixel_count(); ++p) {
    if (t.valid[p]) m.scores[p] = kernel(t.pixel(p), t.classes, t.iterations);
  }
  return m;
}

}  // namespace

std::string_view heuristic_name(HeuristicKind kind) {
  for (const auto& [k, n] : kHeuristicNames)
    if (k == kind) return n;
  return "unknown";
}

std::optional<HeuristicKind> parse_heuristic(std::string_view name) {
  for (const auto& [k, n] : kHeuristicNames)
    if (n == name) return k;
  return std::nullopt;
}

double pixel_entropy(std::span<const float> block, int classes, int iterations) {
  double h = 0.0;
  for (int c = 0; c < classes; ++c) h -= xlogx(class_mean(block, c, iterations));
  return h;
}

double pixel_certainty(std::span<const float> block, int classes, int iterations) {
  double lowest = 1.0;
  for (int c = 0; c < classes; ++c) {
    float best = 0.0f;
    for (int t = 0; t < iterations; ++t) best = std::max(best, block[static_cast<std::size_t>(c * iterations + t)]);
    lowest = std::min(lowest, static_cast<double>(best));
  }
  return lowest;
}

double pixel_variance(std::span<const float> block, int classes, int iterations) {
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    const double mean = class_mean(block, c, iterations);
    double var = 0.0;
    for (int t = 0; t < iterations; ++t) {
      const double d = block[static_cast<std::size_t>(c * iterations + t)] - mean;
      var += d * d;
    }
    total += var / iterations;
  }
  return total / classes;
}

double pixel_bald_raw(std::span<const float> block, int classes, int iterations) {
  double expected = 0.0;
  for (int t = 0; t < iterations; ++t) {
    double h = 0.0;
    for (int c = 0; c < classes; ++c) h -= xlogx(block[static_cast<std::size_t>(c * iterations + t)]);
    expected += h;
  }
  return pixel_entropy(block, classes, iterations) - expected / iterations;
}

std::vector<double> mean_prediction(const McProbTensor& t) {
  std::vector<double> out(t.pixel_count() * static_cast<std::size_t>(t.classes), 0.0);
  for (std::size_t p = 0; p < t.pixel_count(); ++p) {
    const auto block = t.pixel(p);
    for (int c = 0; c < t.classes; ++c) out[p * t.classes + c] = class_mean(block, c, t.iterations);
  }
  return out;
}

PixelScoreMap entropy_map(const McProbTensor& t) { return map_of(t, pixel_entropy); }

PixelScoreMap certainty_map(const McProbTensor& t) {
  return map_of(t, [](std::span<const float> b, int c, int it) { return 1.0 - pixel_certainty(b, c, it); });
}

PixelScoreMap variance_map(const McProbTensor& t) { return map_of(t, pixel_variance); }

PixelScoreMap bald_map(const McProbTensor& t) {
  return map_of(t, [](std::span<const float> b, int c, int it) { return std::max(0.0, pixel_bald_raw(b, c, it)); });
}

PixelScoreMap heuristic_map(const McProbTensor& t, HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::Certainty: return certainty_map(t);
    case HeuristicKind::Entropy: return entropy_map(t);
    case HeuristicKind::Variance: return variance_map(t);
    case HeuristicKind::BALD: return bald_map(t);
    case HeuristicKind::Random: break;
  }
  throw Error(Errc::BadParam, "random heuristic has no pixel map");
}

double aggregate(const PixelScoreMap& m, Aggregation method) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < m.scores.size(); ++p) {
    if (!m.valid[p]) continue;
    sum += m.scores[p];
    ++n;
  }
  if (method == Aggregation::Mean) return n > 0 ? sum / static_cast<double>(n) : 0.0;
  return sum;
}

std::vector<std::size_t> rank_and_select(std::span<const SampleScore> scores, std::size_t budget, HeuristicKind kind,
                                         RngStream& rng) {
  if (scores.empty()) throw Error(Errc::EmptyPool, "no samples to select from");
  if (budget == 0) throw Error(Errc::BadParam, "budget must be at least 1");
  const std::size_t k = std::min(budget, scores.size());

  // Canonical ascending-id order makes the result independent of input order.
  std::vector<SampleScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const SampleScore& a, const SampleScore& b) { return a.sample_id < b.sample_id; });

  std::vector<std::size_t> out;
  out.reserve(k);
  if (kind == HeuristicKind::Random) {
    const auto perm = random_permutation(sorted.size(), rng);
    for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[perm[i]].sample_id);
    return out;
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const SampleScore& a, const SampleScore& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[i].sample_id);
  return out;
}

}  // namespace rangeal
