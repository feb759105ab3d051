#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rangeal/projection.hpp"
#include "rangeal/rng.hpp"

namespace rangeal {

/// Per-pixel class probabilities over T Monte-Carlo passes. Storage order is
/// (v, u, c, t) row-major, identical to the on-disk tensor payload.
struct McProbTensor {
  int width = 0;
  int height = 0;
  int classes = 0;
  int iterations = 0;
  std::vector<float> probs;
  std::vector<std::uint8_t> valid;

  McProbTensor() = default;
  McProbTensor(int w, int h, int c, int t);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t offset(std::size_t pixel, int c, int t) const {
    return (pixel * static_cast<std::size_t>(classes) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(iterations) +
           static_cast<std::size_t>(t);
  }
  float& at(std::size_t pixel, int c, int t) { return probs[offset(pixel, c, t)]; }
  float at(std::size_t pixel, int c, int t) const { return probs[offset(pixel, c, t)]; }

  /// Probabilities of one pixel, laid out [c][t].
  std::span<const float> pixel(std::size_t p) const {
    return {probs.data() + offset(p, 0, 0), static_cast<std::size_t>(classes) * static_cast<std::size_t>(iterations)};
  }

  /// Throws MalformedTensor when shape or simplex constraints are violated.
  void validate(double sum_tolerance = 1e-5) const;

  friend bool operator==(const McProbTensor&, const McProbTensor&) = default;
};

enum class HeuristicKind { Random, Certainty, Entropy, Variance, BALD };

std::string_view heuristic_name(HeuristicKind kind);
std::optional<HeuristicKind> parse_heuristic(std::string_view name);

enum class Aggregation { Sum, Mean };

struct SampleScore {
  std::size_t sample_id = 0;
  double score = 0.0;
};

// Scalar kernels over one pixel's [c][t] block. Natural logarithm, 0 ln 0 = 0.
double pixel_entropy(std::span<const float> block, int classes, int iterations);
double pixel_certainty(std::span<const float> block, int classes, int iterations);
double pixel_variance(std::span<const float> block, int classes, int iterations);
/// Raw mutual information H(mean) - mean_t H(p_t), before clamping.
double pixel_bald_raw(std::span<const float> block, int classes, int iterations);

/// out[(pixel * C) + c] = mean over t.
std::vector<double> mean_prediction(const McProbTensor& t);

PixelScoreMap entropy_map(const McProbTensor& t);
/// Stores 1 - min_c max_t p so that higher means more informative.
PixelScoreMap certainty_map(const McProbTensor& t);
PixelScoreMap variance_map(const McProbTensor& t);
/// Clamped at 0.
PixelScoreMap bald_map(const McProbTensor& t);

/// Map for an uncertainty heuristic; Random has no map and throws BadParam.
PixelScoreMap heuristic_map(const McProbTensor& t, HeuristicKind kind);

/// Reduces the valid pixels of a map to one non-negative score.
double aggregate(const PixelScoreMap& m, Aggregation method = Aggregation::Sum);

/// Top-`budget` ids by descending score (ties: ascending sample_id), or a
/// uniform draw from `rng` for Random. Throws EmptyPool on empty input.
std::vector<std::size_t> rank_and_select(std::span<const SampleScore> scores, std::size_t budget, HeuristicKind kind,
                                         RngStream& rng);

}  // namespace rangeal
