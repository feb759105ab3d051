#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rangeal/augmentation.hpp"
#include "rangeal/dataset.hpp"
#include "rangeal/projection.hpp"
#include "rangeal/scorer.hpp"
#include "rangeal/uncertainty.hpp"

namespace rangeal {

struct PoolState {
  IndexSet labeled;
  IndexSet unlabeled;
  IndexSet universe;

  /// Throws BadParam if L and U overlap or do not cover D.
  void check() const;

  /// Moves `ids` from U to L.
  void annotate(std::span<const std::size_t> ids);

  friend bool operator==(const PoolState&, const PoolState&) = default;
};

struct AlConfig {
  std::size_t init_size = 240;
  std::size_t budget = 240;
  std::size_t steps = 25;
  HeuristicKind heuristic = HeuristicKind::BALD;
  Aggregation aggregation = Aggregation::Sum;
  std::vector<AugmentationSpec> da;
  ScorerConfig scorer;
  std::uint64_t seed = 0;
  std::size_t pool_size = 6000;  // TT-DA keeps |TT-DA(U)| + |U| at this size
  std::size_t test_size = 2000;
  SensorConfig sensor;

  void validate(std::size_t universe_size) const;

  friend bool operator==(const AlConfig&, const AlConfig&) = default;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t n_labeled = 0;  // |L| the model was trained on
  std::vector<std::size_t> selected;
  double test_miou = 0.0;
  double mean_variance = 0.0;
  double mean_bald = 0.0;
  int train_iterations = 0;
  double train_miou = 0.0;
  double wall_seconds = 0.0;  // not part of the deterministic CSV
  std::vector<SampleScore> scores;

  friend bool operator==(const StepRecord& a, const StepRecord& b);
};

struct AlRunRecord {
  AlConfig config;
  std::vector<StepRecord> steps;
};

/// Range images of the pool (ids 0..N-1) and test set, with cached features.
class AlDataset {
 public:
  AlDataset(std::vector<RangeImage> pool, std::vector<RangeImage> test, int num_classes);

  const std::vector<RangeImage>& pool() const { return pool_; }
  const std::vector<RangeImage>& test() const { return test_; }
  int num_classes() const { return classes_; }

  Sample pool_sample(std::size_t id) const { return {pool_[id], id, "pool", &pool_features_[id]}; }
  Sample test_sample(std::size_t j) const { return {test_[j], j, "test", &test_features_[j]}; }

 private:
  std::vector<RangeImage> pool_;
  std::vector<RangeImage> test_;
  std::vector<FeatureImage> pool_features_;
  std::vector<FeatureImage> test_features_;
  int classes_;
};

PoolState init_pools(const IndexSet& universe, std::size_t init_size, std::uint64_t seed);

struct StepOutcome {
  PoolState state;
  StepRecord record;
};

/// Reset, train on L, evaluate on the test set, score U and move the selection into L.
StepOutcome run_step(const PoolState& state, const AlConfig& cfg, Scorer& model, const AlDataset& data, std::size_t step);

/// Reset, train on L and evaluate; no acquisition.
StepRecord evaluate_step(const PoolState& state, const AlConfig& cfg, Scorer& model, const AlDataset& data,
                         std::size_t step);

struct RunOptions {
  std::function<void(const StepRecord&)> on_step;
  std::filesystem::path checkpoint_dir;  // when set: step_<k>.model and step_<k>.pools per step
};

/// init_pools, then up to cfg.steps acquisition steps, then a final
/// evaluation of the last labeled set. The record has one row per training.
AlRunRecord run(const AlConfig& cfg, const AlDataset& data, const RunOptions& options = {});

enum class TtDaPool { Labeled = 0, Unlabeled = 1, AugmentedLabeled = 2, AugmentedUnlabeled = 3 };
inline constexpr std::array<const char*, 4> kTtDaPoolNames = {"L", "U", "TTDA_L", "TTDA_U"};

struct TtDaCurves {
  std::array<std::vector<SampleScore>, 4> curves;  // each sorted by descending score
  std::size_t budget = 0;                           // cut-off position

  const std::vector<SampleScore>& curve(TtDaPool p) const { return curves[static_cast<int>(p)]; }
  double mean_score(TtDaPool p) const;
};

/// Aggregated BALD scores of L, U and their test-time augmented copies under a
/// model trained without augmentation.
TtDaCurves analyze_tt_da(const Scorer& model, const PoolState& state, const std::vector<AugmentationSpec>& da,
                         std::size_t step, const AlDataset& data, const AlConfig& cfg);

void save_pools(const PoolState& state, const std::filesystem::path& path);
PoolState load_pools(const std::filesystem::path& path);

}  // namespace rangeal
