#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rangeal/al_loop.hpp"
#include "rangeal/synth.hpp"

namespace rangeal {

/// One cell of the experiment matrix.
struct MatrixCell {
  HeuristicKind heuristic = HeuristicKind::BALD;
  bool da = false;

  std::string id() const;  // "bald", "bald+da", ...
  friend bool operator==(const MatrixCell&, const MatrixCell&) = default;
};

enum class DatasetSource { Synthetic, Manifest };

/// Everything an experiment needs: the AL config shared by all cells, where
/// the data comes from, the augmentation list used by DA cells and the matrix.
struct ExperimentConfig {
  AlConfig al;
  std::vector<AugmentationSpec> da;
  std::vector<MatrixCell> matrix;
  std::vector<std::uint64_t> seeds;  // one run per cell and seed; empty means {al.seed}

  DatasetSource source = DatasetSource::Synthetic;
  std::filesystem::path manifest;
  std::filesystem::path label_map;
  bool strict_labels = false;
  SceneSpec synth;

  std::vector<std::uint64_t> run_seeds() const;
  AlConfig cell_config(const MatrixCell& cell, std::uint64_t seed) const;
};

/// Reduced setup for desk runs: pool 600, test 200, budget 24, init 24,
/// 25 steps, T = 8, a 128x16 sensor and a short training schedule.
ExperimentConfig desk_scale_config();

/// Settings of the reference setup with a synthetic data source.
ExperimentConfig default_config();

/// Flat "key = value" lines, '#' starts a comment. Keys not given keep the
/// values of `base`. Unknown keys and malformed values raise BadConfig.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = default_config());
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = default_config());

/// Seed from RANGE_AL_SEED, if set.
std::optional<std::uint64_t> env_seed_override();

/// Projects the pool and test scans. Synthetic pools draw pool_size + test_size
/// scenes; manifest pools use split_pool with the config seed.
AlDataset build_dataset(const ExperimentConfig& cfg);

}  // namespace rangeal
