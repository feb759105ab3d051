#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rangeal/augmentation.hpp"
#include "rangeal/projection.hpp"
#include "rangeal/rng.hpp"
#include "rangeal/uncertainty.hpp"

namespace rangeal {

struct TrainConfig {
  double learning_rate = 0.01;
  double lr_decay = 0.99;        // multiplied in after every evaluation period
  double weight_decay = 0.0001;
  int batch_size = 16;           // images per iteration
  int max_iterations = 5000;
  int eval_period = 100;
  int patience = 10;             // evaluation periods without improvement before stopping
  std::string early_stop_metric = "train_miou";
  int pixels_per_image = 0;      // pixels sampled per image and iteration; 0 uses every labeled pixel
  int eval_images = 0;           // labeled images used for the train mIoU; 0 uses all

  /// Full-scale values from the reference setup (100k iterations, period 500, patience 15).
  static TrainConfig full_scale();

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

enum class ScorerKind { Builtin, External };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Builtin;
  int mc_iterations = 8;
  double dropout_rate = 0.2;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::filesystem::path external_dir;  // External: <dir>/step_<k>/<split>_<id>.mcpt

  void validate() const;

  friend bool operator==(const ScorerConfig&, const ScorerConfig&) = default;
};

/// Per-pixel features: x, y, r, remission, and the mean and log-compressed
/// variance of r over the valid pixels of a 3x3 window (columns wrap).
inline constexpr int kNumFeatures = 6;

struct FeatureImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // pixel-major, kNumFeatures per pixel

  const float* pixel(std::size_t p) const { return values.data() + p * kNumFeatures; }
};

FeatureImage compute_features(const RangeImage& img);

/// What a scorer is asked to look at. `split` and `id` name the sample for
/// scorers that read predictions from disk.
struct Sample {
  const RangeImage& image;
  std::size_t id = 0;
  std::string_view split = "pool";
  const FeatureImage* features = nullptr;  // optional precomputed features
};

struct TrainPoint {
  int iteration = 0;
  double train_miou = 0.0;
};

struct TrainReport {
  int iterations = 0;
  double best_train_miou = 0.0;
  std::vector<TrainPoint> trace;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual int num_classes() const = 0;

  /// Back to the seeded initial state.
  virtual void reset() = 0;

  virtual TrainReport train(std::span<const Sample> labeled, const std::vector<AugmentationSpec>& da) = 0;

  /// T stochastic passes; the tensor's validity mask is the image's.
  virtual McProbTensor predict_mc(const Sample& sample, int iterations, RngStream rng) const = 0;

  /// Point prediction per pixel; kIgnoreLabel on invalid pixels.
  virtual std::vector<ClassId> predict(const Sample& sample, RngStream rng) const = 0;
};

/// Labeled pixels with fixed dropout keep-masks, used for loss/gradient evaluation.
struct PixelBatch {
  std::vector<float> features;     // n * kNumFeatures
  std::vector<std::uint8_t> keep;  // n * kNumFeatures, 1 = feature kept
  std::vector<ClassId> labels;     // n

  std::size_t size() const { return labels.size(); }
};

/// Multinomial logistic regression over FeatureImage pixels with inverted
/// dropout on the feature vector.
class LinearSoftmaxScorer final : public Scorer {
 public:
  LinearSoftmaxScorer(int num_classes, ScorerConfig cfg);

  int num_classes() const override { return classes_; }
  void reset() override;
  TrainReport train(std::span<const Sample> labeled, const std::vector<AugmentationSpec>& da) override;
  McProbTensor predict_mc(const Sample& sample, int iterations, RngStream rng) const override;
  std::vector<ClassId> predict(const Sample& sample, RngStream rng) const override;

  /// Row c holds kNumFeatures weights followed by the bias.
  std::span<const double> weights() const { return weights_; }
  void set_weights(std::vector<double> w);
  static constexpr int kRowSize = kNumFeatures + 1;

  /// Mean cross-entropy over the batch plus 0.5 * weight_decay * |W|^2 (biases excluded).
  double loss(const PixelBatch& batch) const;
  double loss_and_gradient(const PixelBatch& batch, std::vector<double>& grad) const;

  const ScorerConfig& config() const { return cfg_; }

  void save(const std::filesystem::path& path) const;
  static LinearSoftmaxScorer load(const std::filesystem::path& path);

 private:
  void softmax_row(const float* x, const std::uint8_t* keep, double* probs) const;
  double train_miou(std::span<const Sample> labeled, std::span<const FeatureImage> feats,
                    std::span<const std::size_t> eval_subset) const;

  int classes_;
  ScorerConfig cfg_;
  std::vector<double> weights_;
};

/// Serves tensors produced by an outside model. Training and reset are no-ops.
class ExternalScorer final : public Scorer {
 public:
  ExternalScorer(int num_classes, std::filesystem::path dir);

  int num_classes() const override { return classes_; }
  void reset() override {}
  TrainReport train(std::span<const Sample>, const std::vector<AugmentationSpec>&) override { return {}; }
  McProbTensor predict_mc(const Sample& sample, int iterations, RngStream rng) const override;
  std::vector<ClassId> predict(const Sample& sample, RngStream rng) const override;

  std::filesystem::path tensor_path(const Sample& sample, std::uint64_t step) const;

 private:
  int classes_;
  std::filesystem::path dir_;
};

std::unique_ptr<Scorer> make_scorer(int num_classes, const ScorerConfig& cfg);

}  // namespace rangeal
