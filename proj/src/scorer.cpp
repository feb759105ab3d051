#include "rangeal/scorer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>

#include "rangeal/dataset.hpp"
#include "rangeal/error.hpp"
#include "rangeal/metrics.hpp"
#include "rangeal/point_cloud.hpp"
#include "rangeal/tensor_io.hpp"

namespace rangeal {

namespace {

constexpr float kMetricScale = 1.0f / 15.0f;
constexpr float kRemissionScale = 4.0f;
constexpr float kRangeCenter = 15.0f;
constexpr float kLogVarCenter = 2.0f;
constexpr float kLogVarScale = 0.5f;
constexpr std::uint64_t kTrainStreamTag = 0x747261696e;  // "train"
constexpr std::uint64_t kAugmentStreamTag = 0x6175676d;  // "augm"
constexpr std::uint64_t kInitStreamTag = 0x696e6974;     // "init"

/// Keep-mask for one pass: 16 random bits per feature decide against the rate.
void draw_keep_mask(RngStream& rng, double rate, std::uint8_t* keep) {
  const auto threshold = static_cast<std::uint64_t>(std::llround(rate * 65536.0));
  std::uint64_t bits = 0;
  for (int f = 0; f < kNumFeatures; ++f) {
    if (f % 4 == 0) bits = rng();
    keep[f] = ((bits & 0xffffu) >= threshold) ? 1 : 0;
    bits >>= 16;
  }
}

std::vector<std::size_t> supervised_pixels(const RangeImage& img) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    if (img.valid[p] && img.labels[p] != kIgnoreLabel) out.push_back(p);
  return out;
}

}  // namespace

TrainConfig TrainConfig::full_scale() {
  TrainConfig t;
  t.max_iterations = 100000;
  t.eval_period = 500;
  t.patience = 15;
  return t;
}

void ScorerConfig::validate() const {
  if (!(dropout_rate > 0.0 && dropout_rate < 1.0)) throw Error(Errc::BadConfig, "dropout rate must lie in (0,1)");
  if (mc_iterations < 1) throw Error(Errc::BadConfig, "at least one MC iteration is required");
  if (train.batch_size < 1 || train.eval_period < 1 || train.patience < 1 || train.max_iterations < 0)
    throw Error(Errc::BadConfig, "invalid training schedule");
  if (!(train.learning_rate > 0.0) || !(train.lr_decay > 0.0) || train.weight_decay < 0.0)
    throw Error(Errc::BadConfig, "invalid optimizer parameters");
  if (train.early_stop_metric != "train_miou")
    throw Error(Errc::BadConfig, "unsupported early stopping metric " + train.early_stop_metric);
}

FeatureImage compute_features(const RangeImage& img) {
  FeatureImage f{img.width, img.height, std::vector<float>(img.pixel_count() * kNumFeatures, 0.0f)};
  const auto& range = img.channels[kChannelRange];
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const std::size_t p = img.index(u, v);
      if (!img.valid[p]) continue;
      double sum = 0.0, sq = 0.0;
      int n = 0;
      for (int dv = -1; dv <= 1; ++dv) {
        const int vv = v + dv;
        if (vv < 0 || vv >= img.height) continue;
        for (int du = -1; du <= 1; ++du) {
          const int uu = (u + du + img.width) % img.width;
          const std::size_t q = img.index(uu, vv);
          if (!img.valid[q]) continue;
          sum += range[q];
          sq += static_cast<double>(range[q]) * range[q];
          ++n;
        }
      }
      const double mean = sum / n;
      const double var = std::max(0.0, sq / n - mean * mean);
      float* out = f.values.data() + p * kNumFeatures;
      out[0] = img.channels[kChannelX][p] * kMetricScale;
      out[1] = img.channels[kChannelY][p] * kMetricScale;
      out[2] = (range[p] - kRangeCenter) * kMetricScale;
      out[3] = (img.channels[kChannelRemission][p] - 0.5f) * kRemissionScale;
      out[4] = (static_cast<float>(mean) - kRangeCenter) * kMetricScale;
      out[5] = (static_cast<float>(std::log1p(var)) - kLogVarCenter) * kLogVarScale;
    }
  }
  return f;
}

LinearSoftmaxScorer::LinearSoftmaxScorer(int num_classes, ScorerConfig cfg) : classes_(num_classes), cfg_(std::move(cfg)) {
  if (classes_ < 2) throw Error(Errc::BadConfig, "at least two classes are required");
  cfg_.validate();
  reset();
}

void LinearSoftmaxScorer::reset() {
  weights_.assign(static_cast<std::size_t>(classes_) * kRowSize, 0.0);
  RngStream rng(cfg_.seed ^ kInitStreamTag, 0, 0);
  for (int c = 0; c < classes_; ++c)
    for (int f = 0; f < kNumFeatures; ++f) weights_[static_cast<std::size_t>(c) * kRowSize + f] = 0.01 * rng.normal();
}

void LinearSoftmaxScorer::set_weights(std::vector<double> w) {
  if (w.size() != weights_.size()) throw Error(Errc::BadParam, "weight vector has the wrong size");
  for (double x : w)
    if (!std::isfinite(x)) throw Error(Errc::BadParam, "non-finite weight");
  weights_ = std::move(w);
}

void LinearSoftmaxScorer::softmax_row(const float* x, const std::uint8_t* keep, double* probs) const {
  const double scale = keep ? 1.0 / (1.0 - cfg_.dropout_rate) : 1.0;
  double zmax = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < classes_; ++c) {
    const double* w = weights_.data() + static_cast<std::size_t>(c) * kRowSize;
    double z = w[kNumFeatures];
    for (int f = 0; f < kNumFeatures; ++f) {
      if (keep && !keep[f]) continue;
      z += w[f] * x[f] * scale;
    }
    probs[c] = z;
    zmax = std::max(zmax, z);
  }
  double total = 0.0;
  for (int c = 0; c < classes_; ++c) {
    probs[c] = std::exp(probs[c] - zmax);
    total += probs[c];
  }
  for (int c = 0; c < classes_; ++c) probs[c] /= total;
}

double LinearSoftmaxScorer::loss_and_gradient(const PixelBatch& batch, std::vector<double>& grad) const {
  grad.assign(weights_.size(), 0.0);
  const double scale = 1.0 / (1.0 - cfg_.dropout_rate);
  std::vector<double> probs(static_cast<std::size_t>(classes_));
  double loss = 0.0;
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = batch.features.data() + i * kNumFeatures;
    const std::uint8_t* keep = batch.keep.data() + i * kNumFeatures;
    softmax_row(x, keep, probs.data());
    const ClassId y = batch.labels[i];
    loss -= std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300));
    for (int c = 0; c < classes_; ++c) {
      const double err = probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
      double* g = grad.data() + static_cast<std::size_t>(c) * kRowSize;
      for (int f = 0; f < kNumFeatures; ++f)
        if (keep[f]) g[f] += err * x[f] * scale;
      g[kNumFeatures] += err;
    }
  }
  const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  loss *= inv;
  for (auto& g : grad) g *= inv;
  const double wd = cfg_.train.weight_decay;
  for (int c = 0; c < classes_; ++c) {
    for (int f = 0; f < kNumFeatures; ++f) {
      const std::size_t k = static_cast<std::size_t>(c) * kRowSize + f;
      loss += 0.5 * wd * weights_[k] * weights_[k];
      grad[k] += wd * weights_[k];
    }
  }
  return loss;
}

double LinearSoftmaxScorer::loss(const PixelBatch& batch) const {
  std::vector<double> grad;
  return loss_and_gradient(batch, grad);
}

std::vector<ClassId> LinearSoftmaxScorer::predict(const Sample& sample, RngStream) const {
  const RangeImage& img = sample.image;
  FeatureImage local;
  const FeatureImage* feats = sample.features;
  if (!feats) {
    local = compute_features(img);
    feats = &local;
  }
  std::vector<ClassId> out(img.pixel_count(), kIgnoreLabel);
  std::vector<double> probs(static_cast<std::size_t>(classes_));
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    if (!img.valid[p]) continue;
    softmax_row(feats->pixel(p), nullptr, probs.data());
    out[p] = static_cast<ClassId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  return out;
}

McProbTensor LinearSoftmaxScorer::predict_mc(const Sample& sample, int iterations, RngStream rng) const {
  if (iterations < 1) throw Error(Errc::BadParam, "at least one MC iteration is required");
  const RangeImage& img = sample.image;
  FeatureImage local;
  const FeatureImage* feats = sample.features;
  if (!feats) {
    local = compute_features(img);
    feats = &local;
  }
  McProbTensor t(img.width, img.height, classes_, iterations);
  t.valid = img.valid;
  std::vector<double> probs(static_cast<std::size_t>(classes_));
  std::array<std::uint8_t, kNumFeatures> keep{};
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    if (!img.valid[p]) continue;
    for (int it = 0; it < iterations; ++it) {
      draw_keep_mask(rng, cfg_.dropout_rate, keep.data());
      softmax_row(feats->pixel(p), keep.data(), probs.data());
      for (int c = 0; c < classes_; ++c) t.at(p, c, it) = static_cast<float>(probs[static_cast<std::size_t>(c)]);
    }
  }
  return t;
}

double LinearSoftmaxScorer::train_miou(std::span<const Sample> labeled, std::span<const FeatureImage> feats,
                                       std::span<const std::size_t> eval_subset) const {
  ConfusionMatrix m(classes_);
  for (std::size_t i : eval_subset) {
    const Sample s{labeled[i].image, labeled[i].id, labeled[i].split, &feats[i]};
    const auto pred = predict(s, RngStream{});
    accumulate(m, pred, s.image.labels, s.image.valid);
  }
  return mean_iou(m);
}

TrainReport LinearSoftmaxScorer::train(std::span<const Sample> labeled, const std::vector<AugmentationSpec>& da) {
  const TrainConfig& tc = cfg_.train;
  for (const auto& spec : da) spec.validate();
  const std::size_t n = labeled.size();

  std::vector<FeatureImage> feats(n);
  std::vector<std::vector<std::size_t>> supervised(n);
  std::size_t total_supervised = 0;
  for (std::size_t i = 0; i < n; ++i) {
    feats[i] = labeled[i].features ? *labeled[i].features : compute_features(labeled[i].image);
    supervised[i] = supervised_pixels(labeled[i].image);
    total_supervised += supervised[i].size();
  }
  if (total_supervised == 0) throw Error(Errc::NoSupervision, "labeled set has no supervised pixels");

  std::vector<std::size_t> eval_subset;
  if (tc.eval_images > 0 && static_cast<std::size_t>(tc.eval_images) < n) {
    for (int k = 0; k < tc.eval_images; ++k) eval_subset.push_back(static_cast<std::size_t>(k) * n / tc.eval_images);
  } else {
    for (std::size_t i = 0; i < n; ++i) eval_subset.push_back(i);
  }

  RngStream rng(cfg_.seed ^ kTrainStreamTag, 0, 0);
  std::vector<std::size_t> order = random_permutation(n, rng);
  std::size_t cursor = 0;
  auto next_image = [&]() {
    if (cursor == n) {
      order = random_permutation(n, rng);
      cursor = 0;
    }
    return order[cursor++];
  };

  TrainReport report;
  double lr = tc.learning_rate;
  double best = -1.0;
  std::vector<double> best_weights = weights_;
  int since_best = 0;
  std::vector<double> grad;
  PixelBatch batch;
  std::vector<std::size_t> batch_ids;

  auto evaluate = [&](int iteration) {
    const double miou = train_miou(labeled, feats, eval_subset);
    report.trace.push_back({iteration, miou});
    if (miou > best) {
      best = miou;
      best_weights = weights_;
      since_best = 0;
    } else {
      ++since_best;
    }
    lr *= tc.lr_decay;
  };

  int it = 0;
  while (it < tc.max_iterations) {
    batch.features.clear();
    batch.keep.clear();
    batch.labels.clear();
    batch_ids.clear();
    for (int b = 0; b < tc.batch_size; ++b) batch_ids.push_back(next_image());

    for (std::size_t b = 0; b < batch_ids.size(); ++b) {
      const std::size_t i = batch_ids[b];
      const RangeImage* img = &labeled[i].image;
      const FeatureImage* fi = &feats[i];
      const std::vector<std::size_t>* sup = &supervised[i];
      RangeImage augmented;
      FeatureImage aug_feats;
      std::vector<std::size_t> aug_sup;
      if (!da.empty()) {
        RngStream aug_rng(cfg_.seed ^ kAugmentStreamTag, labeled[i].id, static_cast<std::uint64_t>(it));
        const RangeImage& partner = labeled[batch_ids[(b + 1) % batch_ids.size()]].image;
        augmented = compose(da, *img, aug_rng, &partner);
        aug_feats = compute_features(augmented);
        aug_sup = supervised_pixels(augmented);
        img = &augmented;
        fi = &aug_feats;
        sup = &aug_sup;
      }
      if (sup->empty()) continue;
      auto add_pixel = [&](std::size_t p) {
        const float* x = fi->pixel(p);
        batch.features.insert(batch.features.end(), x, x + kNumFeatures);
        const std::size_t base = batch.keep.size();
        batch.keep.resize(base + kNumFeatures);
        draw_keep_mask(rng, cfg_.dropout_rate, batch.keep.data() + base);
        batch.labels.push_back(img->labels[p]);
      };
      if (tc.pixels_per_image > 0) {
        for (int k = 0; k < tc.pixels_per_image; ++k)
          add_pixel((*sup)[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sup->size()) - 1))]);
      } else {
        for (std::size_t p : *sup) add_pixel(p);
      }
    }
    ++it;
    if (batch.size() > 0) {
      loss_and_gradient(batch, grad);
      for (std::size_t k = 0; k < weights_.size(); ++k) weights_[k] -= lr * grad[k];
    }
    if (it % tc.eval_period == 0 || it == tc.max_iterations) {
      evaluate(it);
      if (since_best >= tc.patience) break;
    }
  }
  if (report.trace.empty()) evaluate(it);
  weights_ = best_weights;
  report.iterations = it;
  report.best_train_miou = best;
  return report;
}

namespace {
constexpr char kModelMagic[4] = {'R', 'A', 'L', 'M'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void LinearSoftmaxScorer::save(const std::filesystem::path& path) const {
  std::vector<std::byte> out;
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  };
  put(kModelMagic, 4);
  const std::uint32_t header[3] = {kModelVersion, static_cast<std::uint32_t>(classes_), kNumFeatures};
  put(header, sizeof(header));
  put(&cfg_.dropout_rate, sizeof(double));
  put(&cfg_.seed, sizeof(std::uint64_t));
  put(weights_.data(), weights_.size() * sizeof(double));
  write_file_bytes(path, out);
}

LinearSoftmaxScorer LinearSoftmaxScorer::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  constexpr std::size_t kHeader = 4 + 12 + 8 + 8;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw Error(Errc::StorageError, path.string() + " is not a model checkpoint");
  std::uint32_t header[3];
  std::memcpy(header, bytes.data() + 4, sizeof(header));
  if (header[0] != kModelVersion || header[2] != kNumFeatures)
    throw Error(Errc::StorageError, "unsupported checkpoint version or feature layout");
  ScorerConfig cfg;
  std::memcpy(&cfg.dropout_rate, bytes.data() + 16, sizeof(double));
  std::memcpy(&cfg.seed, bytes.data() + 24, sizeof(std::uint64_t));
  const int classes = static_cast<int>(header[1]);
  const std::size_t count = static_cast<std::size_t>(classes) * kRowSize;
  if (bytes.size() != kHeader + count * sizeof(double)) throw Error(Errc::StorageError, "truncated checkpoint");
  std::vector<double> w(count);
  std::memcpy(w.data(), bytes.data() + kHeader, count * sizeof(double));
  LinearSoftmaxScorer model(classes, cfg);
  model.set_weights(std::move(w));
  return model;
}

ExternalScorer::ExternalScorer(int num_classes, std::filesystem::path dir) : classes_(num_classes), dir_(std::move(dir)) {}

std::filesystem::path ExternalScorer::tensor_path(const Sample& sample, std::uint64_t step) const {
  return dir_ / ("step_" + std::to_string(step)) / (std::string(sample.split) + "_" + std::to_string(sample.id) + ".mcpt");
}

McProbTensor ExternalScorer::predict_mc(const Sample& sample, int, RngStream rng) const {
  const auto path = tensor_path(sample, rng.step());
  if (!std::filesystem::exists(path)) throw Error(Errc::MissingPredictions, "no tensor at " + path.string());
  McProbTensor t = load_external_tensor(path);
  if (t.width != sample.image.width || t.height != sample.image.height || t.classes != classes_)
    throw Error(Errc::MalformedTensor, path.string() + " does not match the image or class count");
  t.valid = sample.image.valid;
  return t;
}

std::vector<ClassId> ExternalScorer::predict(const Sample& sample, RngStream rng) const {
  const McProbTensor t = predict_mc(sample, 1, rng);
  const auto mean = mean_prediction(t);
  std::vector<ClassId> out(t.pixel_count(), kIgnoreLabel);
  for (std::size_t p = 0; p < t.pixel_count(); ++p) {
    if (!t.valid[p]) continue;
    const double* row = mean.data() + p * t.classes;
    out[p] = static_cast<ClassId>(std::max_element(row, row + t.classes) - row);
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(int num_classes, const ScorerConfig& cfg) {
  if (cfg.kind == ScorerKind::External) return std::make_unique<ExternalScorer>(num_classes, cfg.external_dir);
  return std::make_unique<LinearSoftmaxScorer>(num_classes, cfg);
}

}  // namespace rangeal
