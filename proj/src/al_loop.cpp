#include "rangeal/al_loop.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rangeal/error.hpp"
#include "rangeal/metrics.hpp"

namespace rangeal {

namespace {

constexpr std::uint64_t kPoolTag = 0x706f6f6c;      // "pool"
constexpr std::uint64_t kScoreTag = 0x73636f7265;   // "score"
constexpr std::uint64_t kSelectTag = 0x73656c;      // "sel"
constexpr std::uint64_t kTestTag = 0x74657374;      // "test"
constexpr std::uint64_t kTtDaTag = 0x74746461;      // "ttda"

bool sorted_unique(const IndexSet& s) {
  return std::adjacent_find(s.begin(), s.end(), std::greater_equal<>()) == s.end();
}

std::vector<Sample> labeled_samples(const PoolState& state, const AlDataset& data) {
  std::vector<Sample> out;
  out.reserve(state.labeled.size());
  for (std::size_t id : state.labeled) out.push_back(data.pool_sample(id));
  return out;
}

void train_and_evaluate(const PoolState& state, const AlConfig& cfg, Scorer& model, const AlDataset& data,
                        std::size_t step, StepRecord& rec) {
  model.reset();
  const auto samples = labeled_samples(state, data);
  const TrainReport report = model.train(samples, cfg.da);
  rec.train_iterations = report.iterations;
  rec.train_miou = report.best_train_miou;

  ConfusionMatrix cm(data.num_classes());
  UncertaintyAccumulator stability;
  for (std::size_t j = 0; j < data.test().size(); ++j) {
    const Sample s = data.test_sample(j);
    const RngStream rng(cfg.seed ^ kTestTag, j, step);
    accumulate(cm, model.predict(s, rng), s.image.labels, s.image.valid);
    stability.add(model.predict_mc(s, cfg.scorer.mc_iterations, rng));
  }
  if (!data.test().empty()) {
    rec.test_miou = mean_iou(cm);
    rec.mean_variance = stability.pixels ? stability.mean_variance() : 0.0;
    rec.mean_bald = stability.pixels ? stability.mean_bald() : 0.0;
  }
}

double score_sample(const Scorer& model, const Sample& s, const AlConfig& cfg, HeuristicKind kind, RngStream rng) {
  const McProbTensor t = model.predict_mc(s, cfg.scorer.mc_iterations, rng);
  return aggregate(heuristic_map(t, kind), cfg.aggregation);
}

}  // namespace

void PoolState::check() const {
  if (!sorted_unique(labeled) || !sorted_unique(unlabeled) || !sorted_unique(universe))
    throw Error(Errc::BadParam, "pool index sets must be sorted and duplicate-free");
  IndexSet both;
  std::set_intersection(labeled.begin(), labeled.end(), unlabeled.begin(), unlabeled.end(), std::back_inserter(both));
  if (!both.empty()) throw Error(Errc::BadParam, "labeled and unlabeled pools overlap");
  IndexSet all;
  std::set_union(labeled.begin(), labeled.end(), unlabeled.begin(), unlabeled.end(), std::back_inserter(all));
  if (all != universe) throw Error(Errc::BadParam, "labeled and unlabeled pools do not cover the universe");
}

void PoolState::annotate(std::span<const std::size_t> ids) {
  IndexSet moving(ids.begin(), ids.end());
  std::sort(moving.begin(), moving.end());
  for (std::size_t id : moving)
    if (!std::binary_search(unlabeled.begin(), unlabeled.end(), id))
      throw Error(Errc::BadParam, "sample " + std::to_string(id) + " is not in the unlabeled pool");
  IndexSet rest;
  std::set_difference(unlabeled.begin(), unlabeled.end(), moving.begin(), moving.end(), std::back_inserter(rest));
  IndexSet merged;
  std::merge(labeled.begin(), labeled.end(), moving.begin(), moving.end(), std::back_inserter(merged));
  unlabeled = std::move(rest);
  labeled = std::move(merged);
}

void AlConfig::validate(std::size_t universe_size) const {
  if (budget < 1) throw Error(Errc::BadConfig, "budget must be at least 1");
  if (init_size < 1) throw Error(Errc::BadConfig, "the initial labeled set must not be empty");
  if (init_size > universe_size)
    throw Error(Errc::PoolTooLarge, "initial set of " + std::to_string(init_size) + " exceeds the pool");
  for (const auto& spec : da) spec.validate();
  if (scorer.kind == ScorerKind::Builtin) scorer.validate();
}

bool operator==(const StepRecord& a, const StepRecord& b) {
  auto same_scores = [](const std::vector<SampleScore>& x, const std::vector<SampleScore>& y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                      [](const SampleScore& p, const SampleScore& q) { return p.sample_id == q.sample_id && p.score == q.score; });
  };
  return a.step == b.step && a.n_labeled == b.n_labeled && a.selected == b.selected && a.test_miou == b.test_miou &&
         a.mean_variance == b.mean_variance && a.mean_bald == b.mean_bald && a.train_iterations == b.train_iterations &&
         a.train_miou == b.train_miou && a.wall_seconds == b.wall_seconds && same_scores(a.scores, b.scores);
}

AlDataset::AlDataset(std::vector<RangeImage> pool, std::vector<RangeImage> test, int num_classes)
    : pool_(std::move(pool)), test_(std::move(test)), classes_(num_classes) {
  pool_features_.reserve(pool_.size());
  for (const auto& img : pool_) pool_features_.push_back(compute_features(img));
  test_features_.reserve(test_.size());
  for (const auto& img : test_) test_features_.push_back(compute_features(img));
}

PoolState init_pools(const IndexSet& universe, std::size_t init_size, std::uint64_t seed) {
  if (init_size > universe.size())
    throw Error(Errc::PoolTooLarge, "initial set of " + std::to_string(init_size) + " exceeds the pool");
  RngStream rng(seed ^ kPoolTag, 0, 0);
  const auto perm = random_permutation(universe.size(), rng);
  PoolState s;
  s.universe = universe;
  for (std::size_t i = 0; i < universe.size(); ++i) (i < init_size ? s.labeled : s.unlabeled).push_back(universe[perm[i]]);
  std::sort(s.labeled.begin(), s.labeled.end());
  std::sort(s.unlabeled.begin(), s.unlabeled.end());
  s.check();
  return s;
}

StepRecord evaluate_step(const PoolState& state, const AlConfig& cfg, Scorer& model, const AlDataset& data,
                         std::size_t step) {
  const auto start = std::chrono::steady_clock::now();
  StepRecord rec;
  rec.step = step;
  rec.n_labeled = state.labeled.size();
  train_and_evaluate(state, cfg, model, data, step, rec);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

StepOutcome run_step(const PoolState& state, const AlConfig& cfg, Scorer& model, const AlDataset& data, std::size_t step) {
  if (state.unlabeled.empty()) throw Error(Errc::EmptyPool, "unlabeled pool is empty");
  const auto start = std::chrono::steady_clock::now();
  StepOutcome out{state, {}};
  StepRecord& rec = out.record;
  rec.step = step;
  rec.n_labeled = state.labeled.size();
  train_and_evaluate(state, cfg, model, data, step, rec);

  std::vector<SampleScore> scores;
  scores.reserve(state.unlabeled.size());
  for (std::size_t id : state.unlabeled) {
    double score = 0.0;
    if (cfg.heuristic != HeuristicKind::Random)
      score = score_sample(model, data.pool_sample(id), cfg, cfg.heuristic, RngStream(cfg.seed ^ kScoreTag, id, step));
    scores.push_back({id, score});
  }
  RngStream select_rng(cfg.seed ^ kSelectTag, 0, step);
  rec.selected = rank_and_select(scores, cfg.budget, cfg.heuristic, select_rng);
  if (cfg.heuristic != HeuristicKind::Random) rec.scores = std::move(scores);

  out.state.annotate(rec.selected);
  out.state.check();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

AlRunRecord run(const AlConfig& cfg, const AlDataset& data, const RunOptions& options) {
  IndexSet universe(data.pool().size());
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  cfg.validate(universe.size());
  auto model = make_scorer(data.num_classes(), cfg.scorer);

  AlRunRecord record;
  record.config = cfg;
  PoolState state = init_pools(universe, cfg.init_size, cfg.seed);

  auto checkpoint = [&](std::size_t step, const PoolState& trained_on) {
    if (options.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(options.checkpoint_dir);
    const std::string stem = "step_" + std::to_string(step);
    save_pools(trained_on, options.checkpoint_dir / (stem + ".pools"));
    if (auto* builtin = dynamic_cast<LinearSoftmaxScorer*>(model.get()))
      builtin->save(options.checkpoint_dir / (stem + ".model"));
  };
  auto emit = [&](StepRecord rec) {
    if (options.on_step) options.on_step(rec);
    record.steps.push_back(std::move(rec));
  };

  std::size_t step = 0;
  for (; step < cfg.steps && !state.unlabeled.empty(); ++step) {
    StepOutcome out = run_step(state, cfg, *model, data, step);
    checkpoint(step, state);
    state = std::move(out.state);
    emit(std::move(out.record));
  }
  emit(evaluate_step(state, cfg, *model, data, step));
  checkpoint(step, state);
  return record;
}

double TtDaCurves::mean_score(TtDaPool p) const {
  const auto& c = curve(p);
  if (c.empty()) return 0.0;
  double s = 0.0;
  for (const auto& x : c) s += x.score;
  return s / static_cast<double>(c.size());
}

TtDaCurves analyze_tt_da(const Scorer& model, const PoolState& state, const std::vector<AugmentationSpec>& da,
                         std::size_t step, const AlDataset& data, const AlConfig& cfg) {
  TtDaCurves out;
  out.budget = cfg.budget;
  auto score_of = [&](const Sample& s, std::size_t id) {
    return score_sample(model, s, cfg, HeuristicKind::BALD, RngStream(cfg.seed ^ kScoreTag, id, step));
  };
  auto augmented_scores = [&](const IndexSet& ids, std::vector<SampleScore>& dst) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t id = ids[k];
      RngStream rng(cfg.seed ^ kTtDaTag, id, step);
      const RangeImage& partner = data.pool()[ids[(k + 1) % ids.size()]];
      const RangeImage aug = compose(da, data.pool()[id], rng, &partner);
      const FeatureImage feats = compute_features(aug);
      dst.push_back({id, score_of(Sample{aug, id, "pool", &feats}, id)});
    }
  };

  for (std::size_t id : state.labeled) out.curves[0].push_back({id, score_of(data.pool_sample(id), id)});
  for (std::size_t id : state.unlabeled) out.curves[1].push_back({id, score_of(data.pool_sample(id), id)});
  augmented_scores(state.labeled, out.curves[2]);

  const std::size_t target = cfg.pool_size > state.unlabeled.size() ? cfg.pool_size - state.unlabeled.size() : 0;
  const std::size_t take = std::min(target, state.unlabeled.size());
  RngStream subset_rng(cfg.seed ^ kTtDaTag, 0, step);
  const auto perm = random_permutation(state.unlabeled.size(), subset_rng);
  IndexSet subset;
  for (std::size_t i = 0; i < take; ++i) subset.push_back(state.unlabeled[perm[i]]);
  std::sort(subset.begin(), subset.end());
  augmented_scores(subset, out.curves[3]);

  for (auto& c : out.curves)
    std::stable_sort(c.begin(), c.end(), [](const SampleScore& a, const SampleScore& b) { return a.score > b.score; });
  return out;
}

void save_pools(const PoolState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::StorageError, "cannot write " + path.string());
  auto line = [&](const char* tag, const IndexSet& ids) {
    out << tag;
    for (auto id : ids) out << ' ' << id;
    out << '\n';
  };
  line("L", state.labeled);
  line("U", state.unlabeled);
  if (!out) throw Error(Errc::StorageError, "write failed on " + path.string());
}

PoolState load_pools(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::StorageError, "cannot open " + path.string());
  PoolState s;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    IndexSet* dst = tag == "L" ? &s.labeled : tag == "U" ? &s.unlabeled : nullptr;
    if (!dst) continue;
    std::size_t id;
    while (ls >> id) dst->push_back(id);
  }
  std::sort(s.labeled.begin(), s.labeled.end());
  std::sort(s.unlabeled.begin(), s.unlabeled.end());
  std::set_union(s.labeled.begin(), s.labeled.end(), s.unlabeled.begin(), s.unlabeled.end(), std::back_inserter(s.universe));
  s.check();
  return s;
}

}  // namespace rangeal
