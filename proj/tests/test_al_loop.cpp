#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "rangeal/al_loop.hpp"
#include "rangeal/error.hpp"
#include "rangeal/run_record.hpp"
#include "rangeal/synth.hpp"
#include "temp_dir.hpp"

using namespace rangeal;

namespace {

const AlDataset& small_dataset() {
  static const AlDataset data = [] {
    SceneSpec spec;
    spec.beams.width = 64;
    spec.beams.height = 8;
    std::vector<RangeImage> pool, test;
    for (std::size_t i = 0; i < 40; ++i) pool.push_back(project(generate_scene(spec, i), spec.beams));
    for (std::size_t i = 0; i < 10; ++i) test.push_back(project(generate_scene(spec, 100 + i), spec.beams));
    return AlDataset(std::move(pool), std::move(test), spec.classes);
  }();
  return data;
}

AlConfig small_config(HeuristicKind h = HeuristicKind::BALD, std::uint64_t seed = 1) {
  AlConfig cfg;
  cfg.init_size = 4;
  cfg.budget = 4;
  cfg.steps = 3;
  cfg.heuristic = h;
  cfg.seed = seed;
  cfg.pool_size = 40;
  cfg.test_size = 10;
  cfg.sensor.width = 64;
  cfg.sensor.height = 8;
  cfg.scorer.mc_iterations = 3;
  cfg.scorer.dropout_rate = 0.1;
  cfg.scorer.seed = seed;
  cfg.scorer.train.learning_rate = 1.0;
  cfg.scorer.train.batch_size = 2;
  cfg.scorer.train.max_iterations = 60;
  cfg.scorer.train.eval_period = 20;
  cfg.scorer.train.patience = 2;
  cfg.scorer.train.pixels_per_image = 32;
  return cfg;
}

IndexSet iota_set(std::size_t n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("init_pools partitions the universe") {
  const IndexSet u = iota_set(100);
  const PoolState s = init_pools(u, 10, 3);
  CHECK(s.labeled.size() == 10);
  CHECK(s.unlabeled.size() == 90);
  CHECK_NOTHROW(s.check());
  CHECK(s == init_pools(u, 10, 3));
  CHECK_FALSE(s == init_pools(u, 10, 4));
  CHECK(init_pools(u, 100, 3).unlabeled.empty());
  CHECK_THROWS_AS(init_pools(u, 101, 3), Error);
}

TEST_CASE("annotate moves ids and rejects foreign ones") {
  PoolState s = init_pools(iota_set(20), 5, 1);
  const std::vector<std::size_t> pick{s.unlabeled[3], s.unlabeled[0]};
  s.annotate(pick);
  CHECK(s.labeled.size() == 7);
  CHECK(s.unlabeled.size() == 13);
  CHECK_NOTHROW(s.check());
  CHECK(std::binary_search(s.labeled.begin(), s.labeled.end(), pick[0]));
  const std::vector<std::size_t> again{s.labeled[0]};
  CHECK_THROWS_AS(s.annotate(again), Error);
  PoolState broken = s;
  broken.unlabeled.push_back(broken.labeled[0]);
  std::sort(broken.unlabeled.begin(), broken.unlabeled.end());
  CHECK_THROWS_AS(broken.check(), Error);
  broken = s;
  broken.unlabeled.pop_back();
  CHECK_THROWS_AS(broken.check(), Error);
}

TEST_CASE("a run keeps the pool invariants and grows L by the budget") {
  const AlDataset& data = small_dataset();
  for (auto h : {HeuristicKind::Random, HeuristicKind::BALD, HeuristicKind::Entropy, HeuristicKind::Certainty,
                 HeuristicKind::Variance}) {
    const AlConfig cfg = small_config(h);
    std::vector<StepRecord> seen;
    RunOptions opts;
    opts.on_step = [&](const StepRecord& r) { seen.push_back(r); };
    const AlRunRecord rec = run(cfg, data, opts);
    REQUIRE(rec.steps.size() == 4);
    CHECK(seen.size() == 4);
    PoolState s = init_pools(iota_set(40), 4, cfg.seed);
    for (std::size_t k = 0; k < rec.steps.size(); ++k) {
      const StepRecord& r = rec.steps[k];
      CHECK(r.step == k);
      CHECK(r.n_labeled == 4 * (k + 1));
      CHECK(r.test_miou >= 0.0);
      CHECK(r.test_miou <= 1.0);
      if (k + 1 < rec.steps.size()) {
        CHECK(r.selected.size() == 4);
        s.annotate(r.selected);
        CHECK_NOTHROW(s.check());
        CHECK(r.scores.size() == (h == HeuristicKind::Random ? 0u : 40u - 4 * (k + 1)));
      } else {
        CHECK(r.selected.empty());
      }
    }
  }
}

TEST_CASE("the run stops once U is exhausted") {
  AlConfig cfg = small_config(HeuristicKind::Random);
  cfg.init_size = 30;
  cfg.budget = 8;
  cfg.steps = 10;
  const AlRunRecord rec = run(cfg, small_dataset());
  REQUIRE(rec.steps.size() == 3);
  CHECK(rec.steps[0].n_labeled == 30);
  CHECK(rec.steps[1].n_labeled == 38);
  CHECK(rec.steps[1].selected.size() == 2);
  CHECK(rec.steps[2].n_labeled == 40);
}

TEST_CASE("zero steps trains once on the initial set") {
  AlConfig cfg = small_config();
  cfg.steps = 0;
  const AlRunRecord rec = run(cfg, small_dataset());
  REQUIRE(rec.steps.size() == 1);
  CHECK(rec.steps[0].n_labeled == 4);
  CHECK(rec.steps[0].selected.empty());
}

TEST_CASE("identical seeds give byte-identical run CSVs") {
  TempDir dir("al");
  const AlConfig cfg = small_config(HeuristicKind::BALD, 5);
  write_run_record(run(cfg, small_dataset()), dir / "a.csv");
  write_run_record(run(cfg, small_dataset()), dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv.scores.csv") == slurp(dir / "b.csv.scores.csv"));
  write_run_record(run(small_config(HeuristicKind::BALD, 6), small_dataset()), dir / "c.csv");
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
}

TEST_CASE("checkpoints hold the pools each model was trained on") {
  TempDir dir("ckpt");
  const AlConfig cfg = small_config(HeuristicKind::BALD, 2);
  RunOptions opts;
  opts.checkpoint_dir = dir.path;
  const AlRunRecord rec = run(cfg, small_dataset(), opts);
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const PoolState s = load_pools(dir / ("step_" + std::to_string(k) + ".pools"));
    CHECK(s.labeled.size() == rec.steps[k].n_labeled);
    CHECK(std::filesystem::exists(dir / ("step_" + std::to_string(k) + ".model")));
  }
}

TEST_CASE("invalid configurations are rejected") {
  AlConfig cfg = small_config();
  cfg.budget = 0;
  CHECK_THROWS_AS(run(cfg, small_dataset()), Error);
  cfg = small_config();
  cfg.init_size = 41;
  CHECK_THROWS_AS(run(cfg, small_dataset()), Error);
}

TEST_CASE("TT-DA with identity augmentation reproduces the plain scores") {
  const AlDataset& data = small_dataset();
  AlConfig cfg = small_config();
  cfg.pool_size = 40;
  auto model = make_scorer(data.num_classes(), cfg.scorer);
  const PoolState s = init_pools(iota_set(40), 8, 1);
  std::vector<Sample> labeled;
  for (std::size_t id : s.labeled) labeled.push_back(data.pool_sample(id));
  model->train(labeled, {});
  std::vector<AugmentationSpec> identity;
  for (const auto& spec : default_augmentations({2})) identity.push_back(AugmentationSpec::identity(spec.kind));
  const TtDaCurves c = analyze_tt_da(*model, s, identity, 0, data, cfg);
  CHECK(c.budget == cfg.budget);
  CHECK(c.curve(TtDaPool::Labeled).size() == 8);
  CHECK(c.curve(TtDaPool::Unlabeled).size() == 32);
  CHECK(c.curve(TtDaPool::AugmentedLabeled).size() == 8);
  CHECK(c.curve(TtDaPool::AugmentedUnlabeled).size() == 8);  // min(|U|, pool_size - |U|)
  CHECK(c.mean_score(TtDaPool::Labeled) == c.mean_score(TtDaPool::AugmentedLabeled));
  for (const auto& curve : c.curves) {
    CHECK(std::is_sorted(curve.begin(), curve.end(), [](const SampleScore& a, const SampleScore& b) { return a.score > b.score; }));
    for (const auto& x : curve) CHECK(x.score >= 0.0);
  }

  const TtDaCurves d = analyze_tt_da(*model, s, default_augmentations({2}), 0, data, cfg);
  CHECK(d.mean_score(TtDaPool::Labeled) == c.mean_score(TtDaPool::Labeled));
  const TtDaCurves e = analyze_tt_da(*model, s, default_augmentations({2}), 0, data, cfg);
  CHECK(d.curve(TtDaPool::AugmentedUnlabeled).size() == e.curve(TtDaPool::AugmentedUnlabeled).size());
  for (std::size_t i = 0; i < d.curve(TtDaPool::AugmentedUnlabeled).size(); ++i)
    CHECK(d.curve(TtDaPool::AugmentedUnlabeled)[i].score == e.curve(TtDaPool::AugmentedUnlabeled)[i].score);
}

TEST_CASE("pools save and load") {
  TempDir dir("pools");
  const PoolState s = init_pools(iota_set(30), 7, 9);
  save_pools(s, dir / "p.txt");
  CHECK(load_pools(dir / "p.txt") == s);
  std::ofstream(dir / "bad.txt") << "L 1 2\nU 2 3\n";
  CHECK_THROWS_AS(load_pools(dir / "bad.txt"), Error);
  CHECK_THROWS_AS(load_pools(dir / "missing.txt"), Error);
}
