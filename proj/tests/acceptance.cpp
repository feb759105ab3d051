// Acceptance run: one PASS/FAIL line per criterion, detail lines indented below it.
// Usage: acceptance [output_dir]

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rangeal/al_loop.hpp"
#include "rangeal/augmentation.hpp"
#include "rangeal/config.hpp"
#include "rangeal/error.hpp"
#include "rangeal/metrics.hpp"
#include "rangeal/projection.hpp"
#include "rangeal/run_record.hpp"
#include "rangeal/scorer.hpp"
#include "rangeal/synth.hpp"
#include "rangeal/tensor_io.hpp"
#include "rangeal/uncertainty.hpp"

using namespace rangeal;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  int id;
  std::string name;
  bool pass;
  std::vector<std::string> details;
};

std::vector<Verdict> verdicts;

void report(int id, const std::string& name, bool pass, std::vector<std::string> details) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, name.c_str());
  for (const auto& d : details) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
  verdicts.push_back({id, name, pass, std::move(details)});
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

McProbTensor one_pixel(const std::vector<std::vector<float>>& slices) {
  const int t = static_cast<int>(slices.size());
  const int c = static_cast<int>(slices[0].size());
  McProbTensor out(1, 1, c, t);
  out.valid[0] = 1;
  for (int it = 0; it < t; ++it)
    for (int k = 0; k < c; ++k) out.at(0, k, it) = slices[it][k];
  return out;
}

// ---------------------------------------------------------------- 1-5, 7, 12

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<int> wh(1, 16), cc(2, 5), tt(1, 8);
  std::uniform_real_distribution<double> sharp(0.1, 5.0);
  double worst = 0.0;
  std::size_t pixels = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = oracle::random_tensor(gen, wh(gen), wh(gen), cc(gen), tt(gen), sharp(gen));
    const auto e = entropy_map(t), v = variance_map(t), b = bald_map(t), c = certainty_map(t);
    for (std::size_t p = 0; p < t.pixel_count(); ++p) {
      if (!t.valid[p]) continue;
      ++pixels;
      worst = std::max({worst, std::abs(e.scores[p] - oracle::entropy(t, p)), std::abs(v.scores[p] - oracle::variance(t, p)),
                        std::abs(b.scores[p] - oracle::bald(t, p)), std::abs(c.scores[p] - oracle::certainty_score(t, p))});
    }
  }
  const double secs = seconds_since(t0);
  report(1, "heuristic maps match brute-force oracles", worst <= 1e-9 && secs < 10.0,
         {fmt("200 tensors, %zu valid pixels, max abs error %.3e (limit 1e-9), %.2f s (limit 10 s)", pixels, worst, secs)});
}

void criterion_2() {
  std::vector<std::string> d;
  bool ok = true;
  auto check = [&](const std::string& what, double got, double want) {
    const double err = std::abs(got - want);
    ok = ok && err <= 1e-12;
    d.push_back(fmt("%s = %.15f, expected %.15f, error %.1e", what.c_str(), got, want, err));
  };
  for (int c : {2, 4, 8}) {
    const auto u = one_pixel({std::vector<float>(c, 1.0f / static_cast<float>(c))});
    check(fmt("entropy(uniform, C=%d)", c), entropy_map(u).scores[0], std::log(c));
  }
  const auto split = one_pixel({{1.0f, 0.0f}, {0.0f, 1.0f}});
  check("BALD(two disagreeing one-hots)", bald_map(split).scores[0], std::log(2.0));
  check("variance(two disagreeing one-hots)", variance_map(split).scores[0], 0.25);
  const auto same = one_pixel({{0.0f, 1.0f}, {0.0f, 1.0f}});
  check("entropy(identical one-hots)", entropy_map(same).scores[0], 0.0);
  check("BALD(identical one-hots)", bald_map(same).scores[0], 0.0);
  check("variance(identical one-hots)", variance_map(same).scores[0], 0.0);
  d.push_back("uniform entropy checked for C = 2, 4, 8 where 1/C is exact in float32");
  report(2, "analytic heuristic fixtures", ok, d);
}

void criterion_3() {
  std::mt19937_64 gen(3003);
  double min_bald = 1e300, max_excess = -1e300;
  std::size_t pixels = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int c = 2 + trial % 4;
    const auto t = oracle::random_tensor(gen, 4, 4, c, 1 + trial % 8, 0.2 + 0.5 * (trial % 10));
    for (std::size_t p = 0; p < t.pixel_count(); ++p) {
      if (!t.valid[p]) continue;
      ++pixels;
      const auto block = t.pixel(p);
      const double raw = pixel_bald_raw(block, c, t.iterations);
      min_bald = std::min(min_bald, raw);
      max_excess = std::max(max_excess, raw - pixel_entropy(block, c, t.iterations));
    }
  }
  report(3, "Jensen invariant: -1e-9 <= BALD <= entropy", min_bald >= -1e-9 && max_excess <= 0.0,
         {fmt("10000 tensors, %zu pixels; min raw BALD %.3e, max (BALD - entropy) %.3e", pixels, min_bald, max_excess)});
}

void criterion_4() {
  const SensorConfig cfg;
  const PixelCoord fixture = project_point(1.0, 0.0, 0.0, cfg);
  std::mt19937_64 gen(4004);
  std::uniform_real_distribution<double> ud(-40.0, 40.0), uz(-6.0, 3.0);
  PointCloud cloud;
  std::size_t mismatches = 0;
  for (int k = 0; k < 10000; ++k) {
    double x, y, z;
    do {
      x = ud(gen);
      y = ud(gen);
      z = uz(gen);
    } while (x * x + y * y + z * z < 1e-6);
    const PixelCoord got = project_point(x, y, z, cfg);
    const oracle::UV want = oracle::project(x, y, z, cfg.width, cfg.height, cfg.fov_up, cfg.fov_down);
    mismatches += (got.u != want.u || got.v != want.v) ? 1 : 0;
    cloud.points.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), 0.5f});
  }
  const RangeImage img = project(cloud, cfg);
  double worst_rel = 0.0;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    if (!img.valid[p]) continue;
    const auto& pt = cloud.points[static_cast<std::size_t>(img.point_index[p])];
    const double r = std::sqrt(static_cast<double>(pt.x) * pt.x + static_cast<double>(pt.y) * pt.y +
                               static_cast<double>(pt.z) * pt.z);
    worst_rel = std::max(worst_rel, std::abs(img.channels[kChannelRange][p] - r) / r);
  }
  const bool ok = mismatches == 0 && fixture.u == 512 && fixture.v == 57 && worst_rel <= 1e-6;
  report(4, "projection matches the scalar oracle", ok,
         {fmt("10000 random points, %zu (u,v) mismatches", mismatches),
          fmt("(1,0,0) -> (%d,%d), expected (512,57)", fixture.u, fixture.v),
          fmt("max relative r error %.3e (limit 1e-6)", worst_rel)});
}

void criterion_5() {
  std::mt19937_64 gen(5005);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + trial % 6;
    const std::size_t n = 64 + static_cast<std::size_t>(trial) * 13;
    std::uniform_int_distribution<int> cls(0, classes - 1);
    std::bernoulli_distribution keep(0.85), ignore(0.05);
    std::vector<ClassId> pred(n), target(n);
    std::vector<int> ip(n), it(n);
    std::vector<std::uint8_t> valid(n);
    for (std::size_t i = 0; i < n; ++i) {
      ip[i] = cls(gen);
      it[i] = ignore(gen) ? -1 : cls(gen);
      valid[i] = keep(gen) ? 1 : 0;
      pred[i] = static_cast<ClassId>(ip[i]);
      target[i] = it[i] < 0 ? kIgnoreLabel : static_cast<ClassId>(it[i]);
    }
    worst = std::max(worst, std::abs(mean_iou(confusion(pred, target, valid, classes)) - oracle::miou(ip, it, valid, classes)));
  }
  const std::vector<ClassId> t{0, 0, 1, 1}, p{0, 0, 0, 0};
  const std::vector<std::uint8_t> v(4, 1);
  const double fixture = mean_iou(confusion(p, t, v, 2));
  report(5, "mIoU matches the pixel-level oracle", worst <= 1e-12 && std::abs(fixture - 0.25) <= 1e-12,
         {fmt("100 random pairs, max abs error %.3e", worst), fmt("half-class-0 fixture: %.6f (expected 0.25)", fixture)});
}

void criterion_7() {
  RangeImage img(1024, 64, true);
  std::mt19937_64 gen(7007);
  std::uniform_real_distribution<float> ud(0.0f, 1.0f);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    if (ud(gen) < 0.1f) continue;
    img.valid[p] = 1;
    for (int c = 0; c < kNumChannels; ++c) img.channels[c][p] = 1.0f + 20.0f * ud(gen);
    img.channels[kChannelRemission][p] = ud(gen);
    img.labels[p] = static_cast<ClassId>(p % 4);
    img.point_index[p] = static_cast<std::int32_t>(p);
    img.instance[p] = img.labels[p] >= 2 ? static_cast<std::uint32_t>(1 + p % 9) : 0;
  }
  const RangeImage partner = img;
  std::vector<std::string> d;
  bool ok = true;
  RngStream rng(7, 0, 0);
  for (const auto& spec : default_augmentations({2, 3})) {
    const AugmentationSpec id = AugmentationSpec::identity(spec.kind);
    const bool same = compose({id}, img, rng, &partner) == img;
    ok = ok && same;
    d.push_back(fmt("%s at identity parameters: %s", std::string(augmentation_name(spec.kind)).c_str(),
                    same ? "bit-identical" : "CHANGED"));
  }
  int inverse_failures = 0;
  for (int k : {1, 7, 64, 500, 1023}) inverse_failures += shift_columns(shift_columns(img, k), -k) == img ? 0 : 1;
  const int cols = shift_columns_for_angle(22.5, 1024);
  const RangeImage shifted = cyclic_shift(img, 22.5);
  bool moved = true;
  for (int v = 0; v < img.height && moved; ++v)
    for (int u = 0; u < img.width; ++u)
      if (shifted.channels[kChannelRange][img.index((u + 64) % 1024, v)] != img.channels[kChannelRange][img.index(u, v)]) {
        moved = false;
        break;
      }
  ok = ok && inverse_failures == 0 && cols == 64 && moved;
  d.push_back(fmt("shift +k then -k is the identity for k in {1,7,64,500,1023}: %d failures", inverse_failures));
  d.push_back(fmt("22.5 deg on W=1024 moves %d columns, pixel check %s", cols, moved ? "ok" : "failed"));
  report(7, "augmentation identities and cyclic shift arithmetic", ok, d);
}

void criterion_12() {
  std::mt19937_64 gen(1212);
  std::normal_distribution<double> nd(0.0, 0.5);
  std::normal_distribution<float> nf(0.0f, 1.0f);
  std::bernoulli_distribution keep(0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 2 + trial % 4;
    ScorerConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    LinearSoftmaxScorer model(classes, cfg);
    std::vector<double> w(model.weights().size());
    for (auto& x : w) x = nd(gen);
    model.set_weights(w);
    PixelBatch batch;
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 9);
    std::uniform_int_distribution<int> cls(0, classes - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (int f = 0; f < kNumFeatures; ++f) {
        batch.features.push_back(nf(gen));
        batch.keep.push_back(keep(gen) ? 1 : 0);
      }
      batch.labels.push_back(static_cast<ClassId>(cls(gen)));
    }
    std::vector<double> grad;
    model.loss_and_gradient(batch, grad);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double h = 1e-6;
      auto wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      model.set_weights(wp);
      const double lp = model.loss(batch);
      model.set_weights(wm);
      const double lm = model.loss(batch);
      const double fd = (lp - lm) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-6}));
    }
  }
  report(12, "built-in scorer gradient matches central differences", worst <= 1e-4,
         {fmt("50 random batches, max relative error %.3e (limit 1e-4)", worst)});
}

// ---------------------------------------------------------------- experiments

struct Experiment {
  ExperimentConfig cfg;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::map<std::uint64_t, AlRunRecord>> runs;  // cell id -> seed -> record
  std::map<std::string, double> cell_seconds;
  double total_seconds = 0.0;
};

fs::path record_path(const fs::path& out, const std::string& cell, std::uint64_t seed) {
  std::string name = cell;
  std::replace(name.begin(), name.end(), '+', '-');
  return out / (name + "_seed" + std::to_string(seed) + ".csv");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double reach_or_inf(const AlRunRecord& r, double level) {
  try {
    return labels_to_reach(curve_of(r), level);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

double full_pool_miou(const Experiment& ex, std::uint64_t seed) {
  return ex.runs.at("bald").at(seed).steps.back().test_miou;
}

void run_experiments(Experiment& ex, const AlDataset& data, const fs::path& out) {
  const auto t0 = Clock::now();
  for (const auto& cell : ex.cfg.matrix) {
    for (auto seed : ex.seeds) {
      const auto c0 = Clock::now();
      const AlRunRecord rec = run(ex.cfg.cell_config(cell, seed), data);
      const double secs = seconds_since(c0);
      ex.cell_seconds[cell.id()] += secs;
      write_run_record(rec, record_path(out, cell.id(), seed));
      std::printf("  .. %-8s seed %llu: %zu rows, |L| %zu -> %zu, mIoU %.4f -> %.4f, %.1f s\n", cell.id().c_str(),
                  static_cast<unsigned long long>(seed), rec.steps.size(), rec.steps.front().n_labeled,
                  rec.steps.back().n_labeled, rec.steps.front().test_miou, rec.steps.back().test_miou, secs);
      std::fflush(stdout);
      ex.runs[cell.id()][seed] = rec;
    }
  }
  ex.total_seconds = seconds_since(t0);

  std::vector<CurveRow> rows;
  for (const auto& [id, by_seed] : ex.runs)
    for (const auto& [seed, rec] : by_seed)
      for (const auto& p : curve_of(rec).points)
        rows.push_back({id + "/seed" + std::to_string(seed), std::string(heuristic_name(rec.config.heuristic)),
                        !rec.config.da.empty(), p.n_labeled, p.miou});
  write_curves_csv(rows, out / "curves.csv");
}

void criterion_6(const Experiment& ex, const AlDataset& data, const fs::path& out) {
  std::size_t runs = 0, violations = 0, rows = 0;
  IndexSet universe(data.pool().size());
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  for (const auto& [id, by_seed] : ex.runs) {
    for (const auto& [seed, rec] : by_seed) {
      ++runs;
      PoolState s = init_pools(universe, rec.config.init_size, rec.config.seed);
      for (std::size_t k = 0; k < rec.steps.size(); ++k) {
        const StepRecord& r = rec.steps[k];
        ++rows;
        try {
          s.check();
          if (r.step != k || r.n_labeled != s.labeled.size() || r.n_labeled != 24 * (k + 1)) ++violations;
          s.annotate(r.selected);
          s.check();
        } catch (const Error&) {
          ++violations;
        }
      }
      if (rec.steps.size() != 25 || !s.unlabeled.empty()) ++violations;
    }
  }
  // Byte-identical rerun of one cell.
  const auto c0 = Clock::now();
  const MatrixCell bald{HeuristicKind::BALD, false};
  const std::uint64_t seed = ex.seeds.front();
  const fs::path again = out / "rerun_bald.csv";
  write_run_record(run(ex.cfg.cell_config(bald, seed), data), again);
  const bool identical = slurp(again) == slurp(record_path(out, "bald", seed)) &&
                         slurp(fs::path(again.string() + ".scores.csv")) ==
                             slurp(fs::path(record_path(out, "bald", seed).string() + ".scores.csv"));
  report(6, "pool invariants over desk-scale runs, byte-identical reruns", violations == 0 && identical,
         {fmt("%zu runs x 25 rows (%zu rows): L and U disjoint, L u U = D, |L| = 24(k+1); %zu violations", runs, rows,
              violations),
          fmt("bald seed %llu rerun (%.1f s): run CSV and score dump %s", static_cast<unsigned long long>(seed),
              seconds_since(c0), identical ? "byte-identical" : "DIFFER")});
}

void criterion_8(const Experiment& ex) {
  int wins = 0;
  std::vector<std::string> d;
  for (auto seed : ex.seeds) {
    const double full = full_pool_miou(ex, seed);
    const double level = 0.9 * full;
    const double nr = reach_or_inf(ex.runs.at("random").at(seed), level);
    const double nb = reach_or_inf(ex.runs.at("bald").at(seed), level);
    const double le = nr / nb;
    wins += le >= 1.0 ? 1 : 0;
    std::string extra;
    for (double frac : {0.97, 0.99, 1.0}) {
      const double a = reach_or_inf(ex.runs.at("random").at(seed), frac * full);
      const double b = reach_or_inf(ex.runs.at("bald").at(seed), frac * full);
      extra += fmt("; at %.2f x full: n_random %.0f, n_bald %.0f, LE %.3f", frac, a, b, a / b);
    }
    d.push_back(fmt("seed %llu: full %.4f, level %.4f, n_random %.1f, n_bald %.1f, LE %.3f%s",
                    static_cast<unsigned long long>(seed), full, level, nr, nb, le, extra.c_str()));
  }
  const double minutes = (ex.cell_seconds.at("random") + ex.cell_seconds.at("bald")) / 60.0;
  d.push_back(fmt("random and bald runs took %.1f min in total (limit 20 min)", minutes));
  bool degenerate = true;
  for (auto seed : ex.seeds) {
    const auto& r = ex.runs.at("random").at(seed).steps.front();
    degenerate = degenerate && r.test_miou >= 0.9 * full_pool_miou(ex, seed);
  }
  if (degenerate)
    d.push_back("note: every seed already exceeds 90% of full-pool mIoU on the shared 24-sample initial set, so "
                "LE = 1.0 holds trivially at this level; the higher levels above carry the comparison");
  report(8, "experiment A: BALD LE >= 1 vs random at 90% of full-pool mIoU in >= 4 of 5 seeds", wins >= 4 && minutes < 20.0,
         [&] {
           d.insert(d.begin(), fmt("LE >= 1.0 in %d of %zu seeds", wins, ex.seeds.size()));
           return d;
         }());
}

void criterion_9(const Experiment& ex) {
  int within = 0;
  double sum_da = 0.0, sum_plain = 0.0;
  std::vector<std::string> d;
  for (auto seed : ex.seeds) {
    const double full = full_pool_miou(ex, seed);
    const double level = full - 0.01;
    const double n_da = reach_or_inf(ex.runs.at("bald+da").at(seed), level);
    const double n_plain = reach_or_inf(ex.runs.at("bald").at(seed), level);
    within += n_da <= 480.0 ? 1 : 0;
    sum_da += n_da;
    sum_plain += n_plain;
    const auto& da_rec = ex.runs.at("bald+da").at(seed);
    double best = 0.0;
    for (const auto& s : da_rec.steps) best = std::max(best, s.test_miou);
    d.push_back(fmt("seed %llu: full %.4f, level %.4f, n_bald+da %.1f, n_bald %.1f, best bald+da mIoU %.4f",
                    static_cast<unsigned long long>(seed), full, level, n_da, n_plain, best));
  }
  const double mean_da = sum_da / static_cast<double>(ex.seeds.size());
  const double mean_plain = sum_plain / static_cast<double>(ex.seeds.size());
  const bool ok = within >= 3 && mean_da <= mean_plain;
  d.insert(d.begin(), fmt("bald+da within 0.01 of full-pool mIoU using <= 480 labels in %d of %zu seeds (need 3); "
                          "mean labels bald+da %.1f vs bald %.1f (need <=)",
                          within, ex.seeds.size(), mean_da, mean_plain));
  report(9, "experiment B: BALD+DA within 1 mIoU point of full pool using <= 80% of the pool", ok, d);
}

void criterion_10(const Experiment& ex, const AlDataset& data) {
  int wins = 0;
  std::vector<std::string> d;
  IndexSet universe(data.pool().size());
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  for (auto seed : ex.seeds) {
    const AlConfig cfg = ex.cfg.cell_config({HeuristicKind::BALD, false}, seed);
    const PoolState state = init_pools(universe, cfg.init_size, cfg.seed);
    auto model = make_scorer(data.num_classes(), cfg.scorer);
    std::vector<Sample> labeled;
    for (std::size_t id : state.labeled) labeled.push_back(data.pool_sample(id));
    model->train(labeled, {});
    const TtDaCurves c = analyze_tt_da(*model, state, ex.cfg.da, 0, data, cfg);
    const double l = c.mean_score(TtDaPool::Labeled), tl = c.mean_score(TtDaPool::AugmentedLabeled);
    const double u = c.mean_score(TtDaPool::Unlabeled), tu = c.mean_score(TtDaPool::AugmentedUnlabeled);
    wins += tl > l ? 1 : 0;
    d.push_back(fmt("seed %llu: a(L) %.3f, a(TT-DA(L)) %.3f, a(U) %.3f, a(TT-DA(U)) %.3f (|TT-DA(U)| = %zu)",
                    static_cast<unsigned long long>(seed), l, tl, u, tu, c.curve(TtDaPool::AugmentedUnlabeled).size()));
  }
  d.insert(d.begin(), fmt("a(TT-DA(L)) > a(L) in %d of %zu seeds (need 4)", wins, ex.seeds.size()));
  report(10, "experiment C: test-time augmentation raises mean BALD of L at step 0", wins >= 4, d);
}

void criterion_11(const Experiment& ex) {
  int both = 0, var_wins = 0, bald_wins = 0;
  std::vector<std::string> d;
  for (auto seed : ex.seeds) {
    const StepRecord& da = ex.runs.at("bald+da").at(seed).steps.back();
    const StepRecord& plain = ex.runs.at("bald").at(seed).steps.back();
    const bool v = da.mean_variance < plain.mean_variance, b = da.mean_bald < plain.mean_bald;
    var_wins += v ? 1 : 0;
    bald_wins += b ? 1 : 0;
    both += v && b ? 1 : 0;
    d.push_back(fmt("seed %llu (|L| = %zu): variance DA %.3e vs no-DA %.3e; BALD DA %.3e vs no-DA %.3e",
                    static_cast<unsigned long long>(seed), da.n_labeled, da.mean_variance, plain.mean_variance,
                    da.mean_bald, plain.mean_bald));
  }
  d.insert(d.begin(), fmt("both lower with DA in %d of %zu seeds (variance %d, BALD %d; need 3)", both, ex.seeds.size(),
                          var_wins, bald_wins));
  report(11, "experiment D: DA lowers final-step test variance and BALD", both >= 3, d);
}

void criterion_13(const Experiment& ex, const fs::path& out) {
  std::mt19937_64 gen(1313);
  int tensor_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = oracle::random_tensor(gen, 1 + trial % 16, 1 + trial % 9, 2 + trial % 4, 1 + trial % 8);
    store_tensor(t, out / "roundtrip.mcpt");
    const auto back = load_external_tensor(out / "roundtrip.mcpt");
    tensor_failures += (back == t && encode_tensor(back) == encode_tensor(t)) ? 0 : 1;
  }
  const RangeImage img = project(generate_scene(ex.cfg.synth, 0), ex.cfg.al.sensor);
  store_range_image(img, out / "roundtrip_image.mcpt");
  const bool image_ok = load_range_image(out / "roundtrip_image.mcpt") == img;

  double worst = 0.0;
  std::size_t records = 0;
  bool config_ok = true, structure_ok = true;
  for (const auto& [id, by_seed] : ex.runs) {
    for (const auto& [seed, rec] : by_seed) {
      const AlRunRecord back = read_run_record(record_path(out, id, seed));
      ++records;
      config_ok = config_ok && back.config == rec.config;
      structure_ok = structure_ok && back.steps.size() == rec.steps.size();
      for (std::size_t k = 0; k < std::min(back.steps.size(), rec.steps.size()); ++k) {
        const StepRecord& a = rec.steps[k];
        const StepRecord& b = back.steps[k];
        structure_ok = structure_ok && a.selected == b.selected && a.n_labeled == b.n_labeled &&
                       a.scores.size() == b.scores.size();
        for (double diff : {a.test_miou - b.test_miou, a.mean_variance - b.mean_variance, a.mean_bald - b.mean_bald,
                            a.train_miou - b.train_miou, a.wall_seconds - b.wall_seconds})
          worst = std::max(worst, std::abs(diff));
        for (std::size_t i = 0; i < std::min(a.scores.size(), b.scores.size()); ++i)
          worst = std::max(worst, std::abs(a.scores[i].score - b.scores[i].score));
      }
    }
  }
  const auto rows = read_curves_csv(out / "curves.csv");
  const bool ok = tensor_failures == 0 && image_ok && worst <= 1e-12 && config_ok && structure_ok && !rows.empty();
  report(13, "format round trips", ok,
         {fmt("100 random MCPT probability tensors: %d not bit-exact; range image (MCPT v2): %s", tensor_failures,
              image_ok ? "bit-exact" : "DIFFERS"),
          fmt("%zu run records with scores and timing: max abs numeric difference %.3e (limit 1e-12), config %s, "
              "ids and counts %s",
              records, worst, config_ok ? "identical" : "DIFFERS", structure_ok ? "identical" : "DIFFER")});
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(out);
  const auto t0 = Clock::now();
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_7();
    criterion_12();

    Experiment ex;
    ex.cfg = desk_scale_config();
    ex.cfg.matrix = {{HeuristicKind::Random, false}, {HeuristicKind::BALD, false}, {HeuristicKind::BALD, true}};
    ex.seeds = {0, 1, 2, 3, 4};
    std::printf("  .. building the synthetic desk-scale dataset (pool %zu, test %zu, %dx%d)\n", ex.cfg.al.pool_size,
                ex.cfg.al.test_size, ex.cfg.al.sensor.width, ex.cfg.al.sensor.height);
    std::fflush(stdout);
    const AlDataset data = build_dataset(ex.cfg);
    run_experiments(ex, data, out);

    criterion_6(ex, data, out);
    criterion_8(ex);
    criterion_9(ex);
    criterion_10(ex, data);
    criterion_11(ex);
    criterion_13(ex, out);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 2;
  }

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  int failed = 0;
  std::printf("\nsummary (%.1f min, outputs in %s)\n", seconds_since(t0) / 60.0, out.string().c_str());
  for (const auto& v : verdicts) {
    std::printf("  %s %2d %s\n", v.pass ? "PASS" : "FAIL", v.id, v.name.c_str());
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
