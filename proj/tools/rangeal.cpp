#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "rangeal/config.hpp"
#include "rangeal/error.hpp"
#include "rangeal/metrics.hpp"
#include "rangeal/run_record.hpp"
#include "rangeal/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace rangeal;

namespace {

struct ConfigOptions {
  std::string config;
  bool desk_scale = false;
  std::string manifest;
  std::string label_map;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config, "Flat key = value configuration file");
    cmd.add_flag("--desk-scale", desk_scale, "Start from the reduced desk preset (pool 600, test 200, budget 24, init 24, 25 steps, T=8)");
    cmd.add_option("--manifest", manifest, "Dataset manifest (scan<TAB>label per line); implies dataset = manifest");
    cmd.add_option("--label-map", label_map, "Raw-to-train label map used with --manifest");
  }

  ExperimentConfig resolve() const {
    for (const auto& p : {config, manifest, label_map})
      if (!p.empty() && !fs::exists(p)) throw Error(Errc::BadConfig, "no such file: " + p);
    ExperimentConfig cfg = desk_scale ? desk_scale_config() : default_config();
    if (!config.empty()) cfg = load_config(config, cfg);
    if (!manifest.empty()) {
      cfg.source = DatasetSource::Manifest;
      cfg.manifest = manifest;
    }
    if (!label_map.empty()) cfg.label_map = label_map;
    if (cfg.source == DatasetSource::Manifest) {
      if (cfg.manifest.empty() || !fs::exists(cfg.manifest))
        throw Error(Errc::BadConfig, "dataset = manifest needs an existing manifest");
      if (cfg.label_map.empty() || !fs::exists(cfg.label_map))
        throw Error(Errc::BadConfig, "dataset = manifest needs an existing label map");
    }
    return cfg;
  }
};

std::string file_safe(std::string id) {
  for (char& c : id)
    if (c == '/' || c == '+') c = c == '/' ? '_' : '-';
  return id;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
  std::vector<std::string> scans;
  std::string out;
  std::string label_map;
  int classes = 4;
  int width = 1024;
  int height = 64;
  double fov_up = 3.0;
  double fov_down = 25.0;
  bool no_labels = false;
};

int cmd_project(const ProjectArgs& a) {
  SensorConfig sensor;
  sensor.width = a.width;
  sensor.height = a.height;
  sensor.fov_up = deg_to_rad(a.fov_up);
  sensor.fov_down = deg_to_rad(a.fov_down);
  sensor.validate();
  const LabelMap map = a.label_map.empty() ? LabelMap::identity(a.classes) : LabelMap::load(a.label_map);
  fs::create_directories(a.out);

  int failures = 0;
  for (const auto& scan : a.scans) {
    try {
      fs::path label = fs::path(scan).replace_extension(".label");
      if (a.no_labels || !fs::exists(label)) label.clear();
      std::size_t unknown = 0;
      const PointCloud cloud = load_point_cloud(scan, label, map, &unknown);
      const RangeImage img = project(cloud, sensor);
      const fs::path dst = fs::path(a.out) / fs::path(scan).filename().replace_extension(".mcpt");
      store_range_image(img, dst);
      std::printf("%s -> %s points=%zu valid_fraction=%.6f", scan.c_str(), dst.c_str(), cloud.points.size(),
                  valid_fraction(img));
      if (unknown) std::printf(" unknown_labels=%zu", unknown);
      std::printf("\n");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s: %s\n", scan.c_str(), e.what());
      ++failures;
    }
  }
  return failures ? 1 : 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  ConfigOptions cfg;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> matrix;
  bool checkpoints = false;
};

struct Job {
  MatrixCell cell;
  std::uint64_t seed = 0;
  std::string curve_id;
  bool ok = false;
  std::string error;
  AlRunRecord record;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = a.cfg.resolve();
  if (const auto env = env_seed_override()) {
    cfg.al.seed = *env;
    cfg.seeds.clear();
  }
  if (a.seed) {
    cfg.al.seed = *a.seed;
    cfg.seeds.clear();
  }
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  if (a.matrix) cfg = parse_config("matrix = " + *a.matrix, cfg);

  const auto seeds = cfg.run_seeds();
  std::vector<Job> jobs;
  for (const auto& cell : cfg.matrix)
    for (auto s : seeds)
      jobs.push_back({cell, s, seeds.size() == 1 ? cell.id() : cell.id() + "/seed" + std::to_string(s)});
  if (jobs.empty()) {
    std::printf("empty matrix, nothing to run\n");
    return 0;
  }

  fs::create_directories(a.out);
  std::printf("building dataset: pool %zu, test %zu\n", cfg.al.pool_size, cfg.al.test_size);
  std::fflush(stdout);
  const AlDataset data = build_dataset(cfg);

  std::mutex io;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      Job& job = jobs[k];
      try {
        RunOptions options;
        options.on_step = [&](const StepRecord& s) {
          std::lock_guard lock(io);
          std::printf("[%s] step %zu |L|=%zu miou=%.4f wall=%.2fs\n", job.curve_id.c_str(), s.step, s.n_labeled,
                      s.test_miou, s.wall_seconds);
          std::fflush(stdout);
        };
        if (a.checkpoints) options.checkpoint_dir = fs::path(a.out) / (file_safe(job.curve_id) + "_ckpt");
        job.record = run(cfg.cell_config(job.cell, job.seed), data, options);
        write_run_record(job.record, fs::path(a.out) / (file_safe(job.curve_id) + ".csv"));
        job.ok = true;
      } catch (const std::exception& e) {
        job.error = e.what();
        std::lock_guard lock(io);
        std::fprintf(stderr, "error: cell %s: %s\n", job.curve_id.c_str(), e.what());
      }
    }
  };
  const int threads = std::max(1, std::min<int>(a.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<CurveRow> rows;
  std::vector<std::string> failed;
  for (const auto& job : jobs) {
    if (!job.ok) {
      failed.push_back(job.curve_id);
      continue;
    }
    for (const auto& p : curve_of(job.record).points)
      rows.push_back({job.curve_id, std::string(heuristic_name(job.cell.heuristic)), job.cell.da, p.n_labeled, p.miou});
  }
  write_curves_csv(rows, fs::path(a.out) / "curves.csv");
  std::printf("%zu of %zu cells completed", jobs.size() - failed.size(), jobs.size());
  if (!failed.empty()) {
    std::printf("; failed:");
    for (const auto& f : failed) std::printf(" %s", f.c_str());
  }
  std::printf("\n");
  return failed.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- le

int cmd_le(const std::string& curves, const std::string& baseline, const std::vector<double>& levels,
           const std::string& out) {
  const auto rows = read_curves_csv(curves);
  const auto table = labeling_efficiency_table(rows, baseline, levels);
  write_le_csv(table, out);
  for (const auto& r : table) {
    if (r.reachable)
      std::printf("%s level=%.4f le=%.4f\n", r.curve_id.c_str(), r.level, r.le);
    else
      std::printf("%s level=%.4f unreachable\n", r.curve_id.c_str(), r.level);
  }
  return 0;
}

// ---------------------------------------------------------------- ttda

struct TtDaArgs {
  ConfigOptions cfg;
  std::string checkpoint;
  std::string pools;
  std::string out;
  std::size_t step = 0;
  std::uint64_t seed = 0;
  bool identity_da = false;
};

int cmd_ttda(const TtDaArgs& a) {
  ExperimentConfig cfg = a.cfg.resolve();
  const LinearSoftmaxScorer model = LinearSoftmaxScorer::load(a.checkpoint);
  const PoolState state = load_pools(a.pools);
  AlConfig al = cfg.al;
  al.seed = a.seed;
  std::vector<AugmentationSpec> da = cfg.da;
  if (a.identity_da)
    for (auto& s : da) s = AugmentationSpec::identity(s.kind);
  const AlDataset data = build_dataset(cfg);
  if (state.universe.size() != data.pool().size())
    throw Error(Errc::BadParam, "pool file does not match the dataset size");

  const TtDaCurves curves = analyze_tt_da(model, state, da, a.step, data, al);
  fs::create_directories(a.out);
  for (int p = 0; p < 4; ++p) {
    const auto pool = static_cast<TtDaPool>(p);
    const fs::path dst = fs::path(a.out) / (std::string(kTtDaPoolNames[p]) + ".csv");
    write_score_curve_csv(curves.curve(pool), curves.budget, dst);
    std::printf("%-6s n=%zu mean=%.6g -> %s\n", kTtDaPoolNames[p], curves.curve(pool).size(), curves.mean_score(pool),
                dst.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- tensor-check

int cmd_tensor_check(const std::vector<std::string>& files) {
  int failures = 0;
  for (const auto& f : files) {
    try {
      const auto bytes = read_file_bytes(f);
      const TensorHeader h = decode_header(bytes);
      if (h.version == kTensorVersionProbs)
        decode_tensor(bytes).validate();
      else
        decode_range_image(bytes);
      std::printf("ok %s version=%u W=%u H=%u C=%u T=%u\n", f.c_str(), h.version, h.width, h.height, h.classes,
                  h.iterations);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s: %s\n", f.c_str(), e.what());
      ++failures;
    }
  }
  return failures ? 1 : 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const ConfigOptions& opts, const std::string& out, std::size_t count) {
  const ExperimentConfig cfg = opts.resolve();
  const DatasetManifest m = write_synthetic_dataset(out, cfg.synth, count);
  std::FILE* f = std::fopen((fs::path(out) / "label_map.txt").c_str(), "w");
  if (!f) throw Error(Errc::StorageError, "cannot write label map");
  for (int c = 0; c < cfg.synth.classes; ++c) std::fprintf(f, "%d %d\n", c, c);
  std::fclose(f);
  std::printf("wrote %zu scans to %s\n", m.entries.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning for range-image semantic segmentation"};
  app.require_subcommand(1);

  ProjectArgs project_args;
  auto* project = app.add_subcommand("project", "Project scans to range images (MCPT version 2 files)");
  project->add_option("scans", project_args.scans, "Scan files (float32 x, y, z, remission)")->required();
  project->add_option("--out", project_args.out, "Output directory")->required();
  project->add_option("--label-map", project_args.label_map, "Raw-to-train label map; identity over --classes otherwise");
  project->add_option("--classes", project_args.classes, "Class count of the identity label map")->capture_default_str();
  project->add_option("--width", project_args.width, "Range image width")->capture_default_str();
  project->add_option("--height", project_args.height, "Range image height")->capture_default_str();
  project->add_option("--fov-up", project_args.fov_up, "Field of view above the horizon, degrees")->capture_default_str();
  project->add_option("--fov-down", project_args.fov_down, "Field of view below the horizon, degrees")->capture_default_str();
  project->add_flag("--no-labels", project_args.no_labels, "Ignore <scan>.label files next to the scans");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run every (heuristic, DA) cell of the experiment matrix");
  run_args.cfg.add_to(*run_cmd);
  run_cmd->add_option("--out", run_args.out, "Output directory for run records and curves.csv")->required();
  run_cmd->add_option("--jobs", run_args.jobs, "Cells run concurrently")->capture_default_str();
  run_cmd->add_option("--seed", run_args.seed, "Run seed (overrides the config and RANGE_AL_SEED)");
  run_cmd->add_option("--seeds", run_args.seeds, "One run per cell and seed")->delimiter(',');
  run_cmd->add_option("--matrix", run_args.matrix, "Cells, e.g. \"random,bald,bald+da\"");
  run_cmd->add_flag("--checkpoints", run_args.checkpoints, "Save the model and pools of every step");

  std::string le_curves, le_baseline, le_out;
  std::vector<double> le_levels;
  auto* le = app.add_subcommand("le", "Labeling efficiency of every curve against a baseline curve");
  le->add_option("--curves", le_curves, "Curves CSV written by run")->required()->check(CLI::ExistingFile);
  le->add_option("--baseline", le_baseline, "Baseline curve id, e.g. random")->required();
  le->add_option("--levels", le_levels, "mIoU levels")->required()->delimiter(',');
  le->add_option("--out", le_out, "Output CSV")->required();

  TtDaArgs ttda_args;
  auto* ttda = app.add_subcommand("ttda", "Aggregated BALD scores of L, U and their test-time augmented copies");
  ttda_args.cfg.add_to(*ttda);
  ttda->add_option("--checkpoint", ttda_args.checkpoint, "Model checkpoint (step_<k>.model)")->required()->check(CLI::ExistingFile);
  ttda->add_option("--pools", ttda_args.pools, "Pool file (step_<k>.pools)")->required()->check(CLI::ExistingFile);
  ttda->add_option("--out", ttda_args.out, "Output directory for L.csv, U.csv, TTDA_L.csv, TTDA_U.csv")->required();
  ttda->add_option("--step", ttda_args.step, "AL step, keys the MC and augmentation streams")->capture_default_str();
  ttda->add_option("--seed", ttda_args.seed, "Run seed")->capture_default_str();
  ttda->add_flag("--identity-da", ttda_args.identity_da, "Replace every augmentation by its no-op parameters");

  std::vector<std::string> check_files;
  auto* check = app.add_subcommand("tensor-check", "Validate MCPT files");
  check->add_option("files", check_files, "MCPT files")->required();

  ConfigOptions synth_cfg;
  std::string synth_out;
  std::size_t synth_count = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (scans, labels, manifest, label map)");
  synth_cfg.add_to(*synth);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of scans")->required()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (project->parsed()) return cmd_project(project_args);
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (le->parsed()) return cmd_le(le_curves, le_baseline, le_levels, le_out);
    if (ttda->parsed()) return cmd_ttda(ttda_args);
    if (check->parsed()) return cmd_tensor_check(check_files);
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out, synth_count);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(errc_name(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
