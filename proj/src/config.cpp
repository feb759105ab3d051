#include "rangeal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "rangeal/error.hpp"

namespace rangeal {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(Errc::BadConfig, key + " = '" + value + "': " + why);
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "expected an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) bad(key, v, "expected a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  bad(key, v, "expected a boolean");
}

std::pair<double, double> parse_range(const std::string& key, const std::string& v) {
  const auto parts = split_list(v, ':');
  if (parts.size() == 1) {
    const double x = parse_real(key, parts[0]);
    return {x, x};
  }
  if (parts.size() != 2) bad(key, v, "expected lo:hi");
  return {parse_real(key, parts[0]), parse_real(key, parts[1])};
}

HeuristicKind heuristic_of(const std::string& key, const std::string& v) {
  const auto h = parse_heuristic(v);
  if (!h) bad(key, v, "unknown heuristic");
  return *h;
}

AugmentationSpec* find_da(std::vector<AugmentationSpec>& da, AugmentationKind kind) {
  for (auto& s : da)
    if (s.kind == kind) return &s;
  return nullptr;
}

void apply_da_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  // da.<kind>.<field>
  const auto parts = split_list(key, '.');
  if (parts.size() != 3) bad(key, value, "expected da.<kind>.<field>");
  const auto kind = parse_augmentation(parts[1]);
  if (!kind) bad(key, value, "unknown augmentation");
  AugmentationSpec* s = find_da(cfg.da, *kind);
  if (!s) {
    cfg.da.push_back(AugmentationSpec::defaults(*kind));
    s = &cfg.da.back();
  }
  const std::string& field = parts[2];
  if (field == "range") {
    std::tie(s->range_lo, s->range_hi) = parse_range(key, value);
  } else if (field == "probability") {
    s->probability = parse_real(key, value);
  } else if (field == "noise") {
    if (value == "variance") s->noise_is_variance = true;
    else if (value == "std") s->noise_is_variance = false;
    else bad(key, value, "expected variance or std");
  } else if (field == "override_bounds") {
    s->override_bounds = parse_bool(key, value);
  } else if (field == "classes") {
    s->classes.clear();
    for (const auto& c : split_list(value)) s->classes.push_back(parse_int<ClassId>(key, c));
  } else if (field == "holes" || field == "height" || field == "width") {
    const auto [lo, hi] = parse_range(key, value);
    int* dst = field == "holes" ? &s->coarse.min_holes : field == "height" ? &s->coarse.min_height : &s->coarse.min_width;
    dst[0] = static_cast<int>(lo);
    dst[1] = static_cast<int>(hi);
  } else {
    bad(key, value, "unknown augmentation field");
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"init_set_size", [](auto& c, auto& k, auto& v) { c.al.init_size = parse_int<std::size_t>(k, v); }},
      {"budget", [](auto& c, auto& k, auto& v) { c.al.budget = parse_int<std::size_t>(k, v); }},
      {"al_steps", [](auto& c, auto& k, auto& v) { c.al.steps = parse_int<std::size_t>(k, v); }},
      {"mc_dropout", [](auto& c, auto& k, auto& v) { c.al.scorer.dropout_rate = parse_real(k, v); }},
      {"mc_iterations", [](auto& c, auto& k, auto& v) { c.al.scorer.mc_iterations = parse_int<int>(k, v); }},
      {"aggregation",
       [](auto& c, auto& k, auto& v) {
         if (v == "sum") c.al.aggregation = Aggregation::Sum;
         else if (v == "mean") c.al.aggregation = Aggregation::Mean;
         else bad(k, v, "expected sum or mean");
       }},
      {"heuristic", [](auto& c, auto& k, auto& v) { c.al.heuristic = heuristic_of(k, v); }},
      {"total_pool_size", [](auto& c, auto& k, auto& v) { c.al.pool_size = parse_int<std::size_t>(k, v); }},
      {"test_pool_size", [](auto& c, auto& k, auto& v) { c.al.test_size = parse_int<std::size_t>(k, v); }},
      {"range_image_resolution",
       [](auto& c, auto& k, auto& v) {
         const auto x = v.find('x');
         if (x == std::string::npos) bad(k, v, "expected WxH");
         c.al.sensor.width = parse_int<int>(k, v.substr(0, x));
         c.al.sensor.height = parse_int<int>(k, v.substr(x + 1));
       }},
      {"fov_up", [](auto& c, auto& k, auto& v) { c.al.sensor.fov_up = deg_to_rad(parse_real(k, v)); }},
      {"fov_down", [](auto& c, auto& k, auto& v) { c.al.sensor.fov_down = deg_to_rad(parse_real(k, v)); }},
      {"max_train_iterations", [](auto& c, auto& k, auto& v) { c.al.scorer.train.max_iterations = parse_int<int>(k, v); }},
      {"learning_rate", [](auto& c, auto& k, auto& v) { c.al.scorer.train.learning_rate = parse_real(k, v); }},
      {"lr_decay", [](auto& c, auto& k, auto& v) { c.al.scorer.train.lr_decay = parse_real(k, v); }},
      {"weight_decay", [](auto& c, auto& k, auto& v) { c.al.scorer.train.weight_decay = parse_real(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.al.scorer.train.batch_size = parse_int<int>(k, v); }},
      {"evaluation_period", [](auto& c, auto& k, auto& v) { c.al.scorer.train.eval_period = parse_int<int>(k, v); }},
      {"early_stopping_metric", [](auto& c, auto&, auto& v) { c.al.scorer.train.early_stop_metric = v; }},
      {"patience", [](auto& c, auto& k, auto& v) { c.al.scorer.train.patience = parse_int<int>(k, v); }},
      {"pixels_per_image", [](auto& c, auto& k, auto& v) { c.al.scorer.train.pixels_per_image = parse_int<int>(k, v); }},
      {"eval_images", [](auto& c, auto& k, auto& v) { c.al.scorer.train.eval_images = parse_int<int>(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.al.seed = parse_int<std::uint64_t>(k, v); }},
      {"seeds",
       [](auto& c, auto& k, auto& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(parse_int<std::uint64_t>(k, s));
       }},
      {"scorer",
       [](auto& c, auto& k, auto& v) {
         if (v == "builtin") c.al.scorer.kind = ScorerKind::Builtin;
         else if (v == "external") c.al.scorer.kind = ScorerKind::External;
         else bad(k, v, "expected builtin or external");
       }},
      {"external_dir", [](auto& c, auto&, auto& v) { c.al.scorer.external_dir = v; }},
      {"dataset",
       [](auto& c, auto& k, auto& v) {
         if (v == "synthetic") c.source = DatasetSource::Synthetic;
         else if (v == "manifest") c.source = DatasetSource::Manifest;
         else bad(k, v, "expected synthetic or manifest");
       }},
      {"manifest", [](auto& c, auto&, auto& v) { c.manifest = v; }},
      {"label_map", [](auto& c, auto&, auto& v) { c.label_map = v; }},
      {"strict_labels", [](auto& c, auto& k, auto& v) { c.strict_labels = parse_bool(k, v); }},
      {"synth.classes", [](auto& c, auto& k, auto& v) { c.synth.classes = parse_int<int>(k, v); }},
      {"synth.obstacles",
       [](auto& c, auto& k, auto& v) {
         const auto [lo, hi] = parse_range(k, v);
         c.synth.min_obstacles = static_cast<int>(lo);
         c.synth.max_obstacles = static_cast<int>(hi);
       }},
      {"synth.noise_floor", [](auto& c, auto& k, auto& v) { c.synth.noise_floor = parse_real(k, v); }},
      {"synth.seed", [](auto& c, auto& k, auto& v) { c.synth.seed = parse_int<std::uint64_t>(k, v); }},
      {"synth.variants_per_scene", [](auto& c, auto& k, auto& v) { c.synth.variants_per_scene = parse_int<int>(k, v); }},
      {"synth.wet_fraction", [](auto& c, auto& k, auto& v) { c.synth.wet_fraction = parse_real(k, v); }},
      {"synth.pose_jitter", [](auto& c, auto& k, auto& v) { c.synth.pose_jitter = parse_real(k, v); }},
      {"matrix",
       [](auto& c, auto& k, auto& v) {
         // e.g. "random, bald, bald+da"
         c.matrix.clear();
         for (const auto& item : split_list(v)) {
           MatrixCell cell;
           std::string name = item;
           if (name.size() > 3 && name.ends_with("+da")) {
             cell.da = true;
             name.resize(name.size() - 3);
           }
           cell.heuristic = heuristic_of(k, name);
           c.matrix.push_back(cell);
         }
       }},
      {"da",
       [](auto& c, auto& k, auto& v) {
         std::vector<AugmentationSpec> da;
         for (const auto& name : split_list(v)) {
           const auto kind = parse_augmentation(name);
           if (!kind) bad(k, name, "unknown augmentation");
           const AugmentationSpec* old = find_da(c.da, *kind);
           da.push_back(old ? *old : AugmentationSpec::defaults(*kind));
           if (*kind == AugmentationKind::InstanceCutPaste && da.back().classes.empty())
             da.back().classes = {kSynthVehicle, kSynthPole};
         }
         c.da = std::move(da);
       }},
  };
  return table;
}

}  // namespace

std::string MatrixCell::id() const {
  std::string s(heuristic_name(heuristic));
  if (da) s += "+da";
  return s;
}

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  return seeds.empty() ? std::vector<std::uint64_t>{al.seed} : seeds;
}

AlConfig ExperimentConfig::cell_config(const MatrixCell& cell, std::uint64_t seed) const {
  AlConfig c = al;
  c.heuristic = cell.heuristic;
  c.da = cell.da ? da : std::vector<AugmentationSpec>{};
  c.seed = seed;
  c.scorer.seed = seed;
  return c;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.da = default_augmentations({kSynthVehicle, kSynthPole});
  cfg.matrix = {{HeuristicKind::Random, false}, {HeuristicKind::BALD, false}};
  cfg.synth.beams = cfg.al.sensor;
  return cfg;
}

ExperimentConfig desk_scale_config() {
  ExperimentConfig cfg = default_config();
  cfg.al.pool_size = 600;
  cfg.al.test_size = 200;
  cfg.al.budget = 24;
  cfg.al.init_size = 24;
  cfg.al.steps = 25;
  cfg.al.scorer.mc_iterations = 8;
  cfg.al.sensor.width = 128;
  cfg.al.sensor.height = 16;
  cfg.al.scorer.dropout_rate = 0.05;
  TrainConfig& t = cfg.al.scorer.train;
  t.learning_rate = 2.0;
  t.lr_decay = 0.98;
  t.weight_decay = 1e-4;
  t.batch_size = 8;
  t.max_iterations = 2000;
  t.eval_period = 100;
  t.patience = 6;
  t.pixels_per_image = 128;
  t.eval_images = 48;
  cfg.synth.beams = cfg.al.sensor;
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool sensor_set = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.starts_with("da.")) {
      apply_da_key(cfg, key, value);
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(Errc::BadConfig, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
    if (key == "range_image_resolution" || key == "fov_up" || key == "fov_down") sensor_set = true;
  }
  if (sensor_set) cfg.synth.beams = cfg.al.sensor;
  for (const auto& s : cfg.da) s.validate();
  cfg.al.sensor.validate();
  cfg.al.scorer.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::BadConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::optional<std::uint64_t> env_seed_override() {
  const char* v = std::getenv("RANGE_AL_SEED");
  if (!v || !*v) return std::nullopt;
  return parse_int<std::uint64_t>("RANGE_AL_SEED", v);
}

AlDataset build_dataset(const ExperimentConfig& cfg) {
  std::vector<RangeImage> pool;
  std::vector<RangeImage> test;
  int classes = 0;
  if (cfg.source == DatasetSource::Synthetic) {
    SceneSpec spec = cfg.synth;
    classes = spec.classes;
    const std::size_t v = static_cast<std::size_t>(std::max(1, spec.variants_per_scene));
    const std::size_t test_first = (cfg.al.pool_size + v - 1) / v * v;  // no scene shared with the pool
    for (const auto& cloud : generate_pool(spec, cfg.al.pool_size, 0)) pool.push_back(project(cloud, cfg.al.sensor));
    for (const auto& cloud : generate_pool(spec, cfg.al.test_size, test_first))
      test.push_back(project(cloud, cfg.al.sensor));
  } else {
    const DatasetManifest manifest = DatasetManifest::load(cfg.manifest);
    const LabelMap map = LabelMap::load(cfg.label_map, cfg.strict_labels);
    classes = map.num_classes();
    const PoolSplit split = split_pool(manifest, cfg.al.pool_size, cfg.al.test_size, cfg.al.seed);
    for (std::size_t i : split.pool) {
      const auto& e = manifest.entries[i];
      pool.push_back(project(load_point_cloud(e.scan_path, e.label_path, map), cfg.al.sensor));
    }
    for (std::size_t i : split.test) {
      const auto& e = manifest.entries[i];
      test.push_back(project(load_point_cloud(e.scan_path, e.label_path, map), cfg.al.sensor));
    }
  }
  return AlDataset(std::move(pool), std::move(test), classes);
}

}  // namespace rangeal
