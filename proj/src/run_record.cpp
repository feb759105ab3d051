#include "rangeal/run_record.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "rangeal/error.hpp"

namespace rangeal {

using nlohmann::json;

namespace {

constexpr const char* kRunHeader = "step,n_labeled,test_miou,mean_variance,mean_bald,train_iterations,train_miou,selected";
constexpr const char* kScoresHeader = "step,sample_id,heuristic,aggregated_score";
constexpr const char* kTimingHeader = "step,wall_seconds";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw Error(Errc::StorageError, "bad number '" + s + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(Errc::StorageError, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::StorageError, "cannot open " + path.string());
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::StorageError, "write failed on " + path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  return std::filesystem::path(p.string() + suffix);
}

json to_json(const AugmentationSpec& s) {
  return json{{"kind", augmentation_name(s.kind)},
              {"range_lo", s.range_lo},
              {"range_hi", s.range_hi},
              {"coarse",
               {s.coarse.min_holes, s.coarse.max_holes, s.coarse.min_height, s.coarse.max_height, s.coarse.min_width,
                s.coarse.max_width}},
              {"classes", s.classes},
              {"noise_is_variance", s.noise_is_variance},
              {"probability", s.probability},
              {"override_bounds", s.override_bounds}};
}

AugmentationSpec augmentation_from_json(const json& j) {
  const auto kind = parse_augmentation(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::BadConfig, "unknown augmentation " + j.at("kind").get<std::string>());
  AugmentationSpec s;
  s.kind = *kind;
  s.range_lo = j.at("range_lo").get<double>();
  s.range_hi = j.at("range_hi").get<double>();
  const auto c = j.at("coarse").get<std::vector<int>>();
  if (c.size() != 6) throw Error(Errc::BadConfig, "coarse dropout needs six integers");
  s.coarse = {c[0], c[1], c[2], c[3], c[4], c[5]};
  s.classes = j.at("classes").get<std::vector<ClassId>>();
  s.noise_is_variance = j.at("noise_is_variance").get<bool>();
  s.probability = j.at("probability").get<double>();
  s.override_bounds = j.at("override_bounds").get<bool>();
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json to_json(const AlConfig& cfg) {
  const TrainConfig& t = cfg.scorer.train;
  json da = json::array();
  for (const auto& s : cfg.da) da.push_back(to_json(s));
  return json{
      {"init_set_size", cfg.init_size},
      {"budget", cfg.budget},
      {"al_steps", cfg.steps},
      {"heuristic", heuristic_name(cfg.heuristic)},
      {"aggregation", cfg.aggregation == Aggregation::Sum ? "sum" : "mean"},
      {"seed", cfg.seed},
      {"total_pool_size", cfg.pool_size},
      {"test_pool_size", cfg.test_size},
      {"sensor",
       {{"width", cfg.sensor.width}, {"height", cfg.sensor.height}, {"fov_up", cfg.sensor.fov_up}, {"fov_down", cfg.sensor.fov_down}}},
      {"scorer",
       {{"kind", cfg.scorer.kind == ScorerKind::Builtin ? "builtin" : "external"},
        {"mc_iterations", cfg.scorer.mc_iterations},
        {"mc_dropout", cfg.scorer.dropout_rate},
        {"seed", cfg.scorer.seed},
        {"external_dir", cfg.scorer.external_dir.string()},
        {"max_train_iterations", t.max_iterations},
        {"learning_rate", t.learning_rate},
        {"lr_decay", t.lr_decay},
        {"weight_decay", t.weight_decay},
        {"batch_size", t.batch_size},
        {"evaluation_period", t.eval_period},
        {"patience", t.patience},
        {"early_stopping_metric", t.early_stop_metric},
        {"pixels_per_image", t.pixels_per_image},
        {"eval_images", t.eval_images}}},
      {"da", da},
  };
}

AlConfig al_config_from_json(const json& j) {
  try {
    AlConfig cfg;
    cfg.init_size = j.at("init_set_size").get<std::size_t>();
    cfg.budget = j.at("budget").get<std::size_t>();
    cfg.steps = j.at("al_steps").get<std::size_t>();
    const auto h = parse_heuristic(j.at("heuristic").get<std::string>());
    if (!h) throw Error(Errc::BadConfig, "unknown heuristic");
    cfg.heuristic = *h;
    cfg.aggregation = j.at("aggregation").get<std::string>() == "mean" ? Aggregation::Mean : Aggregation::Sum;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.pool_size = j.at("total_pool_size").get<std::size_t>();
    cfg.test_size = j.at("test_pool_size").get<std::size_t>();
    const json& s = j.at("sensor");
    cfg.sensor.width = s.at("width").get<int>();
    cfg.sensor.height = s.at("height").get<int>();
    cfg.sensor.fov_up = s.at("fov_up").get<double>();
    cfg.sensor.fov_down = s.at("fov_down").get<double>();
    const json& sc = j.at("scorer");
    cfg.scorer.kind = sc.at("kind").get<std::string>() == "external" ? ScorerKind::External : ScorerKind::Builtin;
    cfg.scorer.mc_iterations = sc.at("mc_iterations").get<int>();
    cfg.scorer.dropout_rate = sc.at("mc_dropout").get<double>();
    cfg.scorer.seed = sc.at("seed").get<std::uint64_t>();
    cfg.scorer.external_dir = sc.at("external_dir").get<std::string>();
    TrainConfig& t = cfg.scorer.train;
    t.max_iterations = sc.at("max_train_iterations").get<int>();
    t.learning_rate = sc.at("learning_rate").get<double>();
    t.lr_decay = sc.at("lr_decay").get<double>();
    t.weight_decay = sc.at("weight_decay").get<double>();
    t.batch_size = sc.at("batch_size").get<int>();
    t.eval_period = sc.at("evaluation_period").get<int>();
    t.patience = sc.at("patience").get<int>();
    t.early_stop_metric = sc.at("early_stopping_metric").get<std::string>();
    t.pixels_per_image = sc.at("pixels_per_image").get<int>();
    t.eval_images = sc.at("eval_images").get<int>();
    for (const auto& d : j.at("da")) cfg.da.push_back(augmentation_from_json(d));
    return cfg;
  } catch (const json::exception& e) {
    throw Error(Errc::BadConfig, std::string("bad run config: ") + e.what());
  }
}

void write_run_record(const AlRunRecord& record, const std::filesystem::path& path) {
  {
    auto out = open_out(path);
    out << kRunHeader << '\n';
    for (const auto& s : record.steps) {
      out << s.step << ',' << s.n_labeled << ',' << format_double(s.test_miou) << ',' << format_double(s.mean_variance)
          << ',' << format_double(s.mean_bald) << ',' << s.train_iterations << ',' << format_double(s.train_miou) << ',';
      for (std::size_t k = 0; k < s.selected.size(); ++k) out << (k ? ";" : "") << s.selected[k];
      out << '\n';
    }
    finish(out, path);
  }
  {
    const auto p = with_suffix(path, ".json");
    auto out = open_out(p);
    out << to_json(record.config).dump(2) << '\n';
    finish(out, p);
  }
  {
    const auto p = with_suffix(path, ".scores.csv");
    auto out = open_out(p);
    out << kScoresHeader << '\n';
    const auto name = heuristic_name(record.config.heuristic);
    for (const auto& s : record.steps)
      for (const auto& sc : s.scores) out << s.step << ',' << sc.sample_id << ',' << name << ',' << format_double(sc.score) << '\n';
    finish(out, p);
  }
  {
    const auto p = with_suffix(path, ".timing.csv");
    auto out = open_out(p);
    out << kTimingHeader << '\n';
    for (const auto& s : record.steps) out << s.step << ',' << format_double(s.wall_seconds) << '\n';
    finish(out, p);
  }
}

AlRunRecord read_run_record(const std::filesystem::path& path) {
  AlRunRecord record;
  {
    auto in = open_in(with_suffix(path, ".json"));
    try {
      record.config = al_config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw Error(Errc::StorageError, std::string("bad config sidecar: ") + e.what());
    }
  }
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kRunHeader) throw Error(Errc::StorageError, "unexpected run record header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw Error(Errc::StorageError, "malformed run record row: " + line);
    StepRecord s;
    s.step = std::stoull(f[0]);
    s.n_labeled = std::stoull(f[1]);
    s.test_miou = parse_double(f[2]);
    s.mean_variance = parse_double(f[3]);
    s.mean_bald = parse_double(f[4]);
    s.train_iterations = std::stoi(f[5]);
    s.train_miou = parse_double(f[6]);
    for (const auto& id : split(f[7], ';'))
      if (!id.empty()) s.selected.push_back(std::stoull(id));
    record.steps.push_back(std::move(s));
  }
  std::map<std::size_t, StepRecord*> by_step;
  for (auto& s : record.steps) by_step[s.step] = &s;

  if (std::filesystem::exists(with_suffix(path, ".scores.csv"))) {
    auto sin = open_in(with_suffix(path, ".scores.csv"));
    std::getline(sin, line);
    while (std::getline(sin, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 4) throw Error(Errc::StorageError, "malformed score row: " + line);
      if (auto it = by_step.find(std::stoull(f[0])); it != by_step.end())
        it->second->scores.push_back({std::stoull(f[1]), parse_double(f[3])});
    }
  }
  if (std::filesystem::exists(with_suffix(path, ".timing.csv"))) {
    auto tin = open_in(with_suffix(path, ".timing.csv"));
    std::getline(tin, line);
    while (std::getline(tin, line)) {
      const auto f = split(line, ',');
      if (f.size() != 2) continue;
      if (auto it = by_step.find(std::stoull(f[0])); it != by_step.end()) it->second->wall_seconds = parse_double(f[1]);
    }
  }
  return record;
}

LearningCurve curve_of(const AlRunRecord& record) {
  LearningCurve c;
  for (const auto& s : record.steps) c.points.push_back({static_cast<double>(s.n_labeled), s.test_miou});
  return c;
}

void write_curves_csv(const std::vector<CurveRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "curve_id,heuristic,da_flag,n_labeled,miou\n";
  for (const auto& r : rows)
    out << r.curve_id << ',' << r.heuristic << ',' << (r.da ? 1 : 0) << ',' << format_double(r.n_labeled) << ','
        << format_double(r.miou) << '\n';
  finish(out, path);
}

std::vector<CurveRow> read_curves_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw Error(Errc::StorageError, "malformed curve row: " + line);
    rows.push_back({f[0], f[1], f[2] == "1", parse_double(f[3]), parse_double(f[4])});
  }
  return rows;
}

void write_le_csv(const std::vector<LeRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "curve_id,heuristic,level,reachable,le,le_inverse\n";
  for (const auto& r : rows) {
    out << r.curve_id << ',' << r.heuristic << ',' << format_double(r.level) << ',' << (r.reachable ? 1 : 0) << ',';
    if (r.reachable)
      out << format_double(r.le) << ',' << format_double(r.le_inverse);
    else
      out << "nan,nan";
    out << '\n';
  }
  finish(out, path);
}

std::vector<LeRow> labeling_efficiency_table(const std::vector<CurveRow>& rows, const std::string& baseline_id,
                                             const std::vector<double>& levels) {
  std::map<std::string, LearningCurve> curves;
  std::map<std::string, std::string> heuristics;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!curves.count(r.curve_id)) order.push_back(r.curve_id);
    curves[r.curve_id].points.push_back({r.n_labeled, r.miou});
    heuristics[r.curve_id] = r.heuristic;
  }
  const auto base = curves.find(baseline_id);
  if (base == curves.end()) throw Error(Errc::BadParam, "baseline curve '" + baseline_id + "' not found");
  std::vector<LeRow> out;
  for (const auto& id : order) {
    for (double level : levels) {
      LeRow row{id, heuristics[id], level, false, 0.0, 0.0};
      try {
        const double nb = labels_to_reach(base->second, level);
        const double no = labels_to_reach(curves[id], level);
        row.reachable = true;
        row.le = nb / no;
        row.le_inverse = no / nb;
      } catch (const Error& e) {
        if (e.code() != Errc::LevelUnreachable) throw;
      }
      out.push_back(row);
    }
  }
  return out;
}

void write_score_curve_csv(const std::vector<SampleScore>& curve, std::size_t budget, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "rank,sample_id,score,within_budget\n";
  for (std::size_t k = 0; k < curve.size(); ++k)
    out << k << ',' << curve[k].sample_id << ',' << format_double(curve[k].score) << ',' << (k < budget ? 1 : 0) << '\n';
  finish(out, path);
}

}  // namespace rangeal
