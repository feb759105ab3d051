#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rangeal/al_loop.hpp"
#include "rangeal/metrics.hpp"
#include "json.hpp"

namespace rangeal {

/// Decimal form with 17 significant digits; parses back to the same double.
std::string format_double(double v);

nlohmann::json to_json(const AlConfig& cfg);
AlConfig al_config_from_json(const nlohmann::json& j);

/// Writes `<path>` (one row per step), `<path>.json` (resolved config),
/// `<path>.scores.csv` (per-sample aggregated scores) and `<path>.timing.csv`
/// (wall times, kept apart so the main CSV is reproducible byte for byte).
void write_run_record(const AlRunRecord& record, const std::filesystem::path& path);
AlRunRecord read_run_record(const std::filesystem::path& path);

/// Learning curve from a run: (|L|, test mIoU) per step.
LearningCurve curve_of(const AlRunRecord& record);

struct CurveRow {
  std::string curve_id;  // e.g. "bald" or "bald+da/seed3"
  std::string heuristic;
  bool da = false;
  double n_labeled = 0.0;
  double miou = 0.0;
};

/// Columns: curve_id,heuristic,da_flag,n_labeled,miou
void write_curves_csv(const std::vector<CurveRow>& rows, const std::filesystem::path& path);
std::vector<CurveRow> read_curves_csv(const std::filesystem::path& path);

struct LeRow {
  std::string curve_id;
  std::string heuristic;
  double level = 0.0;
  bool reachable = false;
  double le = 0.0;          // n_baseline / n_other
  double le_inverse = 0.0;  // n_other / n_baseline
};

/// Columns: curve_id,heuristic,level,reachable,le,le_inverse
void write_le_csv(const std::vector<LeRow>& rows, const std::filesystem::path& path);

/// LE of every curve in `rows` against `baseline_id` at each level; unreachable levels are flagged.
std::vector<LeRow> labeling_efficiency_table(const std::vector<CurveRow>& rows, const std::string& baseline_id,
                                             const std::vector<double>& levels);

/// Columns: rank,sample_id,score,within_budget
void write_score_curve_csv(const std::vector<SampleScore>& curve, std::size_t budget, const std::filesystem::path& path);

}  // namespace rangeal
