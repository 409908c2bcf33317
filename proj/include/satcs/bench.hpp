#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <tuple>
#include <string>
#include <vector>

#include "satcs/estimators.hpp"
#include "satcs/signal_model.hpp"

namespace satcs {

enum class Axis { measurements, sparsity, noise, saturation };

std::string to_string(Axis a);
Axis axis_from_string(const std::string& s);

enum class LmRule { crossval, discrepancy };

std::string to_string(LmRule r);
LmRule lm_rule_from_string(const std::string& s);

struct SweepSpec {
  Axis axis = Axis::measurements;
  std::vector<double> grid;
  InstanceConfig fixed{};  // n, m, s, f_sat, f_sigma, basis, amplitude
  int trials = 10;
  std::vector<EstimatorKind> estimators{EstimatorKind::LM, EstimatorKind::SR, EstimatorKind::SC, EstimatorKind::SS,
                                        EstimatorKind::SI};
  Seed seed0 = 2021;
  LmRule lm_rule = LmRule::crossval;
  bool timing = false;  // record wall_ms; off keeps records.csv bitwise reproducible
  bool save_instances = false;

  /// The experiment grids: measurements {30..250 step 10}, sparsity
  /// {0.05, 0.1, 0.15, 0.2}, noise {0.01, 0.02, 0.04, ..., 0.2},
  /// saturation {0, 5, ..., 50}/150.
  static SweepSpec defaults(Axis axis);

  void validate() const;
};

/// Instance parameters at one grid point. For the sparsity axis the value is
/// the fraction f_sp and s = round(f_sp n).
InstanceConfig cell_config(const SweepSpec& spec, double axis_value);

/// Seed of the (axis_value, trial) cell, independent of the rest of the grid.
Seed cell_seed(Seed seed0, double axis_value, int trial);

struct SweepRecord {
  Axis axis = Axis::measurements;
  double axis_value = 0;
  EstimatorKind estimator = EstimatorKind::LM;
  int trial = 0;
  Seed seed = 0;
  double rrmse = 0;
  double lambda = 0;
  int iters = 0;
  double wall_ms = 0;
  std::string flag;  // empty when the recovery is usable
};

/// Called after every cell with (done, total).
using Progress = std::function<void(std::size_t, std::size_t)>;

/// One record per grid point x estimator x trial, sorted canonically.
/// Estimator failures become flagged records. When spec.save_instances is
/// set, every synthesised instance is written to instance_dir.
std::vector<SweepRecord> run_sweep(const SweepSpec& spec, const Progress& progress = {},
                                   const std::string& instance_dir = "");

struct SummaryRow {
  Axis axis = Axis::measurements;
  double axis_value = 0;
  EstimatorKind estimator = EstimatorKind::LM;
  int count = 0;    // unflagged records
  int flagged = 0;
  double median = 0, mean = 0, p25 = 0, p75 = 0;
};

/// Linear-interpolated quantile of sorted data, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Per (axis_value, estimator) statistics over unflagged records.
std::vector<SummaryRow> aggregate(const std::vector<SweepRecord>& records);

void sort_records(std::vector<SweepRecord>& records);

inline constexpr const char* kRecordsHeader = "axis,axis_value,estimator,trial,seed,rrmse,lambda,iters,wall_ms,flag";
inline constexpr const char* kSummaryHeader = "axis,axis_value,estimator,count,flagged,median,mean,p25,p75";

void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_records_csv(std::istream& is);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// key = value lines, '#' comments. Keys: axis, grid (comma list), n, m, s,
/// f_sat, f_sigma, basis, amplitude, amplitude_scale, trials, estimators
/// (comma list), seed, lm_lambda, timing, save_instances. Grid entries may be
/// fractions such as 5/150. Keys not given keep the defaults of the axis.
SweepSpec parse_sweep_config(std::istream& is);
void write_sweep_config(std::ostream& os, const SweepSpec& spec);

}  // namespace satcs
