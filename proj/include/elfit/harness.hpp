#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elfit/ellipsoid.hpp"

namespace elfit {

/// One point in the (d, n/d^2) phase plane is a cell; each cell runs
/// trials_per_cell independent fits. n = round(fraction * d^2).
struct SweepConfig {
  std::vector<int> d_values;          // each >= 5
  std::vector<double> n_fractions;    // each in (0, 0.5]
  int trials_per_cell = 1;
  std::uint64_t master_seed = 0;
  bool diagnostics_enabled = false;
  std::string output_path;            // empty: keep results in memory only
  int worker_count = 1;
};

struct TrialRecord {
  int d = 0;
  int n = 0;
  double n_fraction = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  FitStatus status = FitStatus::Success;
  double max_residual = 0.0;
  double q_min_eig = 0.0;
  double perturbation_norm = 0.0;
  double m_min_eig = 0.0;
  double eps_inf = 0.0;
  double delta_inf = 0.0;
  double wall_time_ms = 0.0;
  // populated only when diagnostics_enabled
  bool events_checked = false;
  bool e1 = false, e2 = false, e3 = false;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // sorted by (d, n, n_fraction, trial)
  std::map<std::pair<int, double>, double> cell_success_rate;
  std::map<int, double> threshold_estimate;  // only d with a 1/2 crossing
  double total_wall_time_ms = 0.0;
};

/// Validates invariants; throws ConfigInvalid naming the offending field.
void validate_config(const SweepConfig& config);

/// Reads a config JSON with exactly the SweepConfig field names.
SweepConfig load_sweep_config(const std::string& path);

/// Runs every (d, fraction, trial) cell on a worker pool. Trial seeds are
/// derived from the master seed and the cell-trial ordinal, so records do
/// not depend on scheduling; rows are flushed to output_path as they
/// finish and the file is rewritten in canonical sorted order at the end
/// (plus <output_path>.meta.json). ELLIPSOID_WORKERS overrides
/// worker_count when set.
SweepResult run_sweep(const SweepConfig& config);

/// Fraction where the success curve for dimension d first crosses 1/2
/// going down, linearly interpolated; nullopt when the scanned fractions
/// never cross. Throws UnknownDimension when d was not swept.
std::optional<double> estimate_threshold(const SweepResult& result, int d);

/// CSV helpers shared by run_sweep and the tests.
std::string trial_csv_header();
std::string trial_csv_row(const TrialRecord& rec);

int cli_main(int argc, char** argv);

}  // namespace elfit
