#pragma once

// truth -> measurement stream -> filter -> diagnostics, for one seed or a
// batch of seeds.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "so3me/config.hpp"

namespace so3me {

struct TrajectoryRow {
  std::int64_t step = 0;
  double time_s = 0;
  double phi_rad = 0;
  Vector3d omega_err = Vector3d::Zero();
  double V = 0;
  double delta_V = 0;  // V_{i+1} - V_i with K_i held
  double potential = 0;
  double kinetic = 0;
  int num_vectors = 0;
  bool fresh = false;

  // Not written to the CSV.
  double predicted_delta_V = 0;
  double defect = 0;        // |delta_V - predicted_delta_V|
  double defect_bound = 0;  // C h^2 (1 + |omega|^2 + phi)
  double prop1_residual = 0;
  double vector_error = 0;  // ||U~_i - R_i^T E_i||_F
  Vector3d tau_D = Vector3d::Zero();
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::int64_t rows = 0;
  double initial_phi = 0;
  double final_phi = 0;
  double settled_phi_max = 0;    // max phi over t > T/2
  double final_omega_norm = 0;
  double settled_omega_max = 0;  // max |omega| over t > T/2
  double min_V = 0;
  double max_V = 0;
  std::int64_t delta_v_violations = 0;  // steps with delta_V > defect bound
  double max_defect = 0;
  double max_defect_ratio = 0;  // max defect / bound
  double max_prop1_residual = 0;
  double max_vector_error = 0;
  std::optional<std::int64_t> steps_to_settle;  // first phi <= analysis.settle_phi_rad
  std::int64_t rejected_blocks = 0;
  bool held_last_gyro = true;
  double wall_clock_s = 0;
};

struct ScenarioResult {
  std::vector<TrajectoryRow> rows;
  RunSummary summary;
};

/// Runs one scenario with cfg.seed. Deterministic for a fixed config.
/// Errors are rethrown as so3me::Error with the failing step index.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// First step with phi <= threshold.
std::optional<std::int64_t> steps_to_threshold(const std::vector<TrajectoryRow>& rows,
                                               double threshold);

/// First step after which phi never rises by more than `allowance`.
std::int64_t monotone_onset(const std::vector<TrajectoryRow>& rows, double allowance);

inline constexpr const char* kTrajectoryHeader =
    "step,time_s,phi_rad,omega_err_x,omega_err_y,omega_err_z,V,deltaV,potential,kinetic,"
    "num_vectors,fresh";

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void write_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows);

std::string summary_json(const RunSummary& s);

struct TrialOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<RunSummary> summary;
  std::string error;
};

struct BatchResult {
  std::vector<TrialOutcome> trials;  // ordered by trial index
  std::size_t failures = 0;
  double median_settled_phi = 0;
  double max_settled_phi = 0;
  double median_steps_to_settle = 0;  // unsettled trials count as rows
  double median_final_phi = 0;
};

/// Trial i runs with seed cfg.seed + cfg.seed_stride * i. Trials run
/// concurrently on up to `threads` workers (0 = hardware concurrency). A
/// failing trial is recorded and the rest continue.
BatchResult run_batch(const ScenarioConfig& cfg, int trials, unsigned threads = 0);

std::string batch_json(const BatchResult& b);

double median(std::vector<double> values);

}  // namespace so3me
