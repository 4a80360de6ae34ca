#pragma once

// Scenario configuration: a flat `section.key = value` text format.
//
//   # comment (also allowed after a value)
//   sim.h = 0.01
//   weights.d = 30, 20, 10
//   sensors.noise = rot
//
// Vectors are three comma-separated reals. Unknown or repeated keys are
// errors. Omitted keys keep the defaults below (the reference scenario).

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "so3me/filter.hpp"
#include "so3me/measurements.hpp"

namespace so3me {

struct ScenarioConfig {
  // sim
  double h = 0.01;
  double duration = 60.0;
  std::uint64_t seed = 1;
  TruthAttitudeMode truth_attitude = TruthAttitudeMode::kDiscrete;

  // sensors
  int n = 10;
  double gyro_noise_bound_deg_s = 0.97;
  double vector_noise_bound_deg = 2.4;
  int k_min = 2;
  int k_max = 9;
  NoiseMode noise = NoiseMode::kRotational;

  // gains
  double m = 100.0;
  double l = 40.0;
  double kp = 150.0;
  Vector3d d = Vector3d(30.0, 20.0, 10.0);

  // truth; R0 = exp(angle * axis/|axis|)
  Vector3d inertia = Vector3d(1.0, 1.2, 1.5);
  Vector3d torque_amplitude = Vector3d::Constant(0.05);
  Vector3d torque_frequency = Vector3d(0.2, 0.3, 0.5);
  Vector3d attitude_axis = Vector3d(4.0, 2.0, 5.0);
  double attitude_angle = 0.752658721182935;  // pi/4 * |(4,2,5)/7|
  Vector3d omega0 = Vector3d(-1.2, 2.1, -1.9) * (3.14159265358979323846 / 60.0);

  // initial estimate error; Q0 = R0 R_hat0^T
  Vector3d error_axis = Vector3d(4.0, 2.0, 5.0);
  double error_angle = 1.204253953892696;  // pi/2.5 * |(4,2,5)/7|
  Vector3d omega_error0 = Vector3d(0.001, -0.002, 0.003) * (3.14159265358979323846 / 60.0);

  // output
  std::string output_dir = "out";
  std::string trajectory = "trajectory.csv";

  // batch
  int trials = 20;
  std::uint64_t seed_stride = 1;

  // analysis
  double defect_c = 2000.0;
  double settle_phi_rad = 0.05;
  int reproject_every = 1000;

  /// round(T/h); validate() guarantees T/h is within one ULP of it.
  std::int64_t steps() const;
  FilterGains<double> gains() const;
  SensorConfig sensors() const;
  TruthParams truth() const;
  Rotation3d initial_estimate_error() const;  // Q0

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

/// Parses `text`; `source` labels error messages. Applies defaults for
/// omitted keys and validates.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file. Throws IoError if it cannot be read.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Every key, one per line, reals in shortest round-trip form.
std::string serialize_config(const ScenarioConfig& cfg);

/// `explicit_path` if given; otherwise the first entry of SO3ME_DEFAULT_CONFIG
/// (':'-separated files or directories holding so3me.conf) that exists;
/// otherwise nothing, meaning built-in defaults.
std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::filesystem::path>& explicit_path);

std::string format_real(double x);
std::string to_string(NoiseMode mode);
std::string to_string(TruthAttitudeMode mode);
NoiseMode parse_noise_mode(const std::string& s);

}  // namespace so3me
