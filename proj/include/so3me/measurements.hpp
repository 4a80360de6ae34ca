#pragma once

// Ground-truth rigid-body simulation, bounded-noise sensor sampling and
// propagation of body-frame direction measurements between vector samples.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "so3me/so3.hpp"
#include "so3me/wahba.hpp"

namespace so3me {

using Matrix3Xd = Matrix3X<double>;
using DirectionEnsembled = DirectionEnsemble<double>;
using BodyVectorSetd = BodyVectorSet<double>;

/// Deterministic random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the transforms below are spelled out so
/// that streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  /// Uniform point in the closed unit ball.
  Vector3d in_unit_ball();

 private:
  std::mt19937_64 engine_;
};

struct TruthState {
  Rotation3d R;       // body -> inertial
  Vector3d omega;     // body angular velocity (rad/s)
  double t = 0;
};

enum class TruthAttitudeMode { kDiscrete, kRk4 };
enum class NoiseMode { kOff, kRotational, kAdditive };

/// tau(t) = amplitude .* sin(frequency * t), componentwise (N m, rad/s).
struct SinusoidalTorque {
  Vector3d amplitude = Vector3d::Constant(0.05);
  Vector3d frequency = Vector3d(0.2, 0.3, 0.5);

  Vector3d operator()(double t) const;
};

struct TruthParams {
  Vector3d inertia = Vector3d(1.0, 1.2, 1.5);  // principal moments (kg m^2)
  std::function<Vector3d(double)> torque = SinusoidalTorque{};
  Rotation3d R0;
  Vector3d omega0 = Vector3d::Zero();
  TruthAttitudeMode attitude_mode = TruthAttitudeMode::kDiscrete;
  /// Re-project R onto SO(3) every this many steps (0 disables).
  int reproject_every = 1000;
};

struct SensorConfig {
  double h = 0.01;
  int n = 10;                        // vector samples every n steps
  double gyro_noise_bound = 0;       // rad/s
  double vector_noise_bound = 0;     // rad
  int k_min = 2;
  int k_max = 9;
  std::uint64_t seed = 1;
  NoiseMode noise = NoiseMode::kRotational;

  void validate() const;
};

/// Observed directions (inertial and body frames) at a vector-sample instant.
struct VectorSample {
  DirectionEnsembled E;
  BodyVectorSetd U;
};

struct MeasurementRecord {
  std::int64_t step = 0;
  Vector3d omega_meas;
  /// Present iff step % n == 0.
  std::optional<VectorSample> fresh;
  /// The fresh block was rank deficient and ignored; propagation continued.
  bool rejected = false;
  /// Directions active at this step (the last accepted fresh block).
  DirectionEnsembled E;
  /// U~^m: the fresh U^m, or the previous U~^m propagated by the gyro.
  BodyVectorSetd U_tilde;
};

/// R exp(h/2 (omega_now + omega_next)).
Rotation3d discrete_attitude_step(const Rotation3d& R, const Vector3d& omega_now,
                                  const Vector3d& omega_next, double h);

/// N + 1 states at t = 0, h, ..., N h. Omega follows Euler's equations
/// J dOmega/dt = tau(t) - Omega x (J Omega) with classical RK4. In kDiscrete mode
/// R is advanced with discrete_attitude_step between consecutive Omega
/// samples, which makes vector propagation exact for noise-free gyros; kRk4
/// integrates R jointly with Omega and re-projects each step.
std::vector<TruthState> simulate_truth(const TruthParams& params, double h, std::int64_t N);

/// Omega_true + eta with eta uniform in the ball of radius `bound`.
Vector3d sample_gyro(const Vector3d& omega_true, double bound, Rng& rng);

/// Draws k distinct catalog columns and their body-frame measurements. In
/// rotational mode each u_j = R^T e_j is rotated by an angle uniform in
/// [0, bound] about a random axis orthogonal to u_j; in additive mode a
/// perturbation of norm <= sin(bound) is added and the result renormalised.
/// Either way the angular error is at most `bound`. Two directions are
/// completed with their cross product; a degenerate perturbed pair is redrawn
/// once before DegeneratePair is thrown.
VectorSample sample_vectors(const Rotation3d& R_true, const Matrix3Xd& catalog, int k,
                            double bound, NoiseMode mode, Rng& rng);

/// exp(-h/2 (omega_prev + omega_now)) * prev, marked as propagated.
BodyVectorSetd propagate_vectors(const BodyVectorSetd& prev, const Vector3d& omega_meas_prev,
                                 const Vector3d& omega_meas_now, double h);

/// Gyro sample at every step, fresh vector block at every multiple of n and
/// propagated blocks in between.
std::vector<MeasurementRecord> build_stream(const std::vector<TruthState>& truth,
                                            const SensorConfig& config,
                                            const Matrix3Xd& catalog);

/// Nine fixed unit directions spread so that every 3-subset spans R^3 with
/// smallest singular value above 0.1 (generated by tools/gen_direction_catalog.py).
Matrix3Xd default_direction_catalog();

}  // namespace so3me
