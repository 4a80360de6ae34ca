#pragma once

// Explicit multi-rate attitude filter with its dissipation torque, the
// implicit-form residual, and energy / Lyapunov diagnostics.
//
// Notation: omega is the angular-velocity estimation error
// omega_i = Omega^m_i - Omega_hat_i, S_L the Wahba-cost gradient at R_hat.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>

#include "so3me/errors.hpp"
#include "so3me/so3.hpp"
#include "so3me/wahba.hpp"

namespace so3me {

template <typename Scalar>
struct FilterGains {
  Scalar m = Scalar(100);    // inertia-like weight on omega
  Scalar l = Scalar(40);     // dissipation
  Scalar kp = Scalar(150);   // potential gain
  Scalar h = Scalar(0.01);   // step (s)

  /// Throws std::invalid_argument naming the first violated condition.
  void validate() const {
    using std::abs;
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (!(m > Scalar(0))) fail("gain m must be > 0");
    if (!(l > Scalar(0))) fail("gain l must be > 0");
    if (!(abs(m - l) > Scalar(1e-12))) fail("gain l must differ from m (l != m)");
    if (!(kp > Scalar(0))) fail("gain kp must be > 0");
    if (!(h > Scalar(0))) fail("step h must be > 0");
  }

  /// Coefficient of omega_i in the omega update, (m - l)/(m + l).
  Scalar omega_coefficient() const { return (m - l) / (m + l); }
  /// Coefficient of S_L in the omega update, kp h/(m + l).
  Scalar gradient_coefficient() const { return kp * h / (m + l); }
};

template <typename Scalar>
struct EstimatorState {
  Rotation<Scalar> R_hat;
  Vector3<Scalar> omega = Vector3<Scalar>::Zero();      // Omega^m - Omega_hat
  Vector3<Scalar> omega_hat = Vector3<Scalar>::Zero();  // Omega^m - omega
  std::int64_t step = 0;

  /// State at step 0 from the initial estimate and the first gyro sample.
  static EstimatorState initial(const Rotation<Scalar>& R_hat0, const Vector3<Scalar>& omega0,
                                const Vector3<Scalar>& omega_meas0) {
    return {R_hat0, omega0, omega_meas0 - omega0, 0};
  }
};

template <typename Scalar>
struct FilterStepResult {
  EstimatorState<Scalar> next;
  Vector3<Scalar> s_l;  // S_L at the state the step started from
};

/// One step of the explicit filter:
///   omega_{i+1}     = ((m - l) omega_i + kp h S_L(R_hat_i)) / (m + l)
///   Omega_hat_{i+1} = Omega^m_{i+1} - omega_{i+1}
///   R_hat_{i+1}     = R_hat_i exp(h/2 (Omega_hat_{i+1} + Omega_hat_i))
template <typename Scalar>
FilterStepResult<Scalar> filter_step_with_gradient(const EstimatorState<Scalar>& state,
                                                   const Vector3<Scalar>& omega_meas_now,
                                                   const Vector3<Scalar>& omega_meas_next,
                                                   const BodyVectorSet<Scalar>& U_tilde,
                                                   const DirectionEnsemble<Scalar>& E,
                                                   const WeightMatrix<Scalar>& W,
                                                   const FilterGains<Scalar>& gains) {
  if (U_tilde.size() != E.size() || W.W.rows() != E.size()) {
    throw std::invalid_argument("filter_step: measurement shapes disagree");
  }
  const Vector3<Scalar> grad = s_l(state.R_hat, E, W, U_tilde);
  const Vector3<Scalar> omega_hat_now = omega_meas_now - state.omega;
  const Vector3<Scalar> omega_next =
      (state.omega * (gains.m - gains.l) + grad * (gains.kp * gains.h)) / (gains.m + gains.l);
  const Vector3<Scalar> omega_hat_next = omega_meas_next - omega_next;
  const Rotation<Scalar> R_next =
      state.R_hat * exp_so3<Scalar>((omega_hat_next + omega_hat_now) * (gains.h / Scalar(2)));
  return {{R_next, omega_next, omega_hat_next, state.step + 1}, grad};
}

template <typename Scalar>
EstimatorState<Scalar> filter_step(const EstimatorState<Scalar>& state,
                                   const Vector3<Scalar>& omega_meas_now,
                                   const Vector3<Scalar>& omega_meas_next,
                                   const BodyVectorSet<Scalar>& U_tilde,
                                   const DirectionEnsemble<Scalar>& E,
                                   const WeightMatrix<Scalar>& W,
                                   const FilterGains<Scalar>& gains) {
  return filter_step_with_gradient(state, omega_meas_now, omega_meas_next, U_tilde, E, W, gains)
      .next;
}

/// Dissipation torque that turns the implicit variational update into the
/// explicit one:
///   tau_{i+1} = (1/h) { 2m(omega_{i+1} + omega_i) + h S_{i+1}
///               - 2m/(m+l) exp(h/2 (Omega_hat_{i+1} + Omega_hat_i))
///                 [2m omega_{i+1} + kp h S_{i+1}] }
template <typename Scalar>
Vector3<Scalar> dissipation_torque(const Vector3<Scalar>& omega_i,
                                   const Vector3<Scalar>& omega_next,
                                   const Vector3<Scalar>& omega_hat_i,
                                   const Vector3<Scalar>& omega_hat_next,
                                   const Vector3<Scalar>& s_l_next,
                                   const FilterGains<Scalar>& g) {
  const Rotation<Scalar> F = exp_so3<Scalar>((omega_hat_next + omega_hat_i) * (g.h / Scalar(2)));
  const Vector3<Scalar> inner = omega_next * (Scalar(2) * g.m) + s_l_next * (g.kp * g.h);
  return ((omega_next + omega_i) * (Scalar(2) * g.m) + s_l_next * g.h -
          (F * inner) * (Scalar(2) * g.m / (g.m + g.l))) /
         g.h;
}

/// Norm of the implicit (Lagrange-d'Alembert) omega update residual
///   m(omega_{i+2} + omega_{i+1})
///     - exp(-h/2 (Omega_hat_{i+1} + Omega_hat_i))
///       [m(omega_{i+1} + omega_i) + h/2 S_{i+1} - h/2 tau_{i+1}].
template <typename Scalar>
Scalar prop1_residual(const Vector3<Scalar>& omega_i, const Vector3<Scalar>& omega_next,
                      const Vector3<Scalar>& omega_next2, const Vector3<Scalar>& omega_hat_i,
                      const Vector3<Scalar>& omega_hat_next, const Vector3<Scalar>& s_l_next,
                      const Vector3<Scalar>& tau_next, const FilterGains<Scalar>& g) {
  const Rotation<Scalar> Finv =
      exp_so3<Scalar>((omega_hat_next + omega_hat_i) * (-g.h / Scalar(2)));
  const Vector3<Scalar> bracket = (omega_next + omega_i) * g.m +
                                  s_l_next * (g.h / Scalar(2)) - tau_next * (g.h / Scalar(2));
  return ((omega_next2 + omega_next) * g.m - Finv * bracket).norm();
}

/// (m/2) |omega|^2
template <typename Scalar>
Scalar kinetic_energy_l(const Vector3<Scalar>& omega, Scalar m) {
  return m / Scalar(2) * omega.squaredNorm();
}

/// (m/2) |omega_i + omega_{i+1}|^2
template <typename Scalar>
Scalar kinetic_energy_v(const Vector3<Scalar>& omega_i, const Vector3<Scalar>& omega_next,
                        Scalar m) {
  return m / Scalar(2) * (omega_i + omega_next).squaredNorm();
}

/// Discrete Lagrangian: kinetic_energy_v - wahba_cost.
template <typename Scalar>
Scalar lagrangian(const Rotation<Scalar>& R_hat, const BodyVectorSet<Scalar>& U_tilde,
                  const DirectionEnsemble<Scalar>& E, const WeightMatrix<Scalar>& W,
                  const Vector3<Scalar>& omega_i, const Vector3<Scalar>& omega_next, Scalar m) {
  return kinetic_energy_v(omega_i, omega_next, m) - wahba_cost(R_hat, U_tilde, E, W);
}

template <typename Scalar>
Scalar action_sum(std::span<const Scalar> lagrangians) {
  return std::accumulate(lagrangians.begin(), lagrangians.end(), Scalar(0));
}

/// kp <I - Q, K> + (m/2)|omega|^2
template <typename Scalar>
Scalar lyapunov_value(const Rotation<Scalar>& Q, const Vector3<Scalar>& omega,
                      const KMatrix<Scalar>& K, const FilterGains<Scalar>& g) {
  return g.kp * potential_error(Q, K) + kinetic_energy_l(omega, g.m);
}

template <typename Scalar>
struct DecrementCheck {
  Scalar observed;   // V_{i+1} - V_i
  Scalar predicted;  // -(l/2)|omega_{i+1} + omega_i|^2
  Scalar defect;     // |observed - predicted|
};

/// Compares the observed Lyapunov change with the first-order prediction
/// -(l/2)|omega_{i+1} + omega_i|^2. Exact up to O(h^2) terms of the
/// exponential over one step.
template <typename Scalar>
DecrementCheck<Scalar> lyapunov_decrement_check(const Vector3<Scalar>& omega_i,
                                                const Vector3<Scalar>& omega_next, Scalar V_i,
                                                Scalar V_next, Scalar l) {
  using std::abs;
  const Scalar observed = V_next - V_i;
  const Scalar predicted = -l / Scalar(2) * (omega_next + omega_i).squaredNorm();
  return {observed, predicted, abs(observed - predicted)};
}

/// Allowance C h^2 (1 + |omega|^2 + phi) on the decrement defect.
template <typename Scalar>
Scalar defect_bound(Scalar C, Scalar h, const Vector3<Scalar>& omega, Scalar phi) {
  return C * h * h * (Scalar(1) + omega.squaredNorm() + phi);
}

/// Per-step diagnostic values. Quantities that need the true attitude are
/// empty when the filter runs without truth.
template <typename Scalar>
struct DiagnosticRecord {
  Scalar potential = 0;       // <I - Q_i, K_i>
  Scalar kinetic_l = 0;       // (m/2)|omega_i|^2
  Scalar kinetic_v = 0;       // (m/2)|omega_i + omega_{i+1}|^2
  Scalar wahba = 0;           // measured Wahba cost
  Scalar V = 0;               // kp * potential + kinetic_l
  Scalar delta_V = 0;         // V_{i+1} - V_i with K held at K_i
  Scalar predicted_delta_V = 0;
  Scalar lagrangian = 0;
  Scalar action = 0;          // running sum of lagrangian
  Vector3<Scalar> tau_D = Vector3<Scalar>::Zero();
  std::optional<Scalar> phi;  // principal angle of Q_i
};

}  // namespace so3me
