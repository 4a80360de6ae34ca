#include <gtest/gtest.h>

#include <numbers>
#include <vector>

#include "so3me/filter.hpp"
#include "so3me/measurements.hpp"

using namespace so3me;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  DirectionEnsembled E = DirectionEnsembled::from_columns(default_direction_catalog());
  WeightMatrix<double> W = construct_weights(E, Vector3d(30, 20, 10));
  KMatrix<double> K = k_matrix(E, W);
  FilterGains<double> g;
  Rotation3d R0 = exp_so3<double>(kPi / 4 * Vector3d(4, 2, 5) / 7);
  Rotation3d Q0 = exp_so3<double>(kPi / 2.5 * Vector3d(4, 2, 5) / 7);
  Vector3d Om = kPi / 60 * Vector3d(-1.2, 2.1, -1.9);
  Vector3d w0 = kPi / 60 * Vector3d(0.001, -0.002, 0.003);
};

}  // namespace

TEST(FilterGains, Validation) {
  FilterGains<double> g;
  EXPECT_NO_THROW(g.validate());
  g.l = g.m;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = FilterGains<double>{};
  g.h = -0.01;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = FilterGains<double>{};
  g.kp = 0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  EXPECT_DOUBLE_EQ(FilterGains<double>{}.omega_coefficient(), 60.0 / 140.0);
  EXPECT_DOUBLE_EQ(FilterGains<double>{}.gradient_coefficient(), 1.5 / 140.0);
}

// Oracle: tests/oracles/filter_oracle.py.
TEST(FilterStep, TwoStepsMatchOracle) {
  const Fixture s;
  const auto U0 = BodyVectorSetd::from_matrix(s.R0.matrix().transpose() * s.E.matrix(), true);
  const auto st0 = EstimatorState<double>::initial(s.Q0.transpose() * s.R0, s.w0, s.Om);
  const auto r1 = filter_step_with_gradient(st0, s.Om, s.Om, U0, s.E, s.W, s.g);
  EXPECT_LT((r1.s_l - Vector3d(-18.515173696864288, -12.673855732628597, -28.68885997622808))
                .norm(),
            1e-11);
  EXPECT_LT((r1.next.omega -
             Vector3d(-0.19835442109030602, -0.13583619131607197, -0.3073133227598668))
                .norm(),
            1e-13);
  const double R1[9] = {0.9357320940154485,  0.34255937141715675, -0.08401503010620338,
                        -0.3074627967196394, 0.9089317699716168,  0.28161971907095085,
                        0.17283540396227126, -0.23768911331936507, 0.9558408908111498};
  EXPECT_LT((r1.next.R_hat.matrix() -
             Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R1))
                .cwiseAbs()
                .maxCoeff(),
            1e-13);
  EXPECT_EQ(r1.next.step, 1);

  const auto U1 = propagate_vectors(U0, s.Om, s.Om, s.g.h);
  const auto r2 = filter_step_with_gradient(r1.next, s.Om, s.Om, U1, s.E, s.W, s.g);
  EXPECT_LT((r2.next.omega -
             Vector3d(-0.28281577642203254, -0.19386265167081815, -0.43912924145367355))
                .norm(),
            1e-13);

  const Vector3d tau = dissipation_torque(st0.omega, r1.next.omega, st0.omega_hat,
                                          r1.next.omega_hat, r2.s_l, s.g);
  EXPECT_LT((tau - Vector3d(5661.883074613285, 3862.2908149051254, 8742.285392268437)).norm(),
            1e-8);
  const double res = prop1_residual(st0.omega, r1.next.omega, r2.next.omega, st0.omega_hat,
                                    r1.next.omega_hat, r2.s_l, tau, s.g);
  EXPECT_LT(res, 1e-12);

  EXPECT_NEAR(lyapunov_value(s.R0 * st0.R_hat.transpose(), st0.omega, s.K, s.g),
              3732.0843853958872, 1e-9);
}

TEST(FilterStep, RejectsMismatchedShapes) {
  const Fixture s;
  const auto U = BodyVectorSetd::from_matrix(s.E.matrix().leftCols(4), true);
  const auto st = EstimatorState<double>::initial(Rotation3d::identity(), s.w0, s.Om);
  EXPECT_THROW(filter_step(st, s.Om, s.Om, U, s.E, s.W, s.g), std::invalid_argument);
}

TEST(FilterStep, FixedPointAtZeroError) {
  const Fixture s;
  const auto U = BodyVectorSetd::from_matrix(s.R0.matrix().transpose() * s.E.matrix(), true);
  const auto st = EstimatorState<double>::initial(s.R0, Vector3d::Zero(), s.Om);
  const auto next = filter_step(st, s.Om, s.Om, U, s.E, s.W, s.g);
  EXPECT_LT(next.omega.norm(), 1e-13);
  EXPECT_LT((next.R_hat.matrix() - (s.R0 * exp_so3<double>(s.g.h * s.Om)).matrix()).norm(),
            1e-14);
}

TEST(Residual, VanishesAlongRandomNoisyTrajectory) {
  // The torque turns the implicit update into the explicit one for any
  // measurements, noisy or not.
  const Fixture s;
  Rng rng(5);
  auto U = BodyVectorSetd::from_matrix(s.R0.matrix().transpose() * s.E.matrix(), true);
  std::vector<EstimatorState<double>> st{
      EstimatorState<double>::initial(s.Q0.transpose() * s.R0, s.w0, s.Om)};
  std::vector<Vector3d> grad, meas{s.Om};
  for (int i = 0; i < 300; ++i) {
    meas.push_back(s.Om + 0.02 * rng.in_unit_ball());
    const auto r = filter_step_with_gradient(st[i], meas[i], meas[i + 1], U, s.E, s.W, s.g);
    st.push_back(r.next);
    grad.push_back(r.s_l);
    U = propagate_vectors(U, meas[i], meas[i + 1], s.g.h);
  }
  for (int i = 0; i + 2 < 300; ++i) {
    const Vector3d tau = dissipation_torque(st[i].omega, st[i + 1].omega, st[i].omega_hat,
                                            st[i + 1].omega_hat, grad[i + 1], s.g);
    EXPECT_LT(prop1_residual(st[i].omega, st[i + 1].omega, st[i + 2].omega, st[i].omega_hat,
                             st[i + 1].omega_hat, grad[i + 1], tau, s.g),
              1e-12)
        << "step " << i;
  }
}

TEST(Lyapunov, DecrementMatchesPredictionToSecondOrder) {
  // Defect of one noise-free step shrinks like h^2 when m, l scale with h.
  const Fixture s;
  std::vector<double> defects;
  for (double h : {0.01, 0.005, 0.0025}) {
    FilterGains<double> g{100 * h / 0.01, 40 * h / 0.01, 150, h};
    const Rotation3d R_hat0 = s.Q0.transpose() * s.R0;
    const Vector3d w0(0.05, -0.02, 0.03);
    const auto U = BodyVectorSetd::from_matrix(s.R0.matrix().transpose() * s.E.matrix(), true);
    const auto st = EstimatorState<double>::initial(R_hat0, w0, Vector3d::Zero().eval());
    const auto next = filter_step(st, Vector3d::Zero().eval(), Vector3d::Zero().eval(), U, s.E,
                                  s.W, g);
    // Truth at rest, so Q_{i+1} = R0 R_hat_{i+1}^T.
    const double V0 = lyapunov_value(s.R0 * R_hat0.transpose(), w0, s.K, g);
    const double V1 = lyapunov_value(s.R0 * next.R_hat.transpose(), next.omega, s.K, g);
    const auto check = lyapunov_decrement_check(w0, next.omega, V0, V1, g.l);
    EXPECT_LT(check.predicted, 0.0);
    defects.push_back(check.defect);
  }
  EXPECT_NEAR(defects[0] / defects[1], 4.0, 0.8);
  EXPECT_NEAR(defects[1] / defects[2], 4.0, 0.8);
}

TEST(Energies, Definitions) {
  const Vector3d a(1, 2, 2), b(0, 1, 0);
  EXPECT_DOUBLE_EQ(kinetic_energy_l(a, 100.0), 450.0);
  EXPECT_DOUBLE_EQ(kinetic_energy_v(a, b, 2.0), 1 + 9 + 4);
  const std::vector<double> terms{1.5, -0.5, 2.0};
  EXPECT_DOUBLE_EQ(action_sum<double>(terms), 3.0);
  EXPECT_DOUBLE_EQ(defect_bound(1000.0, 0.01, a, 0.5), 0.1 * (1 + 9 + 0.5));

  const Fixture s;
  const Rotation3d R_hat = exp_so3(Vector3d(0.2, 0.1, -0.3));
  const auto U = BodyVectorSetd::from_matrix(s.R0.matrix().transpose() * s.E.matrix(), true);
  EXPECT_DOUBLE_EQ(lagrangian(R_hat, U, s.E, s.W, a, b, 100.0),
                   kinetic_energy_v(a, b, 100.0) - wahba_cost(R_hat, U, s.E, s.W));
}
