#include "so3me/measurements.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace so3me {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Vector3d Rng::in_unit_ball() {
  for (;;) {
    const Vector3d v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
    if (v.squaredNorm() <= 1.0) return v;
  }
}

Vector3d SinusoidalTorque::operator()(double t) const {
  return amplitude.cwiseProduct((frequency * t).array().sin().matrix());
}

void SensorConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(h > 0)) fail("sensor step h must be > 0");
  if (n < 1) fail("rate ratio n must be >= 1");
  if (!(gyro_noise_bound >= 0)) fail("gyro noise bound must be >= 0");
  if (!(vector_noise_bound >= 0)) fail("vector noise bound must be >= 0");
  if (k_min < 2 || k_max < k_min) fail("direction counts need 2 <= k_min <= k_max");
}

Rotation3d discrete_attitude_step(const Rotation3d& R, const Vector3d& omega_now,
                                  const Vector3d& omega_next, double h) {
  return R * exp_so3<double>((omega_next + omega_now) * (h / 2));
}

namespace {

struct RigidBody {
  Vector3d inertia;
  const std::function<Vector3d(double)>& torque;

  Vector3d omega_dot(double t, const Vector3d& w) const {
    const Vector3d Jw = inertia.cwiseProduct(w);
    return (torque(t) - w.cross(Jw)).cwiseQuotient(inertia);
  }
};

}  // namespace

std::vector<TruthState> simulate_truth(const TruthParams& params, double h, std::int64_t N) {
  if (!(params.inertia.minCoeff() > 0)) {
    throw std::invalid_argument("inertia must be positive");
  }
  if (!(h > 0) || N < 0) throw std::invalid_argument("simulate_truth: need h > 0, N >= 0");

  const RigidBody body{params.inertia, params.torque};
  std::vector<TruthState> out;
  out.reserve(static_cast<std::size_t>(N) + 1);
  out.push_back({params.R0, params.omega0, 0.0});

  for (std::int64_t i = 0; i < N; ++i) {
    const TruthState& s = out.back();
    const double t = static_cast<double>(i) * h;
    const Vector3d& w = s.omega;

    const Vector3d k1 = body.omega_dot(t, w);
    const Vector3d k2 = body.omega_dot(t + h / 2, w + h / 2 * k1);
    const Vector3d k3 = body.omega_dot(t + h / 2, w + h / 2 * k2);
    const Vector3d k4 = body.omega_dot(t + h, w + h * k3);
    const Vector3d w_next = w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);

    Rotation3d R_next;
    if (params.attitude_mode == TruthAttitudeMode::kDiscrete) {
      R_next = discrete_attitude_step(s.R, w, w_next, h);
      if (params.reproject_every > 0 && (i + 1) % params.reproject_every == 0) {
        R_next = R_next.renormalized();
      }
    } else {
      // dR/dt = R hat(Omega), with Omega taken at the same RK4 stages.
      const Matrix3d& R = s.R.matrix();
      auto Rdot = [](const Matrix3d& M, const Vector3d& om) -> Matrix3d {
        return M * hat(om).matrix();
      };
      const Vector3d w2 = w + h / 2 * k1;
      const Vector3d w3 = w + h / 2 * k2;
      const Vector3d w4 = w + h * k3;
      const Matrix3d r1 = Rdot(R, w);
      const Matrix3d r2 = Rdot(R + h / 2 * r1, w2);
      const Matrix3d r3 = Rdot(R + h / 2 * r2, w3);
      const Matrix3d r4 = Rdot(R + h * r3, w4);
      R_next = project_to_so3(R + h / 6 * (r1 + 2 * r2 + 2 * r3 + r4));
    }
    out.push_back({R_next, w_next, static_cast<double>(i + 1) * h});
  }
  return out;
}

Vector3d sample_gyro(const Vector3d& omega_true, double bound, Rng& rng) {
  if (!(bound >= 0)) throw std::invalid_argument("gyro noise bound must be >= 0");
  if (bound == 0) return omega_true;
  return omega_true + bound * rng.in_unit_ball();
}

namespace {

// Unit vector orthogonal to u, uniformly distributed around it.
Vector3d random_perpendicular(const Vector3d& u, Rng& rng) {
  Eigen::Index j = 0;
  u.cwiseAbs().minCoeff(&j);
  const Vector3d b1 = u.cross(Vector3d::Unit(j)).normalized();
  const Vector3d b2 = u.cross(b1);
  const double psi = rng.uniform(0, 2 * std::numbers::pi);
  return std::cos(psi) * b1 + std::sin(psi) * b2;
}

Vector3d perturb_direction(const Vector3d& u, double bound, NoiseMode mode, Rng& rng) {
  if (mode == NoiseMode::kOff || bound == 0) return u;
  if (mode == NoiseMode::kRotational) {
    const Vector3d axis = random_perpendicular(u, rng);
    const double angle = rng.uniform(0, bound);
    return exp_so3<double>(angle * axis) * u;
  }
  // Additive: |eta| <= sin(bound) < 1 keeps the angular error within bound.
  const Vector3d eta = std::sin(std::min(bound, std::numbers::pi / 2)) * rng.in_unit_ball();
  return (u + eta).normalized();
}

}  // namespace

VectorSample sample_vectors(const Rotation3d& R_true, const Matrix3Xd& catalog, int k,
                            double bound, NoiseMode mode, Rng& rng) {
  if (k < 2 || k > catalog.cols()) {
    std::ostringstream os;
    os << "sample_vectors: k = " << k << " outside [2, " << catalog.cols() << "]";
    throw std::invalid_argument(os.str());
  }

  // Partial Fisher-Yates over column indices.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(catalog.cols()));
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<Eigen::Index>(j);
  for (int j = 0; j < k; ++j) {
    const auto r = j + static_cast<int>(rng.index(idx.size() - j));
    std::swap(idx[j], idx[r]);
  }

  Matrix3Xd E(3, k);
  for (int j = 0; j < k; ++j) E.col(j) = catalog.col(idx[j]).normalized();
  const Matrix3Xd U_true = R_true.matrix().transpose() * E;

  for (int attempt = 0;; ++attempt) {
    Matrix3Xd U(3, k);
    for (int j = 0; j < k; ++j) U.col(j) = perturb_direction(U_true.col(j), bound, mode, rng);
    try {
      return {DirectionEnsembled::from_columns(E), BodyVectorSetd::measured(U)};
    } catch (const DegeneratePair&) {
      if (attempt >= 1) throw;
    }
  }
}

BodyVectorSetd propagate_vectors(const BodyVectorSetd& prev, const Vector3d& omega_meas_prev,
                                 const Vector3d& omega_meas_now, double h) {
  const Rotation3d F = exp_so3<double>((omega_meas_prev + omega_meas_now) * (-h / 2));
  return BodyVectorSetd::from_matrix(F.matrix() * prev.matrix(), false);
}

std::vector<MeasurementRecord> build_stream(const std::vector<TruthState>& truth,
                                            const SensorConfig& config,
                                            const Matrix3Xd& catalog) {
  config.validate();
  if (config.k_max > catalog.cols()) {
    throw std::invalid_argument("k_max exceeds the number of catalog directions");
  }
  const bool noisy = config.noise != NoiseMode::kOff;
  const double gyro_bound = noisy ? config.gyro_noise_bound : 0.0;
  const double vector_bound = noisy ? config.vector_noise_bound : 0.0;

  Rng rng(config.seed);
  std::vector<MeasurementRecord> out;
  out.reserve(truth.size());

  for (std::size_t i = 0; i < truth.size(); ++i) {
    MeasurementRecord rec;
    rec.step = static_cast<std::int64_t>(i);
    rec.omega_meas = sample_gyro(truth[i].omega, gyro_bound, rng);

    if (rec.step % config.n == 0) {
      const int span = config.k_max - config.k_min + 1;
      const int k = config.k_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(span)));
      VectorSample sample =
          sample_vectors(truth[i].R, catalog, k, vector_bound, config.noise, rng);
      if (sample.E.full_rank()) {
        rec.E = sample.E;
        rec.U_tilde = sample.U;
      } else if (out.empty()) {
        std::ostringstream os;
        os << "first vector sample is rank deficient (sigma_3 = "
           << sample.E.smallest_singular_value() << ")";
        throw RankDeficient(os.str());
      } else {
        rec.rejected = true;
      }
      rec.fresh = std::move(sample);
    }
    if (!rec.fresh || rec.rejected) {
      const MeasurementRecord& prev = out.back();
      rec.E = prev.E;
      rec.U_tilde = propagate_vectors(prev.U_tilde, prev.omega_meas, rec.omega_meas, config.h);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Matrix3Xd default_direction_catalog() {
  static const double kDirections[9][3] = {
      {0.10855549996800727, 0.7468528152792917, 0.65606903275195971},
      {0.59165473974636262, 0.39217864915294698, -0.70437246970919698},
      {-0.73878284581734677, -0.13492966946242341, -0.66029833486446388},
      {-0.84430141899038824, -0.52167348770621935, -0.12252300239239081},
      {0.28688755164129193, -0.024048009987605493, -0.9576623757509225},
      {0.79701392086179623, -0.40336120170760315, -0.44952035650179945},
      {0.87927273915433857, 0.2634647813007171, -0.39681955495437959},
      {0.93457183524181098, -0.33433243930315593, 0.12164417290752143},
      {-0.45436210823799184, 0.81808254275960379, -0.35255641793833292},
  };
  Matrix3Xd C(3, 9);
  for (int j = 0; j < 9; ++j) {
    C.col(j) = Vector3d(kDirections[j][0], kDirections[j][1], kDirections[j][2]).normalized();
  }
  return C;
}

}  // namespace so3me
