#include "so3me/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"

#include "so3me/errors.hpp"

namespace so3me {

namespace {

template <typename E>
bool rethrow_as(const std::exception& e, const std::string& prefix) {
  if (dynamic_cast<const E*>(&e) != nullptr) throw E(prefix + e.what());
  return false;
}

[[noreturn]] void rethrow_with_step(const std::exception& e, std::int64_t step) {
  const std::string prefix = "step " + std::to_string(step) + ": ";
  rethrow_as<NotNearGroup>(e, prefix) || rethrow_as<NotSkew>(e, prefix) ||
      rethrow_as<DegeneratePair>(e, prefix) || rethrow_as<RankDeficient>(e, prefix) ||
      rethrow_as<NonDistinct>(e, prefix);
  throw Error(prefix + e.what());
}

struct ActiveWeights {
  WeightMatrix<double> W;
  KMatrix<double> K;
};

ActiveWeights weights_for(const DirectionEnsembled& E, const Vector3d& d) {
  WeightMatrix<double> W = construct_weights(E, d);
  KMatrix<double> K = k_matrix(E, W);
  return {std::move(W), std::move(K)};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();

  const std::int64_t N = cfg.steps();
  const double h = cfg.h;
  const FilterGains<double> g = cfg.gains();
  const Matrix3Xd catalog = default_direction_catalog();

  std::vector<TruthState> truth = simulate_truth(cfg.truth(), h, N);
  std::vector<MeasurementRecord> stream = build_stream(truth, cfg.sensors(), catalog);

  // Two held steps past the end so row N has a decrement and a residual.
  for (int extra = 0; extra < 2; ++extra) {
    const TruthState& last = truth.back();
    truth.push_back({last.R * exp_so3<double>(last.omega * h), last.omega, last.t + h});
    const MeasurementRecord& prev = stream.back();
    MeasurementRecord rec;
    rec.step = prev.step + 1;
    rec.omega_meas = prev.omega_meas;
    rec.E = prev.E;
    rec.U_tilde = propagate_vectors(prev.U_tilde, prev.omega_meas, rec.omega_meas, h);
    stream.push_back(std::move(rec));
  }
  const std::size_t total = stream.size();  // N + 3

  // Filter states 0..N+2 with the gradient and weights used at each.
  std::vector<EstimatorState<double>> est;
  std::vector<Vector3d> grad;
  std::vector<ActiveWeights> active;
  est.reserve(total);
  grad.reserve(total);
  active.reserve(total);

  const Rotation3d Q0 = cfg.initial_estimate_error();
  est.push_back(EstimatorState<double>::initial(Q0.transpose() * truth[0].R, cfg.omega_error0,
                                                stream[0].omega_meas));
  std::int64_t rejected = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const MeasurementRecord& rec = stream[i];
    try {
      if (rec.rejected) ++rejected;
      if (i == 0 || (rec.fresh && !rec.rejected)) {
        active.push_back(weights_for(rec.E, cfg.d));
      } else {
        active.push_back(active.back());
      }
      if (i + 1 < total) {
        auto res = filter_step_with_gradient(est[i], rec.omega_meas, stream[i + 1].omega_meas,
                                             rec.U_tilde, rec.E, active[i].W, g);
        est.push_back(res.next);
        grad.push_back(res.s_l);
      } else {
        grad.push_back(s_l(est[i].R_hat, rec.E, active[i].W, rec.U_tilde));
      }
    } catch (const std::exception& e) {
      rethrow_with_step(e, static_cast<std::int64_t>(i));
    }
  }

  ScenarioResult out;
  out.rows.resize(static_cast<std::size_t>(N) + 1);
  auto error_rotation = [&](std::size_t i) { return truth[i].R * est[i].R_hat.transpose(); };

  for (std::size_t i = 0; i <= static_cast<std::size_t>(N); ++i) {
    TrajectoryRow& row = out.rows[i];
    const MeasurementRecord& rec = stream[i];
    const KMatrix<double>& K = active[i].K;
    const Rotation3d Q = error_rotation(i);
    const Rotation3d Q_next = error_rotation(i + 1);
    const Vector3d& w = est[i].omega;
    const Vector3d& w_next = est[i + 1].omega;

    row.step = static_cast<std::int64_t>(i);
    row.time_s = static_cast<double>(i) * h;
    row.phi_rad = principal_angle(Q);
    row.omega_err = w;
    row.potential = potential_error(Q, K);
    row.kinetic = kinetic_energy_l(w, g.m);
    row.V = g.kp * row.potential + row.kinetic;
    const double V_next = lyapunov_value(Q_next, w_next, K, g);
    const DecrementCheck<double> dv = lyapunov_decrement_check(w, w_next, row.V, V_next, g.l);
    row.delta_V = dv.observed;
    row.predicted_delta_V = dv.predicted;
    row.defect = dv.defect;
    row.defect_bound = defect_bound(cfg.defect_c, h, w, row.phi_rad);
    row.num_vectors = static_cast<int>(rec.E.observed());
    row.fresh = rec.fresh.has_value() && !rec.rejected;

    row.tau_D = dissipation_torque(w, w_next, est[i].omega_hat, est[i + 1].omega_hat,
                                   grad[i + 1], g);
    row.prop1_residual = prop1_residual(w, w_next, est[i + 2].omega, est[i].omega_hat,
                                        est[i + 1].omega_hat, grad[i + 1], row.tau_D, g);
    row.vector_error =
        (rec.U_tilde.matrix() - truth[i].R.matrix().transpose() * rec.E.matrix()).norm();
  }

  RunSummary& s = out.summary;
  s.seed = cfg.seed;
  s.rows = static_cast<std::int64_t>(out.rows.size());
  s.initial_phi = out.rows.front().phi_rad;
  s.final_phi = out.rows.back().phi_rad;
  s.final_omega_norm = out.rows.back().omega_err.norm();
  s.min_V = std::numeric_limits<double>::infinity();
  s.max_V = -std::numeric_limits<double>::infinity();
  const double settle_start = cfg.duration / 2;
  for (const TrajectoryRow& r : out.rows) {
    s.min_V = std::min(s.min_V, r.V);
    s.max_V = std::max(s.max_V, r.V);
    if (r.time_s > settle_start) {
      s.settled_phi_max = std::max(s.settled_phi_max, r.phi_rad);
      s.settled_omega_max = std::max(s.settled_omega_max, r.omega_err.norm());
    }
    if (r.delta_V > r.defect_bound) ++s.delta_v_violations;
    s.max_defect = std::max(s.max_defect, r.defect);
    s.max_defect_ratio = std::max(s.max_defect_ratio, r.defect / r.defect_bound);
    s.max_prop1_residual = std::max(s.max_prop1_residual, r.prop1_residual);
    s.max_vector_error = std::max(s.max_vector_error, r.vector_error);
  }
  s.steps_to_settle = steps_to_threshold(out.rows, cfg.settle_phi_rad);
  s.rejected_blocks = rejected;
  s.held_last_gyro = true;
  s.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

std::optional<std::int64_t> steps_to_threshold(const std::vector<TrajectoryRow>& rows,
                                               double threshold) {
  for (const TrajectoryRow& r : rows) {
    if (r.phi_rad <= threshold) return r.step;
  }
  return std::nullopt;
}

std::int64_t monotone_onset(const std::vector<TrajectoryRow>& rows, double allowance) {
  std::int64_t onset = 0;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i + 1].phi_rad > rows[i].phi_rad + allowance) onset = rows[i + 1].step;
  }
  return onset;
}

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << kTrajectoryHeader << '\n';
  std::string line;
  for (const TrajectoryRow& r : rows) {
    line.clear();
    line += std::to_string(r.step);
    for (double x : {r.time_s, r.phi_rad, r.omega_err(0), r.omega_err(1), r.omega_err(2), r.V,
                     r.delta_V, r.potential, r.kinetic}) {
      line += ',';
      line += format_real(x);
    }
    line += ',';
    line += std::to_string(r.num_vectors);
    line += r.fresh ? ",1\n" : ",0\n";
    out << line;
  }
}

void write_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trajectory " + path.string());
  write_trajectory(out, rows);
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["rows"] = s.rows;
  j["initial_phi_rad"] = s.initial_phi;
  j["final_phi_rad"] = s.final_phi;
  j["settled_phi_max_rad"] = s.settled_phi_max;
  j["final_omega_norm"] = s.final_omega_norm;
  j["settled_omega_max"] = s.settled_omega_max;
  j["min_V"] = s.min_V;
  j["max_V"] = s.max_V;
  j["delta_v_violations"] = s.delta_v_violations;
  j["max_defect"] = s.max_defect;
  j["max_defect_ratio"] = s.max_defect_ratio;
  j["max_prop1_residual"] = s.max_prop1_residual;
  j["max_vector_error"] = s.max_vector_error;
  j["steps_to_settle"] =
      s.steps_to_settle ? nlohmann::json(*s.steps_to_settle) : nlohmann::json(nullptr);
  j["rejected_blocks"] = s.rejected_blocks;
  j["held_last_gyro"] = s.held_last_gyro;
  j["wall_clock_s"] = s.wall_clock_s;
  return j;
}

}  // namespace

std::string summary_json(const RunSummary& s) { return to_json(s).dump(2); }

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2;
}

BatchResult run_batch(const ScenarioConfig& cfg, int trials, unsigned threads) {
  if (trials < 1) throw ValidationError("batch needs at least one trial");
  BatchResult out;
  out.trials.resize(static_cast<std::size_t>(trials));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.trials.size(); i = next++) {
      TrialOutcome& t = out.trials[i];
      t.index = i;
      t.seed = cfg.seed + cfg.seed_stride * i;
      ScenarioConfig trial_cfg = cfg;
      trial_cfg.seed = t.seed;
      try {
        t.summary = run_scenario(trial_cfg).summary;
      } catch (const std::exception& e) {
        t.error = e.what();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(trials));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  std::vector<double> band, settle, final_phi;
  for (const TrialOutcome& t : out.trials) {
    if (!t.summary) {
      ++out.failures;
      continue;
    }
    const RunSummary& s = *t.summary;
    band.push_back(s.settled_phi_max);
    final_phi.push_back(s.final_phi);
    settle.push_back(static_cast<double>(s.steps_to_settle.value_or(s.rows)));
  }
  out.median_settled_phi = median(band);
  out.max_settled_phi =
      band.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(band.begin(), band.end());
  out.median_steps_to_settle = median(settle);
  out.median_final_phi = median(final_phi);
  return out;
}

std::string batch_json(const BatchResult& b) {
  nlohmann::json j;
  j["failures"] = b.failures;
  j["median_settled_phi_rad"] = b.median_settled_phi;
  j["max_settled_phi_rad"] = b.max_settled_phi;
  j["median_steps_to_settle"] = b.median_steps_to_settle;
  j["median_final_phi_rad"] = b.median_final_phi;
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialOutcome& t : b.trials) {
    nlohmann::json tj;
    tj["index"] = t.index;
    tj["seed"] = t.seed;
    if (t.summary) {
      tj["summary"] = to_json(*t.summary);
    } else {
      tj["error"] = t.error;
    }
    trials.push_back(std::move(tj));
  }
  j["trials"] = std::move(trials);
  return j.dump(2);
}

}  // namespace so3me
