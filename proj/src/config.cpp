#include "so3me/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "so3me/errors.hpp"

namespace so3me {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::kOff: return "off";
    case NoiseMode::kRotational: return "rot";
    case NoiseMode::kAdditive: return "add";
  }
  return "?";
}

std::string to_string(TruthAttitudeMode mode) {
  return mode == TruthAttitudeMode::kDiscrete ? "discrete" : "rk4";
}

NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "off") return NoiseMode::kOff;
  if (s == "rot" || s == "rotational") return NoiseMode::kRotational;
  if (s == "add" || s == "additive") return NoiseMode::kAdditive;
  throw std::invalid_argument("noise mode must be off, rot or add (got '" + s + "')");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Field parsers throw std::invalid_argument; the caller adds line context.
double parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a real number, got '" + std::string(s) + "'");
  }
  if (!std::isfinite(x)) throw std::invalid_argument("value must be finite");
  return x;
}

template <typename Int>
Int parse_integer(std::string_view s) {
  s = trim(s);
  Int x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  }
  return x;
}

Vector3d parse_vector(std::string_view s) {
  Vector3d v;
  int i = 0;
  while (true) {
    const auto comma = s.find(',');
    if (i == 3) throw std::invalid_argument("expected exactly three components");
    v(i++) = parse_real(s.substr(0, comma));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (i != 3) throw std::invalid_argument("expected exactly three components");
  return v;
}

std::string format_vector(const Vector3d& v) {
  return format_real(v(0)) + ", " + format_real(v(1)) + ", " + format_real(v(2));
}

struct Field {
  const char* key;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename T>
Field real_field(const char* key, T ScenarioConfig::*member) {
  return {key, [member](ScenarioConfig& c, std::string_view v) { c.*member = parse_real(v); },
          [member](const ScenarioConfig& c) { return format_real(c.*member); }};
}

template <typename T>
Field int_field(const char* key, T ScenarioConfig::*member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view v) { c.*member = parse_integer<T>(v); },
          [member](const ScenarioConfig& c) { return std::to_string(c.*member); }};
}

Field vector_field(const char* key, Vector3d ScenarioConfig::*member) {
  return {key, [member](ScenarioConfig& c, std::string_view v) { c.*member = parse_vector(v); },
          [member](const ScenarioConfig& c) { return format_vector(c.*member); }};
}

Field string_field(const char* key, std::string ScenarioConfig::*member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view v) {
            if (v.empty()) throw std::invalid_argument("value must not be empty");
            c.*member = std::string(v);
          },
          [member](const ScenarioConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      real_field("sim.h", &ScenarioConfig::h),
      real_field("sim.duration", &ScenarioConfig::duration),
      int_field("sim.seed", &ScenarioConfig::seed),
      {"sim.truth_attitude",
       [](ScenarioConfig& c, std::string_view v) {
         if (v == "discrete") {
           c.truth_attitude = TruthAttitudeMode::kDiscrete;
         } else if (v == "rk4") {
           c.truth_attitude = TruthAttitudeMode::kRk4;
         } else {
           throw std::invalid_argument("truth attitude mode must be discrete or rk4");
         }
       },
       [](const ScenarioConfig& c) { return to_string(c.truth_attitude); }},

      int_field("sensors.n", &ScenarioConfig::n),
      real_field("sensors.gyro_noise_bound_deg_s", &ScenarioConfig::gyro_noise_bound_deg_s),
      real_field("sensors.vector_noise_bound_deg", &ScenarioConfig::vector_noise_bound_deg),
      int_field("sensors.k_min", &ScenarioConfig::k_min),
      int_field("sensors.k_max", &ScenarioConfig::k_max),
      {"sensors.noise",
       [](ScenarioConfig& c, std::string_view v) { c.noise = parse_noise_mode(std::string(v)); },
       [](const ScenarioConfig& c) { return to_string(c.noise); }},

      real_field("gains.m", &ScenarioConfig::m),
      real_field("gains.l", &ScenarioConfig::l),
      real_field("gains.kp", &ScenarioConfig::kp),
      vector_field("weights.d", &ScenarioConfig::d),

      vector_field("truth.inertia", &ScenarioConfig::inertia),
      vector_field("truth.torque_amplitude", &ScenarioConfig::torque_amplitude),
      vector_field("truth.torque_frequency", &ScenarioConfig::torque_frequency),
      vector_field("truth.attitude_axis", &ScenarioConfig::attitude_axis),
      real_field("truth.attitude_angle", &ScenarioConfig::attitude_angle),
      vector_field("truth.omega0", &ScenarioConfig::omega0),

      vector_field("estimator.error_axis", &ScenarioConfig::error_axis),
      real_field("estimator.error_angle", &ScenarioConfig::error_angle),
      vector_field("estimator.omega_error0", &ScenarioConfig::omega_error0),

      string_field("output.dir", &ScenarioConfig::output_dir),
      string_field("output.trajectory", &ScenarioConfig::trajectory),

      int_field("batch.trials", &ScenarioConfig::trials),
      int_field("batch.seed_stride", &ScenarioConfig::seed_stride),

      real_field("analysis.defect_c", &ScenarioConfig::defect_c),
      real_field("analysis.settle_phi_rad", &ScenarioConfig::settle_phi_rad),
      int_field("analysis.reproject_every", &ScenarioConfig::reproject_every),
  };
  return table;
}

Rotation3d axis_angle(const Vector3d& axis, double angle) {
  if (angle == 0) return Rotation3d::identity();
  return exp_so3<double>(axis.normalized() * angle);
}

}  // namespace

std::int64_t ScenarioConfig::steps() const { return std::llround(duration / h); }

FilterGains<double> ScenarioConfig::gains() const { return {m, l, kp, h}; }

SensorConfig ScenarioConfig::sensors() const {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  SensorConfig s;
  s.h = h;
  s.n = n;
  s.gyro_noise_bound = gyro_noise_bound_deg_s * kDeg;
  s.vector_noise_bound = vector_noise_bound_deg * kDeg;
  s.k_min = k_min;
  s.k_max = k_max;
  s.seed = seed;
  s.noise = noise;
  return s;
}

TruthParams ScenarioConfig::truth() const {
  TruthParams p;
  p.inertia = inertia;
  p.torque = SinusoidalTorque{torque_amplitude, torque_frequency};
  p.R0 = axis_angle(attitude_axis, attitude_angle);
  p.omega0 = omega0;
  p.attitude_mode = truth_attitude;
  p.reproject_every = reproject_every;
  return p;
}

Rotation3d ScenarioConfig::initial_estimate_error() const {
  return axis_angle(error_axis, error_angle);
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  try {
    gains().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(duration > 0)) fail("sim.duration must be > 0");
  const double ratio = duration / h;
  const double whole = std::round(ratio);
  if (!(std::abs(ratio - whole) <=
        std::nextafter(ratio, std::numeric_limits<double>::infinity()) - ratio) ||
      whole < 1) {
    fail("sim.duration / sim.h must be a whole number of steps");
  }
  if (n < 1) fail("sensors.n must be >= 1");
  if (!(gyro_noise_bound_deg_s >= 0)) fail("sensors.gyro_noise_bound_deg_s must be >= 0");
  if (!(vector_noise_bound_deg >= 0 && vector_noise_bound_deg < 90)) {
    fail("sensors.vector_noise_bound_deg must be in [0, 90)");
  }
  if (k_min < 2 || k_max > 9 || k_min > k_max) {
    fail("sensors.k_min and sensors.k_max need 2 <= k_min <= k_max <= 9");
  }
  try {
    require_distinct_positive(d);
  } catch (const std::exception& e) {
    fail(std::string("weights.d: ") + e.what());
  }
  if (!(inertia.minCoeff() > 0)) fail("truth.inertia must be positive");
  if (attitude_angle != 0 && !(attitude_axis.norm() > 0)) {
    fail("truth.attitude_axis must be nonzero");
  }
  if (error_angle != 0 && !(error_axis.norm() > 0)) fail("estimator.error_axis must be nonzero");
  if (trials < 1) fail("batch.trials must be >= 1");
  if (!(defect_c > 0)) fail("analysis.defect_c must be > 0");
  if (!(settle_phi_rad > 0)) fail("analysis.settle_phi_rad must be > 0");
  if (reproject_every < 0) fail("analysis.reproject_every must be >= 0");
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, line_no, "", "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ParseError(source, line_no, key, "unknown key");
    if (!seen.insert(key).second) throw ParseError(source, line_no, key, "repeated key");
    try {
      it->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, key, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return explicit_path;
  const char* env = std::getenv("SO3ME_DEFAULT_CONFIG");
  if (env == nullptr) return std::nullopt;
  std::string_view rest(env);
  while (!rest.empty()) {
    const auto colon = rest.find(':');
    const std::filesystem::path entry(std::string(rest.substr(0, colon)));
    rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
    if (entry.empty()) continue;
    std::error_code ec;
    if (std::filesystem::is_directory(entry, ec)) {
      const auto candidate = entry / "so3me.conf";
      if (std::filesystem::is_regular_file(candidate, ec)) return candidate;
    } else if (std::filesystem::is_regular_file(entry, ec)) {
      return entry;
    }
  }
  return std::nullopt;
}

}  // namespace so3me
