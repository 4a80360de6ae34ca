// so3me: run, batch, verify and plot attitude-filter scenarios.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "so3me/config.hpp"
#include "so3me/errors.hpp"
#include "so3me/plots.hpp"
#include "so3me/scenario.hpp"

namespace fs = std::filesystem;
using namespace so3me;

namespace {

ScenarioConfig load(const std::string& config_arg) {
  std::optional<fs::path> explicit_path;
  if (!config_arg.empty()) explicit_path = config_arg;
  const auto path = resolve_config_path(explicit_path);
  if (!path) return ScenarioConfig{};
  return load_config(*path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed,
            const std::string& noise, const std::string& out_dir, bool plots) {
  ScenarioConfig cfg = load(config);
  if (seed) cfg.seed = *seed;
  if (!noise.empty()) cfg.noise = parse_noise_mode(noise);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();

  const ScenarioResult result = run_scenario(cfg);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const fs::path trajectory = dir / cfg.trajectory;
  write_trajectory(trajectory, result.rows);
  write_text(dir / "summary.json", summary_json(result.summary) + "\n");
  if (plots) emit_plots(trajectory, dir);
  std::cout << summary_json(result.summary) << '\n';
  return 0;
}

int cmd_batch(const std::string& config, std::optional<int> trials, const std::string& out_dir) {
  ScenarioConfig cfg = load(config);
  if (trials) cfg.trials = *trials;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();

  const BatchResult batch = run_batch(cfg, cfg.trials);
  const std::string text = batch_json(batch);
  fs::create_directories(cfg.output_dir);
  write_text(fs::path(cfg.output_dir) / "batch.json", text + "\n");
  std::cout << text << '\n';
  return batch.failures == 0 ? 0 : 1;
}

int cmd_verify(const std::string& config) {
  ScenarioConfig cfg = load(config);
  cfg.noise = NoiseMode::kOff;
  const ScenarioResult result = run_scenario(cfg);
  const RunSummary& s = result.summary;

  bool all = true;
  auto report = [&](const char* name, bool ok, const std::string& detail) {
    all = all && ok;
    std::printf("%s %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  };
  constexpr double kResidualTol = 1e-12;
  report("implicit-residual", s.max_prop1_residual <= kResidualTol,
         "max " + format_real(s.max_prop1_residual) + " <= " + format_real(kResidualTol));
  report("lyapunov-defect", s.max_defect_ratio <= 1.0,
         "max defect " + format_real(s.max_defect) + ", max defect/bound " +
             format_real(s.max_defect_ratio) + " (C = " + format_real(cfg.defect_c) + ")");
  report("lyapunov-sign", s.delta_v_violations == 0,
         std::to_string(s.delta_v_violations) + " steps with deltaV above the defect bound");
  if (cfg.truth_attitude == TruthAttitudeMode::kDiscrete) {
    constexpr double kVectorTol = 1e-10;
    report("vector-propagation", s.max_vector_error <= kVectorTol,
           "max |U~ - R^T E| " + format_real(s.max_vector_error));
  }
  return all ? 0 : 1;
}

int cmd_plot(const std::string& trajectory, const std::string& out_dir) {
  const PlotFiles files = emit_plots(trajectory, out_dir);
  std::cout << files.phi.string() << '\n' << files.omega.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-rate attitude filter on SO(3): simulation and checks"};
  app.require_subcommand(1);

  std::string config, noise, out_dir, trajectory;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool plots = false;

  auto* run = app.add_subcommand("run", "Run one scenario and write its trajectory");
  run->add_option("--config", config, "Config file (default: SO3ME_DEFAULT_CONFIG, then built-in)");
  run->add_option("--seed", seed, "Override sim.seed");
  run->add_option("--noise", noise, "Override sensors.noise")
      ->check(CLI::IsMember({"off", "rot", "add"}));
  run->add_option("--out", out_dir, "Override output.dir");
  run->add_flag("--plots", plots, "Also write phi.svg and omega.svg");

  auto* batch = app.add_subcommand("batch", "Run seeded trials and aggregate");
  batch->add_option("--config", config, "Config file");
  batch->add_option("--trials", trials, "Override batch.trials")->check(CLI::PositiveNumber);
  batch->add_option("--out", out_dir, "Override output.dir");

  auto* verify = app.add_subcommand("verify", "Noise-free residual and Lyapunov checks");
  verify->add_option("--config", config, "Config file");

  auto* plot = app.add_subcommand("plot", "Plot an existing trajectory file");
  plot->add_option("--trajectory", trajectory, "Trajectory CSV")->required();
  plot->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, seed, noise, out_dir, plots);
    if (batch->parsed()) return cmd_batch(config, trials, out_dir);
    if (verify->parsed()) return cmd_verify(config);
    if (plot->parsed()) return cmd_plot(trajectory, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "so3me: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
