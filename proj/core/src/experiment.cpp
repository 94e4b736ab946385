#include "dasfm/experiment.hpp"

#include <cmath>
#include <numbers>

#include "dasfm/error.hpp"

namespace dasfm {

namespace {

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

void RunConfig::validate() const {
  require(std::isfinite(t_s) && t_s > 0.0, "t_s", "must be positive");
  require(std::isfinite(duration) && duration >= 3.0 * t_s, "duration", "must be at least 3 * t_s");
  require(points >= 4, "points", "must be at least 4");
  require(std::isfinite(extent) && extent > 0.0, "extent", "must be positive");
  require(std::isfinite(amp_trans) && amp_trans >= 0.0, "amp_trans", "must be non-negative");
  require(std::isfinite(amp_rot) && amp_rot >= 0.0 && amp_rot < std::numbers::pi, "amp_rot",
          "must lie in [0, pi)");
  require(noise.gyro_std >= 0.0, "noise.gyro_std", "must be non-negative");
  require(noise.accel_std >= 0.0, "noise.accel_std", "must be non-negative");
  require(noise.image_rel_std >= 0.0, "noise.image_rel_std", "must be non-negative");
  require(solver.lambda_R >= 0.0, "solver.lambda_R", "must be non-negative");
  require(solver.lambda_tau >= 0.0, "solver.lambda_tau", "must be non-negative");
  require(solver.lambda_nu >= 0.0, "solver.lambda_nu", "must be non-negative");
  try {
    solver.validate();
  } catch (const Error& e) {
    throw ConfigError("solver", e.what());
  }
}

Dataset simulate_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.seed = cfg.seed;
  d.flow_mode = cfg.flow_mode;
  d.noise = cfg.noise;
  d.noise.seed = sim::derive_seed(cfg.seed, 3);
  d.scene = sim::generate_scene(cfg.points, cfg.extent, sim::derive_seed(cfg.seed, 1));
  d.trajectory = sim::generate_trajectory(cfg.duration, cfg.t_s, cfg.amp_trans, cfg.amp_rot,
                                          sim::derive_seed(cfg.seed, 2));
  const deriv::TrackFilters filters{
      deriv::savgol_filter(cfg.solver.track_filter.order, cfg.solver.track_filter.window, 1),
      deriv::savgol_filter(cfg.solver.track_filter.order, cfg.solver.track_filter.window, 2)};
  const auto clean =
      sim::synthesize_measurements(d.trajectory, d.scene, d.gravity, cfg.flow_mode, filters);
  d.measurements = sim::add_noise(clean, d.noise, cfg.flow_mode, filters);
  return d;
}

RunResult run_dataset(const Dataset& data, const solver::SolverOptions& opts) {
  RunResult r;
  r.recon = solver::reconstruct(data.measurements, opts);
  r.report = eval::evaluate(r.recon, data.trajectory, data.scene, data.gravity);
  r.dead_reckoning = eval::dead_reckoning(data.measurements, data.trajectory, data.gravity);
  return r;
}

}  // namespace dasfm
