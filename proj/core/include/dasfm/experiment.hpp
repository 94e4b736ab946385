#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dasfm/eval.hpp"
#include "dasfm/sim.hpp"
#include "dasfm/solver.hpp"

namespace dasfm {

// Everything needed to reproduce one simulated run.
struct RunConfig {
  double duration = 5.0;
  double t_s = 1.0 / 30.0;
  int points = 24;
  double extent = 2.0;
  double amp_trans = 0.38;
  double amp_rot = 0.5235987755982988;  // 30 deg
  sim::NoiseSpec noise = sim::NoiseSpec::reference(0);
  solver::SolverOptions solver;
  sim::FlowMode flow_mode = sim::FlowMode::Numeric;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct Dataset {
  std::uint64_t seed = 0;
  sim::Gravity gravity;
  sim::Scene scene;
  sim::Trajectory trajectory;
  sim::MeasurementSet measurements;
  sim::NoiseSpec noise;
  sim::FlowMode flow_mode = sim::FlowMode::Numeric;
};

// Scene, trajectory and noise draw from independent streams derived from
// cfg.seed; noise.seed in the config is ignored in favor of that stream.
Dataset simulate_dataset(const RunConfig& cfg);

struct RunResult {
  solver::Reconstruction recon;
  eval::ErrorReport report;
  eval::DeadReckoningReport dead_reckoning;
};

// simulate -> reconstruct -> evaluate -> dead reckoning on one dataset.
RunResult run_dataset(const Dataset& data, const solver::SolverOptions& opts);

}  // namespace dasfm
