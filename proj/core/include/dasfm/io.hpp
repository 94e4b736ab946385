#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "dasfm/eval.hpp"
#include "dasfm/experiment.hpp"
#include "dasfm/solver.hpp"

namespace dasfm::io {

// Unreadable/unwritable files and malformed documents.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configs: a JSON object, every key optional, unknown keys rejected with a
// ConfigError naming the key path (e.g. "solver.lamda_R").
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& cfg);

std::string dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const std::string& text);

std::string reconstruction_to_json(const solver::Reconstruction& r, const solver::SolverOptions& opts);
solver::Reconstruction reconstruction_from_json(const std::string& text);
// Options stored alongside a reconstruction.
solver::SolverOptions options_from_reconstruction_json(const std::string& text);

std::string report_to_json(const eval::ErrorReport& rep, const eval::DeadReckoningReport& dr);

// Plot data: one row per frame with log-rotations and positions of truth,
// estimate and IMU dead reckoning.
std::string trajectory_csv(const sim::Trajectory& traj, const eval::ErrorReport& rep,
                           const eval::DeadReckoningReport& dr);
// One row per landmark: ground truth and aligned estimate.
std::string structure_csv(const sim::Scene& scene, const eval::ErrorReport& rep);

// %.17g formatting used by every numeric output.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dasfm::io
