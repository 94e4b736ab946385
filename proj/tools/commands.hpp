#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dasfm/experiment.hpp"

namespace dasfm::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kSolverError = 4,
  kEvalError = 5,
};

struct CommonFlags {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

// Reads --config (or the defaults) and applies --seed.
RunConfig resolve_config(const CommonFlags& flags);

struct SweepSpec {
  std::vector<std::uint64_t> seeds;
  std::vector<double> noise_scales{1.0};
};

// {"seeds": [..]} or {"seed_count": N, "seed_start": S}, plus optional
// "noise_scales": [..]. Unknown keys are rejected.
SweepSpec parse_sweep_spec(const std::string& text);

struct SweepRow {
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  bool ok = false;
  std::string error;
  double trans_rmse = 0.0;
  double dr_terminal_rmse = 0.0;
  double rot_err_mean = 0.0;
  double struct_rmse = 0.0;
  double gravity_angle_err = 0.0;
  Vec3 per_axis_err = Vec3::Zero();
  double sigma_ratio = 0.0;
};

// Runs every (noise scale, seed) pair with up to `jobs` worker threads.
// Rows come back in spec order regardless of scheduling.
std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepSpec& spec, int jobs);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Each command prints its summary to `out` (unless quiet) and diagnostics
// to `err`, and returns an ExitCode.
int cmd_simulate(const CommonFlags& flags, const std::filesystem::path& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_solve(const CommonFlags& flags, const std::filesystem::path& dataset_path,
              const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);
int cmd_eval(const CommonFlags& flags, const std::filesystem::path& recon_path,
             const std::filesystem::path& dataset_path, const std::filesystem::path& out_dir,
             std::ostream& out, std::ostream& err);
int cmd_sweep(const CommonFlags& flags, const std::filesystem::path& sweep_path, int jobs,
              const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_pipeline(const CommonFlags& flags, const std::filesystem::path& out_dir, std::ostream& out,
                 std::ostream& err);

}  // namespace dasfm::cli
