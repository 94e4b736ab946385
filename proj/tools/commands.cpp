#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dasfm/error.hpp"
#include "dasfm/eval.hpp"
#include "dasfm/io.hpp"

namespace dasfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

// Maps exceptions escaping a command body to exit codes. Library errors
// are attributed to `library_code` (solver or evaluation, by command).
template <typename Body>
int guarded(std::ostream& err, int library_code, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    if (library_code == kSolverError && !e.stage().empty()) {
      err << "solver error in stage " << e.stage() << ": " << e.what() << '\n';
    } else {
      err << (library_code == kSolverError ? "solver error: " : "evaluation error: ") << e.what()
          << '\n';
    }
    return library_code;
  }
}

void print_residuals(std::ostream& out, const solver::Reconstruction& r) {
  const auto& res = r.residuals;
  out << "sigma5/sigma4 " << fmt("%.3e", res.sigma_ratio) << "  rotation lsq "
      << fmt("%.3e", res.rotation_lsq) << "  translation lsq " << fmt("%.3e", res.translation_lsq)
      << "  metric upgrade " << fmt("%.3e", res.metric_upgrade) << '\n';
}

void print_report(std::ostream& out, const eval::ErrorReport& rep,
                  const eval::DeadReckoningReport& dr) {
  out << "rotation " << fmt("%.4g", rep.rot_err_mean) << " rad  translation "
      << fmt("%.4g", rep.trans_rmse) << " m  structure " << fmt("%.4g", rep.struct_rmse)
      << " m  gravity " << fmt("%.4g", rep.gravity_angle_err) << " rad\n"
      << "camera-axis error x/y/z " << fmt("%.4g", rep.per_axis_err.x()) << ' '
      << fmt("%.4g", rep.per_axis_err.y()) << ' ' << fmt("%.4g", rep.per_axis_err.z())
      << " m  imu-only terminal " << fmt("%.4g", dr.terminal_rmse) << " m\n";
}

int write_eval_outputs(const Dataset& d, const solver::Reconstruction& recon, const fs::path& out_dir,
                       bool quiet, std::ostream& out) {
  const eval::ErrorReport rep = eval::evaluate(recon, d.trajectory, d.scene, d.gravity);
  const eval::DeadReckoningReport dr = eval::dead_reckoning(d.measurements, d.trajectory, d.gravity);
  const std::string report = io::report_to_json(rep, dr);
  const std::string traj = io::trajectory_csv(d.trajectory, rep, dr);
  const std::string structure = io::structure_csv(d.scene, rep);
  ensure_dir(out_dir);
  io::write_file(out_dir / "report.json", report);
  io::write_file(out_dir / "trajectory.csv", traj);
  io::write_file(out_dir / "structure.csv", structure);
  if (!quiet) print_report(out, rep, dr);
  return kOk;
}

std::vector<std::uint64_t> seed_list(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(key, "expected an array of seeds");
  std::vector<std::uint64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(key, "seeds must be non-negative integers");
    }
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

}  // namespace

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config ? io::load_config(*flags.config) : RunConfig{};
  if (flags.seed) cfg.seed = *flags.seed;
  cfg.validate();
  return cfg;
}

SweepSpec parse_sweep_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("sweep", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("sweep", "expected an object");
  SweepSpec spec;
  for (const auto& [k, v] : j.items()) {
    if (k != "seeds" && k != "seed_count" && k != "seed_start" && k != "noise_scales") {
      throw ConfigError("sweep." + k, "unknown field");
    }
  }
  if (j.contains("seeds")) {
    if (j.contains("seed_count") || j.contains("seed_start")) {
      throw ConfigError("sweep.seeds", "give either seeds or seed_count/seed_start");
    }
    spec.seeds = seed_list(j["seeds"], "sweep.seeds");
  } else {
    const json count = j.value("seed_count", json(1));
    const json start = j.value("seed_start", json(0));
    if (!count.is_number_integer() || count.get<std::int64_t>() < 1) {
      throw ConfigError("sweep.seed_count", "expected a positive integer");
    }
    if (!start.is_number_integer() || start.get<std::int64_t>() < 0) {
      throw ConfigError("sweep.seed_start", "expected a non-negative integer");
    }
    for (std::int64_t i = 0; i < count.get<std::int64_t>(); ++i) {
      spec.seeds.push_back(start.get<std::uint64_t>() + static_cast<std::uint64_t>(i));
    }
  }
  if (j.contains("noise_scales")) {
    const json& s = j["noise_scales"];
    if (!s.is_array() || s.empty()) throw ConfigError("sweep.noise_scales", "expected a non-empty array");
    spec.noise_scales.clear();
    for (const auto& v : s) {
      if (!v.is_number() || v.get<double>() < 0.0) {
        throw ConfigError("sweep.noise_scales", "scales must be non-negative numbers");
      }
      spec.noise_scales.push_back(v.get<double>());
    }
  }
  if (spec.seeds.empty()) throw ConfigError("sweep.seeds", "no seeds given");
  return spec;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepSpec& spec, int jobs) {
  std::vector<SweepRow> rows;
  for (double scale : spec.noise_scales) {
    for (std::uint64_t seed : spec.seeds) {
      SweepRow r;
      r.seed = seed;
      r.noise_scale = scale;
      rows.push_back(r);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      try {
        RunConfig cfg = base;
        cfg.seed = row.seed;
        cfg.noise.gyro_std *= row.noise_scale;
        cfg.noise.accel_std *= row.noise_scale;
        cfg.noise.image_rel_std *= row.noise_scale;
        const Dataset d = simulate_dataset(cfg);
        const RunResult res = run_dataset(d, cfg.solver);
        row.trans_rmse = res.report.trans_rmse;
        row.dr_terminal_rmse = res.dead_reckoning.terminal_rmse;
        row.rot_err_mean = res.report.rot_err_mean;
        row.struct_rmse = res.report.struct_rmse;
        row.gravity_angle_err = res.report.gravity_angle_err;
        row.per_axis_err = res.report.per_axis_err;
        row.sigma_ratio = res.recon.residuals.sigma_ratio;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };

  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "seed,noise_scale,status,trans_rmse,dr_trans_rmse,rot_err_mean,struct_rmse,"
        "gravity_angle_err,err_x,err_y,err_z,sigma_ratio\n";
  const auto f = io::format_double;
  for (const auto& r : rows) {
    os << r.seed << ',' << f(r.noise_scale) << ',' << (r.ok ? "ok" : "failed");
    if (r.ok) {
      for (double v : {r.trans_rmse, r.dr_terminal_rmse, r.rot_err_mean, r.struct_rmse,
                       r.gravity_angle_err, r.per_axis_err.x(), r.per_axis_err.y(),
                       r.per_axis_err.z(), r.sigma_ratio}) {
        os << ',' << f(v);
      }
    } else {
      os << ",,,,,,,,,";
    }
    os << '\n';
  }
  return os.str();
}

int cmd_simulate(const CommonFlags& flags, const fs::path& out_path, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, kConfigError, [&] {
    const RunConfig cfg = resolve_config(flags);
    const Dataset d = simulate_dataset(cfg);
    ensure_parent(out_path);
    io::write_file(out_path, io::dataset_to_json(d));
    if (!flags.quiet) {
      out << "F " << d.measurements.frames() << "  P " << d.measurements.points()
          << "  peak speed " << fmt("%.4g", d.trajectory.peak_speed) << " m/s  peak rotation "
          << fmt("%.4g", d.trajectory.peak_rotation) << " rad\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_solve(const CommonFlags& flags, const fs::path& dataset_path, const fs::path& out_path,
              std::ostream& out, std::ostream& err) {
  return guarded(err, kSolverError, [&] {
    const RunConfig cfg = resolve_config(flags);
    const Dataset d = io::dataset_from_json(io::read_file(dataset_path));
    const solver::Reconstruction r = solver::reconstruct(d.measurements, cfg.solver);
    ensure_parent(out_path);
    io::write_file(out_path, io::reconstruction_to_json(r, cfg.solver));
    if (!flags.quiet) print_residuals(out, r);
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const CommonFlags& flags, const fs::path& recon_path, const fs::path& dataset_path,
             const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, kEvalError, [&] {
    const Dataset d = io::dataset_from_json(io::read_file(dataset_path));
    const solver::Reconstruction r = io::reconstruction_from_json(io::read_file(recon_path));
    return write_eval_outputs(d, r, out_dir, flags.quiet, out);
  });
}

int cmd_sweep(const CommonFlags& flags, const fs::path& sweep_path, int jobs, const fs::path& out_dir,
              std::ostream& out, std::ostream& err) {
  return guarded(err, kEvalError, [&] {
    const RunConfig cfg = resolve_config(flags);
    const SweepSpec spec = parse_sweep_spec(io::read_file(sweep_path));
    const auto rows = run_sweep(cfg, spec, jobs);
    ensure_dir(out_dir);
    io::write_file(out_dir / "sweep.csv", sweep_csv(rows));
    int failed = 0;
    for (const auto& r : rows) {
      if (!r.ok) {
        ++failed;
        err << "run seed=" << r.seed << " scale=" << io::format_double(r.noise_scale)
            << " failed: " << r.error << '\n';
      }
    }
    if (!flags.quiet) {
      int wins = 0;
      for (const auto& r : rows) wins += r.ok && r.trans_rmse < r.dr_terminal_rmse;
      out << rows.size() << " runs, " << failed << " failed, " << wins
          << " with lower translation error than imu-only\n";
    }
    return failed == static_cast<int>(rows.size()) ? static_cast<int>(kSolverError)
                                                   : static_cast<int>(kOk);
  });
}

int cmd_pipeline(const CommonFlags& flags, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  const fs::path dataset = out_dir / "dataset.json";
  const fs::path recon = out_dir / "reconstruction.json";
  if (int rc = cmd_simulate(flags, dataset, out, err); rc != kOk) return rc;
  if (int rc = cmd_solve(flags, dataset, recon, out, err); rc != kOk) return rc;
  return cmd_eval(flags, recon, dataset, out_dir, out, err);
}

}  // namespace dasfm::cli
