// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dasfm/deriv.hpp"
#include "dasfm/io.hpp"
#include "dasfm/solver.hpp"
#include "support.hpp"

namespace {

using namespace dasfm;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Series3 true_omega_dot(const Dataset& d) {
  Series3 out(d.trajectory.size(), 3);
  for (int f = 0; f < d.trajectory.size(); ++f) {
    out.row(f) = d.trajectory.frames[static_cast<std::size_t>(f)].domega.transpose();
  }
  return out;
}

Verdict noiseless_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const Dataset d = testing::noiseless_dataset(1);
  const RunResult r = run_dataset(d, {});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& rep = r.report;
  const bool ok = d.measurements.frames() == 150 && d.measurements.points() == 24 && rep.struct_rmse < 1e-6 &&
                  rep.rot_err_mean < 1e-6 && rep.gravity_angle_err < 1e-6 &&
                  r.recon.residuals.sigma_ratio < 1e-8 && seconds < 10.0;
  return {ok, "struct " + fmt("%.2e", rep.struct_rmse) + " rot " + fmt("%.2e", rep.rot_err_mean) + " grav " +
                  fmt("%.2e", rep.gravity_angle_err) + " s5/s4 " + fmt("%.2e", r.recon.residuals.sigma_ratio) +
                  " time " + fmt("%.2fs", seconds)};
}

Verdict factorization_identity() {
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Dataset d = testing::noiseless_dataset(seed);
    const auto truth = testing::truth_factors(d);
    const Eigen::MatrixXd W = solver::assemble_W(d.measurements);
    const auto C = solver::assemble_C(d.measurements.gyro, true_omega_dot(d));
    const Eigen::MatrixXd model =
        C * truth.M * truth.S + truth.m * Eigen::RowVectorXd::Ones(truth.S.cols());
    worst = std::max(worst, (W - model).norm() / W.norm());
  }
  return {worst < 1e-12, "relative residual " + fmt("%.2e", worst)};
}

Verdict sweep(bool depth_axis) {
  static std::vector<RunResult> runs = [] {
    std::vector<RunResult> out;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      out.push_back(run_dataset(simulate_dataset(testing::reference_config(seed, true)), {}));
    }
    return out;
  }();
  int hits = 0;
  for (const auto& r : runs) {
    const Vec3& e = r.report.per_axis_err;
    hits += depth_axis ? (e.z() >= std::max(e.x(), e.y()))
                       : (r.report.trans_rmse < r.dead_reckoning.terminal_rmse);
  }
  const int need = depth_axis ? 14 : 18;
  return {hits >= need, std::to_string(hits) + "/20 runs (need " + std::to_string(need) + ")"};
}

double poly(const std::vector<double>& c, double t, int k) {
  double s = 0.0;
  for (std::size_t j = static_cast<std::size_t>(k); j < c.size(); ++j) {
    double coef = c[j];
    for (int m = 0; m < k; ++m) coef *= static_cast<double>(j) - m;
    s += coef * std::pow(t, static_cast<double>(j) - k);
  }
  return s;
}

Verdict differentiation() {
  // Slope of the least-squares line through x = (-1, 0, 1).
  const Eigen::Vector3d x(-1.0, 0.0, 1.0);
  const Eigen::Vector3d line_fit = x / x.squaredNorm();
  const double tap_err = (deriv::savgol_filter(1, 3, 1).taps() - line_fit).cwiseAbs().maxCoeff();

  const std::vector<double> c{0.3, -1.2, 0.7, 0.25, -0.05, 0.01, 0.002};
  const double t_s = 1.0 / 30.0;
  double worst = 0.0;
  for (auto [order, window] : {std::pair{1, 3}, {2, 5}, {3, 7}, {4, 9}, {6, 9}}) {
    const std::vector<double> cp(c.begin(), c.begin() + order + 1);
    Eigen::MatrixXd s(40, 1);
    for (int i = 0; i < 40; ++i) s(i, 0) = poly(cp, i * t_s, 0);
    for (int k = 1; k <= std::min(order, 2); ++k) {
      const Eigen::MatrixXd d = deriv::differentiate_series(s, t_s, deriv::savgol_filter(order, window, k));
      for (int i = 0; i < 40; ++i) {
        const double truth = poly(cp, i * t_s, k);
        worst = std::max(worst, std::abs(d(i, 0) - truth) / std::max(1.0, std::abs(truth)));
      }
    }
  }
  return {tap_err < 1e-15 && worst < 1e-10,
          "tap error " + fmt("%.1e", tap_err) + " polynomial error " + fmt("%.1e", worst)};
}

Verdict so3_suite() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi - 1e-3);
  double roundtrip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 v = testing::random_unit(rng) * angle(rng);
    roundtrip = std::max(roundtrip, (log_so3(exp_so3(v)) - v).norm());
  }
  int beaten = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const Mat3 a = testing::random_matrix(rng);
    const double best = (project_to_so3(a).matrix() - a).norm();
    bool wins = true;
    for (int k = 0; k < 1000 && wins; ++k) {
      wins = best <= (testing::random_rotation(rng).matrix() - a).norm();
    }
    beaten += wins;
  }
  return {roundtrip < 1e-10 && beaten == trials,
          "roundtrip " + fmt("%.1e", roundtrip) + ", projection optimal in " + std::to_string(beaten) + "/" +
              std::to_string(trials) + " trials"};
}

Verdict metric_upgrade() {
  std::mt19937_64 rng(77);
  double worst_q = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 K;
    do {
      K = testing::random_matrix(rng);
      const Eigen::JacobiSVD<Mat3> svd(K);
      if (svd.singularValues()(0) <= 10.0 * svd.singularValues()(2)) break;
    } while (true);
    Eigen::MatrixXd M(3 * 8, 3);
    for (int f = 0; f < 8; ++f) M.middleRows<3>(3 * f) = testing::random_rotation(rng).transpose() * K.inverse();
    const auto up = solver::metric_upgrade(M);
    const Mat3 Q = K * K.transpose();
    worst_q = std::max(worst_q, (up.Q - Q).norm() / Q.norm());
  }

  const solver::Reconstruction r = solver::reconstruct(testing::noiseless_dataset(2).measurements);
  double worst_block = 0.0;
  for (int f = 0; f < r.frames(); ++f) {
    const Mat3 b = r.motion_blocks.middleRows<3>(3 * f) * r.K_upgrade;
    worst_block = std::max(worst_block, (b * b.transpose() - Mat3::Identity()).norm());
  }
  return {worst_q < 1e-8 && worst_block < 1e-8,
          "Q error " + fmt("%.1e", worst_q) + " block orthonormality " + fmt("%.1e", worst_block)};
}

Verdict determinism_and_gauge() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dasfm_acceptance";
  fs::create_directories(dir);
  for (const char* run : {"a", "b"}) {
    const Dataset d = simulate_dataset(testing::reference_config(11, true));
    io::write_file(dir / (std::string(run) + "_dataset.json"), io::dataset_to_json(d));
    io::write_file(dir / (std::string(run) + "_recon.json"),
                   io::reconstruction_to_json(solver::reconstruct(d.measurements), {}));
  }
  const bool identical = io::read_file(dir / "a_dataset.json") == io::read_file(dir / "b_dataset.json") &&
                         io::read_file(dir / "a_recon.json") == io::read_file(dir / "b_recon.json");
  fs::remove_all(dir);

  const Dataset d = simulate_dataset(testing::reference_config(7, true));
  const Dataset g = testing::apply_gauge(d, exp_so3(Vec3(0.4, -1.1, 0.7)));
  double diff = (solver::assemble_W(d.measurements) - solver::assemble_W(g.measurements)).cwiseAbs().maxCoeff();
  const auto a = solver::reconstruct(d.measurements);
  const auto b = solver::reconstruct(g.measurements);
  for (std::size_t f = 0; f < a.rotations.size(); ++f) {
    diff = std::max(diff, (a.rotations[f].matrix() - b.rotations[f].matrix()).cwiseAbs().maxCoeff());
  }
  diff = std::max({diff, (a.tau - b.tau).cwiseAbs().maxCoeff(), (a.nu - b.nu).cwiseAbs().maxCoeff(),
                   (a.gravity - b.gravity).cwiseAbs().maxCoeff(), (a.structure - b.structure).cwiseAbs().maxCoeff()});
  return {identical && diff < 1e-9,
          std::string(identical ? "byte-identical" : "files differ") + ", gauge change " + fmt("%.1e", diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"A1 noiseless recovery", noiseless_recovery},
      {"A2 factorization identity", factorization_identity},
      {"A3 images beat dead reckoning", [] { return sweep(false); }},
      {"A4 depth-axis error dominance", [] { return sweep(true); }},
      {"A5 differentiation exactness", differentiation},
      {"A6 SO(3) suite", so3_suite},
      {"A7 metric upgrade", metric_upgrade},
      {"A8 determinism and gauge", determinism_and_gauge},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
