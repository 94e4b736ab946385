#pragma once

#include <random>

#include "dasfm/experiment.hpp"
#include "dasfm/sim.hpp"
#include "dasfm/so3.hpp"

namespace dasfm::testing {

// Reference instance: 5 s at 30 Hz, 24 points, 30 deg peak rotation.
inline RunConfig reference_config(std::uint64_t seed, bool noisy) {
  RunConfig cfg;
  cfg.seed = seed;
  if (!noisy) {
    cfg.noise = {};
    cfg.flow_mode = sim::FlowMode::Analytic;
  }
  return cfg;
}

inline Dataset noiseless_dataset(std::uint64_t seed = 1) {
  return simulate_dataset(reference_config(seed, false));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  return exp_so3(random_unit(rng) * u(rng));
}

inline Mat3 random_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i) = n(rng);
  return m;
}

// Ground-truth factors of W = C M S + m 1^T: M stacks R_f^T (3F x 3), S
// is the scene and m the 6F translation vector.
struct TruthFactors {
  Eigen::MatrixXd M;
  Eigen::Matrix3Xd S;
  Eigen::VectorXd m;
};

inline TruthFactors truth_factors(const Dataset& d) {
  const auto& t = d.trajectory;
  const int frames = t.size();
  const Mat23 P = projector();
  TruthFactors out;
  out.M.resize(3 * frames, 3);
  out.m.resize(6 * frames);
  out.S = d.scene.points;
  for (int f = 0; f < frames; ++f) {
    const auto& fr = t.frames[static_cast<std::size_t>(f)];
    const Mat3 w = hat(fr.omega);
    const Mat3 a = w * w - hat(fr.domega);
    const Vec3 accel = d.measurements.accel.row(f).transpose();
    out.M.middleRows<3>(3 * f) = fr.R.transpose();
    out.m.segment<2>(2 * f) = -P * t.tau(f);
    out.m.segment<2>(2 * frames + 2 * f) = P * (w * t.tau(f) - t.nu(f));
    out.m.segment<2>(4 * frames + 2 * f) =
        P * (-a * t.tau(f) + 2.0 * w * t.nu(f) - accel + fr.R.transpose() * d.gravity.g_s);
  }
  return out;
}

// Re-expresses the truth in a rotated spatial frame: R -> G R, T -> G T,
// X -> G X, g -> G g. Body-frame measurements are unchanged by this.
inline Dataset apply_gauge(const Dataset& d, const Rotation& G) {
  Dataset out = d;
  for (auto& f : out.trajectory.frames) {
    f.R = G * f.R;
    f.T = G * f.T;
    f.dT = G * f.dT;
    f.ddT = G * f.ddT;
  }
  out.scene.points = G.matrix() * d.scene.points;
  out.gravity.g_s = G * d.gravity.g_s;
  out.measurements = sim::add_noise(
      sim::synthesize_measurements(out.trajectory, out.scene, out.gravity, out.flow_mode), out.noise,
      out.flow_mode);
  return out;
}

}  // namespace dasfm::testing
