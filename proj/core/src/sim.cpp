#include "dasfm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "dasfm/error.hpp"

namespace dasfm::sim {

namespace {

struct Sinusoid {
  double amp;
  double omega;
  double phase;
};

using SinusoidSum = std::vector<Sinusoid>;

// k-th time derivative of a sum of sinusoids.
double evaluate(const SinusoidSum& s, double t, int k) {
  double v = 0.0;
  for (const auto& c : s) {
    v += c.amp * std::pow(c.omega, k) * std::sin(c.omega * t + c.phase + 0.5 * k * std::numbers::pi);
  }
  return v;
}

Vec3 evaluate(const std::array<SinusoidSum, 3>& axes, double t, int k) {
  return {evaluate(axes[0], t, k), evaluate(axes[1], t, k), evaluate(axes[2], t, k)};
}

// 2-4 components, weights normalized so that sum |amp| == amplitude.
SinusoidSum random_sinusoids(std::mt19937_64& rng, double amplitude) {
  std::uniform_int_distribution<int> count(2, 4);
  std::uniform_real_distribution<double> weight(0.5, 1.0);
  std::uniform_real_distribution<double> freq_hz(0.1, 0.3);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int n = count(rng);
  SinusoidSum s(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& c : s) {
    c.amp = weight(rng);
    c.omega = 2.0 * std::numbers::pi * freq_hz(rng);
    c.phase = phase(rng);
    total += c.amp;
  }
  for (auto& c : s) c.amp *= amplitude / total;
  return s;
}

// Coefficients of the right Jacobian J_r(phi) = I - a [phi]x + b [phi]x^2
// and the derivatives a'(theta)/theta, b'(theta)/theta.
struct JacobianCoeffs {
  double a, b, da_over_theta, db_over_theta;
};

JacobianCoeffs jacobian_coeffs(double theta) {
  const double t2 = theta * theta;
  if (theta < 0.05) {
    const double t4 = t2 * t2, t6 = t4 * t2;
    return {0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362880.0,
            -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0 + t6 / 453600.0,
            -1.0 / 60.0 + t2 / 1260.0 - t4 / 60480.0 + t6 / 4989600.0};
  }
  const double s = std::sin(theta), c = std::cos(theta);
  const double t3 = t2 * theta, t4 = t2 * t2, t5 = t4 * theta;
  return {(1.0 - c) / t2, (theta - s) / t3, (theta * s - 2.0 * (1.0 - c)) / t4,
          (1.0 - c) / t4 - 3.0 * (theta - s) / t5};
}

// Body angular velocity and acceleration of R(t) = exp([phi(t)]x).
void body_rates(const Vec3& phi, const Vec3& dphi, const Vec3& ddphi, Vec3& omega, Vec3& domega) {
  const auto k = jacobian_coeffs(phi.norm());
  const double phi_dphi = phi.dot(dphi);
  const double da = k.da_over_theta * phi_dphi;
  const double db = k.db_over_theta * phi_dphi;
  const Vec3 c1 = phi.cross(dphi);
  const Vec3 c2 = phi.cross(c1);
  omega = dphi - k.a * c1 + k.b * c2;
  domega = ddphi - da * c1 - k.a * phi.cross(ddphi) + db * c2 +
           k.b * (dphi.cross(c1) + phi.cross(phi.cross(ddphi)));
}

void check_frames(const std::vector<Eigen::Matrix2Xd>& s, int frames, int points, const char* name) {
  if (static_cast<int>(s.size()) != frames) {
    fail(ErrorCode::LengthMismatch, std::string(name) + " has " + std::to_string(s.size()) +
                                        " frames, expected " + std::to_string(frames));
  }
  for (const auto& m : s) {
    if (m.cols() != points) {
      fail(ErrorCode::LengthMismatch, std::string(name) + " has inconsistent point count");
    }
  }
}

}  // namespace

Vec3 Trajectory::tau(int f) const {
  const auto& fr = frames.at(static_cast<std::size_t>(f));
  return fr.R.transpose() * fr.T;
}

Vec3 Trajectory::nu(int f) const {
  const auto& fr = frames.at(static_cast<std::size_t>(f));
  return fr.R.transpose() * fr.dT;
}

Vec3 Trajectory::alpha(int f) const {
  const auto& fr = frames.at(static_cast<std::size_t>(f));
  return fr.R.transpose() * fr.ddT;
}

NoiseSpec NoiseSpec::reference(std::uint64_t seed) {
  return {3.0 * std::numbers::pi / 180.0, 0.2, 0.005, seed};
}

void MeasurementSet::validate() const {
  const int f = frames();
  const int p = points();
  if (f < 3 || p < 4) {
    fail(ErrorCode::TooFewFramesOrPoints,
         "need F >= 3 and P >= 4 (got F=" + std::to_string(f) + ", P=" + std::to_string(p) + ")");
  }
  check_frames(tracks, f, p, "tracks");
  check_frames(flows, f, p, "flows");
  check_frames(double_flows, f, p, "double_flows");
  if (gyro.rows() != f || accel.rows() != f) {
    fail(ErrorCode::LengthMismatch, "IMU series length differs from the frame count");
  }
  if (torque.rows() != 0 && torque.rows() != f) {
    fail(ErrorCode::LengthMismatch, "torque series length differs from the frame count");
  }
  if (!(t_s > 0.0)) fail(ErrorCode::InvalidArgument, "sample period must be positive");
}

Mat3 default_inertia() { return Vec3(0.01, 0.01, 0.02).asDiagonal(); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Scene generate_scene(int points, double extent, std::uint64_t seed) {
  if (points < 4) fail(ErrorCode::TooFewPoints, "a scene needs at least 4 points");
  if (!(extent > 0.0)) fail(ErrorCode::InvalidArgument, "scene extent must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-0.5 * extent, 0.5 * extent);
  for (int attempt = 0; attempt < 10; ++attempt) {
    Scene s{Eigen::Matrix3Xd(3, points)};
    for (int p = 0; p < points; ++p) {
      for (int i = 0; i < 3; ++i) s.points(i, p) = coord(rng);
    }
    s.points.colwise() -= s.points.rowwise().mean();
    Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(s.points);
    const auto& sv = svd.singularValues();
    if (sv(2) > 1e-6 * sv(0)) return s;
  }
  fail(ErrorCode::DegenerateScene, "could not draw a non-coplanar scene in 10 attempts");
}

Trajectory generate_trajectory(double duration, double t_s, double amp_trans, double amp_rot,
                               std::uint64_t seed) {
  if (!(t_s > 0.0) || !(duration >= 3.0 * t_s * (1.0 - 1e-9))) {
    fail(ErrorCode::BadSampling, "duration must cover at least 3 samples");
  }
  if (!(amp_trans >= 0.0) || !(amp_rot >= 0.0) || amp_rot >= std::numbers::pi) {
    fail(ErrorCode::InvalidArgument, "amplitudes must satisfy amp_trans >= 0, 0 <= amp_rot < pi");
  }
  const int frames = static_cast<int>(std::llround(duration / t_s));

  std::mt19937_64 rng(seed);
  std::array<SinusoidSum, 3> trans, rot;
  for (auto& a : trans) a = random_sinusoids(rng, amp_trans);
  for (auto& a : rot) a = random_sinusoids(rng, 1.0);

  // Rescale the rotation curve so its peak angle equals amp_rot. The grid
  // does not depend on t_s, so every sampling of the same seed shares one
  // continuous trajectory.
  constexpr int kGrid = 4001;
  double peak = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    peak = std::max(peak, evaluate(rot, duration * i / (kGrid - 1), 0).norm());
  }
  const double rot_scale = peak > 0.0 ? amp_rot / peak : 0.0;
  for (auto& a : rot) {
    for (auto& c : a) c.amp *= rot_scale;
  }

  Trajectory traj;
  traj.t_s = t_s;
  traj.frames.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const double t = f * t_s;
    TrajectoryFrame fr;
    fr.T = evaluate(trans, t, 0);
    fr.dT = evaluate(trans, t, 1);
    fr.ddT = evaluate(trans, t, 2);
    const Vec3 phi = evaluate(rot, t, 0);
    fr.R = exp_so3(phi);
    body_rates(phi, evaluate(rot, t, 1), evaluate(rot, t, 2), fr.omega, fr.domega);
    traj.peak_speed = std::max(traj.peak_speed, fr.dT.norm());
    traj.peak_rotation = std::max(traj.peak_rotation, phi.norm());
    traj.frames.push_back(fr);
  }
  return traj;
}

ImuSeries synthesize_imu(const Trajectory& traj, const Gravity& g) {
  const int n = traj.size();
  ImuSeries out{Series3(n, 3), Series3(n, 3)};
  for (int f = 0; f < n; ++f) {
    const auto& fr = traj.frames[static_cast<std::size_t>(f)];
    out.gyro.row(f) = fr.omega.transpose();
    out.accel.row(f) = (fr.R.transpose() * (fr.ddT + g.g_s)).transpose();
  }
  return out;
}

ImageSeries synthesize_images(const Trajectory& traj, const Scene& scene, const Gravity& g) {
  const int n = traj.size();
  const Mat23 proj = projector();
  ImageSeries out;
  out.tracks.reserve(static_cast<std::size_t>(n));
  out.flows.reserve(static_cast<std::size_t>(n));
  out.double_flows.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const auto& fr = traj.frames[static_cast<std::size_t>(f)];
    const Mat3 rt = fr.R.transpose();
    const Vec3 tau = rt * fr.T;
    const Vec3 nu = rt * fr.dT;
    const Vec3 accel_imu = rt * (fr.ddT + g.g_s);
    const Mat3 w = hat(fr.omega);
    const Mat3 a = w * w - hat(fr.domega);
    // Point-independent parts of the camera-frame coordinates and derivatives.
    const Vec3 c0 = -tau;
    const Vec3 c1 = w * tau - nu;
    const Vec3 c2 = -a * tau + 2.0 * w * nu - accel_imu + rt * g.g_s;

    const Eigen::Matrix3Xd body = rt * scene.points;
    out.tracks.push_back(proj * (body.colwise() + c0));
    out.flows.push_back(proj * ((-w * body).colwise() + c1));
    out.double_flows.push_back(proj * ((a * body).colwise() + c2));
  }
  return out;
}

Series3 torque_series(const Trajectory& traj, const Mat3& inertia) {
  const int n = traj.size();
  Series3 out(n, 3);
  for (int f = 0; f < n; ++f) {
    const auto& fr = traj.frames[static_cast<std::size_t>(f)];
    out.row(f) = (inertia * fr.domega + fr.omega.cross(inertia * fr.omega)).transpose();
  }
  return out;
}

MeasurementSet synthesize_measurements(const Trajectory& traj, const Scene& scene,
                                       const Gravity& g, FlowMode mode,
                                       const deriv::TrackFilters& filters, const Mat3& inertia) {
  ImuSeries imu = synthesize_imu(traj, g);
  ImageSeries img = synthesize_images(traj, scene, g);
  MeasurementSet m;
  m.t_s = traj.t_s;
  m.gyro = std::move(imu.gyro);
  m.accel = std::move(imu.accel);
  m.torque = torque_series(traj, inertia);
  m.inertia = inertia;
  if (mode == FlowMode::Numeric) {
    auto d = deriv::differentiate_tracks(img.tracks, traj.t_s, filters.first, filters.second);
    m.flows = std::move(d.flows);
    m.double_flows = std::move(d.double_flows);
  } else {
    m.flows = std::move(img.flows);
    m.double_flows = std::move(img.double_flows);
  }
  m.tracks = std::move(img.tracks);
  return m;
}

MeasurementSet add_noise(const MeasurementSet& meas, const NoiseSpec& spec, FlowMode mode,
                         const deriv::TrackFilters& filters) {
  if (!(spec.gyro_std >= 0.0) || !(spec.accel_std >= 0.0) || !(spec.image_rel_std >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "noise standard deviations must be non-negative");
  }
  if (spec.is_zero()) return meas;

  MeasurementSet out = meas;
  const int n = meas.frames();
  const int points = meas.points();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (int f = 0; f < n; ++f) {
    for (int i = 0; i < 3; ++i) out.gyro(f, i) += spec.gyro_std * unit(rng);
  }
  for (int f = 0; f < n; ++f) {
    for (int i = 0; i < 3; ++i) out.accel(f, i) += spec.accel_std * unit(rng);
  }

  double peak = 0.0;
  for (const auto& t : meas.tracks) peak = std::max(peak, t.cwiseAbs().maxCoeff());
  const double sigma = spec.image_rel_std * peak;

  std::vector<Eigen::Matrix2Xd> noise(static_cast<std::size_t>(n), Eigen::Matrix2Xd(2, points));
  for (auto& e : noise) {
    for (int p = 0; p < points; ++p) {
      for (int i = 0; i < 2; ++i) e(i, p) = sigma * unit(rng);
    }
  }
  for (int f = 0; f < n; ++f) out.tracks[static_cast<std::size_t>(f)] += noise[static_cast<std::size_t>(f)];

  if (mode == FlowMode::Numeric) {
    // Flows are linear in the tracks, so differentiating the noisy tracks
    // equals adding the differentiated noise.
    const auto d = deriv::differentiate_tracks(noise, meas.t_s, filters.first, filters.second);
    for (int f = 0; f < n; ++f) {
      out.flows[static_cast<std::size_t>(f)] += d.flows[static_cast<std::size_t>(f)];
      out.double_flows[static_cast<std::size_t>(f)] += d.double_flows[static_cast<std::size_t>(f)];
    }
  } else {
    const double s1 = sigma / meas.t_s;
    const double s2 = sigma / (meas.t_s * meas.t_s);
    for (auto& fl : out.flows) {
      for (int p = 0; p < points; ++p) {
        for (int i = 0; i < 2; ++i) fl(i, p) += s1 * unit(rng);
      }
    }
    for (auto& fl : out.double_flows) {
      for (int p = 0; p < points; ++p) {
        for (int i = 0; i < 2; ++i) fl(i, p) += s2 * unit(rng);
      }
    }
  }
  return out;
}

Series3 euler_omega_dot(const Mat3& inertia, const Series3& torque, const Series3& omega) {
  if (torque.rows() != omega.rows()) {
    fail(ErrorCode::LengthMismatch, "torque and angular velocity series differ in length");
  }
  if ((inertia - inertia.transpose()).norm() > 1e-12 * std::max(1.0, inertia.norm())) {
    fail(ErrorCode::SingularInertia, "inertia matrix is not symmetric");
  }
  const Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::SingularInertia, "inertia matrix is not positive definite");
  }
  Series3 out(omega.rows(), 3);
  for (Eigen::Index f = 0; f < omega.rows(); ++f) {
    const Vec3 w = omega.row(f).transpose();
    const Vec3 tq = torque.row(f).transpose();
    out.row(f) = llt.solve(tq - w.cross(inertia * w)).transpose();
  }
  return out;
}

}  // namespace dasfm::sim
