#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "dasfm/error.hpp"
#include "dasfm/sim.hpp"
#include "support.hpp"

namespace dasfm::sim {
namespace {

Trajectory single_frame(const Rotation& R, const Vec3& omega, const Vec3& ddT = Vec3::Zero()) {
  Trajectory t;
  TrajectoryFrame f;
  f.R = R;
  f.omega = omega;
  f.ddT = ddT;
  t.frames.push_back(f);
  return t;
}

TEST(Scene, CenteredAndDeterministic) {
  const Scene a = generate_scene(24, 2.0, 7);
  const Scene b = generate_scene(24, 2.0, 7);
  EXPECT_EQ(a.size(), 24);
  EXPECT_LT(a.points.rowwise().mean().norm(), 1e-12);
  EXPECT_EQ(a.points, b.points);
  EXPECT_LE(a.points.cwiseAbs().maxCoeff(), 2.0);
  const Vec3 sv = Eigen::JacobiSVD<Eigen::Matrix3Xd>(a.points).singularValues();
  EXPECT_GT(sv(2), 1e-6 * sv(0));
}

TEST(Scene, MinimalAndTooFew) {
  EXPECT_EQ(generate_scene(4, 1.0, 3).size(), 4);
  try {
    generate_scene(3, 1.0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
}

TEST(Trajectory, ReferenceSamplingAndBounds) {
  const Trajectory t = generate_trajectory(5.0, 1.0 / 30.0, 0.4, 30.0 * std::numbers::pi / 180.0, 1);
  EXPECT_EQ(t.size(), 150);
  EXPECT_LE(t.peak_rotation, 30.0 * std::numbers::pi / 180.0 + 1e-9);
  EXPECT_GT(t.peak_rotation, 25.0 * std::numbers::pi / 180.0);
  EXPECT_GT(t.peak_speed, 0.0);
  for (const auto& f : t.frames) EXPECT_LT(f.R.orthogonality_error(), 1e-12);
}

TEST(Trajectory, ZeroTranslationAmplitude) {
  const Trajectory t = generate_trajectory(2.0, 0.1, 0.0, 0.3, 4);
  for (const auto& f : t.frames) {
    EXPECT_EQ(f.T, Vec3::Zero());
    EXPECT_EQ(f.dT, Vec3::Zero());
    EXPECT_EQ(f.ddT, Vec3::Zero());
  }
}

TEST(Trajectory, BadSampling) {
  try {
    generate_trajectory(0.2, 0.1, 0.3, 0.3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSampling);
  }
}

// Forward differences of R, tau, nu against the analytic body rates; the
// residual must shrink linearly with t_s.
TEST(Trajectory, BodyFrameKinematicsConsistent) {
  auto worst = [](double t_s) {
    const Trajectory t = generate_trajectory(4.0, t_s, 0.5, 0.5, 12);
    double eR = 0.0, etau = 0.0, enu = 0.0;
    for (int f = 0; f + 1 < t.size(); ++f) {
      const auto& a = t.frames[static_cast<std::size_t>(f)];
      const auto& b = t.frames[static_cast<std::size_t>(f + 1)];
      const Mat3 dR = (b.R.matrix() - a.R.matrix()) / t_s;
      eR = std::max(eR, (dR - a.R.matrix() * hat(a.omega)).norm());
      const Vec3 dtau = (t.tau(f + 1) - t.tau(f)) / t_s;
      etau = std::max(etau, (dtau - (-hat(a.omega) * t.tau(f) + t.nu(f))).norm());
      const Vec3 dnu = (t.nu(f + 1) - t.nu(f)) / t_s;
      enu = std::max(enu, (dnu - (-hat(a.omega) * t.nu(f) + t.alpha(f))).norm());
    }
    return Vec3(eR, etau, enu);
  };
  const Vec3 e1 = worst(1.0 / 100.0);
  const Vec3 e2 = worst(1.0 / 200.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(e1(i), 0.1) << i;
    EXPECT_NEAR(e1(i) / e2(i), 2.0, 0.3) << i;
  }
}

TEST(Trajectory, AngularAccelerationIsDerivativeOfOmega) {
  const double t_s = 1.0 / 400.0;
  const Trajectory t = generate_trajectory(3.0, t_s, 0.3, 0.5, 5);
  for (int f = 1; f + 1 < t.size(); f += 37) {
    const Vec3 central = (t.frames[static_cast<std::size_t>(f + 1)].omega -
                          t.frames[static_cast<std::size_t>(f - 1)].omega) / (2 * t_s);
    EXPECT_LT((central - t.frames[static_cast<std::size_t>(f)].domega).norm(), 1e-4);
  }
}

TEST(Imu, HoverAndPureAcceleration) {
  const auto hover = synthesize_imu(single_frame(Rotation(), Vec3::Zero()), Gravity{});
  EXPECT_EQ(hover.accel.row(0).transpose(), Vec3(0, 0, -9.8));
  const auto push = synthesize_imu(single_frame(Rotation(), Vec3::Zero(), Vec3(1, 0, 0)),
                                   Gravity{Vec3::Zero()});
  EXPECT_EQ(push.accel.row(0).transpose(), Vec3(1, 0, 0));
}

TEST(Imu, RotatedAccelerationRecoversSpatialAcceleration) {
  const Trajectory t = generate_trajectory(5.0, 1.0 / 30.0, 0.4, 0.5, 2);
  const Gravity g;
  const auto imu = synthesize_imu(t, g);
  for (int f = 0; f < t.size(); ++f) {
    const auto& fr = t.frames[static_cast<std::size_t>(f)];
    EXPECT_EQ(imu.gyro.row(f).transpose(), fr.omega);
    EXPECT_LT((fr.R * Vec3(imu.accel.row(f).transpose()) - g.g_s - fr.ddT).norm(), 1e-12);
  }
}

TEST(Images, StaticCamera) {
  Scene s;
  s.points = Eigen::Matrix3Xd(3, 1);
  s.points << 1, 2, 3;
  const auto img = synthesize_images(single_frame(Rotation(), Vec3::Zero()), s, Gravity{});
  EXPECT_EQ(img.tracks[0].col(0), Vec2(1, 2));
  EXPECT_LT(img.flows[0].norm(), 1e-15);
  EXPECT_LT(img.double_flows[0].norm(), 1e-15);
}

TEST(Images, PureYaw) {
  Scene s;
  s.points = Eigen::Matrix3Xd(3, 1);
  s.points << 1, 0, 0;
  const auto img = synthesize_images(single_frame(Rotation(), Vec3(0, 0, 1)), s, Gravity{});
  // A point on +x seen from a camera yawing left drifts toward -y.
  EXPECT_LT((img.flows[0].col(0) - Vec2(0, -1)).norm(), 1e-15);
}

TEST(Images, ProjectionOfFullCameraFrameQuantities) {
  const Trajectory t = generate_trajectory(2.0, 0.05, 0.4, 0.5, 6);
  const Scene s = generate_scene(6, 2.0, 6);
  const Gravity g;
  const auto img = synthesize_images(t, s, g);
  for (int f = 0; f < t.size(); f += 7) {
    const auto& fr = t.frames[static_cast<std::size_t>(f)];
    const Mat3 w = hat(fr.omega);
    for (int p = 0; p < s.size(); ++p) {
      // Camera-frame point X_c = R^T (X - T) and its derivatives.
      const Vec3 X = fr.R.transpose() * (s.points.col(p) - fr.T);
      const Vec3 dX = -w * X - t.nu(f);
      const Vec3 ddX = -hat(fr.domega) * X - w * dX + w * t.nu(f) - t.alpha(f);
      const auto& i = static_cast<std::size_t>(f);
      EXPECT_LT((img.tracks[i].col(p) - X.head<2>()).norm(), 1e-12);
      EXPECT_LT((img.flows[i].col(p) - dX.head<2>()).norm(), 1e-12);
      EXPECT_LT((img.double_flows[i].col(p) - ddX.head<2>()).norm(), 1e-12);
    }
  }
}

TEST(Images, DerivativesMatchFivePointDifferences) {
  auto worst = [](double t_s) {
    const Trajectory t = generate_trajectory(3.0, t_s, 0.4, 0.5, 7);
    const auto img = synthesize_images(t, generate_scene(8, 2.0, 7), Gravity{});
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t f = 2; f + 2 < img.tracks.size(); ++f) {
      const auto& x = img.tracks;
      const Eigen::Matrix2Xd d1 = (x[f - 2] - 8 * x[f - 1] + 8 * x[f + 1] - x[f + 2]) / (12 * t_s);
      const Eigen::Matrix2Xd d2 =
          (-x[f - 2] + 16 * x[f - 1] - 30 * x[f] + 16 * x[f + 1] - x[f + 2]) / (12 * t_s * t_s);
      e1 = std::max(e1, (d1 - img.flows[f]).cwiseAbs().maxCoeff());
      e2 = std::max(e2, (d2 - img.double_flows[f]).cwiseAbs().maxCoeff());
    }
    return std::pair{e1, e2};
  };
  const auto [a1, a2] = worst(1.0 / 30.0);
  const auto [b1, b2] = worst(1.0 / 60.0);
  EXPECT_LT(a1, 1e-3);
  EXPECT_LT(a2, 1e-2);
  EXPECT_GT(a1 / b1, 8.0);
  EXPECT_GT(a2 / b2, 8.0);
}

TEST(Noise, ZeroSpecIsIdentity) {
  const Dataset d = testing::noiseless_dataset(3);
  const MeasurementSet n = add_noise(d.measurements, NoiseSpec{}, FlowMode::Analytic);
  EXPECT_EQ(n.gyro, d.measurements.gyro);
  EXPECT_EQ(n.accel, d.measurements.accel);
  for (std::size_t f = 0; f < n.tracks.size(); ++f) {
    EXPECT_EQ(n.tracks[f], d.measurements.tracks[f]);
    EXPECT_EQ(n.flows[f], d.measurements.flows[f]);
    EXPECT_EQ(n.double_flows[f], d.measurements.double_flows[f]);
  }
}

TEST(Noise, ReferenceNoiseStatistics) {
  const NoiseSpec spec = NoiseSpec::reference(42);
  EXPECT_NEAR(spec.gyro_std, 0.05236, 1e-5);
  EXPECT_EQ(spec.accel_std, 0.2);
  EXPECT_EQ(spec.image_rel_std, 0.005);
  const Dataset d = testing::noiseless_dataset(3);
  const MeasurementSet n = add_noise(d.measurements, spec, FlowMode::Numeric);
  const double gyro_sd = std::sqrt((n.gyro - d.measurements.gyro).squaredNorm() / 450.0);
  const double accel_sd = std::sqrt((n.accel - d.measurements.accel).squaredNorm() / 450.0);
  EXPECT_NEAR(gyro_sd / spec.gyro_std, 1.0, 0.2);
  EXPECT_NEAR(accel_sd / spec.accel_std, 1.0, 0.2);

  double peak = 0.0, sq = 0.0;
  long count = 0;
  for (std::size_t f = 0; f < n.tracks.size(); ++f) {
    peak = std::max(peak, d.measurements.tracks[f].cwiseAbs().maxCoeff());
    sq += (n.tracks[f] - d.measurements.tracks[f]).squaredNorm();
    count += n.tracks[f].size();
  }
  EXPECT_NEAR(std::sqrt(sq / count) / (spec.image_rel_std * peak), 1.0, 0.2);
  const MeasurementSet again = add_noise(d.measurements, spec, FlowMode::Numeric);
  EXPECT_EQ(again.gyro, n.gyro);
  EXPECT_EQ(again.tracks[17], n.tracks[17]);
}

TEST(Noise, NumericModeFlowsAreDifferentiatedTracks) {
  const Dataset d = simulate_dataset(testing::reference_config(4, true));
  const deriv::TrackFilters filters;
  const auto re = deriv::differentiate_tracks(d.measurements.tracks, d.measurements.t_s,
                                              filters.first, filters.second);
  for (std::size_t f = 0; f < re.flows.size(); f += 13) {
    EXPECT_LT((re.flows[f] - d.measurements.flows[f]).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((re.double_flows[f] - d.measurements.double_flows[f]).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Determinism, IdenticalSeedsIdenticalMeasurements) {
  const Dataset a = simulate_dataset(testing::reference_config(9, true));
  const Dataset b = simulate_dataset(testing::reference_config(9, true));
  EXPECT_EQ(a.measurements.accel, b.measurements.accel);
  EXPECT_EQ(a.measurements.double_flows[100], b.measurements.double_flows[100]);
  EXPECT_EQ(a.scene.points, b.scene.points);
}

TEST(Euler, Examples) {
  const Mat3 J = Vec3(1, 2, 3).asDiagonal();
  Series3 w(1, 3);
  w << 1, 1, 1;
  const Series3 none = Series3::Zero(1, 3);
  const Series3 wd = euler_omega_dot(J, none, w);
  // Direct solve J wd = -(w x J w).
  const Vec3 oracle = J.lu().solve(-Vec3(1, 1, 1).cross(J * Vec3(1, 1, 1)));
  EXPECT_LT((wd.row(0).transpose() - Vec3(-1, 1, -1.0 / 3.0)).norm(), 1e-15);
  EXPECT_LT((wd.row(0).transpose() - oracle).norm(), 1e-15);

  Series3 balance(1, 3);
  balance.row(0) = Vec3(1, 1, 1).cross(J * Vec3(1, 1, 1)).transpose();
  EXPECT_LT(euler_omega_dot(J, balance, w).norm(), 1e-15);
  EXPECT_LT(euler_omega_dot(Mat3::Identity(), none, w).norm(), 1e-15);
}

TEST(Euler, RejectsSingularOrAsymmetricInertia) {
  Series3 w = Series3::Zero(1, 3);
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = 0.0;
  EXPECT_THROW(euler_omega_dot(bad, w, w), Error);
  Mat3 skew = Mat3::Identity();
  skew(0, 1) = 0.5;
  try {
    euler_omega_dot(skew, w, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInertia);
  }
}

}  // namespace
}  // namespace dasfm::sim
