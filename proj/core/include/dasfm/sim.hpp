#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dasfm/deriv.hpp"
#include "dasfm/so3.hpp"
#include "dasfm/types.hpp"

namespace dasfm::sim {

// Landmarks in the spatial frame, 3 x P, centroid at the origin.
struct Scene {
  Eigen::Matrix3Xd points;

  int size() const { return static_cast<int>(points.cols()); }
};

struct TrajectoryFrame {
  Rotation R;
  Vec3 T = Vec3::Zero();
  Vec3 dT = Vec3::Zero();
  Vec3 ddT = Vec3::Zero();
  Vec3 omega = Vec3::Zero();   // body frame, rad/s
  Vec3 domega = Vec3::Zero();  // body frame, rad/s^2
};

struct Trajectory {
  double t_s = 1.0 / 30.0;
  std::vector<TrajectoryFrame> frames;
  double peak_speed = 0.0;     // max |dT| over frames, m/s
  double peak_rotation = 0.0;  // max rotation angle over frames, rad

  int size() const { return static_cast<int>(frames.size()); }

  // Body-frame translation tau_f = R_f^T T_f, velocity and acceleration.
  Vec3 tau(int f) const;
  Vec3 nu(int f) const;
  Vec3 alpha(int f) const;
};

struct Gravity {
  Vec3 g_s{0.0, 0.0, -9.8};
};

struct NoiseSpec {
  double gyro_std = 0.0;       // rad/s
  double accel_std = 0.0;      // m/s^2
  double image_rel_std = 0.0;  // fraction of the peak track coordinate magnitude
  std::uint64_t seed = 0;

  bool is_zero() const { return gyro_std == 0.0 && accel_std == 0.0 && image_rel_std == 0.0; }

  // 3 deg/s gyro, 0.2 m/s^2 accelerometer, 0.5 % image noise.
  static NoiseSpec reference(std::uint64_t seed);
};

enum class FlowMode { Analytic, Numeric };

struct MeasurementSet {
  double t_s = 1.0 / 30.0;
  std::vector<Eigen::Matrix2Xd> tracks;        // per frame, 2 x P
  std::vector<Eigen::Matrix2Xd> flows;         // per frame, 2 x P
  std::vector<Eigen::Matrix2Xd> double_flows;  // per frame, 2 x P
  Series3 gyro;
  Series3 accel;
  Series3 torque;                // empty unless the Euler omega_dot mode is available
  std::optional<Mat3> inertia;

  int frames() const { return static_cast<int>(tracks.size()); }
  int points() const { return tracks.empty() ? 0 : static_cast<int>(tracks.front().cols()); }

  // Throws LengthMismatch / TooFewFramesOrPoints on inconsistent shapes.
  void validate() const;
};

// J = diag(0.01, 0.01, 0.02) kg m^2.
Mat3 default_inertia();

// splitmix64 mixing of a base seed with a stream id.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Scene generate_scene(int points, double extent, std::uint64_t seed);

Trajectory generate_trajectory(double duration, double t_s, double amp_trans, double amp_rot,
                               std::uint64_t seed);

struct ImuSeries {
  Series3 gyro;
  Series3 accel;
};

// gyro_f = omega_f and accel_f = R_f^T (ddT_f + g_s), both exact.
ImuSeries synthesize_imu(const Trajectory& traj, const Gravity& g);

struct ImageSeries {
  std::vector<Eigen::Matrix2Xd> tracks;
  std::vector<Eigen::Matrix2Xd> flows;
  std::vector<Eigen::Matrix2Xd> double_flows;
};

// Affine projections of the scene and their exact first and second time
// derivatives.
ImageSeries synthesize_images(const Trajectory& traj, const Scene& scene, const Gravity& g);

// Torque realizing the trajectory's angular acceleration: J w' + [w]x J w.
Series3 torque_series(const Trajectory& traj, const Mat3& inertia);

// Noiseless measurement set. In Numeric mode the flows are obtained by
// differentiating the tracks with `filters` instead of analytically.
MeasurementSet synthesize_measurements(const Trajectory& traj, const Scene& scene,
                                       const Gravity& g, FlowMode mode,
                                       const deriv::TrackFilters& filters = {},
                                       const Mat3& inertia = default_inertia());

MeasurementSet add_noise(const MeasurementSet& meas, const NoiseSpec& spec, FlowMode mode,
                         const deriv::TrackFilters& filters = {});

// w' = J^-1 (torque - [w]x J w) per frame. Throws SingularInertia unless J is
// symmetric positive definite.
Series3 euler_omega_dot(const Mat3& inertia, const Series3& torque, const Series3& omega);

}  // namespace dasfm::sim
