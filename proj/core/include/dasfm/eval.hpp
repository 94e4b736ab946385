#pragma once

#include <vector>

#include <Eigen/Core>

#include "dasfm/baseline.hpp"
#include "dasfm/sim.hpp"
#include "dasfm/solver.hpp"
#include "dasfm/so3.hpp"

namespace dasfm::eval {

// gt_i ~ R * est_i + t.
struct Alignment {
  Rotation R;
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
};

// Least-squares rigid alignment without scale; reflections are excluded.
// Both sets are 3 x N. Throws DegenerateConfiguration for N < 3 or when a
// centered set has rank < 2, DimensionMismatch on differing sizes.
Alignment procrustes_no_scale(const Eigen::Matrix3Xd& est, const Eigen::Matrix3Xd& gt);

// Sum of squared residuals ||R est_i + t - gt_i||^2.
double alignment_cost(const Alignment& a, const Eigen::Matrix3Xd& est, const Eigen::Matrix3Xd& gt);

struct ErrorReport {
  std::vector<double> rot_err_f;  // rad
  double rot_err_mean = 0.0;
  double trans_rmse = 0.0;         // m, over all frames
  double struct_rmse = 0.0;        // m
  double gravity_angle_err = 0.0;  // rad
  Vec3 per_axis_err = Vec3::Zero();  // RMS of camera-frame position error per axis, m
  Alignment alignment;
  std::vector<Vec3> aligned_positions;
  std::vector<Rotation> aligned_rotations;
  Eigen::Matrix3Xd aligned_structure;
};

// Aligns the reconstruction to the truth on the structure points and
// applies that alignment to poses and gravity. Throws DimensionMismatch when
// frame or point counts differ.
ErrorReport evaluate(const solver::Reconstruction& recon, const sim::Trajectory& traj,
                     const sim::Scene& scene, const sim::Gravity& g);

// Packs ground truth as a reconstruction (useful as a self-evaluation).
solver::Reconstruction reconstruction_from_truth(const sim::Trajectory& traj,
                                                 const sim::Scene& scene, const sim::Gravity& g);

struct DeadReckoningReport {
  std::vector<Vec3> positions;
  double terminal_rmse = 0.0;  // over the final `window` seconds
  double full_rmse = 0.0;
};

// Integrates the measurement set's IMU data from the true initial state and
// scores the positions against the truth.
DeadReckoningReport dead_reckoning(const sim::MeasurementSet& meas, const sim::Trajectory& traj,
                                   const sim::Gravity& g, double window = 1.0);

// RMS of ||a_f - b_f|| over f in [first, a.size()).
double position_rmse(const std::vector<Vec3>& a, const std::vector<Vec3>& b, std::size_t first = 0);

}  // namespace dasfm::eval
