#include "dasfm/eval.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "dasfm/error.hpp"

namespace dasfm::eval {

namespace {

// Angle between two vectors; atan2 keeps precision near 0 and pi.
double vector_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

int centered_rank(const Eigen::Matrix3Xd& pts) {
  const Eigen::Matrix3Xd c = pts.colwise() - pts.rowwise().mean();
  const Vec3 sv = Eigen::JacobiSVD<Eigen::Matrix3Xd>(c).singularValues();
  if (!(sv(0) > 0.0)) return 0;
  return 1 + (sv(1) > 1e-10 * sv(0)) + (sv(2) > 1e-10 * sv(0));
}

}  // namespace

Alignment procrustes_no_scale(const Eigen::Matrix3Xd& est, const Eigen::Matrix3Xd& gt) {
  if (est.cols() != gt.cols()) {
    fail(ErrorCode::DimensionMismatch, "point sets differ in size");
  }
  if (est.cols() < 3) {
    fail(ErrorCode::DegenerateConfiguration, "alignment needs at least 3 points");
  }
  if (centered_rank(est) < 2 || centered_rank(gt) < 2) {
    fail(ErrorCode::DegenerateConfiguration, "point set is collinear after centering");
  }
  const Vec3 me = est.rowwise().mean();
  const Vec3 mg = gt.rowwise().mean();
  const Mat3 H = (gt.colwise() - mg) * (est.colwise() - me).transpose();
  Alignment a;
  a.R = closest_rotation(H);
  a.t = mg - a.R * me;
  return a;
}

double alignment_cost(const Alignment& a, const Eigen::Matrix3Xd& est, const Eigen::Matrix3Xd& gt) {
  const Eigen::Matrix3Xd r = ((a.R.matrix() * est).colwise() + a.t) - gt;
  return r.squaredNorm();
}

ErrorReport evaluate(const solver::Reconstruction& recon, const sim::Trajectory& traj,
                     const sim::Scene& scene, const sim::Gravity& g) {
  const int frames = traj.size();
  if (recon.frames() != frames || recon.tau.rows() != frames) {
    fail(ErrorCode::DimensionMismatch, "reconstruction has " + std::to_string(recon.frames()) +
                                           " frames, truth has " + std::to_string(frames));
  }
  if (recon.structure.cols() != scene.points.cols()) {
    fail(ErrorCode::DimensionMismatch, "reconstruction has " +
                                           std::to_string(recon.structure.cols()) +
                                           " points, truth has " + std::to_string(scene.size()));
  }

  ErrorReport rep;
  rep.alignment = procrustes_no_scale(recon.structure, scene.points);
  const Alignment& al = rep.alignment;

  rep.aligned_structure = (al.R.matrix() * recon.structure).colwise() + al.t;
  rep.struct_rmse = std::sqrt((rep.aligned_structure - scene.points).colwise().squaredNorm().mean());

  rep.rot_err_f.reserve(static_cast<std::size_t>(frames));
  rep.aligned_rotations.reserve(static_cast<std::size_t>(frames));
  rep.aligned_positions.reserve(static_cast<std::size_t>(frames));
  double sq_trans = 0.0;
  Vec3 sq_axis = Vec3::Zero();
  for (int f = 0; f < frames; ++f) {
    const auto& truth = traj.frames[static_cast<std::size_t>(f)];
    const Rotation R = al.R * recon.rotations[static_cast<std::size_t>(f)];
    const Vec3 T = al.apply(recon.position(f));
    rep.rot_err_f.push_back(rotation_angle(R * truth.R.inverse()));
    const Vec3 d = T - truth.T;
    sq_trans += d.squaredNorm();
    sq_axis += (truth.R.transpose() * d).cwiseAbs2();
    rep.aligned_rotations.push_back(R);
    rep.aligned_positions.push_back(T);
  }
  if (frames > 0) {
    double sum = 0.0;
    for (double e : rep.rot_err_f) sum += e;
    rep.rot_err_mean = sum / frames;
    rep.trans_rmse = std::sqrt(sq_trans / frames);
    rep.per_axis_err = (sq_axis / frames).cwiseSqrt();
  }
  rep.gravity_angle_err = vector_angle(al.R * recon.gravity, g.g_s);
  return rep;
}

solver::Reconstruction reconstruction_from_truth(const sim::Trajectory& traj,
                                                 const sim::Scene& scene, const sim::Gravity& g) {
  solver::Reconstruction r;
  const int frames = traj.size();
  r.tau.resize(frames, 3);
  r.nu.resize(frames, 3);
  for (int f = 0; f < frames; ++f) {
    r.rotations.push_back(traj.frames[static_cast<std::size_t>(f)].R);
    r.tau.row(f) = traj.tau(f).transpose();
    r.nu.row(f) = traj.nu(f).transpose();
  }
  r.gravity = g.g_s;
  r.structure = scene.points;
  return r;
}

double position_rmse(const std::vector<Vec3>& a, const std::vector<Vec3>& b, std::size_t first) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "position series differ in length");
  if (first >= a.size()) return 0.0;
  double sq = 0.0;
  for (std::size_t i = first; i < a.size(); ++i) sq += (a[i] - b[i]).squaredNorm();
  return std::sqrt(sq / static_cast<double>(a.size() - first));
}

DeadReckoningReport dead_reckoning(const sim::MeasurementSet& meas, const sim::Trajectory& traj,
                                   const sim::Gravity& g, double window) {
  if (meas.gyro.rows() != traj.size()) {
    fail(ErrorCode::DimensionMismatch, "measurement and trajectory frame counts differ");
  }
  DeadReckoningReport rep;
  if (traj.size() == 0) return rep;
  const auto& first = traj.frames.front();
  const auto states =
      baseline::imu_dead_reckon(meas.gyro, meas.accel, g, {first.R, first.T, first.dT}, meas.t_s);
  std::vector<Vec3> truth;
  truth.reserve(states.size());
  rep.positions.reserve(states.size());
  for (std::size_t f = 0; f < states.size(); ++f) {
    rep.positions.push_back(states[f].T);
    truth.push_back(traj.frames[f].T);
  }
  const auto n = static_cast<long>(states.size());
  const long span = std::lround(window / meas.t_s);
  const auto start = static_cast<std::size_t>(std::max(0L, n - std::max(1L, span)));
  rep.terminal_rmse = position_rmse(rep.positions, truth, start);
  rep.full_rmse = position_rmse(rep.positions, truth);
  return rep;
}

}  // namespace dasfm::eval
