#include "dasfm/baseline.hpp"

#include "dasfm/error.hpp"

namespace dasfm::baseline {

std::vector<DeadReckonState> imu_dead_reckon(const Series3& gyro, const Series3& accel,
                                             const sim::Gravity& g, const DeadReckonState& init,
                                             double t_s) {
  if (gyro.rows() != accel.rows()) {
    fail(ErrorCode::LengthMismatch, "gyro has " + std::to_string(gyro.rows()) +
                                        " samples, accel has " + std::to_string(accel.rows()));
  }
  if (!(t_s > 0.0)) fail(ErrorCode::InvalidArgument, "sample period must be positive");

  const auto n = static_cast<std::size_t>(gyro.rows());
  std::vector<DeadReckonState> out;
  out.reserve(n);
  if (n == 0) return out;
  out.push_back(init);
  DeadReckonState s = init;
  for (std::size_t f = 0; f + 1 < n; ++f) {
    const auto i = static_cast<Eigen::Index>(f);
    // Attitude and specific force at the start of the interval.
    const Vec3 a = s.R.matrix() * Vec3(accel.row(i).transpose()) - g.g_s;
    s.T += t_s * s.v + 0.5 * t_s * t_s * a;
    s.v += t_s * a;
    s.R = s.R * exp_so3(t_s * Vec3(gyro.row(i).transpose()));
    out.push_back(s);
  }
  return out;
}

}  // namespace dasfm::baseline
