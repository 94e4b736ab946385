#include <gtest/gtest.h>

#include "dasfm/io.hpp"
#include "support.hpp"

namespace dasfm::io {
namespace {

TEST(Format, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_double(-2.0 / 3.0), "-0.66666666666666663");
}

TEST(Dataset, RoundTripsBitExactly) {
  const Dataset d = simulate_dataset(testing::reference_config(5, true));
  const std::string text = dataset_to_json(d);
  const Dataset back = dataset_from_json(text);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.flow_mode, d.flow_mode);
  EXPECT_EQ(back.scene.points, d.scene.points);
  EXPECT_EQ(back.measurements.gyro, d.measurements.gyro);
  EXPECT_EQ(back.measurements.torque, d.measurements.torque);
  EXPECT_EQ(*back.measurements.inertia, *d.measurements.inertia);
  EXPECT_EQ(back.measurements.double_flows[77], d.measurements.double_flows[77]);
  EXPECT_EQ(back.trajectory.frames[33].R.matrix(), d.trajectory.frames[33].R.matrix());
  EXPECT_EQ(back.trajectory.frames[33].domega, d.trajectory.frames[33].domega);
  EXPECT_EQ(dataset_to_json(back), text);
}

TEST(Dataset, MalformedInputIsAnIoError) {
  EXPECT_THROW(dataset_from_json("{not json"), IoError);
  EXPECT_THROW(dataset_from_json("{\"schema_version\": 2}"), IoError);
  EXPECT_THROW(dataset_from_json("{\"schema_version\": 1}"), IoError);
}

TEST(Reconstruction, RoundTrips) {
  const Dataset d = testing::noiseless_dataset(3);
  solver::SolverOptions opts;
  opts.lambda_R = 2.5;
  opts.reflection_resolution = solver::ReflectionResolution::Negative;
  const solver::Reconstruction r = solver::reconstruct(d.measurements);
  const std::string text = reconstruction_to_json(r, opts);
  const solver::Reconstruction back = reconstruction_from_json(text);
  EXPECT_EQ(back.tau, r.tau);
  EXPECT_EQ(back.nu, r.nu);
  EXPECT_EQ(back.gravity, r.gravity);
  EXPECT_EQ(back.structure, r.structure);
  EXPECT_EQ(back.rotations[10].matrix(), r.rotations[10].matrix());
  EXPECT_EQ(back.residuals.sigma_ratio, r.residuals.sigma_ratio);
  const auto o = options_from_reconstruction_json(text);
  EXPECT_EQ(o.lambda_R, 2.5);
  EXPECT_EQ(o.reflection_resolution, solver::ReflectionResolution::Negative);
}

TEST(Config, EmptyObjectGivesDefaults) {
  const RunConfig c = parse_config("{}");
  const RunConfig d;
  EXPECT_EQ(c.duration, d.duration);
  EXPECT_EQ(c.points, d.points);
  EXPECT_EQ(c.noise.gyro_std, d.noise.gyro_std);
  EXPECT_EQ(c.solver.reg_filter.window, d.solver.reg_filter.window);
}

TEST(Config, RoundTrips) {
  RunConfig c;
  c.seed = 77;
  c.flow_mode = sim::FlowMode::Analytic;
  c.solver.row_weighting = solver::RowWeighting::Uniform;
  c.solver.omega_dot_mode = solver::OmegaDotKind::Numeric;
  c.noise.image_rel_std = 0.01;
  const RunConfig back = parse_config(config_to_json(c));
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.flow_mode, sim::FlowMode::Analytic);
  EXPECT_EQ(back.solver.row_weighting, solver::RowWeighting::Uniform);
  EXPECT_EQ(back.solver.omega_dot_mode, solver::OmegaDotKind::Numeric);
  EXPECT_EQ(back.noise.image_rel_std, 0.01);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

std::string rejected_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(Config, ErrorsNameTheOffendingField) {
  EXPECT_EQ(rejected_field(R"({"durration": 5})"), "durration");
  EXPECT_EQ(rejected_field(R"({"solver": {"lamda_R": 1}})"), "solver.lamda_R");
  EXPECT_EQ(rejected_field(R"({"solver": {"reg_filter": {"order": 1, "size": 3}}})"), "solver.reg_filter.size");
  EXPECT_EQ(rejected_field(R"({"noise": {"gyro_std": "high"}})"), "noise.gyro_std");
  EXPECT_EQ(rejected_field(R"({"points": 3})"), "points");
  EXPECT_EQ(rejected_field(R"({"flow_mode": "spline"})"), "flow_mode");
  EXPECT_EQ(rejected_field(R"({"schema_version": 2})"), "schema_version");
  EXPECT_EQ(rejected_field(R"({"seed": -1})"), "seed");
  EXPECT_EQ(rejected_field(R"({"solver": {"reg_filter": {"order": 3, "window": 4}}})"), "solver");
  EXPECT_EQ(rejected_field("[1, 2]"), "<root>");
}

TEST(Csv, HeaderRowsAndLineEndings) {
  const Dataset d = testing::noiseless_dataset(4);
  const auto rep = eval::evaluate(eval::reconstruction_from_truth(d.trajectory, d.scene, d.gravity),
                                  d.trajectory, d.scene, d.gravity);
  const auto dr = eval::dead_reckoning(d.measurements, d.trajectory, d.gravity);
  const std::string traj = trajectory_csv(d.trajectory, rep, dr);
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 151);
  EXPECT_EQ(traj.find('\r'), std::string::npos);
  EXPECT_EQ(traj.substr(0, traj.find('\n')),
            "frame,t,gt_logR_x,gt_logR_y,gt_logR_z,est_logR_x,est_logR_y,est_logR_z,gt_T_x,gt_T_y,"
            "gt_T_z,est_T_x,est_T_y,est_T_z,imu_T_x,imu_T_y,imu_T_z");
  const std::string st = structure_csv(d.scene, rep);
  EXPECT_EQ(std::count(st.begin(), st.end(), '\n'), 25);
}

}  // namespace
}  // namespace dasfm::io
