#include "dasfm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dasfm/error.hpp"

namespace dasfm::io {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

// nlohmann's dump prints the shortest round-trip form; every artifact here
// uses 17 significant digits instead, so serialize by hand.
void dump(const json& j, std::string& out, int indent) {
  const auto pad = [&](int n) { out.append(static_cast<std::size_t>(n) * 2, ' '); };
  switch (j.type()) {
    case json::value_t::null: out += "null"; return;
    case json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; return;
    case json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); return;
    case json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); return;
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    case json::value_t::string: out += json(j.get<std::string>()).dump(); return;
    case json::value_t::array: {
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_object();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        if (!flat) {
          out += '\n';
          pad(indent + 1);
        }
        dump(e, out, indent + 1);
        first = false;
      }
      if (!flat && !j.empty()) {
        out += '\n';
        pad(indent);
      }
      out += ']';
      return;
    }
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        out += '\n';
        pad(indent + 1);
        out += json(k).dump();
        out += ": ";
        dump(v, out, indent + 1);
        first = false;
      }
      if (!j.empty()) {
        out += '\n';
        pad(indent);
      }
      out += '}';
      return;
    }
    default: out += "null"; return;
  }
}

std::string to_text(const json& j) {
  std::string out;
  dump(j, out, 0);
  out += '\n';
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed JSON: ") + e.what());
  }
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json rows_json(const Series3& s) {
  json a = json::array();
  for (Eigen::Index f = 0; f < s.rows(); ++f) a.push_back(vec_json(s.row(f).transpose()));
  return a;
}

json cols_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json a = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(vec_json(m.col(c)));
  return a;
}

json rotation_json(const Rotation& r) {
  json a = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a.push_back(r.matrix()(i, j));
  return a;
}

json frames_json(const std::vector<Eigen::Matrix2Xd>& s) {
  json a = json::array();
  for (const auto& m : s) a.push_back(cols_json(m));
  return a;
}

// --- readers for trusted artifact files (shape errors -> IoError) -------

const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double num(const json& j, const char* what) {
  if (!j.is_number()) throw IoError(std::string("expected a number for ") + what);
  return j.get<double>();
}

Eigen::VectorXd read_vec(const json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || (n >= 0 && static_cast<Eigen::Index>(j.size()) != n)) {
    throw IoError(std::string("bad vector shape for ") + what);
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j[i], what);
  return v;
}

Vec3 read_vec3(const json& j, const char* what) { return read_vec(j, 3, what); }

Series3 read_rows(const json& j, const char* what) {
  if (!j.is_array()) throw IoError(std::string("expected an array for ") + what);
  Series3 s(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t f = 0; f < j.size(); ++f) {
    s.row(static_cast<Eigen::Index>(f)) = read_vec3(j[f], what).transpose();
  }
  return s;
}

Eigen::MatrixXd read_cols(const json& j, Eigen::Index rows, const char* what) {
  if (!j.is_array()) throw IoError(std::string("expected an array for ") + what);
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = read_vec(j[c], rows, what);
  return m;
}

Rotation read_rotation(const json& j) {
  const Eigen::VectorXd v = read_vec(j, 9, "rotation");
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = v(3 * i + k);
  try {
    return Rotation::from_matrix(m);
  } catch (const Error& e) {
    throw IoError(std::string("invalid rotation: ") + e.what());
  }
}

std::vector<Eigen::Matrix2Xd> read_frames(const json& j, const char* what) {
  if (!j.is_array()) throw IoError(std::string("expected an array for ") + what);
  std::vector<Eigen::Matrix2Xd> out;
  out.reserve(j.size());
  for (const auto& f : j) out.emplace_back(read_cols(f, 2, what));
  return out;
}

// --- config reader with unknown-key rejection ---------------------------

class ConfigObject {
 public:
  ConfigObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const char* k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* get(const char* k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const char* k, double& out) {
    if (const json* v = get(k)) {
      if (!v->is_number()) throw ConfigError(key(k), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const char* k, int& out) {
    if (const json* v = get(k)) {
      if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
      out = v->get<int>();
    }
  }

  void seed(const char* k, std::uint64_t& out) {
    if (const json* v = get(k)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw ConfigError(key(k), "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  template <typename Enum, std::size_t N>
  void choice(const char* k, Enum& out, const std::array<Enum, N>& values) {
    if (const json* v = get(k)) {
      if (!v->is_string()) throw ConfigError(key(k), "expected a string");
      const std::string s = v->get<std::string>();
      std::string allowed;
      for (Enum e : values) {
        if (s == to_name(e)) {
          out = e;
          return;
        }
        allowed += (allowed.empty() ? "" : ", ") + std::string(to_name(e));
      }
      throw ConfigError(key(k), "unknown value '" + s + "' (expected one of " + allowed + ")");
    }
  }

  void filter(const char* k, deriv::FilterSpec& out) {
    if (const json* v = get(k)) {
      ConfigObject o(*v, key(k));
      o.integer("order", out.order);
      o.integer("window", out.window);
      o.finish();
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(key(k.c_str()), "unknown field");
    }
  }

 private:
  template <typename Enum>
  static std::string_view to_name(Enum e) {
    if constexpr (std::is_same_v<Enum, sim::FlowMode>) {
      return e == sim::FlowMode::Analytic ? "analytic" : "numeric";
    } else {
      return solver::to_string(e);
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

constexpr std::array kOmegaDotKinds{solver::OmegaDotKind::Euler, solver::OmegaDotKind::Zero,
                                    solver::OmegaDotKind::Numeric};
constexpr std::array kReflections{solver::ReflectionResolution::Auto,
                                  solver::ReflectionResolution::Positive,
                                  solver::ReflectionResolution::Negative};
constexpr std::array kWeightings{solver::RowWeighting::Uniform, solver::RowWeighting::Whitened};
constexpr std::array kIncrements{solver::RotationIncrement::FirstOrder,
                                 solver::RotationIncrement::Magnus};
constexpr std::array kFlowModes{sim::FlowMode::Analytic, sim::FlowMode::Numeric};

solver::SolverOptions read_options(ConfigObject& o) {
  solver::SolverOptions s;
  o.number("lambda_R", s.lambda_R);
  o.number("lambda_tau", s.lambda_tau);
  o.number("lambda_nu", s.lambda_nu);
  o.choice("omega_dot_mode", s.omega_dot_mode, kOmegaDotKinds);
  o.filter("omega_dot_filter", s.omega_dot_filter);
  o.filter("reg_filter", s.reg_filter);
  o.filter("track_filter", s.track_filter);
  o.choice("reflection_resolution", s.reflection_resolution, kReflections);
  o.choice("row_weighting", s.row_weighting, kWeightings);
  o.choice("rotation_increment", s.rotation_increment, kIncrements);
  o.finish();
  return s;
}

json filter_json(const deriv::FilterSpec& f) { return {{"order", f.order}, {"window", f.window}}; }

json options_json(const solver::SolverOptions& s) {
  json j = json::object();
  j["lambda_R"] = s.lambda_R;
  j["lambda_tau"] = s.lambda_tau;
  j["lambda_nu"] = s.lambda_nu;
  j["omega_dot_mode"] = std::string(solver::to_string(s.omega_dot_mode));
  j["omega_dot_filter"] = filter_json(s.omega_dot_filter);
  j["reg_filter"] = filter_json(s.reg_filter);
  j["track_filter"] = filter_json(s.track_filter);
  j["reflection_resolution"] = std::string(solver::to_string(s.reflection_resolution));
  j["row_weighting"] = std::string(solver::to_string(s.row_weighting));
  j["rotation_increment"] = std::string(solver::to_string(s.rotation_increment));
  return j;
}

std::string flow_mode_name(sim::FlowMode m) { return m == sim::FlowMode::Analytic ? "analytic" : "numeric"; }

json noise_json(const sim::NoiseSpec& n) {
  return {{"gyro_std", n.gyro_std}, {"accel_std", n.accel_std}, {"image_rel_std", n.image_rel_std}, {"seed", n.seed}};
}

void csv_vec(std::ostringstream& os, const Vec3& v) {
  os << ',' << format_double(v.x()) << ',' << format_double(v.y()) << ',' << format_double(v.z());
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

// --- config --------------------------------------------------------------

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  ConfigObject root(j, "");
  RunConfig cfg;
  if (const json* v = root.get("schema_version")) {
    if (!v->is_number_integer() || v->get<int>() != kSchemaVersion) {
      throw ConfigError("schema_version", "unsupported (expected 1)");
    }
  }
  root.number("duration", cfg.duration);
  root.number("t_s", cfg.t_s);
  root.integer("points", cfg.points);
  root.number("extent", cfg.extent);
  root.number("amp_trans", cfg.amp_trans);
  root.number("amp_rot", cfg.amp_rot);
  root.seed("seed", cfg.seed);
  root.choice("flow_mode", cfg.flow_mode, kFlowModes);
  if (const json* v = root.get("noise")) {
    ConfigObject n(*v, "noise");
    n.number("gyro_std", cfg.noise.gyro_std);
    n.number("accel_std", cfg.noise.accel_std);
    n.number("image_rel_std", cfg.noise.image_rel_std);
    n.finish();
  }
  if (const json* v = root.get("solver")) {
    ConfigObject s(*v, "solver");
    cfg.solver = read_options(s);
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string config_to_json(const RunConfig& cfg) {
  json j = json::object();
  j["schema_version"] = kSchemaVersion;
  j["duration"] = cfg.duration;
  j["t_s"] = cfg.t_s;
  j["points"] = cfg.points;
  j["extent"] = cfg.extent;
  j["amp_trans"] = cfg.amp_trans;
  j["amp_rot"] = cfg.amp_rot;
  j["seed"] = cfg.seed;
  j["flow_mode"] = flow_mode_name(cfg.flow_mode);
  j["noise"] = {{"gyro_std", cfg.noise.gyro_std},
                {"accel_std", cfg.noise.accel_std},
                {"image_rel_std", cfg.noise.image_rel_std}};
  j["solver"] = options_json(cfg.solver);
  return to_text(j);
}

// --- dataset -------------------------------------------------------------

std::string dataset_to_json(const Dataset& d) {
  json j = json::object();
  j["schema_version"] = kSchemaVersion;
  j["seed"] = d.seed;
  j["t_s"] = d.measurements.t_s;
  j["flow_mode"] = flow_mode_name(d.flow_mode);
  j["gravity"] = vec_json(d.gravity.g_s);
  j["noise_spec"] = noise_json(d.noise);
  j["scene"] = cols_json(d.scene.points);

  json traj = json::array();
  for (const auto& fr : d.trajectory.frames) {
    traj.push_back({{"R", rotation_json(fr.R)},
                    {"T", vec_json(fr.T)},
                    {"dT", vec_json(fr.dT)},
                    {"ddT", vec_json(fr.ddT)},
                    {"omega", vec_json(fr.omega)},
                    {"domega", vec_json(fr.domega)}});
  }
  j["trajectory"] = std::move(traj);

  const auto& m = d.measurements;
  json meas = json::object();
  meas["tracks"] = frames_json(m.tracks);
  meas["flows"] = frames_json(m.flows);
  meas["double_flows"] = frames_json(m.double_flows);
  meas["gyro"] = rows_json(m.gyro);
  meas["accel"] = rows_json(m.accel);
  meas["torque"] = rows_json(m.torque);
  if (m.inertia) {
    json in = json::array();
    for (int r = 0; r < 3; ++r) in.push_back(vec_json(m.inertia->row(r).transpose()));
    meas["inertia"] = std::move(in);
  } else {
    meas["inertia"] = nullptr;
  }
  j["measurements"] = std::move(meas);
  return to_text(j);
}

Dataset dataset_from_json(const std::string& text) {
  const json j = parse_json(text);
  if (!at(j, "schema_version").is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
    throw IoError("unsupported dataset schema_version");
  }
  Dataset d;
  d.seed = at(j, "seed").get<std::uint64_t>();
  const double t_s = num(at(j, "t_s"), "t_s");
  const std::string mode = at(j, "flow_mode").get<std::string>();
  if (mode != "analytic" && mode != "numeric") throw IoError("unknown flow_mode '" + mode + "'");
  d.flow_mode = mode == "analytic" ? sim::FlowMode::Analytic : sim::FlowMode::Numeric;
  d.gravity.g_s = read_vec3(at(j, "gravity"), "gravity");
  const json& ns = at(j, "noise_spec");
  d.noise = {num(at(ns, "gyro_std"), "gyro_std"), num(at(ns, "accel_std"), "accel_std"),
             num(at(ns, "image_rel_std"), "image_rel_std"), at(ns, "seed").get<std::uint64_t>()};
  d.scene.points = read_cols(at(j, "scene"), 3, "scene");

  d.trajectory.t_s = t_s;
  for (const auto& fr : at(j, "trajectory")) {
    sim::TrajectoryFrame f;
    f.R = read_rotation(at(fr, "R"));
    f.T = read_vec3(at(fr, "T"), "T");
    f.dT = read_vec3(at(fr, "dT"), "dT");
    f.ddT = read_vec3(at(fr, "ddT"), "ddT");
    f.omega = read_vec3(at(fr, "omega"), "omega");
    f.domega = read_vec3(at(fr, "domega"), "domega");
    d.trajectory.peak_speed = std::max(d.trajectory.peak_speed, f.dT.norm());
    d.trajectory.peak_rotation = std::max(d.trajectory.peak_rotation, rotation_angle(f.R));
    d.trajectory.frames.push_back(f);
  }

  const json& m = at(j, "measurements");
  auto& ms = d.measurements;
  ms.t_s = t_s;
  ms.tracks = read_frames(at(m, "tracks"), "tracks");
  ms.flows = read_frames(at(m, "flows"), "flows");
  ms.double_flows = read_frames(at(m, "double_flows"), "double_flows");
  ms.gyro = read_rows(at(m, "gyro"), "gyro");
  ms.accel = read_rows(at(m, "accel"), "accel");
  ms.torque = read_rows(at(m, "torque"), "torque");
  const json& in = at(m, "inertia");
  if (!in.is_null()) {
    if (!in.is_array() || in.size() != 3) throw IoError("bad inertia shape");
    Mat3 J;
    for (int r = 0; r < 3; ++r) J.row(r) = read_vec3(in[static_cast<std::size_t>(r)], "inertia").transpose();
    ms.inertia = J;
  }
  try {
    ms.validate();
  } catch (const Error& e) {
    throw IoError(std::string("inconsistent measurements: ") + e.what());
  }
  if (d.trajectory.size() != ms.frames()) throw IoError("trajectory and measurement frame counts differ");
  return d;
}

// --- reconstruction ------------------------------------------------------

std::string reconstruction_to_json(const solver::Reconstruction& r, const solver::SolverOptions& opts) {
  json j = json::object();
  json rots = json::array();
  for (const auto& R : r.rotations) rots.push_back(rotation_json(R));
  j["rotations"] = std::move(rots);
  j["tau"] = rows_json(r.tau);
  j["nu"] = rows_json(r.nu);
  j["gravity"] = vec_json(r.gravity);
  j["structure"] = cols_json(r.structure);
  const auto& res = r.residuals;
  j["residuals"] = {{"sigma_ratio", res.sigma_ratio},
                    {"rotation_lsq", res.rotation_lsq},
                    {"translation_lsq", res.translation_lsq},
                    {"metric_upgrade", res.metric_upgrade},
                    {"reprojection", res.reprojection},
                    {"rotation_condition", res.rotation_condition},
                    {"translation_condition", res.translation_condition}};
  j["singular_values"] = vec_json(r.singular_values);
  j["mirrored"] = r.mirrored;
  j["options"] = options_json(opts);
  return to_text(j);
}

solver::Reconstruction reconstruction_from_json(const std::string& text) {
  const json j = parse_json(text);
  solver::Reconstruction r;
  for (const auto& R : at(j, "rotations")) r.rotations.push_back(read_rotation(R));
  r.tau = read_rows(at(j, "tau"), "tau");
  r.nu = read_rows(at(j, "nu"), "nu");
  r.gravity = read_vec3(at(j, "gravity"), "gravity");
  r.structure = read_cols(at(j, "structure"), 3, "structure");
  const json& res = at(j, "residuals");
  r.residuals.sigma_ratio = num(at(res, "sigma_ratio"), "sigma_ratio");
  r.residuals.rotation_lsq = num(at(res, "rotation_lsq"), "rotation_lsq");
  r.residuals.translation_lsq = num(at(res, "translation_lsq"), "translation_lsq");
  if (j.contains("singular_values")) r.singular_values = read_vec(j["singular_values"], -1, "singular_values");
  if (j.contains("mirrored")) r.mirrored = j["mirrored"].get<bool>();
  if (static_cast<int>(r.rotations.size()) != r.tau.rows() || r.tau.rows() != r.nu.rows()) {
    throw IoError("reconstruction series differ in length");
  }
  return r;
}

solver::SolverOptions options_from_reconstruction_json(const std::string& text) {
  const json j = parse_json(text);
  ConfigObject o(at(j, "options"), "options");
  return read_options(o);
}

// --- reports -------------------------------------------------------------

std::string report_to_json(const eval::ErrorReport& rep, const eval::DeadReckoningReport& dr) {
  json j = json::object();
  j["rot_err_mean"] = rep.rot_err_mean;
  j["trans_rmse"] = rep.trans_rmse;
  j["struct_rmse"] = rep.struct_rmse;
  j["gravity_angle_err"] = rep.gravity_angle_err;
  j["per_axis_err"] = vec_json(rep.per_axis_err);
  j["dead_reckoning_terminal_rmse"] = dr.terminal_rmse;
  j["dead_reckoning_full_rmse"] = dr.full_rmse;
  j["alignment"] = {{"R", rotation_json(rep.alignment.R)}, {"t", vec_json(rep.alignment.t)}};
  j["rot_err_f"] = rep.rot_err_f;
  return to_text(j);
}

std::string trajectory_csv(const sim::Trajectory& traj, const eval::ErrorReport& rep,
                           const eval::DeadReckoningReport& dr) {
  const std::size_t frames = traj.frames.size();
  if (rep.aligned_positions.size() != frames || rep.aligned_rotations.size() != frames ||
      (!dr.positions.empty() && dr.positions.size() != frames)) {
    fail(ErrorCode::DimensionMismatch, "trajectory, estimate and dead reckoning differ in length");
  }
  std::ostringstream os;
  os << "frame,t,gt_logR_x,gt_logR_y,gt_logR_z,est_logR_x,est_logR_y,est_logR_z,"
        "gt_T_x,gt_T_y,gt_T_z,est_T_x,est_T_y,est_T_z,imu_T_x,imu_T_y,imu_T_z\n";
  for (std::size_t f = 0; f < frames; ++f) {
    const auto& fr = traj.frames[f];
    os << f << ',' << format_double(static_cast<double>(f) * traj.t_s);
    csv_vec(os, log_so3(fr.R));
    csv_vec(os, log_so3(rep.aligned_rotations[f]));
    csv_vec(os, fr.T);
    csv_vec(os, rep.aligned_positions[f]);
    csv_vec(os, dr.positions.empty() ? Vec3(Vec3::Constant(std::nan(""))) : dr.positions[f]);
    os << '\n';
  }
  return os.str();
}

std::string structure_csv(const sim::Scene& scene, const eval::ErrorReport& rep) {
  if (rep.aligned_structure.cols() != scene.points.cols()) {
    fail(ErrorCode::DimensionMismatch, "structure sizes differ");
  }
  std::ostringstream os;
  os << "point,gt_x,gt_y,gt_z,est_x,est_y,est_z\n";
  for (Eigen::Index p = 0; p < scene.points.cols(); ++p) {
    os << p;
    csv_vec(os, scene.points.col(p));
    csv_vec(os, rep.aligned_structure.col(p));
    os << '\n';
  }
  return os.str();
}

}  // namespace dasfm::io
