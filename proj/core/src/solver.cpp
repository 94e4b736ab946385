#include "dasfm/solver.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>

#include "dasfm/error.hpp"

namespace dasfm::solver {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kIllConditioned = 1e12;

double weight_at(const Eigen::VectorXd& w, Eigen::Index row) {
  return w.size() == 0 ? 1.0 : w(row);
}

void add_block(Triplets& t, int row, int col, const Eigen::Ref<const Eigen::MatrixXd>& b,
               double scale = 1.0) {
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double v = scale * b(i, j);
      if (v != 0.0) t.emplace_back(row + static_cast<int>(i), col + static_cast<int>(j), v);
    }
  }
}

Vec3 row3(const Series3& s, int f) { return s.row(f).transpose(); }

void check_length(const Series3& s, int frames, const char* name) {
  if (s.rows() != frames) {
    fail(ErrorCode::LengthMismatch, std::string(name) + " has " + std::to_string(s.rows()) +
                                        " samples, expected " + std::to_string(frames));
  }
}

}  // namespace

std::string_view to_string(ReflectionResolution v) {
  switch (v) {
    case ReflectionResolution::Auto: return "auto";
    case ReflectionResolution::Positive: return "positive";
    case ReflectionResolution::Negative: return "negative";
  }
  return "auto";
}

std::string_view to_string(RowWeighting v) {
  return v == RowWeighting::Uniform ? "uniform" : "whitened";
}

std::string_view to_string(RotationIncrement v) {
  return v == RotationIncrement::FirstOrder ? "first_order" : "magnus";
}

std::string_view to_string(OmegaDotKind v) {
  switch (v) {
    case OmegaDotKind::Euler: return "euler";
    case OmegaDotKind::Zero: return "zero";
    case OmegaDotKind::Numeric: return "numeric";
  }
  return "euler";
}

void SolverOptions::validate() const {
  if (!(lambda_R >= 0.0) || !(lambda_tau >= 0.0) || !(lambda_nu >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "regularization weights must be non-negative");
  }
  (void)deriv::savgol_filter(reg_filter.order, reg_filter.window, 1);
  (void)deriv::savgol_filter(track_filter.order, track_filter.window, 2);
  (void)deriv::savgol_filter(omega_dot_filter.order, omega_dot_filter.window, 1);
}

Eigen::VectorXd OrderWeights::rows(int frames) const {
  Eigen::VectorXd w(6 * frames);
  w.segment(0, 2 * frames).setConstant(order0);
  w.segment(2 * frames, 2 * frames).setConstant(order1);
  w.segment(4 * frames, 2 * frames).setConstant(order2);
  return w;
}

OrderWeights order_weights(const SolverOptions& opts, double t_s) {
  if (opts.row_weighting == RowWeighting::Uniform) return {};
  const auto h1 = deriv::savgol_filter(opts.track_filter.order, opts.track_filter.window, 1);
  const auto h2 = deriv::savgol_filter(opts.track_filter.order, opts.track_filter.window, 2);
  return {1.0, t_s / h1.taps_norm(), t_s * t_s / h2.taps_norm()};
}

// ---------------------------------------------------------------------------
// Assembly

Eigen::MatrixXd assemble_W(const sim::MeasurementSet& meas) {
  meas.validate();
  const int frames = meas.frames();
  const int points = meas.points();
  Eigen::MatrixXd W(6 * frames, points);
  for (int f = 0; f < frames; ++f) {
    const auto i = static_cast<std::size_t>(f);
    W.middleRows(2 * f, 2) = meas.tracks[i];
    W.middleRows(2 * frames + 2 * f, 2) = meas.flows[i];
    W.middleRows(4 * frames + 2 * f, 2) = meas.double_flows[i];
  }
  return W;
}

Eigen::MatrixXd CoefficientMatrix::dense() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6 * frames_, 3 * frames_);
  for (int o = 0; o < 3; ++o) {
    for (int f = 0; f < frames_; ++f) {
      c.block<2, 3>(o * 2 * frames_ + 2 * f, 3 * f) = block(o, f);
    }
  }
  return c;
}

Eigen::SparseMatrix<double> CoefficientMatrix::sparse(const Eigen::VectorXd& row_weights) const {
  Triplets t;
  t.reserve(static_cast<std::size_t>(18 * frames_));
  for (int o = 0; o < 3; ++o) {
    for (int f = 0; f < frames_; ++f) {
      const int row = o * 2 * frames_ + 2 * f;
      add_block(t, row, 3 * f, block(o, f), weight_at(row_weights, row));
    }
  }
  Eigen::SparseMatrix<double> c(6 * frames_, 3 * frames_);
  c.setFromTriplets(t.begin(), t.end());
  return c;
}

Eigen::MatrixXd CoefficientMatrix::operator*(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out(6 * frames_, m.cols());
  for (int o = 0; o < 3; ++o) {
    for (int f = 0; f < frames_; ++f) {
      out.middleRows(o * 2 * frames_ + 2 * f, 2) = block(o, f) * m.middleRows(3 * f, 3);
    }
  }
  return out;
}

CoefficientMatrix assemble_C(const Series3& omega, const Series3& omega_dot) {
  if (omega.rows() != omega_dot.rows()) {
    fail(ErrorCode::LengthMismatch, "omega and omega_dot series differ in length");
  }
  const int frames = static_cast<int>(omega.rows());
  const Mat23 proj = projector();
  CoefficientMatrix c(frames);
  for (int f = 0; f < frames; ++f) {
    const Mat3 w = hat(row3(omega, f));
    c.block(0, f) = proj;
    c.block(1, f) = -proj * w;
    c.block(2, f) = proj * (w * w - hat(row3(omega_dot, f)));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Steps 1-3: factorization, similarity, centering

Rank4Factorization factor_rank4(const Eigen::MatrixXd& W, const Eigen::VectorXd& row_weights) {
  if (W.rows() < 4 || W.cols() < 4) {
    fail(ErrorCode::TooFewFramesOrPoints, "rank-4 factorization needs at least a 4 x 4 matrix");
  }
  if (row_weights.size() != 0 && row_weights.size() != W.rows()) {
    fail(ErrorCode::DimensionMismatch, "row weight count differs from the row count of W");
  }
  const Eigen::MatrixXd weighted =
      row_weights.size() == 0 ? W : Eigen::MatrixXd(row_weights.asDiagonal() * W);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(3) > 0.0 && sv(3) >= 1e-10 * sv(0))) {
    fail(ErrorCode::RankDeficient, "sigma_4 / sigma_1 below 1e-10; W has rank < 4");
  }

  Eigen::MatrixXd U = svd.matrixU().leftCols(4);
  Eigen::MatrixXd V = svd.matrixV().leftCols(4);
  for (int j = 0; j < 4; ++j) {
    Eigen::Index arg = 0;
    U.col(j).cwiseAbs().maxCoeff(&arg);
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }

  Rank4Factorization out;
  out.M = U * sv.head(4).asDiagonal();
  if (row_weights.size() != 0) out.M = row_weights.cwiseInverse().asDiagonal() * out.M;
  out.S = V.transpose();
  out.singular_values = sv;
  out.sigma_ratio = sv.size() > 4 ? sv(4) / sv(3) : 0.0;
  return out;
}

SimilarityFix fix_similarity(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
  if (S.rows() != 4 || M.cols() != 4) {
    fail(ErrorCode::DimensionMismatch, "fix_similarity expects 4-column M and 4-row S");
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(S.cols());
  const Eigen::Vector4d k = S.transpose().colPivHouseholderQr().solve(ones);
  if (!(std::abs(k(3)) >= 1e-12)) {
    fail(ErrorCode::SingularTransform, "|det K_simil| < 1e-12");
  }
  Eigen::Matrix4d K = Eigen::Matrix4d::Identity();
  K.row(3) = k.transpose();
  // Closed-form inverse of [I 0; a^T b].
  Eigen::Matrix4d Kinv = Eigen::Matrix4d::Identity();
  Kinv.block<1, 3>(3, 0) = -k.head<3>().transpose() / k(3);
  Kinv(3, 3) = 1.0 / k(3);

  SimilarityFix out;
  out.k = k;
  out.M = M * Kinv;
  out.S = K * S;
  out.residual = (S.transpose() * k - ones).norm();
  return out;
}

CenteredFactorization center_structure(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
  CenteredFactorization out;
  out.centroid = S.topRows<3>().rowwise().mean();
  // K_center = [I -c; 0 1], K_center^-1 = [I c; 0 1].
  out.S = S;
  out.S.topRows<3>().colwise() -= out.centroid;
  out.M = M;
  out.M.col(3) += M.leftCols<3>() * out.centroid;
  out.m_hat = out.M.col(3);
  return out;
}

// ---------------------------------------------------------------------------
// Least squares

namespace {

// Rank-revealing fallback for systems whose normal matrix is numerically
// singular. Returns the squared diagonal ratio of R as the condition.
double solve_by_qr(const Eigen::SparseMatrix<double>& A, const Eigen::MatrixXd& b, Eigen::MatrixXd& x) {
  Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
  qr.compute(A);
  if (qr.info() != Eigen::Success) {
    fail(ErrorCode::DegenerateMatrix, "sparse QR factorization failed");
  }
  for (Eigen::Index j = 0; j < b.cols(); ++j) x.col(j) = qr.solve(Eigen::VectorXd(b.col(j)));
  const Eigen::VectorXd diag = Eigen::VectorXd(qr.matrixR().diagonal()).cwiseAbs();
  const double lo = diag.minCoeff();
  const double ratio = lo > 0.0 ? diag.maxCoeff() / lo : std::numeric_limits<double>::infinity();
  return ratio * ratio;
}

// Extreme eigenvalues of the SPD normal matrix by power and inverse power
// iteration, reusing its factorization.
template <class Factor>
double normal_condition(const Eigen::SparseMatrix<double>& N, const Factor& factor) {
  constexpr int kIterations = 60;
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(N.cols(), 1.0, 2.0).normalized();
  double hi = 0.0;
  for (int i = 0; i < kIterations; ++i) {
    const Eigen::VectorXd w = N * v;
    hi = w.norm();
    v = w / hi;
  }
  v = Eigen::VectorXd::LinSpaced(N.cols(), 1.0, 2.0).normalized();
  double inv_lo = 0.0;
  for (int i = 0; i < kIterations; ++i) {
    const Eigen::VectorXd w = factor.solve(v);
    inv_lo = w.norm();
    v = w / inv_lo;
  }
  return hi * inv_lo;
}

}  // namespace

Eigen::MatrixXd solve_least_squares(const LinearSystem& sys, LsqReport* report) {
  Eigen::SparseMatrix<double> A = sys.A;
  A.makeCompressed();
  Eigen::MatrixXd x(A.cols(), sys.b.cols());
  double condition = std::numeric_limits<double>::infinity();

  // Sparse Cholesky of the normal matrix keeps the banded structure; two
  // rounds of refinement on the least-squares residual recover the accuracy
  // lost to squaring the condition.
  const Eigen::SparseMatrix<double> At = A.transpose();
  const Eigen::SparseMatrix<double> N = At * A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(N);
  bool usable = ldlt.info() == Eigen::Success;
  if (usable) {
    const Eigen::VectorXd d = ldlt.vectorD();
    const double hi = d.maxCoeff();
    usable = d.minCoeff() > hi * 1e-14;
  }
  if (usable) {
    for (Eigen::Index j = 0; j < sys.b.cols(); ++j) {
      const Eigen::VectorXd b = sys.b.col(j);
      Eigen::VectorXd xj = ldlt.solve(At * b);
      for (int it = 0; it < 2; ++it) xj += ldlt.solve(At * (b - A * xj));
      x.col(j) = xj;
    }
    if (report != nullptr) condition = normal_condition(N, ldlt);
  } else {
    condition = solve_by_qr(A, sys.b, x);
  }

  if (report != nullptr) {
    report->condition = condition;
    report->ill_conditioned = !(condition <= kIllConditioned);
    report->residual = (A * x - sys.b).norm();
  }
  return x;
}

// ---------------------------------------------------------------------------
// Step 4: rotations and structure

Vec3 rotation_increment(const Vec3& w0, const Vec3& w1, const Vec3& dw0, const Vec3& dw1,
                        double t_s, RotationIncrement kind) {
  if (kind == RotationIncrement::FirstOrder) return t_s * w0;
  const double h2 = t_s * t_s / 12.0;
  return 0.5 * t_s * (w0 + w1) + h2 * (dw0 - dw1) + h2 * w0.cross(w1);
}

LinearSystem rotation_system(const RotationProblem& p) {
  const int frames = p.C.frames();
  if (p.M_linear.rows() != 6 * frames || p.M_linear.cols() != 3) {
    fail(ErrorCode::DimensionMismatch, "rotation step expects a 6F x 3 matrix");
  }
  check_length(p.omega, frames, "omega");
  check_length(p.omega_dot, frames, "omega_dot");

  const int reg_rows = 3 * (frames - 1);
  Triplets t;
  t.reserve(static_cast<std::size_t>(18 * frames + 12 * std::max(0, frames - 1)));
  for (int o = 0; o < 3; ++o) {
    for (int f = 0; f < frames; ++f) {
      const int row = o * 2 * frames + 2 * f;
      add_block(t, row, 3 * f, p.C.block(o, f), weight_at(p.row_weights, row));
    }
  }
  const double s = std::sqrt(p.lambda_R);
  if (s > 0.0) {
    for (int f = 0; f + 1 < frames; ++f) {
      const Vec3 inc = rotation_increment(row3(p.omega, f), row3(p.omega, f + 1),
                                          row3(p.omega_dot, f), row3(p.omega_dot, f + 1), p.t_s,
                                          p.increment);
      const int row = 6 * frames + 3 * f;
      add_block(t, row, 3 * f, exp_so3(inc).transpose(), -s);
      add_block(t, row, 3 * (f + 1), Mat3::Identity(), s);
    }
  }
  LinearSystem sys;
  const int rows = 6 * frames + (s > 0.0 ? reg_rows : 0);
  sys.A.resize(rows, 3 * frames);
  sys.A.setFromTriplets(t.begin(), t.end());
  sys.b = Eigen::MatrixXd::Zero(rows, 3);
  sys.b.topRows(6 * frames) =
      p.row_weights.size() == 0 ? p.M_linear : Eigen::MatrixXd(p.row_weights.asDiagonal() * p.M_linear);
  return sys;
}

RotationBlocks recover_rotation_blocks(const RotationProblem& p) {
  RotationBlocks out;
  out.M = solve_least_squares(rotation_system(p), &out.report);
  return out;
}

MetricUpgrade metric_upgrade(const Eigen::MatrixXd& M_blocks) {
  const int frames = static_cast<int>(M_blocks.rows() / 3);
  if (M_blocks.cols() != 3 || M_blocks.rows() != 3 * frames || frames < 1) {
    fail(ErrorCode::DimensionMismatch, "metric upgrade expects a 3F x 3 block matrix");
  }
  // q = (Q00, Q01, Q02, Q11, Q12, Q22); one equation per (i <= j) per frame.
  static constexpr int kPairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  Eigen::MatrixXd A(6 * frames, 6);
  Eigen::VectorXd b(6 * frames);
  for (int f = 0; f < frames; ++f) {
    const Mat3 B = M_blocks.middleRows<3>(3 * f);
    for (int e = 0; e < 6; ++e) {
      const int i = kPairs[e][0], j = kPairs[e][1];
      for (int u = 0; u < 6; ++u) {
        const int a = kPairs[u][0], c = kPairs[u][1];
        A(6 * f + e, u) = a == c ? B(i, a) * B(j, a) : B(i, a) * B(j, c) + B(i, c) * B(j, a);
      }
      b(6 * f + e) = i == j ? 1.0 : 0.0;
    }
  }
  const Eigen::Matrix<double, 6, 1> q = A.colPivHouseholderQr().solve(b);
  Mat3 Q;
  Q << q(0), q(1), q(2),
       q(1), q(3), q(4),
       q(2), q(4), q(5);

  const Eigen::SelfAdjointEigenSolver<Mat3> eig(Q);
  Vec3 ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) fail(ErrorCode::IndefiniteQ, "metric upgrade Q has no positive eigenvalue");
  MetricUpgrade out;
  const double floor = 1e-10 * top;
  for (int i = 0; i < 3; ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      ++out.clamped;
    }
  }
  if (out.clamped > 1) {
    fail(ErrorCode::IndefiniteQ, "more than one eigenvalue of Q clamped");
  }
  const Mat3& V = eig.eigenvectors();
  out.Q = V * ev.asDiagonal() * V.transpose();
  out.K = V * ev.cwiseSqrt().asDiagonal() * V.transpose();
  for (int f = 0; f < frames; ++f) {
    const Mat3 B = M_blocks.middleRows<3>(3 * f);
    out.residual = std::max(out.residual, (B * out.Q * B.transpose() - Mat3::Identity()).norm());
  }
  return out;
}

double ResidualModel::residual(const std::vector<Rotation>& rotations,
                               const Eigen::Matrix3Xd& structure) const {
  const int frames = C.frames();
  Eigen::MatrixXd MS(3 * frames, structure.cols());
  for (int f = 0; f < frames; ++f) {
    MS.middleRows<3>(3 * f) = rotations[static_cast<std::size_t>(f)].transpose() * structure;
  }
  Eigen::MatrixXd r = W - (C * MS);
  r.colwise() -= m_hat;
  if (row_weights.size() != 0) r = row_weights.asDiagonal() * r;
  return r.norm();
}

RotationsStructure extract_rotations_structure(const Eigen::MatrixXd& M_blocks, const Mat3& K,
                                               const Eigen::Matrix3Xd& S_linear,
                                               ReflectionResolution resolution,
                                               const ResidualModel* model) {
  const int frames = static_cast<int>(M_blocks.rows() / 3);
  auto candidate = [&](bool mirror) {
    RotationsStructure c;
    c.mirrored = mirror;
    c.K = mirror ? Mat3(K * Vec3(1.0, 1.0, -1.0).asDiagonal()) : K;
    const Eigen::MatrixXd Mh = M_blocks * c.K;
    c.rotations.reserve(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
      c.rotations.push_back(project_to_so3(Mh.middleRows<3>(3 * f)).inverse());
    }
    c.structure = c.K.partialPivLu().solve(S_linear);
    if (model != nullptr) c.residual = model->residual(c.rotations, c.structure);
    return c;
  };
  switch (resolution) {
    case ReflectionResolution::Positive: return candidate(false);
    case ReflectionResolution::Negative: return candidate(true);
    case ReflectionResolution::Auto: break;
  }
  if (model == nullptr) {
    fail(ErrorCode::InvalidArgument, "automatic reflection resolution needs a residual model");
  }
  RotationsStructure pos = candidate(false);
  RotationsStructure neg = candidate(true);
  return neg.residual < pos.residual ? neg : pos;
}

// ---------------------------------------------------------------------------
// Step 5: translations, velocities and gravity

LinearSystem translation_system(const TranslationProblem& p) {
  const int frames = static_cast<int>(p.rotations.size());
  if (p.m_hat.size() != 6 * frames) {
    fail(ErrorCode::LengthMismatch, "m_hat must have 6F entries");
  }
  check_length(p.omega, frames, "omega");
  check_length(p.omega_dot, frames, "omega_dot");
  check_length(p.accel, frames, "accel");
  if (!(p.lambda_tau >= 0.0) || !(p.lambda_nu >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "regularization weights must be non-negative");
  }
  // Sequences shorter than the regularizer window get the widest odd
  // window that fits, with the polynomial order capped accordingly.
  const int window = std::min(p.reg_filter.window, frames % 2 == 1 ? frames : frames - 1);
  if (window < 3) fail(ErrorCode::SeriesTooShort, "translation recovery needs at least 3 frames");
  const auto filter = deriv::savgol_filter(std::min(p.reg_filter.order, window - 1), window, 1);
  const bool regularize = p.lambda_tau > 0.0 || p.lambda_nu > 0.0;

  const int tau0 = 0, nu0 = 3 * frames, g0 = 6 * frames;
  const int data_rows = 6 * frames;
  const int rows = data_rows + (regularize ? 6 * frames : 0);
  const Mat23 proj = projector();

  Triplets t;
  t.reserve(static_cast<std::size_t>(60 * frames + 6 * filter.window() * frames));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);

  for (int f = 0; f < frames; ++f) {
    const Mat3 w = hat(row3(p.omega, f));
    const Mat3 a = w * w - hat(row3(p.omega_dot, f));
    const Mat3 rt = p.rotations[static_cast<std::size_t>(f)].transpose();
    const Vec3 accel = row3(p.accel, f);

    const int r0 = 2 * f, r1 = 2 * frames + 2 * f, r2 = 4 * frames + 2 * f;
    if (p.include_order0_rows) {
      add_block(t, r0, tau0 + 3 * f, -proj, p.weights.order0);
      b.segment<2>(r0) = p.weights.order0 * p.m_hat.segment<2>(r0);
    }
    add_block(t, r1, tau0 + 3 * f, proj * w, p.weights.order1);
    add_block(t, r1, nu0 + 3 * f, -proj, p.weights.order1);
    b.segment<2>(r1) = p.weights.order1 * p.m_hat.segment<2>(r1);

    add_block(t, r2, tau0 + 3 * f, -proj * a, p.weights.order2);
    add_block(t, r2, nu0 + 3 * f, 2.0 * proj * w, p.weights.order2);
    add_block(t, r2, g0, proj * rt, p.weights.order2);
    b.segment<2>(r2) = p.weights.order2 * (p.m_hat.segment<2>(r2) + proj * accel);

    if (!regularize) continue;
    const auto st = filter.stencil(frames, f);
    const double st_scale = 1.0 / p.t_s;
    const double s_tau = std::sqrt(p.lambda_tau);
    const double s_nu = std::sqrt(p.lambda_nu);

    // D(tau)_f + [w]x tau_f - nu_f = 0
    const int rt_row = data_rows + 3 * f;
    for (int k = 0; k < filter.window(); ++k) {
      add_block(t, rt_row, tau0 + 3 * (st.first + k), Mat3::Identity(), s_tau * st_scale * (*st.weights)(k));
    }
    add_block(t, rt_row, tau0 + 3 * f, w, s_tau);
    add_block(t, rt_row, nu0 + 3 * f, Mat3::Identity(), -s_tau);

    // D(nu)_f + [w]x nu_f + R_f^T g = alpha_IMU,f
    const int rn_row = data_rows + 3 * frames + 3 * f;
    for (int k = 0; k < filter.window(); ++k) {
      add_block(t, rn_row, nu0 + 3 * (st.first + k), Mat3::Identity(), s_nu * st_scale * (*st.weights)(k));
    }
    add_block(t, rn_row, nu0 + 3 * f, w, s_nu);
    add_block(t, rn_row, g0, rt, s_nu);
    b.segment<3>(rn_row) = s_nu * accel;
  }

  LinearSystem sys;
  sys.A.resize(rows, 6 * frames + 3);
  sys.A.setFromTriplets(t.begin(), t.end());
  sys.b = b;
  return sys;
}

Translations recover_translations(const TranslationProblem& p) {
  const int frames = static_cast<int>(p.rotations.size());
  Translations out;
  const Eigen::VectorXd x = solve_least_squares(translation_system(p), &out.report);
  out.tau = Eigen::Map<const Series3>(x.data(), frames, 3);
  out.nu = Eigen::Map<const Series3>(x.data() + 3 * frames, frames, 3);
  out.gravity = x.tail<3>();
  return out;
}

// ---------------------------------------------------------------------------

Vec3 Reconstruction::position(int f) const {
  return rotations.at(static_cast<std::size_t>(f)) * Vec3(tau.row(f).transpose());
}

Reconstruction reconstruct(const sim::MeasurementSet& meas, const SolverOptions& opts) {
  auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.code(), std::string("stage ") + name + ": " + e.what(), name);
    }
  };

  stage("validate", [&] {
    opts.validate();
    meas.validate();
    return 0;
  });
  const int frames = meas.frames();
  const OrderWeights weights = order_weights(opts, meas.t_s);
  const Eigen::VectorXd row_w = weights.rows(frames);

  const Eigen::MatrixXd W = stage("assemble_W", [&] { return assemble_W(meas); });
  const Series3 omega_dot = stage("omega_dot", [&] {
    switch (opts.omega_dot_mode) {
      case OmegaDotKind::Euler:
        if (!meas.inertia || meas.torque.rows() != frames) {
          fail(ErrorCode::InvalidArgument, "euler omega_dot mode needs inertia and torque");
        }
        return deriv::omega_dot_series(meas.gyro, deriv::EulerOmegaDot{*meas.inertia, meas.torque}, meas.t_s);
      case OmegaDotKind::Zero:
        return deriv::omega_dot_series(meas.gyro, deriv::ZeroOmegaDot{}, meas.t_s);
      case OmegaDotKind::Numeric:
        return deriv::omega_dot_series(meas.gyro, deriv::NumericOmegaDot{opts.omega_dot_filter}, meas.t_s);
    }
    return Series3(Series3::Zero(frames, 3));
  });
  const CoefficientMatrix C = stage("assemble_C", [&] { return assemble_C(meas.gyro, omega_dot); });
  const Rank4Factorization fac = stage("factor_rank4", [&] { return factor_rank4(W, row_w); });
  const SimilarityFix sim = stage("fix_similarity", [&] { return fix_similarity(fac.M, fac.S); });
  const CenteredFactorization cen = stage("center_structure", [&] { return center_structure(sim.M, sim.S); });

  const Eigen::MatrixXd M_linear = cen.M.leftCols<3>();
  const RotationBlocks blocks = stage("recover_rotation_blocks", [&] {
    return recover_rotation_blocks({M_linear, C, meas.gyro, omega_dot, meas.t_s, opts.lambda_R,
                                    opts.rotation_increment, row_w});
  });
  const MetricUpgrade upg = stage("metric_upgrade", [&] { return metric_upgrade(blocks.M); });
  const Eigen::Matrix3Xd S_linear = cen.S.topRows<3>();
  const ResidualModel model{W, C, cen.m_hat, row_w};
  const RotationsStructure rs = stage("extract_rotations_structure", [&] {
    return extract_rotations_structure(blocks.M, upg.K, S_linear, opts.reflection_resolution, &model);
  });
  Translations tr = stage("recover_translations", [&] {
    TranslationProblem tp{cen.m_hat, rs.rotations, meas.gyro, omega_dot, meas.accel, meas.t_s};
    tp.lambda_tau = opts.lambda_tau;
    tp.lambda_nu = opts.lambda_nu;
    tp.reg_filter = opts.reg_filter;
    tp.weights = weights;
    return recover_translations(tp);
  });

  Reconstruction r;
  r.rotations = rs.rotations;
  r.structure = rs.structure;
  r.tau = std::move(tr.tau);
  r.nu = std::move(tr.nu);
  r.gravity = tr.gravity;
  r.residuals.sigma_ratio = fac.sigma_ratio;
  r.residuals.rotation_lsq = blocks.report.residual;
  r.residuals.translation_lsq = tr.report.residual;
  r.residuals.metric_upgrade = upg.residual;
  r.residuals.reprojection = rs.residual;
  r.residuals.rotation_condition = blocks.report.condition;
  r.residuals.translation_condition = tr.report.condition;
  r.singular_values = fac.singular_values;
  r.m_hat = cen.m_hat;
  r.motion_blocks = blocks.M;
  r.K_upgrade = rs.K;
  r.mirrored = rs.mirrored;
  return r;
}

}  // namespace dasfm::solver
