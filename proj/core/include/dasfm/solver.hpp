#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dasfm/deriv.hpp"
#include "dasfm/sim.hpp"
#include "dasfm/so3.hpp"
#include "dasfm/types.hpp"

namespace dasfm::solver {

enum class ReflectionResolution { Auto, Positive, Negative };

// How the three derivative orders of W are weighted against each other.
// Whitened divides each order by the noise gain of the filter that produced
// it (1, ||h1||/t_s, ||h2||/t_s^2 relative to the tracks).
enum class RowWeighting { Uniform, Whitened };

// Frame-to-frame rotation increment used by the rotation regularizer.
// FirstOrder is exp(t_s w_f); Magnus is the fourth-order two-point
// Magnus step using w and w' at both ends of the interval.
enum class RotationIncrement { FirstOrder, Magnus };

enum class OmegaDotKind { Euler, Zero, Numeric };

std::string_view to_string(ReflectionResolution v);
std::string_view to_string(RowWeighting v);
std::string_view to_string(RotationIncrement v);
std::string_view to_string(OmegaDotKind v);

struct SolverOptions {
  double lambda_R = 1.0;
  double lambda_tau = 1.0;
  double lambda_nu = 1.0;
  OmegaDotKind omega_dot_mode = OmegaDotKind::Euler;
  deriv::FilterSpec omega_dot_filter{2, 5};
  deriv::FilterSpec reg_filter{6, 9};
  deriv::FilterSpec track_filter{2, 5};
  ReflectionResolution reflection_resolution = ReflectionResolution::Auto;
  RowWeighting row_weighting = RowWeighting::Whitened;
  RotationIncrement rotation_increment = RotationIncrement::Magnus;

  // Throws InvalidArgument on negative weights or invalid filter specs.
  void validate() const;
};

struct OrderWeights {
  double order0 = 1.0;
  double order1 = 1.0;
  double order2 = 1.0;

  // Per-row weights for a 6F-row stacked matrix.
  Eigen::VectorXd rows(int frames) const;
};

OrderWeights order_weights(const SolverOptions& opts, double t_s);

// W = stack(W', W'_dot, W'_ddot), 6F x P. Row (order o, frame f, coord c)
// is o*2F + 2f + c.
Eigen::MatrixXd assemble_W(const sim::MeasurementSet& meas);

// Block matrix C (6F x 3F) with one 2x3 block per block row:
//   order 0: P,  order 1: -P [w]x,  order 2: P([w]x^2 - [w']x).
class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;
  explicit CoefficientMatrix(int frames) : frames_(frames), blocks_(3 * static_cast<std::size_t>(frames)) {}

  int frames() const { return frames_; }
  const Mat23& block(int order, int frame) const { return blocks_[index(order, frame)]; }
  Mat23& block(int order, int frame) { return blocks_[index(order, frame)]; }

  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double> sparse(const Eigen::VectorXd& row_weights = {}) const;

  // C * M for a 3F x k matrix M.
  Eigen::MatrixXd operator*(const Eigen::MatrixXd& m) const;

 private:
  std::size_t index(int order, int frame) const {
    return static_cast<std::size_t>(order) * static_cast<std::size_t>(frames_) + static_cast<std::size_t>(frame);
  }
  int frames_ = 0;
  std::vector<Mat23> blocks_;
};

CoefficientMatrix assemble_C(const Series3& omega, const Series3& omega_dot);

struct Rank4Factorization {
  Eigen::MatrixXd M;                // 6F x 4
  Eigen::MatrixXd S;                // 4 x P
  Eigen::VectorXd singular_values;  // of the (weighted) W
  double sigma_ratio = 0.0;         // sigma_5 / sigma_4, 0 when P == 4
};

// Truncated SVD W ~ M S. With row weights D the SVD is taken of D W and M
// is returned unweighted. The largest-magnitude entry of every left
// singular vector is made positive. Throws RankDeficient when
// sigma_4 / sigma_1 < 1e-10.
Rank4Factorization factor_rank4(const Eigen::MatrixXd& W, const Eigen::VectorXd& row_weights = {});

struct SimilarityFix {
  Eigen::MatrixXd M;  // M K^-1
  Eigen::MatrixXd S;  // K S, last row ~ 1^T
  Eigen::Vector4d k;
  double residual = 0.0;  // || k^T S - 1^T ||
};

// Solves k^T S = 1^T in least squares; K = stack([I 0], k^T).
// Throws SingularTransform when |det K| < 1e-12.
SimilarityFix fix_similarity(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S);

struct CenteredFactorization {
  Eigen::MatrixXd M;       // 6F x 4
  Eigen::MatrixXd S;       // 4 x P, first three rows zero-mean
  Eigen::VectorXd m_hat;   // fourth column of M
  Vec3 centroid = Vec3::Zero();
};

CenteredFactorization center_structure(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S);

struct LinearSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::MatrixXd b;
};

struct LsqReport {
  double residual = 0.0;   // ||A x - b||_F
  double condition = 0.0;  // estimated condition of A^T A
  bool ill_conditioned = false;
};

Vec3 rotation_increment(const Vec3& w0, const Vec3& w1, const Vec3& dw0, const Vec3& dw1,
                        double t_s, RotationIncrement kind);

struct RotationProblem {
  const Eigen::MatrixXd& M_linear;  // first three columns of the centered M, 6F x 3
  const CoefficientMatrix& C;
  const Series3& omega;
  const Series3& omega_dot;
  double t_s;
  double lambda_R;
  RotationIncrement increment = RotationIncrement::Magnus;
  Eigen::VectorXd row_weights = {};
};

// [D C; sqrt(lambda) C_R] M'' = [D M_linear; 0]. C_R has F-1 block rows,
// each -E_f^T at block column f and I at block column f+1.
LinearSystem rotation_system(const RotationProblem& p);

struct RotationBlocks {
  Eigen::MatrixXd M;  // 3F x 3
  LsqReport report;
};

RotationBlocks recover_rotation_blocks(const RotationProblem& p);

struct MetricUpgrade {
  Mat3 K = Mat3::Identity();
  Mat3 Q = Mat3::Identity();
  double residual = 0.0;  // max_f || M_f Q M_f^T - I ||_F
  int clamped = 0;
};

// Solves M_f Q M_f^T = I over all frames for symmetric Q, projects Q to
// positive definite and returns its symmetric square root. Throws
// IndefiniteQ when more than one eigenvalue had to be clamped.
MetricUpgrade metric_upgrade(const Eigen::MatrixXd& M_blocks);

// Weighted reprojection residual || D (W - (C M S + m 1^T)) ||_F used to
// choose between the two reflection candidates.
struct ResidualModel {
  const Eigen::MatrixXd& W;
  const CoefficientMatrix& C;
  const Eigen::VectorXd& m_hat;
  Eigen::VectorXd row_weights = {};

  double residual(const std::vector<Rotation>& rotations, const Eigen::Matrix3Xd& structure) const;
};

struct RotationsStructure {
  std::vector<Rotation> rotations;
  Eigen::Matrix3Xd structure;
  Mat3 K = Mat3::Identity();
  bool mirrored = false;
  double residual = 0.0;  // reprojection residual of the chosen candidate, when a model is given
};

// R_f = project_to_so3(M''_f K)^T and S = K^-1 S''. `model` is required for
// ReflectionResolution::Auto.
RotationsStructure extract_rotations_structure(const Eigen::MatrixXd& M_blocks, const Mat3& K,
                                               const Eigen::Matrix3Xd& S_linear,
                                               ReflectionResolution resolution,
                                               const ResidualModel* model = nullptr);

struct TranslationProblem {
  const Eigen::VectorXd& m_hat;
  const std::vector<Rotation>& rotations;
  const Series3& omega;
  const Series3& omega_dot;
  const Series3& accel;
  double t_s;
  double lambda_tau = 1.0;
  double lambda_nu = 1.0;
  deriv::FilterSpec reg_filter{6, 9};
  OrderWeights weights = {};
  bool include_order0_rows = true;
};

// Unknown x = stack(tau_1..tau_F, nu_1..nu_F, g_s). Data rows follow the
// translation vector m with the accelerometer term moved to the right-hand
// side; regularizer rows tie the filtered derivatives of tau and nu to the
// body-frame kinematics.
LinearSystem translation_system(const TranslationProblem& p);

struct Translations {
  Series3 tau;
  Series3 nu;
  Vec3 gravity = Vec3::Zero();
  LsqReport report;
};

Translations recover_translations(const TranslationProblem& p);

struct Residuals {
  double sigma_ratio = 0.0;
  double rotation_lsq = 0.0;
  double translation_lsq = 0.0;
  double metric_upgrade = 0.0;
  double reprojection = 0.0;
  double rotation_condition = 0.0;
  double translation_condition = 0.0;
};

struct Reconstruction {
  std::vector<Rotation> rotations;
  Series3 tau;
  Series3 nu;
  Vec3 gravity = Vec3::Zero();
  Eigen::Matrix3Xd structure;
  Residuals residuals;

  // Intermediates.
  Eigen::VectorXd singular_values;
  Eigen::VectorXd m_hat;
  Eigen::MatrixXd motion_blocks;  // M'' before the metric upgrade
  Mat3 K_upgrade = Mat3::Identity();
  bool mirrored = false;

  int frames() const { return static_cast<int>(rotations.size()); }
  // Spatial-frame position T_f = R_f tau_f.
  Vec3 position(int f) const;
};

// Runs the full closed-form pipeline. Failures rethrow the stage's Error
// with Error::stage() set.
Reconstruction reconstruct(const sim::MeasurementSet& meas, const SolverOptions& opts = {});

// Solves min ||A x - b|| column by column with sparse QR.
Eigen::MatrixXd solve_least_squares(const LinearSystem& sys, LsqReport* report = nullptr);

}  // namespace dasfm::solver
