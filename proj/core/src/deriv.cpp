#include "dasfm/deriv.hpp"

#include <cmath>

#include <Eigen/QR>

#include "dasfm/error.hpp"
#include "dasfm/sim.hpp"

namespace dasfm::deriv {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Least-squares fit weights for the `deriv`-th derivative at sample `pos`.
// Abscissae are scaled to [-1, 1] to keep the Vandermonde system well
// conditioned for the higher orders.
Eigen::VectorXd fit_weights(int order, int window, int deriv, int pos) {
  const double scale = std::max(1.0, 0.5 * (window - 1));
  Eigen::MatrixXd v(window, order + 1);
  for (int k = 0; k < window; ++k) {
    const double x = (k - pos) / scale;
    double p = 1.0;
    for (int j = 0; j <= order; ++j) {
      v(k, j) = p;
      p *= x;
    }
  }
  const Eigen::MatrixXd pinv =
      v.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
  return pinv.row(deriv).transpose() * (factorial(deriv) / std::pow(scale, deriv));
}

}  // namespace

DerivFilter::DerivFilter(int order, int window, int deriv)
    : order_(order), window_(window), deriv_(deriv) {
  if (deriv < 0 || order < deriv || window <= order || window % 2 == 0) {
    fail(ErrorCode::BadFilterSpec, "need 0 <= deriv <= order < window with odd window (got order " +
                                       std::to_string(order) + ", window " +
                                       std::to_string(window) + ", deriv " +
                                       std::to_string(deriv) + ")");
  }
  weights_.reserve(static_cast<std::size_t>(window));
  for (int pos = 0; pos < window; ++pos) {
    weights_.push_back(fit_weights(order, window, deriv, pos));
  }
  // Centered taps of symmetric filters are exactly (anti)symmetric; remove
  // the rounding asymmetry so taps like [-1/2, 0, 1/2] come out exact.
  Eigen::VectorXd& c = weights_[static_cast<std::size_t>(window / 2)];
  const double sign = deriv % 2 == 0 ? 1.0 : -1.0;
  for (int k = 0; k < window / 2; ++k) {
    const double avg = 0.5 * (c(k) + sign * c(window - 1 - k));
    c(k) = avg;
    c(window - 1 - k) = sign * avg;
  }
  if (deriv % 2 == 1) c(window / 2) = 0.0;
}

DerivFilter::Stencil DerivFilter::stencil(int n, int i) const {
  const int half = window_ / 2;
  int first = i - half;
  if (first < 0) first = 0;
  if (first > n - window_) first = n - window_;
  return {first, &weights_at(i - first)};
}

DerivFilter savgol_filter(int order, int window, int deriv) {
  return DerivFilter(order, window, deriv);
}

Eigen::MatrixXd differentiate_series(const Eigen::Ref<const Eigen::MatrixXd>& series, double t_s,
                                     const DerivFilter& filter) {
  const int n = static_cast<int>(series.rows());
  if (n < filter.window()) {
    fail(ErrorCode::SeriesTooShort, "series of length " + std::to_string(n) +
                                        " is shorter than the filter window " +
                                        std::to_string(filter.window()));
  }
  const double scale = 1.0 / std::pow(t_s, filter.deriv());
  Eigen::MatrixXd out(series.rows(), series.cols());
  for (int i = 0; i < n; ++i) {
    const auto st = filter.stencil(n, i);
    out.row(i) = scale * (st.weights->transpose() * series.middleRows(st.first, filter.window()));
  }
  return out;
}

Series3 omega_dot_series(const Series3& omega, const OmegaDotMode& mode, double t_s) {
  struct Visitor {
    const Series3& omega;
    double t_s;
    Series3 operator()(const EulerOmegaDot& m) const {
      return sim::euler_omega_dot(m.inertia, m.torque, omega);
    }
    Series3 operator()(const ZeroOmegaDot&) const {
      return Series3::Zero(omega.rows(), 3);
    }
    Series3 operator()(const NumericOmegaDot& m) const {
      const DerivFilter f = savgol_filter(m.filter.order, m.filter.window, 1);
      return differentiate_series(omega, t_s, f);
    }
  };
  return std::visit(Visitor{omega, t_s}, mode);
}

TrackDerivatives differentiate_tracks(std::span<const Eigen::Matrix2Xd> tracks, double t_s,
                                      const DerivFilter& first, const DerivFilter& second) {
  const int frames = static_cast<int>(tracks.size());
  const int points = frames > 0 ? static_cast<int>(tracks[0].cols()) : 0;
  if (frames < std::max(first.window(), second.window())) {
    fail(ErrorCode::SeriesTooShort, "need at least " +
                                        std::to_string(std::max(first.window(), second.window())) +
                                        " frames to differentiate tracks");
  }
  // Rows are frames, columns are (point, coordinate) pairs.
  Eigen::MatrixXd stacked(frames, 2 * points);
  for (int f = 0; f < frames; ++f) {
    if (tracks[static_cast<std::size_t>(f)].cols() != points) {
      fail(ErrorCode::LengthMismatch, "tracks have inconsistent point counts");
    }
    stacked.row(f) = Eigen::Map<const Eigen::RowVectorXd>(tracks[static_cast<std::size_t>(f)].data(), 2 * points);
  }
  const Eigen::MatrixXd d1 = differentiate_series(stacked, t_s, first);
  const Eigen::MatrixXd d2 = differentiate_series(stacked, t_s, second);

  TrackDerivatives out;
  out.flows.reserve(static_cast<std::size_t>(frames));
  out.double_flows.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    Eigen::Matrix2Xd a(2, points), b(2, points);
    Eigen::Map<Eigen::RowVectorXd>(a.data(), 2 * points) = d1.row(f);
    Eigen::Map<Eigen::RowVectorXd>(b.data(), 2 * points) = d2.row(f);
    out.flows.push_back(std::move(a));
    out.double_flows.push_back(std::move(b));
  }
  return out;
}

}  // namespace dasfm::deriv
