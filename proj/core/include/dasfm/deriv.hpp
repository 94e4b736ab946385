#pragma once

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dasfm/types.hpp"

namespace dasfm::deriv {

struct FilterSpec {
  int order = 1;
  int window = 3;
};

// Savitzky-Golay derivative weights: least-squares polynomial fit of degree
// `order` over `window` equispaced samples, differentiated `deriv` times.
// Weights are in samples (multiply by 1/t_s^deriv for physical units).
//
// Besides the centered taps, the filter carries the one-sided weights used
// for the first and last window/2 samples of a series, so that filtering
// never shortens the signal.
class DerivFilter {
 public:
  DerivFilter(int order, int window, int deriv);

  int order() const { return order_; }
  int window() const { return window_; }
  int deriv() const { return deriv_; }

  // Centered taps h_k, k = 0..window-1, applied as sum_k h_k y[i - window/2 + k].
  const Eigen::VectorXd& taps() const { return weights_[static_cast<std::size_t>(window_ / 2)]; }

  // Weights evaluating the fit at sample `pos` (0..window-1) of the window.
  const Eigen::VectorXd& weights_at(int pos) const { return weights_.at(static_cast<std::size_t>(pos)); }

  double taps_norm() const { return taps().norm(); }

  struct Stencil {
    int first;                       // index of the first sample used
    const Eigen::VectorXd* weights;  // window weights
  };

  // Stencil producing the derivative at sample `i` of a length-`n` series.
  Stencil stencil(int n, int i) const;

 private:
  int order_;
  int window_;
  int deriv_;
  std::vector<Eigen::VectorXd> weights_;
};

// Throws BadFilterSpec unless deriv <= order < window and window is odd.
DerivFilter savgol_filter(int order, int window, int deriv);

// Filters every column of an F x d series. Throws SeriesTooShort when
// F < window.
Eigen::MatrixXd differentiate_series(const Eigen::Ref<const Eigen::MatrixXd>& series, double t_s,
                                     const DerivFilter& filter);

struct EulerOmegaDot {
  Mat3 inertia;
  Series3 torque;
};
struct ZeroOmegaDot {};
struct NumericOmegaDot {
  FilterSpec filter{2, 5};
};

// omega_dot source: Euler's equation with known torque, the constant
// angular velocity model, or numerical differentiation of the gyro.
using OmegaDotMode = std::variant<EulerOmegaDot, ZeroOmegaDot, NumericOmegaDot>;

Series3 omega_dot_series(const Series3& omega, const OmegaDotMode& mode, double t_s);

struct TrackFilters {
  DerivFilter first = savgol_filter(2, 5, 1);
  DerivFilter second = savgol_filter(2, 5, 2);
};

struct TrackDerivatives {
  std::vector<Eigen::Matrix2Xd> flows;
  std::vector<Eigen::Matrix2Xd> double_flows;
};

// Per point, per image coordinate differentiation of F tracks (each 2 x P).
TrackDerivatives differentiate_tracks(std::span<const Eigen::Matrix2Xd> tracks, double t_s,
                                      const DerivFilter& first, const DerivFilter& second);

}  // namespace dasfm::deriv
