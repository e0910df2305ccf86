#pragma once

#include <Eigen/Dense>

namespace daf::infer {

/// Agent pose used to convert between the egocentric frame (x forward,
/// y left) and the global frame.
struct FrameTransform {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();  // agent position, global
  double theta = 0.0;                           // heading, radians

  /// Normalizes theta into (-pi, pi].
  static FrameTransform make(const Eigen::Vector2d& c, double theta);
};

double normalize_angle(double theta);

/// Egocentric -> global: rotation by theta, then translation by c.
Eigen::Vector2d r2g(const Eigen::Vector2d& ego, const FrameTransform& tf);

/// Global -> egocentric; exact inverse of r2g.
Eigen::Vector2d g2r(const Eigen::Vector2d& global, const FrameTransform& tf);

}  // namespace daf::infer
