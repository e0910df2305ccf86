#include "daf/frame.hpp"

#include <cmath>
#include <numbers>

namespace daf::infer {

double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t <= -std::numbers::pi) t += two_pi;
  if (t > std::numbers::pi) t -= two_pi;
  return t;
}

FrameTransform FrameTransform::make(const Eigen::Vector2d& c, double theta) {
  return FrameTransform{c, normalize_angle(theta)};
}

Eigen::Vector2d r2g(const Eigen::Vector2d& ego, const FrameTransform& tf) {
  const double ct = std::cos(tf.theta);
  const double st = std::sin(tf.theta);
  return {ct * ego.x() - st * ego.y() + tf.c.x(),
          st * ego.x() + ct * ego.y() + tf.c.y()};
}

Eigen::Vector2d g2r(const Eigen::Vector2d& global, const FrameTransform& tf) {
  const double ct = std::cos(tf.theta);
  const double st = std::sin(tf.theta);
  const Eigen::Vector2d d = global - tf.c;
  return {ct * d.x() + st * d.y(), -st * d.x() + ct * d.y()};
}

}  // namespace daf::infer
