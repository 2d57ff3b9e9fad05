#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "wardrop/common.hpp"

namespace wardrop {

/// Player utility u. Supported kinds:
///   none         u(x) = 0
///   quad_pref    u(x) = -weight * ||x - preferred||^2          (weight > 0)
///   log_benefit  u(x) =  weight * log(1 + sum_t x_t)           (weight > 0)
///
/// The quadratic preference is strongly concave with modulus alpha = 2*weight.
/// The log benefit is concave and increasing but not strongly concave
/// (alpha = 0); it is only defined where 1 + sum(x) > 0, which holds on the
/// nonnegative orthant where all strategy sets live.
///
/// A spec may carry a population scale mu in (0,1]: the stored function is
/// then u(x) = mu * u_base(x / mu), the per-class form used when a continuum
/// class of measure mu is collapsed into one atomic player. Gradients obey
/// grad u(mu x) = grad u_base(x), so scaling is transparent to the
/// discretization metrics.
class UtilitySpec {
 public:
  enum class Kind { None, QuadPref, LogBenefit };

  static UtilitySpec none() { return UtilitySpec(); }

  static UtilitySpec quad_pref(double weight, Vec preferred) {
    if (!(weight >= 0.0)) throw std::invalid_argument("quad_pref needs weight >= 0");
    UtilitySpec u;
    u.kind_ = Kind::QuadPref;
    u.weight_ = weight;
    u.preferred_ = std::move(preferred);
    return u;
  }

  static UtilitySpec log_benefit(double weight) {
    if (!(weight > 0.0)) throw std::invalid_argument("log_benefit needs weight > 0");
    UtilitySpec u;
    u.kind_ = Kind::LogBenefit;
    u.weight_ = weight;
    return u;
  }

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  const Vec& preferred() const { return preferred_; }
  double scale() const { return scale_; }
  bool is_none() const { return kind_ == Kind::None; }

  /// The measure-mu per-class version of this utility: x -> mu * u(x / mu).
  UtilitySpec scaled(double measure) const {
    if (!(measure > 0.0)) throw std::invalid_argument("scale must be > 0");
    UtilitySpec u = *this;
    u.scale_ *= measure;
    return u;
  }

  double value(const Vec& x) const {
    switch (kind_) {
      case Kind::None:
        return 0.0;
      case Kind::QuadPref:
        return -(weight_ / scale_) * (x - scale_ * preferred_).squaredNorm();
      case Kind::LogBenefit:
        return scale_ * weight_ * std::log1p(x.sum() / scale_);
    }
    return 0.0;
  }

  Vec gradient(const Vec& x) const {
    switch (kind_) {
      case Kind::None:
        return Vec::Zero(x.size());
      case Kind::QuadPref:
        return -2.0 * weight_ * (x / scale_ - preferred_);
      case Kind::LogBenefit:
        return Vec::Constant(x.size(), weight_ / (1.0 + x.sum() / scale_));
    }
    return Vec::Zero(x.size());
  }

  /// Strong-concavity modulus alpha (0 when not strongly concave).
  double strong_concavity() const {
    return kind_ == Kind::QuadPref ? 2.0 * weight_ / scale_ : 0.0;
  }

  /// Upper bound on the Hessian norm of -u over the nonnegative orthant.
  double curvature_bound() const {
    switch (kind_) {
      case Kind::None:
        return 0.0;
      case Kind::QuadPref:
        return 2.0 * weight_ / scale_;
      case Kind::LogBenefit:
        return weight_ / scale_;
    }
    return 0.0;
  }

  /// Sup of ||grad u||_2 over the ball of the given radius intersected with
  /// the nonnegative orthant (where the strategy sets live).
  double gradient_bound(double radius, int dim) const {
    switch (kind_) {
      case Kind::None:
        return 0.0;
      case Kind::QuadPref:
        return 2.0 * weight_ * (radius / scale_ + preferred_.norm());
      case Kind::LogBenefit:
        // max of weight/(1+sum/scale) over sum >= 0 is at sum = 0
        return weight_ * std::sqrt(static_cast<double>(dim));
    }
    return 0.0;
  }

 private:
  Kind kind_ = Kind::None;
  double weight_ = 0.0;
  Vec preferred_;
  double scale_ = 1.0;
};

}  // namespace wardrop
