#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "raybasis/core.hpp"

// Boundary reflection models. Everything that can sit under a trainable model
// is written once, templated on the scalar, so the plain-double path and the
// autodiff path share the same arithmetic.

namespace raybasis {

/// Ideal free surface: coefficient -1 at every angle.
struct PressureRelease {};

/// Angle-independent complex coefficient.
struct FixedCoeff {
  Cplx value{};
};

/// Fluid half-space described relative to the water column:
/// density ratio rho_r, sound-speed ratio c_r, and loss tangent delta >= 0.
struct RayleighBottom {
  double rho_ratio{1.5};
  double speed_ratio{1.05};
  double loss_tangent{0.0};

  void validate() const {
    if (!(rho_ratio > 0.0) || !(speed_ratio > 0.0) || loss_tangent < 0.0)
      throw std::invalid_argument("RayleighBottom: ratios must be positive, loss tangent >= 0");
  }
};

/// 1-in 2-out single-hidden-layer network mapping incidence angle to a
/// magnitude eps >= 0 (softplus head) and a phase kappa in (-pi, pi)
/// (pi*tanh head). Layout: w1[H], b1[H], w2[2*H] (eps row then kappa row), b2[2].
struct RcnnWeights {
  int hidden{16};
  std::vector<double> w1, b1, w2, b2;

  [[nodiscard]] static RcnnWeights zeros(int hidden = 16) {
    RcnnWeights w;
    w.hidden = hidden;
    w.w1.assign(static_cast<std::size_t>(hidden), 0.0);
    w.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    w.w2.assign(static_cast<std::size_t>(2 * hidden), 0.0);
    w.b2.assign(2, 0.0);
    return w;
  }

  /// Weights uniform in [-0.5, 0.5]/sqrt(fan-in), biases zero.
  [[nodiscard]] static RcnnWeights random(Rng& rng, int hidden = 16) {
    RcnnWeights w = zeros(hidden);
    for (auto& x : w.w1) x = rng.uniform(-0.5, 0.5);
    double s = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& x : w.w2) x = rng.uniform(-0.5, 0.5) * s;
    return w;
  }

  [[nodiscard]] std::size_t param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  void validate() const {
    if (hidden < 1) throw std::invalid_argument("RcnnWeights: hidden width must be >= 1");
    auto h = static_cast<std::size_t>(hidden);
    if (w1.size() != h || b1.size() != h || w2.size() != 2 * h || b2.size() != 2)
      throw std::invalid_argument("RcnnWeights: inconsistent layer sizes");
  }
};

using ReflectionModel = std::variant<PressureRelease, FixedCoeff, RayleighBottom, RcnnWeights>;

struct EpsKappa {
  double eps{};
  double kappa{};
};

// ---- templated cores ----

/// Network forward pass on parameter spans; gamma is normalized by pi/2
/// inside. S is either T or plain double (frozen weights under a taped input).
template <class T, class S>
[[nodiscard]] CplxT<T> rcnn_eval(std::span<const S> w1, std::span<const S> b1,
                                 std::span<const S> w2, std::span<const S> b2, const T& gamma,
                                 T* eps_out = nullptr, T* kappa_out = nullptr) {
  using std::tanh;
  std::size_t h = w1.size();
  T x = gamma * (2.0 / pi);
  T h0 = tanh(w1[0] * x + b1[0]);
  T o0 = w2[0] * h0 + b2[0];
  T o1 = w2[h] * h0 + b2[1];
  for (std::size_t j = 1; j < h; ++j) {
    T hj = tanh(w1[j] * x + b1[j]);
    o0 = o0 + w2[j] * hj;
    o1 = o1 + w2[h + j] * hj;
  }
  T eps = softplus(o0);
  T kappa = pi * tanh(o1);
  if (eps_out) *eps_out = eps;
  if (kappa_out) *kappa_out = kappa;
  return eps * polar_unit(kappa);
}

/// Principal square root: nonnegative real part, positive imaginary part on
/// the negative real axis. Branches on values only, so it also records cleanly
/// on the autodiff tape.
template <class T>
[[nodiscard]] CplxT<T> principal_sqrt(const CplxT<T>& z) {
  using std::sqrt;
  T r = sqrt(z.re * z.re + z.im * z.im);
  T sr = sqrt(max0((r + z.re) * 0.5));
  T si = sqrt(max0((r - z.re) * 0.5));
  if (value_of(z.im) < 0.0) return {sr, -si};
  return {sr, si};
}

/// Rayleigh reflection coefficient from cos(gamma), gamma the incidence angle
/// measured from the boundary normal:
///   Gamma = (rho_r cos g - S) / (rho_r cos g + S),
///   S = sqrt((n_bar)^2 - sin^2 g),  n_bar = (1 + i delta)/c_r.
/// All four arguments share one scalar type; lift constants before calling.
template <class T>
[[nodiscard]] CplxT<T> rayleigh_eval_cos(const T& rho, const T& cr, const T& delta,
                                         const T& cos_g) {
  T sin2 = max0(1.0 - cos_g * cos_g);
  T inv_cr2 = 1.0 / (cr * cr);
  CplxT<T> z{(1.0 - delta * delta) * inv_cr2 - sin2, (2.0 * delta) * inv_cr2};
  CplxT<T> s = principal_sqrt(z);
  CplxT<T> num{rho * cos_g - s.re, -s.im};
  CplxT<T> den{rho * cos_g + s.re, s.im};
  return num / den;
}

// ---- plain-double entry points ----

/// Gamma(gamma) for a fluid half-space; gamma in [0, pi/2].
[[nodiscard]] inline Cplx rayleigh_coeff(const RayleighBottom& b, double gamma) {
  b.validate();
  if (!(gamma >= 0.0 && gamma <= pi / 2.0 + 1e-12))
    throw std::invalid_argument("rayleigh_coeff: incidence angle outside [0, pi/2]");
  return rayleigh_eval_cos<double>(b.rho_ratio, b.speed_ratio, b.loss_tangent, std::cos(gamma));
}

/// (eps, kappa) = (magnitude, phase) for the network at one angle.
[[nodiscard]] inline EpsKappa rcnn_forward(const RcnnWeights& w, double gamma) {
  w.validate();
  if (!std::isfinite(gamma)) throw std::invalid_argument("rcnn_forward: non-finite angle");
  double eps, kappa;
  (void)rcnn_eval<double, double>(w.w1, w.b1, w.w2, w.b2, gamma, &eps, &kappa);
  return {eps, kappa};
}

/// Complex coefficient of any reflection model at one incidence angle.
[[nodiscard]] inline Cplx reflection_coefficient(const ReflectionModel& m, double gamma) {
  return std::visit(
      [&](const auto& rm) -> Cplx {
        using M = std::decay_t<decltype(rm)>;
        if constexpr (std::is_same_v<M, PressureRelease>) {
          return {-1.0, 0.0};
        } else if constexpr (std::is_same_v<M, FixedCoeff>) {
          return rm.value;
        } else if constexpr (std::is_same_v<M, RayleighBottom>) {
          return rayleigh_coeff(rm, gamma);
        } else {
          EpsKappa ek = rcnn_forward(rm, gamma);
          return ek.eps * polar_unit(ek.kappa);
        }
      },
      m);
}

/// Magnitude/phase view of any reflection model (phase by atan2, in (-pi, pi]).
[[nodiscard]] inline EpsKappa reflection_eps_kappa(const ReflectionModel& m, double gamma) {
  if (const auto* w = std::get_if<RcnnWeights>(&m)) return rcnn_forward(*w, gamma);
  Cplx g = reflection_coefficient(m, gamma);
  return {std::hypot(g.re, g.im), std::atan2(g.im, g.re)};
}

[[nodiscard]] inline std::size_t reflection_param_count(const ReflectionModel& m) {
  if (const auto* w = std::get_if<RcnnWeights>(&m)) return w->param_count();
  if (std::holds_alternative<RayleighBottom>(m)) return 3;
  return 0;
}

}  // namespace raybasis
