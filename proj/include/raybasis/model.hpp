#pragma once

#include <span>
#include <variant>
#include <vector>

#include "raybasis/autodiff.hpp"
#include "raybasis/core.hpp"
#include "raybasis/raytrace.hpp"
#include "raybasis/reflection.hpp"

// Trainable field models. Each one is a finite sum of exact Helmholtz
// solutions; predictions are magnitudes of the coherent complex sum.
//
// Evaluation is written once per model over an opaque scalar T and a packed
// parameter span, so the plain double path and the tape path cannot drift
// apart. Pack layouts are part of each model's contract (gradients, reports,
// and checkpoints all index into them).

namespace raybasis {

[[nodiscard]] inline std::vector<Var> lift(Tape& tape, std::span<const double> xs) {
  std::vector<Var> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(tape.leaf(x));
  return out;
}

[[nodiscard]] inline Vec3T<Var> lift(Tape& tape, const Vec3& v) {
  return {tape.leaf(v.x), tape.leaf(v.y), tape.leaf(v.z)};
}

template <class T>
[[nodiscard]] CplxT<T> mul_const(const CplxT<T>& a, const Cplx& c) {
  return {a.re * c.re - a.im * c.im, a.re * c.im + a.im * c.re};
}

/// Far-field sum of homogeneous plane waves,
///   p(r) = sum_m A_m e^{i phi_m} e^{i k k_hat_m . r}.
/// Pack layout: [amp(n) | phase(n) | theta(n) | psi(n) | k].
struct PlaneWaveModel {
  double wavenumber{};
  std::vector<double> amp, phase, theta, psi;
  bool train_k{false};

  [[nodiscard]] std::size_t n_rays() const { return amp.size(); }
  [[nodiscard]] std::size_t param_count() const { return 4 * n_rays() + 1; }

  void validate() const {
    if (!(wavenumber > 0.0)) throw std::invalid_argument("PlaneWaveModel: nonpositive wavenumber");
    std::size_t n = n_rays();
    if (n == 0 || phase.size() != n || theta.size() != n || psi.size() != n)
      throw std::invalid_argument("PlaneWaveModel: inconsistent ray arrays");
  }

  [[nodiscard]] std::vector<double> pack() const {
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), amp.begin(), amp.end());
    p.insert(p.end(), phase.begin(), phase.end());
    p.insert(p.end(), theta.begin(), theta.end());
    p.insert(p.end(), psi.begin(), psi.end());
    p.push_back(wavenumber);
    return p;
  }

  void unpack(std::span<const double> p) {
    std::size_t n = n_rays();
    if (p.size() != param_count()) throw std::invalid_argument("PlaneWaveModel: bad pack size");
    amp.assign(p.begin(), p.begin() + n);
    phase.assign(p.begin() + n, p.begin() + 2 * n);
    theta.assign(p.begin() + 2 * n, p.begin() + 3 * n);
    psi.assign(p.begin() + 3 * n, p.begin() + 4 * n);
    wavenumber = p[4 * n];
  }
};

/// Spherical-wave sum over trainable image sources placed at
/// s_m = ref - d_m k_hat(theta_m, psi_m):
///   p(r) = sum_m A_m la(|s_m - r|) / |s_m - r| e^{i (phi_m + k |s_m - r|)}.
/// Pack layout: [amp(n) | phase(n) | theta(n) | psi(n) | d(n) | k].
struct ImageSourceModel {
  double wavenumber{};
  Vec3 ref{};
  double absorption_db_per_m{0.0};
  std::vector<double> amp, phase, theta, psi, d;
  bool train_k{false};

  [[nodiscard]] std::size_t n_rays() const { return amp.size(); }
  [[nodiscard]] std::size_t param_count() const { return 5 * n_rays() + 1; }

  void validate() const {
    if (!(wavenumber > 0.0)) throw std::invalid_argument("ImageSourceModel: nonpositive wavenumber");
    std::size_t n = n_rays();
    if (n == 0 || phase.size() != n || theta.size() != n || psi.size() != n || d.size() != n)
      throw std::invalid_argument("ImageSourceModel: inconsistent ray arrays");
    if (absorption_db_per_m < 0.0)
      throw std::invalid_argument("ImageSourceModel: negative absorption");
  }

  [[nodiscard]] std::vector<double> pack() const {
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), amp.begin(), amp.end());
    p.insert(p.end(), phase.begin(), phase.end());
    p.insert(p.end(), theta.begin(), theta.end());
    p.insert(p.end(), psi.begin(), psi.end());
    p.insert(p.end(), d.begin(), d.end());
    p.push_back(wavenumber);
    return p;
  }

  void unpack(std::span<const double> p) {
    std::size_t n = n_rays();
    if (p.size() != param_count()) throw std::invalid_argument("ImageSourceModel: bad pack size");
    amp.assign(p.begin(), p.begin() + n);
    phase.assign(p.begin() + n, p.begin() + 2 * n);
    theta.assign(p.begin() + 2 * n, p.begin() + 3 * n);
    psi.assign(p.begin() + 3 * n, p.begin() + 4 * n);
    d.assign(p.begin() + 4 * n, p.begin() + 5 * n);
    wavenumber = p[5 * n];
  }
};

/// Nominal image geometry plus trainable per-ray corrections and a trainable
/// reflection layer. Ray m uses theta'_m + e_theta_m, psi'_m + e_psi_m,
/// d'_m + e_d_m; its surface bounces flip sign, and each lossy bounce applies
/// the layer at that bounce's incidence angle:
///   p(r) = sum_m (-1)^{n_s} prod_i eps(g_i) e^{i kappa(g_i)}
///          la(dist)/dist e^{i k dist}.
/// Pack layout: [e_theta(n) | e_psi(n) | e_d(n) | layer params | k], where the
/// layer contributes (rho_r, c_r, delta) for a Rayleigh bottom, the
/// w1|b1|w2|b2 blocks for a learned network, and nothing otherwise.
struct GeometryAidedModel {
  double wavenumber{};
  double absorption_db_per_m{0.0};
  std::vector<NominalRay> nominal;
  ReflectionModel reflection{RayleighBottom{}};
  std::vector<double> e_theta, e_psi, e_d;
  bool train_k{false};

  [[nodiscard]] std::size_t n_rays() const { return nominal.size(); }
  [[nodiscard]] std::size_t reflection_params() const { return reflection_param_count(reflection); }
  [[nodiscard]] std::size_t param_count() const { return 3 * n_rays() + reflection_params() + 1; }

  [[nodiscard]] static GeometryAidedModel from_nominal(std::vector<NominalRay> rays,
                                                       double wavenumber,
                                                       ReflectionModel layer,
                                                       double absorption = 0.0) {
    GeometryAidedModel m;
    m.wavenumber = wavenumber;
    m.absorption_db_per_m = absorption;
    m.nominal = std::move(rays);
    m.reflection = std::move(layer);
    m.e_theta.assign(m.nominal.size(), 0.0);
    m.e_psi.assign(m.nominal.size(), 0.0);
    m.e_d.assign(m.nominal.size(), 0.0);
    return m;
  }

  void validate() const {
    if (!(wavenumber > 0.0))
      throw std::invalid_argument("GeometryAidedModel: nonpositive wavenumber");
    std::size_t n = n_rays();
    if (n == 0 || e_theta.size() != n || e_psi.size() != n || e_d.size() != n)
      throw std::invalid_argument("GeometryAidedModel: inconsistent error arrays");
    if (absorption_db_per_m < 0.0)
      throw std::invalid_argument("GeometryAidedModel: negative absorption");
    for (const auto& r : nominal) r.validate();
    if (const auto* w = std::get_if<RcnnWeights>(&reflection)) w->validate();
    if (const auto* rb = std::get_if<RayleighBottom>(&reflection)) rb->validate();
  }

  [[nodiscard]] std::vector<double> pack() const {
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), e_theta.begin(), e_theta.end());
    p.insert(p.end(), e_psi.begin(), e_psi.end());
    p.insert(p.end(), e_d.begin(), e_d.end());
    if (const auto* rb = std::get_if<RayleighBottom>(&reflection)) {
      p.push_back(rb->rho_ratio);
      p.push_back(rb->speed_ratio);
      p.push_back(rb->loss_tangent);
    } else if (const auto* w = std::get_if<RcnnWeights>(&reflection)) {
      p.insert(p.end(), w->w1.begin(), w->w1.end());
      p.insert(p.end(), w->b1.begin(), w->b1.end());
      p.insert(p.end(), w->w2.begin(), w->w2.end());
      p.insert(p.end(), w->b2.begin(), w->b2.end());
    }
    p.push_back(wavenumber);
    return p;
  }

  void unpack(std::span<const double> p) {
    std::size_t n = n_rays();
    if (p.size() != param_count()) throw std::invalid_argument("GeometryAidedModel: bad pack size");
    e_theta.assign(p.begin(), p.begin() + n);
    e_psi.assign(p.begin() + n, p.begin() + 2 * n);
    e_d.assign(p.begin() + 2 * n, p.begin() + 3 * n);
    auto it = p.begin() + 3 * n;
    if (auto* rb = std::get_if<RayleighBottom>(&reflection)) {
      rb->rho_ratio = *it++;
      rb->speed_ratio = *it++;
      rb->loss_tangent = *it++;
    } else if (auto* w = std::get_if<RcnnWeights>(&reflection)) {
      auto h = static_cast<std::size_t>(w->hidden);
      w->w1.assign(it, it + h);
      w->b1.assign(it + h, it + 2 * h);
      w->w2.assign(it + 2 * h, it + 4 * h);
      w->b2.assign(it + 4 * h, it + 4 * h + 2);
      it += 4 * h + 2;
    }
    wavenumber = *it;
  }
};

using AnyModel = std::variant<PlaneWaveModel, ImageSourceModel, GeometryAidedModel>;

// ---- templated evaluation cores ----

template <class T>
[[nodiscard]] CplxT<T> plane_field_core(const PlaneWaveModel& m, std::span<const T> p,
                                        const Vec3T<T>& r) {
  std::size_t n = m.n_rays();
  const T& k = p[4 * n];
  auto term = [&](std::size_t i) {
    Vec3T<T> khat = direction_from_angles(p[2 * n + i], p[3 * n + i]);
    T phase = p[n + i] + k * dot(khat, r);
    return p[i] * polar_unit(phase);
  };
  CplxT<T> sum = term(0);
  for (std::size_t i = 1; i < n; ++i) sum = sum + term(i);
  return sum;
}

template <class T>
[[nodiscard]] CplxT<T> image_source_field_core(const ImageSourceModel& m, std::span<const T> p,
                                               const Vec3T<T>& r) {
  using std::sqrt;
  std::size_t n = m.n_rays();
  const T& k = p[5 * n];
  auto term = [&](std::size_t i) {
    Vec3T<T> khat = direction_from_angles(p[2 * n + i], p[3 * n + i]);
    const T& d = p[4 * n + i];
    T dx = r.x - (m.ref.x - d * khat.x);
    T dy = r.y - (m.ref.y - d * khat.y);
    T dz = r.z - (m.ref.z - d * khat.z);
    T dist = sqrt(dx * dx + dy * dy + dz * dz);
    if (value_of(dist) < 1e-12)
      throw singularity_error("predict: receiver coincides with a model image");
    T la = absorption_loss(dist, m.absorption_db_per_m);
    T phase = p[n + i] + k * dist;
    return (p[i] * la / dist) * polar_unit(phase);
  };
  CplxT<T> sum = term(0);
  for (std::size_t i = 1; i < n; ++i) sum = sum + term(i);
  return sum;
}

template <class T>
[[nodiscard]] CplxT<T> geometry_field_core(const GeometryAidedModel& m, std::span<const T> p,
                                           const Vec3T<T>& r) {
  using std::abs;
  using std::sqrt;
  std::size_t n = m.n_rays();
  const T& k = p[3 * n + m.reflection_params()];
  std::span<const T> refl = p.subspan(3 * n, m.reflection_params());

  const auto* rayleigh = std::get_if<RayleighBottom>(&m.reflection);
  const auto* rcnn = std::get_if<RcnnWeights>(&m.reflection);
  const auto* fixed = std::get_if<FixedCoeff>(&m.reflection);
  std::size_t h = rcnn ? static_cast<std::size_t>(rcnn->hidden) : 0;

  auto term_for = [&](std::size_t i) {
    const NominalRay& ray = m.nominal[i];
    T theta = ray.theta + p[i];
    T psi = ray.psi + p[n + i];
    T d = ray.d + p[2 * n + i];
    Vec3T<T> khat = direction_from_angles(theta, psi);
    T dx = r.x - (ray.ref.x - d * khat.x);
    T dy = r.y - (ray.ref.y - d * khat.y);
    T dz = r.z - (ray.ref.z - d * khat.z);
    T dist = sqrt(dx * dx + dy * dy + dz * dz);
    if (value_of(dist) < 1e-12)
      throw singularity_error("predict: receiver coincides with a model image");

    CplxT<T> coeff{};
    bool have_coeff = false;
    auto apply = [&](const CplxT<T>& g, int times) {
      CplxT<T> gp = pow_int(g, times);
      coeff = have_coeff ? coeff * gp : gp;
      have_coeff = true;
    };
    const T* comps[3] = {&dx, &dy, &dz};
    for (int axis = 0; axis < 3; ++axis) {
      int times = ray.lossy_per_axis[static_cast<std::size_t>(axis)];
      if (times == 0) continue;
      T cosg = abs(*comps[axis]) / dist;
      if (rayleigh) {
        apply(rayleigh_eval_cos(refl[0], refl[1], refl[2], cosg), times);
      } else if (rcnn) {
        T gamma = acos_clamped(cosg);
        apply(rcnn_eval(refl.subspan(0, h), refl.subspan(h, h), refl.subspan(2 * h, 2 * h),
                        refl.subspan(4 * h, 2), gamma),
              times);
      }
    }
    T la = absorption_loss(dist, m.absorption_db_per_m);
    double sign = ray.n_s % 2 == 0 ? 1.0 : -1.0;
    CplxT<T> term = (sign * la / dist) * polar_unit(k * dist);
    if (have_coeff) term = coeff * term;
    if (fixed && ray.n_b > 0) term = mul_const(term, pow_int(fixed->value, ray.n_b));
    if (std::holds_alternative<PressureRelease>(m.reflection) && ray.n_b % 2 != 0)
      term = CplxT<T>{-term.re, -term.im};
    return term;
  };
  CplxT<T> sum = term_for(0);
  for (std::size_t i = 1; i < n; ++i) sum = sum + term_for(i);
  return sum;
}

// ---- plain-double prediction API ----

[[nodiscard]] inline Cplx predict_plane_complex(const PlaneWaveModel& m, const Vec3& r) {
  m.validate();
  auto p = m.pack();
  return plane_field_core<double>(m, p, r);
}

[[nodiscard]] inline double predict_plane(const PlaneWaveModel& m, const Vec3& r) {
  return abs_value(predict_plane_complex(m, r));
}

[[nodiscard]] inline Cplx predict_image_source_complex(const ImageSourceModel& m, const Vec3& r) {
  m.validate();
  auto p = m.pack();
  return image_source_field_core<double>(m, p, r);
}

[[nodiscard]] inline double predict_image_source(const ImageSourceModel& m, const Vec3& r) {
  return abs_value(predict_image_source_complex(m, r));
}

[[nodiscard]] inline Cplx predict_geometry_complex(const GeometryAidedModel& m, const Vec3& r) {
  m.validate();
  auto p = m.pack();
  return geometry_field_core<double>(m, p, r);
}

[[nodiscard]] inline double predict_geometry(const GeometryAidedModel& m, const Vec3& r) {
  return abs_value(predict_geometry_complex(m, r));
}

[[nodiscard]] inline Cplx predict_complex(const AnyModel& m, const Vec3& r) {
  return std::visit(
      [&](const auto& mm) {
        auto p = mm.pack();
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, PlaneWaveModel>)
          return plane_field_core<double>(mm, p, r);
        else if constexpr (std::is_same_v<M, ImageSourceModel>)
          return image_source_field_core<double>(mm, p, r);
        else
          return geometry_field_core<double>(mm, p, r);
      },
      m);
}

[[nodiscard]] inline double predict_amplitude(const AnyModel& m, const Vec3& r) {
  return abs_value(predict_complex(m, r));
}

/// Evaluate any model's complex field with an explicit packed parameter span.
template <class T>
[[nodiscard]] CplxT<T> field_core(const AnyModel& m, std::span<const T> p, const Vec3T<T>& r) {
  return std::visit(
      [&](const auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, PlaneWaveModel>)
          return plane_field_core(mm, p, r);
        else if constexpr (std::is_same_v<M, ImageSourceModel>)
          return image_source_field_core(mm, p, r);
        else
          return geometry_field_core(mm, p, r);
      },
      m);
}

[[nodiscard]] inline std::vector<double> pack(const AnyModel& m) {
  return std::visit([](const auto& mm) { return mm.pack(); }, m);
}

inline void unpack(AnyModel& m, std::span<const double> p) {
  std::visit([&](auto& mm) { mm.unpack(p); }, m);
}

[[nodiscard]] inline std::size_t param_count(const AnyModel& m) {
  return std::visit([](const auto& mm) { return mm.param_count(); }, m);
}

inline void validate(const AnyModel& m) {
  std::visit([](const auto& mm) { mm.validate(); }, m);
}

[[nodiscard]] inline bool trains_wavenumber(const AnyModel& m) {
  return std::visit([](const auto& mm) { return mm.train_k; }, m);
}

/// Report-friendly angles: the direction is unchanged, psi lands in [0, pi]
/// and theta in [0, 2 pi). Optimization itself leaves angles unconstrained.
[[nodiscard]] inline Angles canonical_angles(double theta, double psi) {
  return angles_from_direction(direction_from_angles(theta, psi));
}

/// Accumulated reflection of one nominal ray observed at a receiver:
/// magnitude prod_i eps(gamma_i) over its lossy bounces and phase
/// n_s pi + sum_i kappa(gamma_i).
[[nodiscard]] inline EpsKappa reflection_product(const NominalRay& ray,
                                                 const ReflectionModel& layer,
                                                 const Vec3& receiver) {
  double l = 1.0;
  double phi = ray.n_s * pi;
  for (double gamma : incidence_angles(ray, receiver)) {
    EpsKappa ek = reflection_eps_kappa(layer, gamma);
    l *= ek.eps;
    phi += ek.kappa;
  }
  return {l, phi};
}

/// Random plane-wave start: angles and phases uniform over a full period,
/// amplitudes uniform in [0, amp_scale).
[[nodiscard]] inline PlaneWaveModel init_plane_wave(std::size_t n_rays, double wavenumber,
                                                    Rng& rng, double amp_scale) {
  PlaneWaveModel m;
  m.wavenumber = wavenumber;
  m.amp.resize(n_rays);
  m.phase.resize(n_rays);
  m.theta.resize(n_rays);
  m.psi.resize(n_rays);
  for (std::size_t i = 0; i < n_rays; ++i) {
    m.amp[i] = rng.uniform(0.0, amp_scale);
    m.phase[i] = rng.uniform(0.0, 2.0 * pi);
    m.theta[i] = rng.uniform(0.0, 2.0 * pi);
    m.psi[i] = rng.uniform(0.0, 2.0 * pi);
  }
  return m;
}

/// Spherical-wave start from a nominal ray table; angles and ranges begin at
/// the nominal values, amplitudes uniform in [0, amp_scale), phases uniform.
[[nodiscard]] inline ImageSourceModel init_image_source(const std::vector<NominalRay>& rays,
                                                        double wavenumber, double absorption,
                                                        Rng& rng, double amp_scale) {
  if (rays.empty()) throw std::invalid_argument("init_image_source: empty ray table");
  ImageSourceModel m;
  m.wavenumber = wavenumber;
  m.ref = rays.front().ref;
  m.absorption_db_per_m = absorption;
  for (const auto& r : rays) {
    m.theta.push_back(r.theta);
    m.psi.push_back(r.psi);
    m.d.push_back(r.d);
    m.amp.push_back(rng.uniform(0.0, amp_scale));
    m.phase.push_back(rng.uniform(0.0, 2.0 * pi));
  }
  return m;
}

}  // namespace raybasis
