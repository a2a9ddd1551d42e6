#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "raybasis/core.hpp"
#include "raybasis/oracle.hpp"

// Nominal ray tables: the geometry-derived starting point for models that
// train small corrections instead of absolute ray parameters.

namespace raybasis {

/// One nominal arrival at the reference point r_o. The image sits at
/// s = ref - d * k_hat(theta, psi), i.e. k_hat points from the image toward
/// the reference. lossy_per_axis counts non-surface bounces per axis so each
/// bounce's incidence angle can be reproduced from geometry alone; surface
/// bounces are pure sign flips and need no angle.
struct NominalRay {
  double theta{};
  double psi{};
  double d{};
  int n_s{};  // surface bounces
  int n_b{};  // other boundary bounces
  std::array<int, 3> lossy_per_axis{};
  Vec3 ref{};

  void validate() const {
    if (!(d > 0.0)) throw std::invalid_argument("NominalRay: nonpositive path length");
    if (n_s < 0 || n_b < 0) throw std::invalid_argument("NominalRay: negative bounce count");
    if (lossy_per_axis[0] + lossy_per_axis[1] + lossy_per_axis[2] != n_b)
      throw std::invalid_argument("NominalRay: per-axis counts do not sum to n_b");
  }

  [[nodiscard]] Vec3 image_position() const {
    return ref - d * direction_from_angles(theta, psi);
  }
};

/// Rays from the environment's image set, sorted by ascending path length
/// (ties by total bounce count, then angles) so ray index is reproducible.
[[nodiscard]] inline std::vector<NominalRay> nominal_rays(const Environment& env,
                                                          const Vec3& source, const Vec3& ref,
                                                          int max_order = -1) {
  validate(env);
  if (!finite(ref)) throw std::invalid_argument("nominal_rays: non-finite reference");
  int order = max_order >= 0 ? max_order : default_max_order(env);
  auto images = enumerate_images(env, source, order);
  std::vector<NominalRay> rays;
  rays.reserve(images.size());
  for (const auto& im : images) {
    Vec3 to_ref = ref - im.position;
    double d = norm(to_ref);
    if (d < 1e-9)
      throw std::invalid_argument("nominal_rays: reference point coincides with an image");
    Angles a = angles_from_direction((1.0 / d) * to_ref);
    NominalRay ray;
    ray.theta = a.theta;
    ray.psi = a.psi;
    ray.d = d;
    ray.n_s = im.n_surface();
    ray.n_b = im.n_boundary();
    auto pa = im.per_axis_counts();
    ray.lossy_per_axis = {pa[0], pa[1], pa[2] - im.wall_counts[wall_z_lo]};
    ray.ref = ref;
    rays.push_back(ray);
  }
  std::sort(rays.begin(), rays.end(), [](const NominalRay& a, const NominalRay& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.n_s + a.n_b != b.n_s + b.n_b) return a.n_s + a.n_b < b.n_s + b.n_b;
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.psi < b.psi;
  });
  return rays;
}

/// Incidence angles (from the wall normal) of every lossy bounce of the ray's
/// straight image path to the receiver, grouped x then y then z. Bounces on
/// one axis share one angle: gamma = acos(|u_axis|) for the unit
/// image->receiver direction u.
[[nodiscard]] inline std::vector<double> incidence_angles(const NominalRay& ray,
                                                          const Vec3& receiver) {
  ray.validate();
  if (!finite(receiver)) throw std::invalid_argument("incidence_angles: non-finite receiver");
  Vec3 diff = receiver - ray.image_position();
  double d = norm(diff);
  if (d < 1e-12) throw singularity_error("incidence_angles: receiver coincides with the image");
  std::array<double, 3> au = {std::abs(diff.x) / d, std::abs(diff.y) / d, std::abs(diff.z) / d};
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ray.n_b));
  for (int axis = 0; axis < 3; ++axis) {
    double gamma = std::acos(std::clamp(au[static_cast<std::size_t>(axis)], 0.0, 1.0));
    for (int i = 0; i < ray.lossy_per_axis[static_cast<std::size_t>(axis)]; ++i)
      out.push_back(gamma);
  }
  return out;
}

}  // namespace raybasis
