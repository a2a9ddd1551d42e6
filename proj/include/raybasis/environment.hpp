#pragma once

#include <array>
#include <stdexcept>
#include <variant>

#include "raybasis/core.hpp"
#include "raybasis/reflection.hpp"

namespace raybasis {

/// Unbounded water column.
struct FreeField {
  double sound_speed{1500.0};

  void validate() const {
    if (!(sound_speed > 0.0)) throw std::invalid_argument("FreeField: sound speed must be positive");
  }
};

/// Two parallel boundaries: surface at z = 0, bottom at z = depth.
struct Waveguide {
  double depth{};
  double sound_speed{1500.0};
  ReflectionModel surface{PressureRelease{}};
  ReflectionModel bottom{RayleighBottom{}};
  double absorption_db_per_m{0.0};

  void validate() const {
    if (!(depth > 0.0) || !(sound_speed > 0.0) || absorption_db_per_m < 0.0)
      throw std::invalid_argument("Waveguide: bad depth, sound speed, or absorption");
  }
};

/// Wall index order used everywhere a box face is identified.
enum WallIndex : int { wall_x_lo = 0, wall_x_hi, wall_y_lo, wall_y_hi, wall_z_lo, wall_z_hi };

/// Rectangular tank spanning [0,Lx] x [0,Ly] x [0,Lz]; z_lo is the surface.
struct Box {
  Vec3 dims{};
  double sound_speed{1500.0};
  std::array<ReflectionModel, 6> walls{PressureRelease{}, PressureRelease{}, PressureRelease{},
                                       PressureRelease{}, PressureRelease{}, PressureRelease{}};
  double absorption_db_per_m{0.0};

  void validate() const {
    if (!(dims.x > 0.0) || !(dims.y > 0.0) || !(dims.z > 0.0) || !(sound_speed > 0.0) ||
        absorption_db_per_m < 0.0)
      throw std::invalid_argument("Box: bad dimensions, sound speed, or absorption");
  }
};

using Environment = std::variant<FreeField, Waveguide, Box>;

[[nodiscard]] inline double sound_speed_of(const Environment& env) {
  return std::visit([](const auto& e) { return e.sound_speed; }, env);
}

[[nodiscard]] inline double absorption_of(const Environment& env) {
  if (const auto* w = std::get_if<Waveguide>(&env)) return w->absorption_db_per_m;
  if (const auto* b = std::get_if<Box>(&env)) return b->absorption_db_per_m;
  return 0.0;
}

inline void validate(const Environment& env) {
  std::visit([](const auto& e) { e.validate(); }, env);
}

/// True when the point is strictly inside the propagation domain.
[[nodiscard]] inline bool inside(const Environment& env, const Vec3& p) {
  if (const auto* w = std::get_if<Waveguide>(&env)) return p.z > 0.0 && p.z < w->depth;
  if (const auto* b = std::get_if<Box>(&env))
    return p.x > 0.0 && p.x < b->dims.x && p.y > 0.0 && p.y < b->dims.y && p.z > 0.0 &&
           p.z < b->dims.z;
  return true;
}

/// Library-wide default truncation order for image enumeration.
[[nodiscard]] inline int default_max_order(const Environment& env) {
  if (std::holds_alternative<Box>(env)) return 4;
  return 6;
}

}  // namespace raybasis
