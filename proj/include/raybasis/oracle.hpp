#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "raybasis/core.hpp"
#include "raybasis/environment.hpp"

// Image-source ground truth. Flat boundaries let every eigenray be replaced by
// a mirror image of the source; a term's bounce angles are then fixed per axis
// (the straight image->receiver line meets every wall of one axis at the same
// angle), so reflection coefficients apply as per-wall integer powers.

namespace raybasis {

/// One mirror image: position plus how many times each wall was folded over.
/// wall_counts follows WallIndex order. For a waveguide only the z entries are
/// used (z_lo = surface, z_hi = bottom).
struct ImageSource {
  Vec3 position{};
  std::array<int, 6> wall_counts{};

  [[nodiscard]] int order() const {
    int n = 0;
    for (int c : wall_counts) n += c;
    return n;
  }

  /// Surface (z_lo) bounce count; the sign-flip count under an ideal surface.
  [[nodiscard]] int n_surface() const { return wall_counts[wall_z_lo]; }

  /// Bounces on every other wall.
  [[nodiscard]] int n_boundary() const { return order() - n_surface(); }

  [[nodiscard]] std::array<int, 3> per_axis_counts() const {
    return {wall_counts[0] + wall_counts[1], wall_counts[2] + wall_counts[3],
            wall_counts[4] + wall_counts[5]};
  }
};

namespace detail {

struct AxisImage {
  double coord{};
  int lo{}, hi{};  // fold counts on the axis' two walls
};

/// 1-D mirror images of coordinate s between walls at 0 and length, total
/// folds <= max_order. Two families: 2qL + s with (|q|, |q|) folds, and
/// 2qL - s with (q-1, q) folds for q > 0, (|q|+1, |q|) for q <= 0.
inline std::vector<AxisImage> axis_images(double s, double length, int max_order) {
  std::vector<AxisImage> out;
  for (int q = -(max_order / 2); q <= max_order / 2; ++q)
    out.push_back({2.0 * q * length + s, std::abs(q), std::abs(q)});
  for (int q = -(max_order - 1) / 2; q <= (max_order + 1) / 2; ++q) {
    int lo = q > 0 ? q - 1 : -q + 1;
    int hi = q > 0 ? q : -q;
    if (lo + hi <= max_order) out.push_back({2.0 * q * length - s, lo, hi});
  }
  return out;
}

inline void sort_images(std::vector<ImageSource>& images) {
  std::sort(images.begin(), images.end(), [](const ImageSource& a, const ImageSource& b) {
    if (a.order() != b.order()) return a.order() < b.order();
    if (a.position.x != b.position.x) return a.position.x < b.position.x;
    if (a.position.y != b.position.y) return a.position.y < b.position.y;
    return a.position.z < b.position.z;
  });
}

/// Append the z-mirror partner of any image that lacks one. Truncation at
/// max_order always orphans top-order images whose partner is one fold above,
/// which is what breaks the exact surface null; this restores the pairs.
inline void complete_surface_pairs(std::vector<ImageSource>& images) {
  std::vector<ImageSource> extra;
  auto mirrored = [&](const ImageSource& im) {
    for (const auto& other : images)
      if (other.position.z == -im.position.z && other.position.x == im.position.x &&
          other.position.y == im.position.y)
        return true;
    return false;
  };
  for (const auto& im : images) {
    if (im.position.z <= 0.0) continue;  // partners of below-surface images are lower order
    if (mirrored(im)) continue;
    ImageSource p = im;
    p.position.z = -im.position.z;
    p.wall_counts[wall_z_lo] += 1;
    extra.push_back(p);
  }
  images.insert(images.end(), extra.begin(), extra.end());
  sort_images(images);
}

}  // namespace detail

/// Mirror images of a waveguide source, total reflections <= max_order;
/// 2*max_order + 1 images (one more per unpaired top image when pair_surface).
[[nodiscard]] inline std::vector<ImageSource> enumerate_images_waveguide(const Waveguide& env,
                                                                         const Vec3& source,
                                                                         int max_order,
                                                                         bool pair_surface = false) {
  env.validate();
  if (max_order < 0) throw std::invalid_argument("enumerate_images_waveguide: negative order");
  if (!(source.z > 0.0 && source.z < env.depth))
    throw std::invalid_argument("enumerate_images_waveguide: source outside water column");
  std::vector<ImageSource> out;
  for (const auto& ai : detail::axis_images(source.z, env.depth, max_order)) {
    ImageSource im;
    im.position = {source.x, source.y, ai.coord};
    im.wall_counts[wall_z_lo] = ai.lo;
    im.wall_counts[wall_z_hi] = ai.hi;
    out.push_back(im);
  }
  detail::sort_images(out);
  if (pair_surface) detail::complete_surface_pairs(out);
  return out;
}

/// Mirror images of a box source over the wall lattice, total <= max_order.
[[nodiscard]] inline std::vector<ImageSource> enumerate_images_box(const Box& env,
                                                                   const Vec3& source,
                                                                   int max_order,
                                                                   bool pair_surface = false) {
  env.validate();
  if (max_order < 0) throw std::invalid_argument("enumerate_images_box: negative order");
  if (!inside(Environment{env}, source))
    throw std::invalid_argument("enumerate_images_box: source outside box");
  auto xs = detail::axis_images(source.x, env.dims.x, max_order);
  auto ys = detail::axis_images(source.y, env.dims.y, max_order);
  auto zs = detail::axis_images(source.z, env.dims.z, max_order);
  std::vector<ImageSource> out;
  for (const auto& ix : xs) {
    int rx = ix.lo + ix.hi;
    if (rx > max_order) continue;
    for (const auto& iy : ys) {
      int rxy = rx + iy.lo + iy.hi;
      if (rxy > max_order) continue;
      for (const auto& iz : zs) {
        if (rxy + iz.lo + iz.hi > max_order) continue;
        ImageSource im;
        im.position = {ix.coord, iy.coord, iz.coord};
        im.wall_counts = {ix.lo, ix.hi, iy.lo, iy.hi, iz.lo, iz.hi};
        out.push_back(im);
      }
    }
  }
  detail::sort_images(out);
  if (pair_surface) detail::complete_surface_pairs(out);
  return out;
}

[[nodiscard]] inline std::vector<ImageSource> enumerate_images(const Environment& env,
                                                               const Vec3& source, int max_order,
                                                               bool pair_surface = false) {
  if (const auto* w = std::get_if<Waveguide>(&env))
    return enumerate_images_waveguide(*w, source, max_order, pair_surface);
  if (const auto* b = std::get_if<Box>(&env))
    return enumerate_images_box(*b, source, max_order, pair_surface);
  ImageSource direct;
  direct.position = source;
  return {direct};
}

struct IsmOptions {
  int max_order{-1};  // -1: environment default
  bool pair_surface{false};
};

/// Complex field of the truncated image sum at one receiver:
///   sum_m  prod_w Gamma_w(gamma_axis(w))^{n_w} * la(d_m) * e^{i k d_m} / d_m.
[[nodiscard]] inline Cplx field_ism(const Environment& env, const WaveSpec& wave,
                                    const Vec3& source, const Vec3& receiver,
                                    IsmOptions opts = {}) {
  validate(env);
  wave.validate();
  if (!finite(source) || !finite(receiver))
    throw std::invalid_argument("field_ism: non-finite position");
  if (!inside(env, source)) throw std::invalid_argument("field_ism: source outside domain");
  int order = opts.max_order >= 0 ? opts.max_order : default_max_order(env);
  auto images = enumerate_images(env, source, order, opts.pair_surface);

  const std::array<ReflectionModel, 6>* walls = nullptr;
  std::array<ReflectionModel, 6> wg_walls;
  if (const auto* w = std::get_if<Waveguide>(&env)) {
    wg_walls[wall_z_lo] = w->surface;
    wg_walls[wall_z_hi] = w->bottom;
    walls = &wg_walls;
  } else if (const auto* b = std::get_if<Box>(&env)) {
    walls = &b->walls;
  }
  double absorption = absorption_of(env);

  Cplx total{};
  for (const auto& im : images) {
    Vec3 diff = receiver - im.position;
    double d = norm(diff);
    if (d < 1e-12) throw singularity_error("field_ism: receiver coincides with an image source");
    Cplx coeff{1.0, 0.0};
    if (walls) {
      std::array<double, 3> au = {std::abs(diff.x) / d, std::abs(diff.y) / d,
                                  std::abs(diff.z) / d};
      for (int w = 0; w < 6; ++w) {
        int n = im.wall_counts[static_cast<std::size_t>(w)];
        if (n == 0) continue;
        double gamma = std::acos(std::clamp(au[static_cast<std::size_t>(w / 2)], 0.0, 1.0));
        coeff = coeff * pow_int(reflection_coefficient((*walls)[static_cast<std::size_t>(w)], gamma), n);
      }
    }
    double la = absorption_loss(d, absorption);
    total = total + (la / d) * (coeff * polar_unit(wave.wavenumber * d));
  }
  return total;
}

/// One synthetic plane-wave component of a ground-truth field.
struct PlaneRay {
  double amp{};
  double phase{};
  double theta{};
  double psi{};
};

/// Complex sum of plane waves: sum_m A_m e^{i phi_m} e^{i k k_hat_m . r}.
[[nodiscard]] inline Cplx synth_plane_field(const std::vector<PlaneRay>& rays,
                                            const WaveSpec& wave, const Vec3& r) {
  wave.validate();
  if (!finite(r)) throw std::invalid_argument("synth_plane_field: non-finite position");
  Cplx total{};
  for (const auto& ray : rays) {
    Vec3 khat = direction_from_angles(ray.theta, ray.psi);
    double phase = ray.phase + wave.wavenumber * dot(khat, r);
    total = total + ray.amp * polar_unit(phase);
  }
  return total;
}

/// Sawtooth survey path: linear horizontal drift, depth bouncing between the
/// bounds. One profile is a single descending or ascending leg.
struct TrajectoryConfig {
  Vec3 start{};              // start.z is the initial depth, heading down
  double drift_vx{0.0};      // m/s
  double drift_vy{0.0};      // m/s
  double vertical_speed{1.0};  // m/s, magnitude of dz/dt
  double depth_lo{0.0};
  double depth_hi{0.0};
  double sample_interval{1.0};  // s
  int profiles{1};

  void validate() const {
    if (!finite(start)) throw std::invalid_argument("TrajectoryConfig: non-finite start");
    if (!(depth_hi > depth_lo)) throw std::invalid_argument("TrajectoryConfig: empty depth span");
    if (start.z < depth_lo || start.z > depth_hi)
      throw std::invalid_argument("TrajectoryConfig: start depth outside bounds");
    if (!(vertical_speed > 0.0) || !(sample_interval > 0.0) || profiles < 1)
      throw std::invalid_argument("TrajectoryConfig: speeds, interval, and profiles must be positive");
  }
};

/// Sample positions at t = 0, dt, 2 dt, ...; the count is
/// floor(profiles * depth_span / vertical_speed / interval).
[[nodiscard]] inline std::vector<Vec3> gen_zigzag_trajectory(const TrajectoryConfig& cfg) {
  cfg.validate();
  double span = cfg.depth_hi - cfg.depth_lo;
  double duration = cfg.profiles * span / cfg.vertical_speed;
  auto count = static_cast<std::size_t>(std::floor(duration / cfg.sample_interval + 1e-9));
  if (count == 0) throw std::invalid_argument("gen_zigzag_trajectory: no samples in duration");
  double period = 2.0 * span;
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double t = static_cast<double>(i) * cfg.sample_interval;
    double tau = std::fmod(cfg.start.z - cfg.depth_lo + cfg.vertical_speed * t, period);
    double z = cfg.depth_lo + (tau <= span ? tau : period - tau);
    out.push_back({cfg.start.x + cfg.drift_vx * t, cfg.start.y + cfg.drift_vy * t, z});
  }
  return out;
}

/// Split positions+amplitudes into a dataset. Fractions are cumulative-floor:
/// n_train = floor(f0 N), n_train+n_val = floor((f0+f1) N), rest test.
/// Assignment is a seeded shuffle; record order stays the input order.
[[nodiscard]] inline Dataset make_dataset(const std::vector<Vec3>& points,
                                          const std::vector<double>& amplitudes,
                                          std::array<double, 3> fractions, std::uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("make_dataset: empty trajectory");
  if (points.size() != amplitudes.size())
    throw std::invalid_argument("make_dataset: points/amplitudes size mismatch");
  double fsum = fractions[0] + fractions[1] + fractions[2];
  if (fractions[0] < 0.0 || fractions[1] < 0.0 || fractions[2] < 0.0 ||
      std::abs(fsum - 1.0) > 1e-9)
    throw std::invalid_argument("make_dataset: fractions must be nonnegative and sum to 1");
  auto n = points.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  auto nd = static_cast<double>(n);
  auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * nd + 1e-9));
  auto n_train_val = static_cast<std::size_t>(std::floor((fractions[0] + fractions[1]) * nd + 1e-9));
  Dataset ds;
  ds.records.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    Split s = pos < n_train ? Split::train : (pos < n_train_val ? Split::validation : Split::test);
    ds.records[idx[pos]] = {points[idx[pos]], amplitudes[idx[pos]], s};
  }
  ds.validate();
  return ds;
}

/// Dataset with amplitudes |field_ism| at each trajectory point.
[[nodiscard]] inline Dataset make_dataset(const std::vector<Vec3>& points, const Environment& env,
                                          const WaveSpec& wave, const Vec3& source,
                                          std::array<double, 3> fractions, std::uint64_t seed,
                                          IsmOptions opts = {}) {
  std::vector<double> amps;
  amps.reserve(points.size());
  for (const auto& p : points) amps.push_back(abs_value(field_ism(env, wave, source, p, opts)));
  return make_dataset(points, amps, fractions, seed);
}

/// Perturb every recorded position by an independent uniform draw in
/// [-max_abs, max_abs] per dimension. Amplitudes are untouched.
[[nodiscard]] inline Dataset add_position_noise(const Dataset& ds, double max_abs,
                                                std::uint64_t seed) {
  if (max_abs < 0.0) throw std::invalid_argument("add_position_noise: negative bound");
  Rng rng(seed);
  Dataset out = ds;
  for (auto& r : out.records) {
    r.position.x += rng.uniform(-max_abs, max_abs);
    r.position.y += rng.uniform(-max_abs, max_abs);
    r.position.z += rng.uniform(-max_abs, max_abs);
  }
  return out;
}

}  // namespace raybasis
