#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Shared value types and conventions.
//
// Directions are parametrized as
//   k_hat(theta, psi) = (cos(theta) sin(psi), sin(theta) sin(psi), cos(psi))
// with theta the azimuth in [0, 2*pi) and psi the polar angle measured from +z.
// Positions are metres; z increases downward (0 at the free surface).

namespace raybasis {

inline constexpr double pi = std::numbers::pi;

/// Evaluating a field exactly at a source/image position.
struct singularity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A training run whose loss became non-finite.
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct Vec3T final {
  T x{}, y{}, z{};
};

using Vec3 = Vec3T<double>;

template <class T>
[[nodiscard]] constexpr Vec3T<T> operator+(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <class T>
[[nodiscard]] constexpr Vec3T<T> operator-(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <class T>
[[nodiscard]] constexpr Vec3T<T> operator*(double s, const Vec3T<T>& v) {
  return {s * v.x, s * v.y, s * v.z};
}

template <class T>
[[nodiscard]] constexpr T dot(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

[[nodiscard]] inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

[[nodiscard]] inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

[[nodiscard]] inline bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// value_of(x): plain number behind a scalar; overloaded by the autodiff type.
[[nodiscard]] inline constexpr double value_of(double x) { return x; }

/// Direction unit vector for azimuth theta and polar angle psi (from +z).
/// Angles outside the principal ranges are accepted; only finiteness is checked.
template <class T>
[[nodiscard]] Vec3T<T> direction_from_angles(const T& theta, const T& psi) {
  using std::cos;
  using std::sin;
  if (!std::isfinite(value_of(theta)) || !std::isfinite(value_of(psi)))
    throw std::invalid_argument("direction_from_angles: non-finite angle");
  T sp = sin(psi);
  return {cos(theta) * sp, sin(theta) * sp, cos(psi)};
}

struct Angles {
  double theta{};  // azimuth in [0, 2*pi)
  double psi{};    // polar in [0, pi]
};

/// Inverse of direction_from_angles for a unit vector.
/// At the poles (sin(psi) == 0) theta is 0 by convention.
[[nodiscard]] inline Angles angles_from_direction(const Vec3& u) {
  if (!finite(u)) throw std::invalid_argument("angles_from_direction: non-finite vector");
  if (std::abs(dot(u, u) - 1.0) > 2e-9)
    throw std::invalid_argument("angles_from_direction: vector is not unit length");
  double psi = std::acos(std::clamp(u.z, -1.0, 1.0));
  if (u.x == 0.0 && u.y == 0.0) return {0.0, psi};
  double theta = std::atan2(u.y, u.x);
  if (theta < 0.0) theta += 2.0 * pi;
  if (theta >= 2.0 * pi) theta = 0.0;
  return {theta, psi};
}

[[nodiscard]] inline constexpr double max0(double a) { return a > 0.0 ? a : 0.0; }

/// log(1 + e^x), overflow-safe in both tails.
[[nodiscard]] inline double softplus(double x) {
  return max0(x) + std::log1p(std::exp(-std::abs(x)));
}

/// Amplitude ratio in decibels, 20*log10(x). Zero or negative input has no dB value.
[[nodiscard]] inline double to_db(double x) {
  if (!(x > 0.0)) throw std::domain_error("to_db: non-positive amplitude");
  return 20.0 * std::log10(x);
}

/// One-way absorption amplitude factor 10^(-a*d/20) for a in dB/m over d metres.
template <class T>
[[nodiscard]] T absorption_loss(const T& dist, double db_per_m) {
  using std::exp;
  if (value_of(dist) < 0.0) throw std::invalid_argument("absorption_loss: negative distance");
  if (db_per_m < 0.0) throw std::invalid_argument("absorption_loss: negative coefficient");
  // 10^x = exp(x ln 10); keeps the expression differentiable in dist.
  return exp(dist * (-db_per_m / 20.0 * std::numbers::ln10));
}

/// Complex value over any scalar type (std::complex is specified only for
/// the builtin floating types, so the autodiff scalar needs its own).
template <class T>
struct CplxT {
  T re{}, im{};
};

using Cplx = CplxT<double>;

template <class T>
[[nodiscard]] CplxT<T> operator+(const CplxT<T>& a, const CplxT<T>& b) {
  return {a.re + b.re, a.im + b.im};
}

template <class T>
[[nodiscard]] CplxT<T> operator-(const CplxT<T>& a, const CplxT<T>& b) {
  return {a.re - b.re, a.im - b.im};
}

template <class T>
[[nodiscard]] CplxT<T> operator*(const CplxT<T>& a, const CplxT<T>& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

template <class T>
[[nodiscard]] CplxT<T> operator*(const T& s, const CplxT<T>& a) {
  return {s * a.re, s * a.im};
}

template <class T>
[[nodiscard]] CplxT<T> operator/(const CplxT<T>& a, const CplxT<T>& b) {
  T d = b.re * b.re + b.im * b.im;
  return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

/// exp(i*phase)
template <class T>
[[nodiscard]] CplxT<T> polar_unit(const T& phase) {
  using std::cos;
  using std::sin;
  return {cos(phase), sin(phase)};
}

template <class T>
[[nodiscard]] T abs_value(const CplxT<T>& a) {
  using std::sqrt;
  return sqrt(a.re * a.re + a.im * a.im);
}

/// base^n for integer bounce counts, n >= 1.
template <class T>
[[nodiscard]] CplxT<T> pow_int(CplxT<T> base, int n) {
  CplxT<T> out = base;
  for (int i = 1; i < n; ++i) out = out * base;
  return out;
}

/// Plane-wave spec; wavenumber is derived, k = 2*pi*f/c.
struct WaveSpec {
  double frequency_hz{};
  double sound_speed{};
  double wavenumber{};

  [[nodiscard]] static WaveSpec from_frequency(double f, double c) {
    if (!(f > 0.0) || !(c > 0.0))
      throw std::invalid_argument("WaveSpec: frequency and sound speed must be positive");
    return {f, c, 2.0 * pi * f / c};
  }

  [[nodiscard]] double wavelength() const { return 2.0 * pi / wavenumber; }

  void validate() const {
    if (!(frequency_hz > 0.0) || !(sound_speed > 0.0) || !(wavenumber > 0.0))
      throw std::invalid_argument("WaveSpec: non-positive field");
    double expect = 2.0 * pi * frequency_hz / sound_speed;
    if (std::abs(wavenumber - expect) > 1e-12 * expect)
      throw std::invalid_argument("WaveSpec: wavenumber inconsistent with frequency");
  }
};

enum class Split : std::uint8_t { train, validation, test };

[[nodiscard]] inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    default: return "test";
  }
}

[[nodiscard]] inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split label: " + s);
}

/// One amplitude measurement: |p| at a position, tagged with its split.
struct Record {
  Vec3 position{};
  double amplitude{};
  Split split{Split::train};
};

struct Dataset {
  std::vector<Record> records;

  [[nodiscard]] std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& r : records) n += (r.split == s);
    return n;
  }

  [[nodiscard]] std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].split == s) out.push_back(i);
    return out;
  }

  /// Centroid of the training positions; the default expansion point.
  [[nodiscard]] Vec3 train_centroid() const {
    Vec3 c{};
    std::size_t n = 0;
    for (const auto& r : records)
      if (r.split == Split::train) {
        c = c + r.position;
        ++n;
      }
    if (n == 0) throw std::invalid_argument("train_centroid: no training records");
    return (1.0 / static_cast<double>(n)) * c;
  }

  void validate() const {
    for (const auto& r : records) {
      if (!finite(r.position) || !std::isfinite(r.amplitude))
        throw std::invalid_argument("Dataset: non-finite record");
      if (r.amplitude < 0.0) throw std::invalid_argument("Dataset: negative amplitude");
    }
  }
};

/// Deterministic RNG: a fixed engine plus bit-derived draws, so streams are
/// reproducible across standard libraries (std distributions are not pinned).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  [[nodiscard]] double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  [[nodiscard]] double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled to stay unbiased.
  [[nodiscard]] std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace raybasis
