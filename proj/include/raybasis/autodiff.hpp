#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "raybasis/core.hpp"

// Reverse-accumulation scalar tape.
//
// Every recorded node stores its parents and the local partials taken at
// forward time, so the backward sweep is a single reverse loop over flat
// arrays. The tape is an arena: record a batch, call backward(), read the
// adjoints off the leaves, clear(), repeat.
//
// Non-smooth points carry the conventional subgradients: d|x| = 0 at 0,
// d max(0,x) = 0 at 0, and d sqrt = 0 at exactly 0 (the magnitude of a zero
// residual and the branch edge of the principal complex sqrt both sit there).

namespace raybasis {

class Tape;

struct Var {
  Tape* tape{nullptr};
  std::int32_t idx{-1};
  double v{0.0};
};

[[nodiscard]] inline constexpr double value_of(const Var& x) { return x.v; }

class Tape {
 public:
  [[nodiscard]] Var leaf(double v) { return {this, push(-1, 0.0, -1, 0.0), v}; }

  [[nodiscard]] Var node1(double v, std::int32_t a, double da) {
    return {this, push(a, da, -1, 0.0), v};
  }

  [[nodiscard]] Var node2(double v, std::int32_t a, double da, std::int32_t b, double db) {
    return {this, push(a, da, b, db), v};
  }

  void backward(const Var& root) {
    adj_.assign(pa_.size(), 0.0);
    adj_[static_cast<std::size_t>(root.idx)] = 1.0;
    for (std::int32_t i = root.idx; i >= 0; --i) {
      double a = adj_[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      std::int32_t p = pa_[static_cast<std::size_t>(i)];
      if (p >= 0) adj_[static_cast<std::size_t>(p)] += a * da_[static_cast<std::size_t>(i)];
      p = pb_[static_cast<std::size_t>(i)];
      if (p >= 0) adj_[static_cast<std::size_t>(p)] += a * db_[static_cast<std::size_t>(i)];
    }
  }

  [[nodiscard]] double adjoint(const Var& x) const {
    return adj_[static_cast<std::size_t>(x.idx)];
  }

  [[nodiscard]] std::size_t size() const { return pa_.size(); }

  void clear() {
    pa_.clear();
    pb_.clear();
    da_.clear();
    db_.clear();
    adj_.clear();
  }

  void reserve(std::size_t n) {
    pa_.reserve(n);
    pb_.reserve(n);
    da_.reserve(n);
    db_.reserve(n);
  }

 private:
  std::int32_t push(std::int32_t a, double da, std::int32_t b, double db) {
    pa_.push_back(a);
    pb_.push_back(b);
    da_.push_back(da);
    db_.push_back(db);
    return static_cast<std::int32_t>(pa_.size() - 1);
  }

  std::vector<std::int32_t> pa_, pb_;
  std::vector<double> da_, db_;
  std::vector<double> adj_;
};

// ---- arithmetic ----

[[nodiscard]] inline Var operator+(const Var& a, const Var& b) {
  return a.tape->node2(a.v + b.v, a.idx, 1.0, b.idx, 1.0);
}
[[nodiscard]] inline Var operator+(const Var& a, double b) {
  return a.tape->node1(a.v + b, a.idx, 1.0);
}
[[nodiscard]] inline Var operator+(double a, const Var& b) { return b + a; }

[[nodiscard]] inline Var operator-(const Var& a, const Var& b) {
  return a.tape->node2(a.v - b.v, a.idx, 1.0, b.idx, -1.0);
}
[[nodiscard]] inline Var operator-(const Var& a, double b) {
  return a.tape->node1(a.v - b, a.idx, 1.0);
}
[[nodiscard]] inline Var operator-(double a, const Var& b) {
  return b.tape->node1(a - b.v, b.idx, -1.0);
}
[[nodiscard]] inline Var operator-(const Var& a) { return a.tape->node1(-a.v, a.idx, -1.0); }

[[nodiscard]] inline Var operator*(const Var& a, const Var& b) {
  return a.tape->node2(a.v * b.v, a.idx, b.v, b.idx, a.v);
}
[[nodiscard]] inline Var operator*(const Var& a, double b) {
  return a.tape->node1(a.v * b, a.idx, b);
}
[[nodiscard]] inline Var operator*(double a, const Var& b) { return b * a; }

// Division records the true quotient as the value (not a reciprocal product),
// keeping taped forward values bit-identical to the plain-double path.
[[nodiscard]] inline Var operator/(const Var& a, const Var& b) {
  double q = a.v / b.v;
  double inv = 1.0 / b.v;
  return a.tape->node2(q, a.idx, inv, b.idx, -q * inv);
}
[[nodiscard]] inline Var operator/(const Var& a, double b) {
  return a.tape->node1(a.v / b, a.idx, 1.0 / b);
}
[[nodiscard]] inline Var operator/(double a, const Var& b) {
  double inv = 1.0 / b.v;
  return b.tape->node1(a / b.v, b.idx, -a * inv * inv);
}

// ---- elementary functions ----

[[nodiscard]] inline Var sin(const Var& a) {
  return a.tape->node1(std::sin(a.v), a.idx, std::cos(a.v));
}
[[nodiscard]] inline Var cos(const Var& a) {
  return a.tape->node1(std::cos(a.v), a.idx, -std::sin(a.v));
}
[[nodiscard]] inline Var tanh(const Var& a) {
  double t = std::tanh(a.v);
  return a.tape->node1(t, a.idx, 1.0 - t * t);
}
[[nodiscard]] inline Var exp(const Var& a) {
  double e = std::exp(a.v);
  return a.tape->node1(e, a.idx, e);
}
[[nodiscard]] inline Var log(const Var& a) {
  return a.tape->node1(std::log(a.v), a.idx, 1.0 / a.v);
}
[[nodiscard]] inline Var sqrt(const Var& a) {
  double s = std::sqrt(a.v);
  return a.tape->node1(s, a.idx, s > 0.0 ? 0.5 / s : 0.0);
}
[[nodiscard]] inline Var abs(const Var& a) {
  return a.tape->node1(std::abs(a.v), a.idx, a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0));
}
[[nodiscard]] inline Var max0(const Var& a) {
  return a.tape->node1(a.v > 0.0 ? a.v : 0.0, a.idx, a.v > 0.0 ? 1.0 : 0.0);
}

/// acos with the value clamped into the domain and the slope bounded, so a ray
/// passing exactly through normal incidence cannot poison a gradient with inf.
[[nodiscard]] inline Var acos(const Var& a) {
  double x = std::clamp(a.v, -1.0, 1.0);
  double d = -1.0 / std::sqrt(std::max(1.0 - x * x, 1e-12));
  return a.tape->node1(std::acos(x), a.idx, d);
}
[[nodiscard]] inline double acos_clamped(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }
[[nodiscard]] inline Var acos_clamped(const Var& a) { return acos(a); }

[[nodiscard]] inline Var softplus(const Var& a) {
  double sig = 1.0 / (1.0 + std::exp(-a.v));
  return a.tape->node1(softplus(a.v), a.idx, sig);
}

}  // namespace raybasis
