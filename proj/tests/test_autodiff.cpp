#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "raybasis/autodiff.hpp"
#include "raybasis/model.hpp"
#include "test_util.hpp"

using namespace raybasis;

namespace {

/// Runs f through the tape at x, returns value and gradient.
template <class F>
std::pair<double, std::vector<double>> tape_eval(F&& f, const std::vector<double>& x) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(x.size());
  for (double v : x) vars.push_back(tape.leaf(v));
  Var out = f(vars);
  tape.backward(out);
  std::vector<double> grad;
  grad.reserve(vars.size());
  for (const Var& v : vars) grad.push_back(tape.adjoint(v));
  return {out.v, grad};
}

/// Checks tape gradient against central differences on the same function.
template <class FVar, class FDouble>
void check_against_fd(FVar&& fv, FDouble&& fd, const std::vector<double>& x) {
  auto [value, grad] = tape_eval(fv, x);
  double direct = fd(x);
  CHECK(value == doctest::Approx(direct).epsilon(1e-12));
  auto numeric = testutil::fd_gradient(fd, x);
  CHECK(testutil::gradients_match(grad, numeric));
}

}  // namespace

TEST_CASE("arithmetic primitives match finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                             rng.uniform(0.5, 3.0)};
    check_against_fd(
        [](const std::vector<Var>& v) {
          return (v[0] + v[1]) * (v[0] - 2.0) - v[1] / v[2] + 3.0 * v[2] - (-v[0]);
        },
        [](const std::vector<double>& v) {
          return (v[0] + v[1]) * (v[0] - 2.0) - v[1] / v[2] + 3.0 * v[2] - (-v[0]);
        },
        x);
  }
}

TEST_CASE("transcendental primitives match finite differences") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(0.1, 4.0)};
    check_against_fd(
        [](const std::vector<Var>& v) {
          return sin(v[0]) * cos(v[1]) + tanh(v[0] * v[1]) + exp(0.3 * v[0]) + log(v[1]) +
                 sqrt(v[1]) + softplus(v[0]);
        },
        [](const std::vector<double>& v) {
          return std::sin(v[0]) * std::cos(v[1]) + std::tanh(v[0] * v[1]) +
                 std::exp(0.3 * v[0]) + std::log(v[1]) + std::sqrt(v[1]) + softplus(v[0]);
        },
        x);
  }
}

TEST_CASE("abs, max0 and acos match finite differences away from kinks") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    double a = rng.uniform(0.1, 0.9);
    if (trial % 2 == 0) a = -a;
    std::vector<double> x = {a, rng.uniform(-0.9, 0.9)};
    check_against_fd(
        [](const std::vector<Var>& v) { return abs(v[0]) + max0(v[0]) + acos(v[1]); },
        [](const std::vector<double>& v) {
          return std::abs(v[0]) + std::max(0.0, v[0]) + std::acos(v[1]);
        },
        x);
  }
}

TEST_CASE("subgradient conventions at non-differentiable points") {
  Tape tape;
  Var zero = tape.leaf(0.0);

  SUBCASE("sqrt at zero") {
    Var r = sqrt(zero);
    tape.backward(r);
    CHECK(r.v == 0.0);
    CHECK(tape.adjoint(zero) == 0.0);
  }
  SUBCASE("abs at zero") {
    Var r = abs(zero);
    tape.backward(r);
    CHECK(tape.adjoint(zero) == 0.0);
  }
  SUBCASE("max0 at zero") {
    Var r = max0(zero);
    tape.backward(r);
    CHECK(tape.adjoint(zero) == 0.0);
  }
}

TEST_CASE("acos input is clamped instead of producing nan") {
  Tape tape;
  Var over = tape.leaf(1.0 + 1e-14);
  Var r = acos(over);
  CHECK(std::isfinite(r.v));
  CHECK(r.v == doctest::Approx(0.0).epsilon(1e-6));
  tape.backward(r);
  CHECK(std::isfinite(tape.adjoint(over)));
}

TEST_CASE("softplus stays finite for large inputs") {
  Tape tape;
  Var big = tape.leaf(800.0);
  Var r = softplus(big);
  CHECK(r.v == doctest::Approx(800.0));
  tape.backward(r);
  CHECK(tape.adjoint(big) == doctest::Approx(1.0));

  Tape tape2;
  Var low = tape2.leaf(-800.0);
  Var r2 = softplus(low);
  CHECK(r2.v == 0.0);
}

TEST_CASE("chain through a deep composite expression") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                             rng.uniform(0.2, 2.0)};
    check_against_fd(
        [](const std::vector<Var>& v) {
          Var u = exp(sin(v[0]) * v[1]) + sqrt(v[0] * v[0] + v[1] * v[1] + v[2]);
          Var w = tanh(u * 0.3) / (v[2] + 2.0);
          return w * w + log(u + 1.0);
        },
        [](const std::vector<double>& v) {
          double u = std::exp(std::sin(v[0]) * v[1]) +
                     std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2]);
          double w = std::tanh(u * 0.3) / (v[2] + 2.0);
          return w * w + std::log(u + 1.0);
        },
        x);
  }
}

TEST_CASE("fan-out accumulates adjoints from every use") {
  Tape tape;
  Var a = tape.leaf(1.7);
  Var b = a * a + a * 3.0 + sin(a);  // a used three times
  tape.backward(b);
  CHECK(tape.adjoint(a) == doctest::Approx(2.0 * 1.7 + 3.0 + std::cos(1.7)).epsilon(1e-12));
}

TEST_CASE("tape clear allows reuse with identical results") {
  Tape tape;
  auto run = [&](double v) {
    tape.clear();
    Var a = tape.leaf(v);
    Var r = exp(a) * sin(a);
    tape.backward(r);
    return std::pair<double, double>{r.v, tape.adjoint(a)};
  };
  auto first = run(0.8);
  run(2.5);
  auto again = run(0.8);
  CHECK(first.first == again.first);
  CHECK(first.second == again.second);
}

TEST_CASE("plane wave field core differentiates through parameters") {
  WaveSpec wave = WaveSpec::from_frequency(200.0, 1500.0);
  Rng rng(15);
  PlaneWaveModel model = init_plane_wave(3, wave.wavenumber, rng, 1.0);
  std::vector<double> params = pack(model);
  Vec3 receiver{4.2, -1.3, 2.6};

  auto value_at = [&](const std::vector<double>& p) {
    AnyModel m = model;
    unpack(m, p);
    return predict_amplitude(m, receiver);
  };

  Tape tape;
  std::vector<Var> vars;
  for (double v : params) vars.push_back(tape.leaf(v));
  Vec3T<Var> pos{tape.leaf(receiver.x), tape.leaf(receiver.y), tape.leaf(receiver.z)};
  CplxT<Var> field = plane_field_core<Var>(model, std::span<const Var>(vars), pos);
  Var amp = sqrt(field.re * field.re + field.im * field.im);
  tape.backward(amp);

  CHECK(amp.v == value_at(params));  // same code path, bit identical
  std::vector<double> grad;
  for (const Var& v : vars) grad.push_back(tape.adjoint(v));
  auto numeric = testutil::fd_gradient(value_at, params);
  CHECK(testutil::gradients_match(grad, numeric));

  // Position derivatives drive the refinement stage.
  std::vector<double> pos_grad = {tape.adjoint(pos.x), tape.adjoint(pos.y), tape.adjoint(pos.z)};
  auto shift_value = [&](std::vector<double> q) {
    return predict_amplitude(AnyModel{model}, Vec3{q[0], q[1], q[2]});
  };
  auto pos_numeric = testutil::fd_gradient(shift_value, {receiver.x, receiver.y, receiver.z});
  CHECK(testutil::gradients_match(pos_grad, pos_numeric));
}

TEST_CASE("image source field core differentiates through parameters") {
  WaveSpec wave = WaveSpec::from_frequency(300.0, 1500.0);
  Waveguide guide;
  guide.depth = 40.0;
  guide.sound_speed = 1500.0;
  Vec3 source{0.0, 0.0, 12.0};
  Vec3 ref{60.0, 5.0, 20.0};
  auto rays = nominal_rays(Environment{guide}, source, ref, 2);
  Rng rng(16);
  ImageSourceModel model = init_image_source(rays, wave.wavenumber, 1e-4, rng, 1.0);
  std::vector<double> params = pack(model);
  Vec3 receiver{58.0, 4.0, 18.0};

  auto value_at = [&](const std::vector<double>& p) {
    AnyModel m = model;
    unpack(m, p);
    return predict_amplitude(m, receiver);
  };

  Tape tape;
  std::vector<Var> vars;
  for (double v : params) vars.push_back(tape.leaf(v));
  Vec3T<Var> pos = lift(tape, receiver);
  CplxT<Var> field = image_source_field_core<Var>(model, std::span<const Var>(vars), pos);
  Var amp = sqrt(field.re * field.re + field.im * field.im);
  tape.backward(amp);

  CHECK(amp.v == value_at(params));
  std::vector<double> grad;
  for (const Var& v : vars) grad.push_back(tape.adjoint(v));
  CHECK(testutil::gradients_match(grad, testutil::fd_gradient(value_at, params)));
}

TEST_CASE("geometry aided field core differentiates through parameters") {
  WaveSpec wave = WaveSpec::from_frequency(500.0, 1500.0);
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1500.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.05};
  Vec3 source{0.0, 0.0, 10.0};
  Vec3 ref{45.0, 0.0, 15.0};
  auto rays = nominal_rays(Environment{guide}, source, ref, 2);
  Vec3 receiver{44.0, 2.0, 14.0};

  SUBCASE("rayleigh reflection parameters") {
    GeometryAidedModel model =
        GeometryAidedModel::from_nominal(rays, wave.wavenumber,
                                         ReflectionModel{RayleighBottom{1.4, 0.95, 0.1}});
    std::vector<double> params = pack(model);
    // Perturb the error terms away from the zero kink so FD is clean.
    Rng rng(17);
    for (std::size_t i = 0; i < 3 * model.nominal.size(); ++i)
      params[i] = rng.uniform(-0.02, 0.02);
    auto value_at = [&](const std::vector<double>& p) {
      AnyModel m = model;
      unpack(m, p);
      return predict_amplitude(m, receiver);
    };
    Tape tape;
    std::vector<Var> vars;
    for (double v : params) vars.push_back(tape.leaf(v));
    CplxT<Var> field =
        geometry_field_core<Var>(model, std::span<const Var>(vars), lift(tape, receiver));
    Var amp = sqrt(field.re * field.re + field.im * field.im);
    tape.backward(amp);
    CHECK(amp.v == doctest::Approx(value_at(params)).epsilon(1e-14));
    std::vector<double> grad;
    for (const Var& v : vars) grad.push_back(tape.adjoint(v));
    CHECK(testutil::gradients_match(grad, testutil::fd_gradient(value_at, params)));
  }

  SUBCASE("learned reflection parameters") {
    Rng rng(18);
    RcnnWeights weights = RcnnWeights::random(rng, 8);
    GeometryAidedModel model =
        GeometryAidedModel::from_nominal(rays, wave.wavenumber, ReflectionModel{weights});
    std::vector<double> params = pack(model);
    for (std::size_t i = 0; i < 3 * model.nominal.size(); ++i)
      params[i] = rng.uniform(-0.02, 0.02);
    auto value_at = [&](const std::vector<double>& p) {
      AnyModel m = model;
      unpack(m, p);
      return predict_amplitude(m, receiver);
    };
    Tape tape;
    std::vector<Var> vars;
    for (double v : params) vars.push_back(tape.leaf(v));
    CplxT<Var> field =
        geometry_field_core<Var>(model, std::span<const Var>(vars), lift(tape, receiver));
    Var amp = sqrt(field.re * field.re + field.im * field.im);
    tape.backward(amp);
    CHECK(amp.v == doctest::Approx(value_at(params)).epsilon(1e-14));
    std::vector<double> grad;
    for (const Var& v : vars) grad.push_back(tape.adjoint(v));
    CHECK(testutil::gradients_match(grad, testutil::fd_gradient(value_at, params)));
  }
}

TEST_CASE("trainable wavenumber flows gradients") {
  WaveSpec wave = WaveSpec::from_frequency(150.0, 1500.0);
  Rng rng(19);
  PlaneWaveModel model = init_plane_wave(2, wave.wavenumber, rng, 1.0);
  model.train_k = true;
  std::vector<double> params = pack(model);
  Vec3 receiver{3.0, 1.0, 0.5};
  auto value_at = [&](const std::vector<double>& p) {
    AnyModel m = model;
    unpack(m, p);
    return predict_amplitude(m, receiver);
  };
  Tape tape;
  std::vector<Var> vars;
  for (double v : params) vars.push_back(tape.leaf(v));
  CplxT<Var> field =
      plane_field_core<Var>(model, std::span<const Var>(vars), lift(tape, receiver));
  Var amp = sqrt(field.re * field.re + field.im * field.im);
  tape.backward(amp);
  std::vector<double> grad;
  for (const Var& v : vars) grad.push_back(tape.adjoint(v));
  CHECK(testutil::gradients_match(grad, testutil::fd_gradient(value_at, params)));
  CHECK(std::abs(grad.back()) > 0.0);  // wavenumber leaf participates
}
