// Acceptance gate: nine end-to-end guarantees, one PASS/FAIL line each.
// Every threshold is pinned next to its check. The binary exits nonzero if
// any line fails, so ctest treats the gate as a single test. Pass criterion
// numbers as arguments to run a subset, e.g. `acceptance 4 7`.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "raybasis/scenario.hpp"
#include "test_util.hpp"

namespace {

using namespace raybasis;
namespace fs = std::filesystem;

struct Outcome {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// --- 1. Helmholtz compliance -----------------------------------------------
// Ten random plane-wave models, n_ray <= 8; fourth-order finite-difference
// residual |lap p + k^2 p| / (k^2 |p|) stays under 1e-3 at 100 points per
// model whose amplitude clears 5% of the local maximum.

Outcome criterion_helmholtz() {
  constexpr double tol = 1e-3;
  Rng rng(41);
  double worst = 0.0;
  int points = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 1 + rng.below(8);
    double k = rng.uniform(2.0, 40.0);
    PlaneWaveModel m;
    m.wavenumber = k;
    m.amp.resize(n);
    m.phase.resize(n);
    m.theta.resize(n);
    m.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.amp[i] = rng.uniform(0.2, 1.5);
      m.phase[i] = rng.uniform(0.0, 2.0 * pi);
      m.theta[i] = rng.uniform(0.0, 2.0 * pi);
      m.psi[i] = rng.uniform(0.0, 2.0 * pi);
    }
    auto field = [&](Vec3 r) {
      Cplx c = predict_plane_complex(m, r);
      return std::complex<double>(c.re, c.im);
    };
    double span = 5.0 * 2.0 * pi / k;
    auto draw = [&] {
      return Vec3{rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span)};
    };
    double local_max = 0.0;
    for (int i = 0; i < 300; ++i) local_max = std::max(local_max, std::abs(field(draw())));
    double h = 0.02 / k;
    int accepted = 0;
    while (accepted < 100) {
      Vec3 r = draw();
      if (std::abs(field(r)) < 0.05 * local_max) continue;
      worst = std::max(worst, testutil::helmholtz_residual(field, k, r, h));
      ++accepted;
      ++points;
    }
  }
  return {worst < tol, fmt("max residual %.2e (tol %.0e) over %d points", worst, tol, points)};
}

// --- 2. Gradient oracle -----------------------------------------------------
// Twenty random configurations spanning all three model kinds and both
// reflection layers; every packed-parameter gradient of the training loss
// matches central finite differences within relative 1e-5 (absolute floor
// 1e-7 absorbs finite-difference noise on vanishing entries).

Outcome criterion_gradients() {
  constexpr double rel = 1e-5;
  constexpr double abs_tol = 1e-7;
  Rng rng(42);
  double worst_ratio = 0.0;
  int params_checked = 0;
  bool all_match = true;

  for (int cfgi = 0; cfgi < 20; ++cfgi) {
    AnyModel m{PlaneWaveModel{}};
    PenaltyConfig pen;
    Vec3 around{};
    double box = 5.0;

    int kind3 = cfgi % 3;
    double k = rng.uniform(4.0, 20.0);
    if (kind3 == 0) {
      PlaneWaveModel pw;
      pw.wavenumber = k;
      std::size_t n = 2 + rng.below(3);
      for (std::size_t i = 0; i < n; ++i) {
        pw.amp.push_back(rng.uniform(0.1, 1.0));
        pw.phase.push_back(rng.uniform(0.0, 2.0 * pi));
        pw.theta.push_back(rng.uniform(0.0, 2.0 * pi));
        pw.psi.push_back(rng.uniform(0.0, 2.0 * pi));
      }
      pen.alpha = 0.03;
      m = AnyModel{pw};
    } else if (kind3 == 1) {
      ImageSourceModel im;
      im.wavenumber = k;
      im.ref = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      im.absorption_db_per_m = 0.002;
      std::size_t n = 2 + rng.below(3);
      for (std::size_t i = 0; i < n; ++i) {
        im.amp.push_back(rng.uniform(0.1, 1.0));
        im.phase.push_back(rng.uniform(0.0, 2.0 * pi));
        im.theta.push_back(rng.uniform(0.0, 2.0 * pi));
        im.psi.push_back(rng.uniform(0.2, pi - 0.2));
        im.d.push_back(rng.uniform(18.0, 60.0));
      }
      pen.alpha = 0.02;
      around = im.ref;
      box = 10.0;
      m = AnyModel{im};
    } else {
      Waveguide guide;
      guide.depth = 18.0;
      guide.sound_speed = 1500.0;
      guide.bottom = RayleighBottom{1.45, 0.88, 0.003};
      Environment env{guide};
      Vec3 source{0.0, 0.0, 7.0};
      Vec3 ref{rng.uniform(25.0, 45.0), 0.0, rng.uniform(5.0, 12.0)};
      int order = (cfgi / 3) % 2 ? 2 : 1;
      auto rays = nominal_rays(env, source, ref, order);
      ReflectionModel layer{RayleighBottom{rng.uniform(1.2, 1.7), rng.uniform(0.8, 0.95), 0.004}};
      if ((cfgi / 3) % 2 == 0) layer = RcnnWeights::random(rng, 4);
      auto geo =
          GeometryAidedModel::from_nominal(rays, k, layer, absorption_of(env));
      for (std::size_t i = 0; i < geo.n_rays(); ++i) {
        geo.e_theta[i] = rng.uniform(-0.06, 0.06);
        geo.e_psi[i] = rng.uniform(-0.06, 0.06);
        geo.e_d[i] = rng.uniform(-0.8, 0.8);
      }
      pen = {0.0, 0.7, 0.4, 0.8};
      around = ref;
      box = 8.0;
      m = AnyModel{geo};
    }

    Dataset ds;
    for (int i = 0; i < 6; ++i) {
      Vec3 pos = around + Vec3{rng.uniform(-box, box), rng.uniform(-box, box),
                               rng.uniform(-box, box) * 0.3};
      if (kind3 == 2) pos.z = rng.uniform(1.0, 17.0);
      ds.records.push_back({pos, rng.uniform(0.5, 2.0), Split::train});
    }
    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
    LossKind kind = (cfgi == 7 || cfgi == 13 || cfgi == 17) ? LossKind::absolute
                                                            : LossKind::squared;

    LossGrad lg = loss_and_gradient(m, ds, idx, kind, pen);
    auto f = [&](std::vector<double> p) {
      AnyModel probe = m;
      unpack(probe, p);
      return evaluate_loss(probe, ds, idx, kind, pen);
    };
    auto fd = testutil::fd_gradient(f, pack(m));
    if (!testutil::gradients_match(lg.grad, fd, rel, abs_tol)) all_match = false;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      double diff = std::abs(lg.grad[i] - fd[i]);
      double bound = rel * std::max(std::abs(lg.grad[i]), std::abs(fd[i])) + abs_tol;
      worst_ratio = std::max(worst_ratio, diff / bound);
      ++params_checked;
    }
  }
  return {all_match, fmt("worst gap %.2f of bound (rel %.0e, floor %.0e) over %d params",
                         worst_ratio, rel, abs_tol, params_checked)};
}

// --- 3. Image-sum equivalence -----------------------------------------------
// A geometry-aided model with zero error terms and the true Rayleigh layer is
// the image sum by construction; check it agrees with the oracle to 1e-10
// relative at 100 random receivers in a waveguide and 100 in the tank box.

Outcome criterion_ism_equivalence() {
  constexpr double tol = 1e-10;
  double worst = 0.0;

  {
    Waveguide guide;
    guide.depth = 30.0;
    guide.sound_speed = 1541.0;
    guide.bottom = RayleighBottom{1.5, 0.9, 0.0};
    Environment env{guide};
    WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
    Vec3 source{0.0, 0.0, 15.0};
    auto rays = nominal_rays(env, source, {120.0, 0.0, 15.0}, 6);
    auto geo = GeometryAidedModel::from_nominal(rays, wave.wavenumber,
                                                ReflectionModel{guide.bottom}, absorption_of(env));
    AnyModel model{geo};
    Rng rng(43);
    for (int i = 0; i < 100; ++i) {
      Vec3 r{rng.uniform(60.0, 180.0), rng.uniform(-40.0, 40.0), rng.uniform(1.0, 29.0)};
      double truth = abs_value(field_ism(env, wave, source, r, {6, false}));
      worst = std::max(worst, std::abs(predict_amplitude(model, r) - truth) / truth);
    }
  }
  {
    Box tank;
    tank.dims = {2.5, 1.2, 0.8};
    tank.sound_speed = 1505.0;
    for (std::size_t w = 0; w < 6; ++w)
      if (w != wall_z_lo) tank.walls[w] = RayleighBottom{1.5, 0.9, 0.0};
    Environment env{tank};
    WaveSpec wave = WaveSpec::from_frequency(10000.0, tank.sound_speed);
    Vec3 source{0.3, 0.6, 0.4};
    auto rays = nominal_rays(env, source, {1.2, 0.6, 0.4}, 4);
    auto geo = GeometryAidedModel::from_nominal(rays, wave.wavenumber,
                                                ReflectionModel{RayleighBottom{1.5, 0.9, 0.0}},
                                                absorption_of(env));
    AnyModel model{geo};
    Rng rng(44);
    int accepted = 0;
    while (accepted < 100) {
      Vec3 r{rng.uniform(0.05, 2.45), rng.uniform(0.05, 1.15), rng.uniform(0.05, 0.75)};
      if (norm(r - source) < 0.08) continue;
      double truth = abs_value(field_ism(env, wave, source, r, {4, false}));
      worst = std::max(worst, std::abs(predict_amplitude(model, r) - truth) / truth);
      ++accepted;
    }
  }
  return {worst < tol, fmt("max relative gap %.2e (tol %.0e) over 200 receivers", worst, tol)};
}

// --- 4. Plane-wave recovery ---------------------------------------------------
// Synthesize amplitudes from the five-ray reference field on the survey
// trajectory, fit 60 plane waves with the amplitude penalty tuned on
// validation (ten restarts total), and demand < 1.0 dB RMS on the dense
// survey grid plus < 3 dB on the 50 m extrapolation strip beyond it.

Outcome criterion_plane_recovery() {
  constexpr double aoi_tol_db = 1.0;
  constexpr double strip_tol_db = 3.0;

  WaveSpec wave = WaveSpec::from_frequency(1000.0, 1541.0);
  auto rays = far_field_truth_rays();
  auto truth_at = [&](const Vec3& r) { return abs_value(synth_plane_field(rays, wave, r)); };

  TrajectoryConfig traj;
  traj.start = {-25.0, 0.0, 2.0};
  traj.drift_vx = 0.0508;
  traj.vertical_speed = 0.518;
  traj.depth_lo = 2.0;
  traj.depth_hi = 32.0;
  traj.profiles = 17;
  auto points = gen_zigzag_trajectory(traj);
  std::vector<double> amps;
  amps.reserve(points.size());
  for (const auto& r : points) amps.push_back(truth_at(r));
  Dataset ds = make_dataset(points, amps, {0.7, 0.3, 0.0}, 4001);

  // Ten restarts spread over the amplitude-penalty ladder; the winner is the
  // best validation data term across every run.
  const double alphas[] = {1e-3, 3e-3, 1e-2};
  const int restarts[] = {3, 4, 3};
  AnyModel best{PlaneWaveModel{}};
  double best_val = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  for (int a = 0; a < 3; ++a) {
    TrainConfig tc;
    tc.loss = LossKind::squared;
    tc.penalties.alpha = alphas[a];
    tc.lr = 0.01;
    tc.max_epochs = 6000;
    tc.patience = 1500;
    tc.restarts = restarts[a];
    tc.seed = 4100 + 17 * static_cast<std::uint64_t>(a);
    AnyModel m{PlaneWaveModel{}};
    TrainReport rep = multi_restart_train(m, ds, tc, [&](std::uint64_t seed) {
      Rng rng(seed);
      return AnyModel{init_plane_wave(60, wave.wavenumber, rng, 0.5)};
    });
    if (rep.best_val < best_val) {
      best_val = rep.best_val;
      best = m;
      best_alpha = alphas[a];
    }
  }

  GridSpec aoi{{-25.0, 0.0, 2.0}, {25.0, 0.0, 32.0}, {0.5, 1.0, 0.5}};
  GridSpec strip{{25.5, 0.0, 2.0}, {75.0, 0.0, 32.0}, {0.5, 1.0, 0.5}};
  double rms_aoi = grid_metrics(best, aoi, truth_at).rms_error_db;
  double rms_strip = grid_metrics(best, strip, truth_at).rms_error_db;
  return {rms_aoi < aoi_tol_db && rms_strip < strip_tol_db,
          fmt("grid rms %.3f dB (tol %.1f), strip rms %.3f dB (tol %.1f), alpha %.0e",
              rms_aoi, aoi_tol_db, rms_strip, strip_tol_db, best_alpha)};
}

// --- 5. Rayleigh inversion round trip ----------------------------------------
// Waveguide data from a known bottom (1.5, 0.9, 0.001). Noiseless training
// must land within 2% on density ratio and speed ratio and within an order
// of magnitude on the loss tangent; with 1 cm per-axis position noise the
// ratio bounds relax to 5%.

Outcome criterion_rayleigh_inversion() {
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.001};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};

  TrajectoryConfig traj;
  traj.start = {100.0, 0.0, 1.0};
  traj.drift_vx = 0.6;
  traj.vertical_speed = 1.012;
  traj.depth_lo = 1.0;
  traj.depth_hi = 29.0;
  traj.profiles = 6;
  auto points = gen_zigzag_trajectory(traj);
  Dataset clean = make_dataset(points, env, wave, source, {0.7, 0.3, 0.0}, 51, {6, false});

  auto invert = [&](const Dataset& ds) {
    InversionConfig inv;
    inv.environment = env;
    inv.wave = wave;
    inv.source = source;
    inv.max_order = 6;
    inv.layer = RayleighBottom{1.2, 1.0, 0.01};
    inv.train.loss = LossKind::squared;
    inv.train.penalties = {0.0, 2.0, 1.0, 0.0};
    inv.train.lr = 0.01;
    inv.train.max_epochs = 6000;
    inv.train.patience = 1200;
    inv.train.seed = 52;
    return std::get<RayleighBottom>(run_inversion(inv, ds).model.reflection);
  };

  auto err_pct = [](double got, double want) { return 100.0 * std::abs(got - want) / want; };
  RayleighBottom noiseless = invert(clean);
  double rho0 = err_pct(noiseless.rho_ratio, 1.5);
  double c0 = err_pct(noiseless.speed_ratio, 0.9);
  bool delta_ok = noiseless.loss_tangent >= 1e-4 && noiseless.loss_tangent <= 1e-2;

  RayleighBottom noisy = invert(add_position_noise(clean, 0.01, 53));
  double rho1 = err_pct(noisy.rho_ratio, 1.5);
  double c1 = err_pct(noisy.speed_ratio, 0.9);

  bool pass = rho0 < 2.0 && c0 < 2.0 && delta_ok && rho1 < 5.0 && c1 < 5.0;
  return {pass,
          fmt("noiseless rho %.2f%% c %.2f%% delta %.1e (tol 2%%, [1e-4,1e-2]); "
              "noisy rho %.2f%% c %.2f%% (tol 5%%)",
              rho0, c0, noiseless.loss_tangent, rho1, c1)};
}

// --- 6. Reflection-curve recovery --------------------------------------------
// Image-sum data over a Rayleigh bottom, composite model trained with the
// curve network; mean |eps - |Gamma|| over the incidence angles the rays
// actually sample must stay under 0.05.

Outcome criterion_rcnn_recovery() {
  constexpr double tol = 0.05;
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.0};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};

  TrajectoryConfig traj;
  traj.start = {100.0, 0.0, 1.0};
  traj.drift_vx = 0.26;
  traj.vertical_speed = 0.2434;
  traj.depth_lo = 1.0;
  traj.depth_hi = 29.0;
  traj.profiles = 10;
  auto points = gen_zigzag_trajectory(traj);
  Dataset ds = make_dataset(points, env, wave, source, {0.7, 0.3, 0.0}, 61, {6, false});

  InversionConfig inv;
  inv.environment = env;
  inv.wave = wave;
  inv.source = source;
  inv.max_order = 6;
  inv.layer = RcnnWeights::zeros(16);
  inv.train.loss = LossKind::squared;
  inv.train.penalties = {0.0, 2.0, 1.0, 1.0};
  inv.train.lr = 0.01;
  inv.train.max_epochs = 2500;
  inv.train.patience = 500;
  inv.train.restarts = 3;
  inv.train.seed = 62;
  InversionResult res = run_inversion(inv, ds);

  auto angles = sampled_incidence_angles(res.model, ds, Split::train);
  double mad = reflection_eps_mad(res.model.reflection, ReflectionModel{guide.bottom}, angles);
  return {mad < tol, fmt("eps mean absolute gap %.4f (tol %.2f) over %zu sampled angles", mad,
                         tol, angles.size())};
}

// Tank protocol shared by criteria 7 and 8: 500 samples over a block half a
// meter from the source, the 278 shallowest forming the training region
// (250 train / 28 validation) and the 222 below it held out.
struct TankSetup {
  Environment env{Box{}};
  WaveSpec wave{};
  Vec3 source{};
  Dataset clean;
};

TankSetup tank_setup(std::uint64_t seed) {
  Box tank;
  tank.dims = {2.5, 1.2, 0.8};
  tank.sound_speed = 1505.0;
  for (std::size_t w = 0; w < 6; ++w)
    if (w != wall_z_lo) tank.walls[w] = RayleighBottom{1.5, 0.9, 0.0};
  TankSetup s;
  s.env = Environment{tank};
  s.wave = WaveSpec::from_frequency(10000.0, tank.sound_speed);
  s.source = {0.3, 0.6, 0.4};

  TrajectoryConfig traj;
  traj.start = {0.8, 0.15, 0.13};
  traj.drift_vx = 0.00072;
  traj.drift_vy = 0.0018;
  traj.vertical_speed = 0.00879;
  traj.depth_lo = 0.13;
  traj.depth_hi = 0.57;
  traj.profiles = 10;
  auto points = gen_zigzag_trajectory(traj);
  std::vector<double> amps;
  amps.reserve(points.size());
  for (const auto& r : points)
    amps.push_back(abs_value(field_ism(s.env, s.wave, s.source, r, {4, false})));
  s.clean = make_depth_split_dataset(points, amps, 278, 250, seed);
  return s;
}

GeometryAidedModel tank_train(const TankSetup& s, const Dataset& ds, std::uint64_t seed) {
  InversionConfig inv;
  inv.environment = s.env;
  inv.wave = s.wave;
  inv.source = s.source;
  inv.max_order = 4;
  inv.layer = RcnnWeights::zeros(16);
  inv.train.loss = LossKind::absolute;
  inv.train.penalties = {0.0, 8.0, 4.0, 1.0};
  inv.train.lr = 5e-3;
  inv.train.max_epochs = 3000;
  inv.train.patience = 600;
  inv.train.restarts = 3;
  inv.train.seed = seed;
  return run_inversion(inv, ds).model;
}

// --- 7. Tank extrapolation split ---------------------------------------------
// Trained on the clean training region, the model's MATE on the held-out
// deep points must be at least 10x smaller than inverse-distance
// interpolation's, with Spearman rank correlation above 0.9.

Outcome criterion_tank_split() {
  constexpr double ratio_tol = 10.0;
  constexpr double spearman_tol = 0.9;
  TankSetup s = tank_setup(71);
  AnyModel model{tank_train(s, s.clean, 72)};

  MetricsReport sparse = dataset_metrics(model, s.clean, Split::test);
  std::vector<Vec3> test_pos;
  std::vector<double> test_amp;
  for (std::size_t i : s.clean.indices(Split::test)) {
    test_pos.push_back(s.clean.records[i].position);
    test_amp.push_back(s.clean.records[i].amplitude);
  }
  MetricsReport idw = compute_metrics(idw_baseline(s.clean, test_pos), test_amp);
  double ratio = idw.mate_linear / sparse.mate_linear;
  bool pass = ratio >= ratio_tol && sparse.spearman_rho > spearman_tol;
  return {pass, fmt("mate ratio %.1fx (tol %.0fx; model %.4f, idw %.4f), spearman %.3f "
                    "(tol %.1f), %zu held-out",
                    ratio, ratio_tol, sparse.mate_linear, idw.mate_linear, sparse.spearman_rho,
                    spearman_tol, test_pos.size())};
}

// --- 8. Two-stage position refinement ----------------------------------------
// Training-region positions are perturbed by uniform noise (2 cm above the
// region boundary, 4 cm below); after a first training pass, per-record
// refinement must bring the median position error under 2 cm with most
// records under 4 cm.

Outcome criterion_refinement() {
  constexpr double median_tol = 0.02;
  constexpr double most_threshold = 0.04;
  constexpr double most_fraction = 0.6;

  TankSetup s = tank_setup(81);
  Dataset noisy = add_depth_position_noise(s.clean, 0.02, 0.04, 0.36, 82);
  AnyModel model{tank_train(s, noisy, 83)};

  // The second stage corrects the measurements the fit depends on: the
  // training-region records. Held-out records keep their raw positions.
  Dataset region;
  std::vector<std::size_t> region_idx;
  for (std::size_t i = 0; i < noisy.records.size(); ++i)
    if (noisy.records[i].split != Split::test) {
      region.records.push_back(noisy.records[i]);
      region_idx.push_back(i);
    }

  RefineConfig rc;
  rc.loss = LossKind::squared;
  rc.weight = 1.0;
  rc.lr = 3e-3;
  rc.max_iters = 300;
  auto offsets = refine_positions(model, region, rc);

  std::vector<double> errors, raw_errors;
  for (std::size_t j = 0; j < region_idx.size(); ++j) {
    const Vec3& truth = s.clean.records[region_idx[j]].position;
    const Vec3& raw = noisy.records[region_idx[j]].position;
    errors.push_back(norm(raw + offsets[j] - truth));
    raw_errors.push_back(norm(raw - truth));
  }

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  double median = median_of(errors);
  double raw_median = median_of(raw_errors);
  double below = 0.0;
  for (double e : errors) below += (e < most_threshold);
  double frac = below / static_cast<double>(errors.size());

  // The raw-median comparison keeps the check honest: leaving every offset
  // at zero would sneak under the absolute bounds at this noise level.
  bool pass = median < median_tol && frac >= most_fraction && median < raw_median;
  return {pass, fmt("median error %.4f m (tol %.2f, noise-only %.4f), %.0f%% below %.2f m "
                    "(tol %.0f%%), %zu records",
                    median, median_tol, raw_median, 100.0 * frac, most_threshold,
                    100.0 * most_fraction, errors.size())};
}

// --- 9. CLI determinism --------------------------------------------------------
// Every subcommand is run twice with the same seed into separate directories;
// the full output trees, including captured stdout, must be byte-identical.
// The driver binary comes from RAYBASIS_CLI_PATH.

int run_cmd(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

Outcome criterion_cli_determinism() {
  const char* cli = std::getenv("RAYBASIS_CLI_PATH");
#ifdef RAYBASIS_DEFAULT_CLI_PATH
  if (!cli) cli = RAYBASIS_DEFAULT_CLI_PATH;
#endif
  if (!cli) return {false, "RAYBASIS_CLI_PATH not set"};

  fs::path base = fs::temp_directory_path() / "raybasis-acceptance-cli";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::path cfg = base / "cfg";
  fs::create_directories(cfg);

  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.0};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};

  SimulateConfig sim;
  sim.environment = env;
  sim.wave = wave;
  sim.source = source;
  sim.trajectory.start = {100.0, 0.0, 3.0};
  sim.trajectory.drift_vx = 0.5;
  sim.trajectory.vertical_speed = 2.0;
  sim.trajectory.depth_lo = 3.0;
  sim.trajectory.depth_hi = 27.0;
  sim.trajectory.profiles = 2;
  sim.max_order = 4;
  write_text_file((cfg / "sim.json").string(), to_json_text(json(sim)));

  TraceConfig trace;
  trace.environment = env;
  trace.source = source;
  trace.reference = {80.0, 0.0, 12.0};
  trace.max_order = 3;
  write_text_file((cfg / "trace.json").string(), to_json_text(json(trace)));

  TrainJob job;
  {
    Rng rng(9001);
    job.model = AnyModel{init_plane_wave(8, wave.wavenumber, rng, 0.5)};
  }
  job.train.loss = LossKind::squared;
  job.train.penalties.alpha = 1e-3;
  job.train.batch_size = 16;
  job.train.max_epochs = 30;
  job.train.patience = 10;
  job.train.restarts = 2;
  job.train.seed = 9002;
  write_text_file((cfg / "job.json").string(), to_json_text(json(job)));

  GridSpec grid{{60.0, 0.0, 4.0}, {90.0, 0.0, 26.0}, {3.0, 1.0, 2.0}};
  write_text_file((cfg / "grid.json").string(), to_json_text(json(grid)));

  RefineConfig refine;
  refine.max_iters = 15;
  write_text_file((cfg / "refine.json").string(), to_json_text(json(refine)));

  InversionConfig inv_ray;
  inv_ray.environment = env;
  inv_ray.wave = wave;
  inv_ray.source = source;
  inv_ray.max_order = 4;
  inv_ray.layer = RayleighBottom{1.3, 0.95, 0.005};
  inv_ray.train.penalties = {0.0, 2.0, 1.0, 0.0};
  inv_ray.train.batch_size = 16;
  inv_ray.train.max_epochs = 15;
  inv_ray.train.patience = 10;
  inv_ray.train.seed = 7;
  write_text_file((cfg / "inv_rayleigh.json").string(), to_json_text(json(inv_ray)));

  InversionConfig inv_net = inv_ray;
  inv_net.layer = RcnnWeights::zeros(4);
  inv_net.train.penalties = {0.0, 2.0, 1.0, 1.0};
  inv_net.train.max_epochs = 10;
  write_text_file((cfg / "inv_rcnn.json").string(), to_json_text(json(inv_net)));

  auto run_all = [&](const fs::path& dir) -> int {
    fs::create_directories(dir);
    std::string c = std::string("\"") + cli + "\" --seed 9 --out " + dir.string() + " ";
    std::string log = " >> " + (dir / "log.txt").string() + " 2>&1";
    std::string data = " --dataset " + (dir / "dataset.csv").string();
    std::string ckpt = " --checkpoint " + (dir / "checkpoint.json").string();
    const std::string cmds[] = {
        c + "simulate --config " + (cfg / "sim.json").string() + log,
        c + "trace --config " + (cfg / "trace.json").string() + log,
        c + "train --config " + (cfg / "job.json").string() + data + log,
        c + "predict" + ckpt + " --grid " + (cfg / "grid.json").string() + log,
        c + "baseline-idw" + data + " --grid " + (cfg / "grid.json").string() + log,
        c + "baseline-idw" + data + " --at 120 0 15 --value-out idw_point.json" + log,
        c + "eval --pred " + (dir / "field.csv").string() + " --truth " +
            (dir / "idw.csv").string() + log,
        c + "refine-positions" + ckpt + data + " --config " + (cfg / "refine.json").string() +
            log,
        c + "invert-rayleigh --config " + (cfg / "inv_rayleigh.json").string() + data +
            " --checkpoint-out ray_ckpt.json --report-out ray_report.json"
            " --reflection-out ray_reflection.csv --layer-out ray_layer.json" + log,
        c + "invert-rcnn --config " + (cfg / "inv_rcnn.json").string() + data +
            " --checkpoint-out net_ckpt.json --report-out net_report.json"
            " --reflection-out net_reflection.csv --layer-out net_layer.json" + log,
        c + "run-scenario near-field --epochs 2 --restarts 1" + log,
    };
    for (const auto& cmd : cmds) {
      int rc = run_cmd(cmd);
      if (rc != 0) return rc;
    }
    return 0;
  };

  int rc_a = run_all(base / "a");
  if (rc_a != 0) return {false, fmt("first run failed with exit code %d", rc_a)};
  int rc_b = run_all(base / "b");
  if (rc_b != 0) return {false, fmt("second run failed with exit code %d", rc_b)};

  auto listing = [](const fs::path& dir) {
    std::set<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file()) rel.insert(fs::relative(entry.path(), dir).string());
    return rel;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };

  auto files_a = listing(base / "a");
  auto files_b = listing(base / "b");
  if (files_a != files_b) return {false, "runs produced different file sets"};
  for (const auto& rel : files_a)
    if (slurp(base / "a" / rel) != slurp(base / "b" / rel))
      return {false, "file differs between runs: " + rel};
  return {true, fmt("%zu files byte-identical across reruns of 11 commands", files_a.size())};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
    double budget_s;  // 0 = no runtime bound
  };
  const Entry entries[] = {
      {1, "helmholtz-compliance", criterion_helmholtz, 10.0},
      {2, "gradient-oracle", criterion_gradients, 30.0},
      {3, "image-sum-equivalence", criterion_ism_equivalence, 10.0},
      {4, "plane-wave-recovery", criterion_plane_recovery, 600.0},
      {5, "rayleigh-inversion", criterion_rayleigh_inversion, 600.0},
      {6, "reflection-curve-recovery", criterion_rcnn_recovery, 900.0},
      {7, "tank-extrapolation", criterion_tank_split, 900.0},
      {8, "position-refinement", criterion_refinement, 600.0},
      {9, "cli-determinism", criterion_cli_determinism, 0.0},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  int ran = 0;
  for (const auto& e : entries) {
    if (!wanted.empty() && !wanted.count(e.id)) continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_budget = e.budget_s == 0.0 || secs < e.budget_s;
    bool pass = out.pass && in_budget;
    failures += !pass;
    std::printf("%s %d %-26s %7.1fs%s  %s%s\n", pass ? "PASS" : "FAIL", e.id, e.name, secs,
                e.budget_s > 0.0 ? fmt(" / %.0fs", e.budget_s).c_str() : "", out.detail.c_str(),
                in_budget ? "" : " [over budget]");
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
