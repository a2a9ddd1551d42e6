#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "raybasis/io.hpp"

// End-to-end study configurations: the JSON job descriptions the CLI consumes
// and the named scenario runners that generate data, train, and write their
// artifacts to disk.

namespace raybasis {

/// Trajectory sampling of an oracle field, with optional position corruption
/// applied after the amplitudes are recorded (the amplitude stays the value at
/// the true position, the way a drifting sensor would log it).
struct SimulateConfig {
  Environment environment{FreeField{}};
  WaveSpec wave{};
  Vec3 source{};
  TrajectoryConfig trajectory{};
  std::array<double, 3> fractions{0.7, 0.3, 0.0};
  int max_order{-1};
  bool pair_surface{false};
  double position_noise{0.0};

  void validate() const {
    raybasis::validate(environment);
    wave.validate();
    trajectory.validate();
    if (!finite(source)) throw std::invalid_argument("SimulateConfig: non-finite source");
    if (position_noise < 0.0) throw std::invalid_argument("SimulateConfig: negative noise bound");
  }
};

inline void to_json(json& j, const SimulateConfig& c) {
  j = {{"environment", c.environment},
       {"wave", c.wave},
       {"source", c.source},
       {"trajectory", c.trajectory},
       {"fractions", c.fractions},
       {"max_order", c.max_order},
       {"pair_surface", c.pair_surface},
       {"position_noise", c.position_noise}};
}

inline void from_json(const json& j, SimulateConfig& c) {
  j.at("environment").get_to(c.environment);
  j.at("wave").get_to(c.wave);
  j.at("source").get_to(c.source);
  j.at("trajectory").get_to(c.trajectory);
  j.at("fractions").get_to(c.fractions);
  j.at("max_order").get_to(c.max_order);
  j.at("pair_surface").get_to(c.pair_surface);
  j.at("position_noise").get_to(c.position_noise);
  c.validate();
}

[[nodiscard]] inline Dataset run_simulate(const SimulateConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto points = gen_zigzag_trajectory(cfg.trajectory);
  Dataset ds = make_dataset(points, cfg.environment, cfg.wave, cfg.source, cfg.fractions, seed,
                            {cfg.max_order, cfg.pair_surface});
  if (cfg.position_noise > 0.0) ds = add_position_noise(ds, cfg.position_noise, seed + 1);
  return ds;
}

/// Nominal ray table request for a source/reference pair.
struct TraceConfig {
  Environment environment{FreeField{}};
  Vec3 source{};
  Vec3 reference{};
  int max_order{-1};

  void validate() const {
    raybasis::validate(environment);
    if (!finite(source) || !finite(reference))
      throw std::invalid_argument("TraceConfig: non-finite position");
  }
};

inline void to_json(json& j, const TraceConfig& c) {
  j = {{"environment", c.environment},
       {"source", c.source},
       {"reference", c.reference},
       {"max_order", c.max_order}};
}

inline void from_json(const json& j, TraceConfig& c) {
  j.at("environment").get_to(c.environment);
  j.at("source").get_to(c.source);
  j.at("reference").get_to(c.reference);
  j.at("max_order").get_to(c.max_order);
  c.validate();
}

[[nodiscard]] inline std::vector<NominalRay> run_trace(const TraceConfig& cfg) {
  cfg.validate();
  return nominal_rays(cfg.environment, cfg.source, cfg.reference, cfg.max_order);
}

/// A model start plus its optimizer settings, the unit of work of `train`.
struct TrainJob {
  AnyModel model{PlaneWaveModel{}};
  TrainConfig train{};
};

inline void to_json(json& j, const TrainJob& t) {
  j = {{"model", t.model}, {"train", t.train}};
}

inline void from_json(const json& j, TrainJob& t) {
  j.at("model").get_to(t.model);
  j.at("train").get_to(t.train);
}

struct TrainOutcome {
  AnyModel model;
  TrainReport report;
};

/// Restarts of a fixed start differ only in minibatch order; the
/// best-validation run still wins.
[[nodiscard]] inline TrainOutcome run_train(const TrainJob& job, const Dataset& ds,
                                            const EpochCallback& on_epoch = {}) {
  TrainOutcome out{job.model, {}};
  AnyModel start = job.model;
  out.report = multi_restart_train(
      out.model, ds, job.train, [&](std::uint64_t) { return start; }, on_epoch);
  return out;
}

/// Geometry-aided training against a known environment: nominal rays are
/// traced to the training centroid and the given layer is the trained
/// reflection start. When the layer is a network and several restarts are
/// requested, each restart re-draws the network weights.
struct InversionConfig {
  Environment environment{Waveguide{}};
  WaveSpec wave{};
  Vec3 source{};
  int max_order{-1};
  ReflectionModel layer{RayleighBottom{}};
  TrainConfig train{};

  void validate() const {
    raybasis::validate(environment);
    wave.validate();
    if (!finite(source)) throw std::invalid_argument("InversionConfig: non-finite source");
    train.validate();
  }
};

inline void to_json(json& j, const InversionConfig& c) {
  j = {{"environment", c.environment}, {"wave", c.wave},   {"source", c.source},
       {"max_order", c.max_order},     {"layer", c.layer}, {"train", c.train}};
}

inline void from_json(const json& j, InversionConfig& c) {
  j.at("environment").get_to(c.environment);
  j.at("wave").get_to(c.wave);
  j.at("source").get_to(c.source);
  j.at("max_order").get_to(c.max_order);
  j.at("layer").get_to(c.layer);
  j.at("train").get_to(c.train);
  c.validate();
}

struct InversionResult {
  GeometryAidedModel model;
  TrainReport report;
};

[[nodiscard]] inline InversionResult run_inversion(const InversionConfig& cfg, const Dataset& ds,
                                                   const EpochCallback& on_epoch = {}) {
  cfg.validate();
  ds.validate();
  auto rays = nominal_rays(cfg.environment, cfg.source, ds.train_centroid(), cfg.max_order);
  GeometryAidedModel start = GeometryAidedModel::from_nominal(
      rays, cfg.wave.wavenumber, cfg.layer, absorption_of(cfg.environment));

  std::function<AnyModel(std::uint64_t)> make_start;
  if (const auto* net = std::get_if<RcnnWeights>(&cfg.layer); net && cfg.train.restarts > 1) {
    std::size_t hidden = static_cast<std::size_t>(net->hidden);
    make_start = [start, hidden](std::uint64_t seed) {
      Rng rng(seed);
      GeometryAidedModel m = start;
      m.reflection = RcnnWeights::random(rng, hidden);
      return AnyModel{m};
    };
  } else {
    make_start = [start](std::uint64_t) { return AnyModel{start}; };
  }

  AnyModel any{start};
  TrainReport report = multi_restart_train(any, ds, cfg.train, make_start, on_epoch);
  return {std::get<GeometryAidedModel>(any), report};
}

/// Spherical-wave start with nothing assumed about the environment:
/// directions uniform over the sphere's angle box, ranges uniform in
/// [d_lo, d_hi).
[[nodiscard]] inline ImageSourceModel random_image_source(std::size_t n_rays, double wavenumber,
                                                          const Vec3& ref, Rng& rng, double d_lo,
                                                          double d_hi, double amp_scale) {
  if (n_rays == 0) throw std::invalid_argument("random_image_source: no rays");
  if (!(d_lo > 0.0) || !(d_hi > d_lo))
    throw std::invalid_argument("random_image_source: bad range interval");
  ImageSourceModel m;
  m.wavenumber = wavenumber;
  m.ref = ref;
  m.amp.resize(n_rays);
  m.phase.resize(n_rays);
  m.theta.resize(n_rays);
  m.psi.resize(n_rays);
  m.d.resize(n_rays);
  for (std::size_t i = 0; i < n_rays; ++i) {
    m.amp[i] = rng.uniform(0.0, amp_scale);
    m.phase[i] = rng.uniform(0.0, 2.0 * pi);
    m.theta[i] = rng.uniform(0.0, 2.0 * pi);
    m.psi[i] = rng.uniform(0.0, pi);
    m.d[i] = rng.uniform(d_lo, d_hi);
  }
  return m;
}

/// Every lossy-bounce incidence angle seen by the model's nominal rays at the
/// given records; the natural support for judging a learned reflection curve.
[[nodiscard]] inline std::vector<double> sampled_incidence_angles(const GeometryAidedModel& m,
                                                                  const Dataset& ds, Split split) {
  std::vector<double> out;
  for (std::size_t i : ds.indices(split))
    for (const auto& ray : m.nominal)
      for (double gamma : incidence_angles(ray, ds.records[i].position)) out.push_back(gamma);
  return out;
}

/// Mean absolute gap between two layers' reflection magnitudes over a set of
/// incidence angles.
[[nodiscard]] inline double reflection_eps_mad(const ReflectionModel& learned,
                                               const ReflectionModel& truth,
                                               std::span<const double> gammas) {
  if (gammas.empty()) throw std::invalid_argument("reflection_eps_mad: no angles");
  double acc = 0.0;
  for (double g : gammas)
    acc += std::abs(reflection_eps_kappa(learned, g).eps - reflection_eps_kappa(truth, g).eps);
  return acc / static_cast<double>(gammas.size());
}

/// Vertical region split: the n_region shallowest points (ties broken by
/// sample order) are shuffled into n_train training and the rest validation
/// records; every deeper point is held out as test. Record order stays the
/// trajectory order.
[[nodiscard]] inline Dataset make_depth_split_dataset(const std::vector<Vec3>& points,
                                                      const std::vector<double>& amplitudes,
                                                      std::size_t n_region, std::size_t n_train,
                                                      std::uint64_t seed) {
  if (points.size() != amplitudes.size())
    throw std::invalid_argument("make_depth_split_dataset: points/amplitudes size mismatch");
  if (n_train == 0 || n_train > n_region || n_region > points.size())
    throw std::invalid_argument("make_depth_split_dataset: bad region sizes");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].z != points[b].z) return points[a].z < points[b].z;
    return a < b;
  });
  std::vector<std::size_t> region(order.begin(),
                                  order.begin() + static_cast<std::ptrdiff_t>(n_region));
  Rng rng(seed);
  rng.shuffle(region);

  std::vector<Split> split(points.size(), Split::test);
  for (std::size_t i = 0; i < n_region; ++i)
    split[region[i]] = i < n_train ? Split::train : Split::validation;

  Dataset ds;
  ds.records.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    ds.records.push_back({points[i], amplitudes[i], split[i]});
  ds.validate();
  return ds;
}

/// Position corruption whose bound depends on depth, mirroring a sensor whose
/// placement is harder to control deeper down. Amplitudes are untouched.
[[nodiscard]] inline Dataset add_depth_position_noise(const Dataset& ds, double shallow_bound,
                                                      double deep_bound, double depth_threshold,
                                                      std::uint64_t seed) {
  if (shallow_bound < 0.0 || deep_bound < 0.0)
    throw std::invalid_argument("add_depth_position_noise: negative bound");
  Rng rng(seed);
  Dataset out = ds;
  for (auto& r : out.records) {
    double b = r.position.z < depth_threshold ? shallow_bound : deep_bound;
    r.position.x += rng.uniform(-b, b);
    r.position.y += rng.uniform(-b, b);
    r.position.z += rng.uniform(-b, b);
  }
  out.validate();
  return out;
}

/// Metrics over a grid, skipping nodes where either side is undefined: truth
/// at an exact interference null (or below the dB clamp floor) and predictions
/// at a model singularity.
template <class Pred, class Truth>
[[nodiscard]] inline MetricsReport grid_metrics(const GridSpec& grid, Pred&& pred_at,
                                                Truth&& truth_at) {
  grid.validate();
  std::vector<double> pred, truth;
  auto s = grid.shape();
  for (std::size_t ix = 0; ix < s[0]; ++ix)
    for (std::size_t iy = 0; iy < s[1]; ++iy)
      for (std::size_t iz = 0; iz < s[2]; ++iz) {
        Vec3 r = grid.node(ix, iy, iz);
        double tv = truth_at(r);
        if (!(tv > 1e-30)) continue;
        double pv;
        try {
          pv = pred_at(r);
        } catch (const singularity_error&) {
          continue;
        }
        pred.push_back(pv);
        truth.push_back(tv);
      }
  return compute_metrics(pred, truth);
}

template <class Truth>
[[nodiscard]] inline MetricsReport grid_metrics(const AnyModel& model, const GridSpec& grid,
                                                Truth&& truth_at) {
  validate(model);
  auto p = pack(model);
  std::span<const double> ps(p);
  return grid_metrics(
      grid, [&](const Vec3& r) { return abs_value(field_core<double>(model, ps, r)); }, truth_at);
}

/// Model quality against the recorded amplitudes of one split.
[[nodiscard]] inline MetricsReport dataset_metrics(const AnyModel& model, const Dataset& ds,
                                                   Split split) {
  validate(model);
  auto p = pack(model);
  std::span<const double> ps(p);
  std::vector<double> pred, truth;
  for (std::size_t i : ds.indices(split)) {
    pred.push_back(abs_value(field_core<double>(model, ps, ds.records[i].position)));
    truth.push_back(ds.records[i].amplitude);
  }
  return compute_metrics(pred, truth);
}

struct ScenarioOptions {
  std::string out_dir{"."};
  std::uint64_t seed{1};
  bool verbose{false};
  int epochs{-1};               // >= 0 replaces the scenario's epoch budget
  int restarts{-1};             // >= 1 replaces the scenario's restart count
  double position_noise{-1.0};  // >= 0 replaces the scenario's noise protocol
};

namespace detail {

[[nodiscard]] inline int pick_epochs(const ScenarioOptions& o, int fallback) {
  return o.epochs >= 0 ? o.epochs : fallback;
}

[[nodiscard]] inline int pick_restarts(const ScenarioOptions& o, int fallback) {
  return o.restarts >= 1 ? o.restarts : fallback;
}

[[nodiscard]] inline EpochCallback epoch_logger(const ScenarioOptions& opts, std::string name) {
  if (!opts.verbose) return {};
  return [name = std::move(name)](int epoch, double train_loss, double val_loss) {
    if (epoch % 100 == 0)
      std::fprintf(stderr, "[%s] epoch %d train %.6g val %.6g\n", name.c_str(), epoch, train_loss,
                   val_loss);
  };
}

/// Collects artifact file names as they are written so the scenario summary
/// can list them.
struct ArtifactWriter {
  std::filesystem::path dir;
  std::vector<std::string> names;

  void write(const std::string& name, const std::string& content) {
    write_text_file((dir / name).string(), content);
    names.push_back(name);
  }
};

}  // namespace detail

/// Five grazing arrivals standing in for the interference pattern a kilometer
/// from a shallow source: a near-horizontal main path plus progressively
/// steeper, weaker multipath with assorted phases.
[[nodiscard]] inline std::vector<PlaneRay> far_field_truth_rays() {
  return {{1.00, 0.0, 0.0, pi / 2 - 0.012},
          {0.85, pi, 0.0, pi / 2 + 0.018},
          {0.55, 0.6, 0.004, pi / 2 - 0.045},
          {0.40, 2.5, -0.006, pi / 2 + 0.05},
          {0.25, 4.0, 0.010, pi / 2 - 0.08}};
}

namespace detail {

inline json scenario_far_field(const ScenarioOptions& opts, ArtifactWriter& files) {
  WaveSpec wave = WaveSpec::from_frequency(1000.0, 1541.0);
  auto truth_rays = far_field_truth_rays();
  auto truth_at = [&](const Vec3& r) { return abs_value(synth_plane_field(truth_rays, wave, r)); };

  // 984 samples zig-zagging over a 50 x 30 m face, in survey-local
  // coordinates (the incoming fan carries no origin of its own).
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
  Dataset ds = make_dataset(points, amps, {0.7, 0.3, 0.0}, opts.seed);
  if (opts.position_noise > 0.0) ds = add_position_noise(ds, opts.position_noise, opts.seed + 1);

  TrainConfig tc;
  tc.loss = LossKind::squared;
  tc.penalties.alpha = 1e-3;
  tc.max_epochs = pick_epochs(opts, 6000);
  tc.patience = 1500;
  tc.restarts = pick_restarts(opts, 4);
  tc.seed = opts.seed;

  AnyModel model{PlaneWaveModel{}};
  TrainReport report = multi_restart_train(
      model, ds, tc,
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return AnyModel{init_plane_wave(60, wave.wavenumber, rng, 0.5)};
      },
      epoch_logger(opts, "far-field"));

  GridSpec aoi{{-25.0, 0.0, 2.0}, {25.0, 0.0, 32.0}, {0.5, 1.0, 0.5}};
  GridSpec strip{{25.5, 0.0, 2.0}, {75.0, 0.0, 32.0}, {0.5, 1.0, 0.5}};
  json metrics = {{"aoi", grid_metrics(model, aoi, truth_at)},
                  {"extrapolation", grid_metrics(model, strip, truth_at)},
                  {"validation", dataset_metrics(model, ds, Split::validation)}};

  GridSpec full{{-25.0, 0.0, 2.0}, {75.0, 0.0, 32.0}, {0.5, 1.0, 0.5}};
  files.write("far-field.dataset.csv", dataset_to_csv(ds));
  files.write("far-field.checkpoint.json", to_json_text(json(model)));
  files.write("far-field.report.json", to_json_text(json(report)));
  files.write("far-field.metrics.json", to_json_text(metrics));
  files.write("far-field.grid.csv", grid_to_csv(predict_grid(model, full)));
  return metrics;
}

inline json scenario_near_field(const ScenarioOptions& opts, ArtifactWriter& files) {
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.0};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};
  auto truth_at = [&](const Vec3& r) { return abs_value(field_ism(env, wave, source, r)); };

  // 167 samples over a 50 x 28 m face starting 100 m from the source.
  TrajectoryConfig traj;
  traj.start = {100.0, 0.0, 1.0};
  traj.drift_vx = 0.3;
  traj.vertical_speed = 0.335;
  traj.depth_lo = 1.0;
  traj.depth_hi = 29.0;
  traj.profiles = 2;
  auto points = gen_zigzag_trajectory(traj);
  Dataset ds = make_dataset(points, env, wave, source, {0.7, 0.3, 0.0}, opts.seed);
  if (opts.position_noise > 0.0) ds = add_position_noise(ds, opts.position_noise, opts.seed + 1);

  TrainConfig tc;
  tc.loss = LossKind::squared;
  tc.penalties.alpha = 1e-3;
  tc.max_epochs = pick_epochs(opts, 2000);
  tc.patience = 400;
  tc.restarts = pick_restarts(opts, 3);
  tc.seed = opts.seed;

  Vec3 ref = ds.train_centroid();
  AnyModel model{PlaneWaveModel{}};
  TrainReport report = multi_restart_train(
      model, ds, tc,
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return AnyModel{random_image_source(60, wave.wavenumber, ref, rng, 90.0, 420.0, 0.02)};
      },
      epoch_logger(opts, "near-field"));

  GridSpec aoi{{100.0, 0.0, 1.0}, {150.0, 0.0, 29.0}, {0.5, 1.0, 0.5}};
  GridSpec strip{{150.5, 0.0, 1.0}, {200.0, 0.0, 29.0}, {0.5, 1.0, 0.5}};
  json metrics = {{"aoi", grid_metrics(model, aoi, truth_at)},
                  {"extrapolation", grid_metrics(model, strip, truth_at)},
                  {"validation", dataset_metrics(model, ds, Split::validation)}};

  GridSpec full{{100.0, 0.0, 1.0}, {200.0, 0.0, 29.0}, {0.5, 1.0, 0.5}};
  files.write("near-field.dataset.csv", dataset_to_csv(ds));
  files.write("near-field.checkpoint.json", to_json_text(json(model)));
  files.write("near-field.report.json", to_json_text(json(report)));
  files.write("near-field.metrics.json", to_json_text(metrics));
  files.write("near-field.grid.csv", grid_to_csv(predict_grid(model, full)));
  return metrics;
}

inline json scenario_invert_rcnn(const ScenarioOptions& opts, ArtifactWriter& files) {
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.0};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};

  // 1150 samples over a 300 x 28 m face; plenty of angles for the curve fit.
  TrajectoryConfig traj;
  traj.start = {100.0, 0.0, 1.0};
  traj.drift_vx = 0.26;
  traj.vertical_speed = 0.2434;
  traj.depth_lo = 1.0;
  traj.depth_hi = 29.0;
  traj.profiles = 10;
  auto points = gen_zigzag_trajectory(traj);
  Dataset ds = make_dataset(points, env, wave, source, {0.7, 0.3, 0.0}, opts.seed);
  if (opts.position_noise > 0.0) ds = add_position_noise(ds, opts.position_noise, opts.seed + 1);

  InversionConfig inv;
  inv.environment = env;
  inv.wave = wave;
  inv.source = source;
  inv.layer = RcnnWeights::zeros(16);
  inv.train.loss = LossKind::squared;
  inv.train.penalties = {0.0, 2.0, 1.0, 1.0};
  inv.train.max_epochs = pick_epochs(opts, 1200);
  inv.train.patience = 300;
  inv.train.restarts = pick_restarts(opts, 2);
  inv.train.seed = opts.seed;

  InversionResult res = run_inversion(inv, ds, epoch_logger(opts, "invert-rcnn"));

  auto angles = sampled_incidence_angles(res.model, ds, Split::train);
  double mad = reflection_eps_mad(res.model.reflection, guide.bottom, angles);
  json metrics = {{"eps_mad", mad},
                  {"angles_sampled", angles.size()},
                  {"validation", dataset_metrics(AnyModel{res.model}, ds, Split::validation)}};

  auto truth_at = [&](const Vec3& r) { return abs_value(field_ism(env, wave, source, r)); };
  metrics["aoi"] = grid_metrics(AnyModel{res.model},
                                GridSpec{{100.0, 0.0, 1.0}, {400.0, 0.0, 29.0}, {1.0, 1.0, 1.0}},
                                truth_at);

  files.write("invert-rcnn.dataset.csv", dataset_to_csv(ds));
  files.write("invert-rcnn.checkpoint.json", to_json_text(json(AnyModel{res.model})));
  files.write("invert-rcnn.report.json", to_json_text(json(res.report)));
  files.write("invert-rcnn.metrics.json", to_json_text(metrics));
  files.write("invert-rcnn.reflection.csv", reflection_curve_to_csv(res.model.reflection));
  files.write("invert-rcnn.reflection_truth.csv", reflection_curve_to_csv(guide.bottom));
  files.write("invert-rcnn.grid.csv",
              grid_to_csv(predict_grid(AnyModel{res.model},
                                       {{100.0, 0.0, 1.0}, {400.0, 0.0, 29.0}, {1.0, 1.0, 1.0}})));
  return metrics;
}

inline json scenario_invert_rayleigh(const ScenarioOptions& opts, ArtifactWriter& files) {
  RayleighBottom truth_bottom{1.147, 0.985, 0.00242};
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = truth_bottom;
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(5000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 15.0};

  // 166 samples over a 100 x 28 m face.
  TrajectoryConfig traj;
  traj.start = {100.0, 0.0, 1.0};
  traj.drift_vx = 0.6;
  traj.vertical_speed = 1.012;
  traj.depth_lo = 1.0;
  traj.depth_hi = 29.0;
  traj.profiles = 6;
  auto points = gen_zigzag_trajectory(traj);
  Dataset ds = make_dataset(points, env, wave, source, {0.7, 0.3, 0.0}, opts.seed);
  if (opts.position_noise > 0.0) ds = add_position_noise(ds, opts.position_noise, opts.seed + 1);

  InversionConfig inv;
  inv.environment = env;
  inv.wave = wave;
  inv.source = source;
  inv.layer = RayleighBottom{1.2, 1.0, 0.01};  // generic sediment guess
  inv.train.loss = LossKind::squared;
  inv.train.penalties = {0.0, 2.0, 1.0, 0.0};
  inv.train.max_epochs = pick_epochs(opts, 1500);
  inv.train.patience = 400;
  inv.train.restarts = pick_restarts(opts, 1);
  inv.train.seed = opts.seed;

  InversionResult res = run_inversion(inv, ds, epoch_logger(opts, "invert-rayleigh"));
  const auto& learned = std::get<RayleighBottom>(res.model.reflection);

  auto pct = [](double got, double want) { return 100.0 * (got - want) / want; };
  json metrics = {
      {"learned",
       {{"rho_ratio", learned.rho_ratio},
        {"speed_ratio", learned.speed_ratio},
        {"loss_tangent", learned.loss_tangent}}},
      {"truth",
       {{"rho_ratio", truth_bottom.rho_ratio},
        {"speed_ratio", truth_bottom.speed_ratio},
        {"loss_tangent", truth_bottom.loss_tangent}}},
      {"rho_error_percent", pct(learned.rho_ratio, truth_bottom.rho_ratio)},
      {"speed_error_percent", pct(learned.speed_ratio, truth_bottom.speed_ratio)},
      {"validation", dataset_metrics(AnyModel{res.model}, ds, Split::validation)}};

  files.write("invert-rayleigh.dataset.csv", dataset_to_csv(ds));
  files.write("invert-rayleigh.checkpoint.json", to_json_text(json(AnyModel{res.model})));
  files.write("invert-rayleigh.report.json", to_json_text(json(res.report)));
  files.write("invert-rayleigh.metrics.json", to_json_text(metrics));
  files.write("invert-rayleigh.reflection.csv", reflection_curve_to_csv(res.model.reflection));
  files.write("invert-rayleigh.reflection_truth.csv",
              reflection_curve_to_csv(ReflectionModel{truth_bottom}));
  files.write("invert-rayleigh.grid.csv",
              grid_to_csv(predict_grid(AnyModel{res.model},
                                       {{100.0, 0.0, 1.0}, {200.0, 0.0, 29.0}, {0.5, 1.0, 0.5}})));
  return metrics;
}

inline json scenario_tank(const ScenarioOptions& opts, ArtifactWriter& files) {
  Box tank;
  tank.dims = {2.5, 1.2, 0.8};
  tank.sound_speed = 1505.0;
  RayleighBottom wall_material{1.5, 0.9, 0.0};
  for (std::size_t w = 0; w < 6; ++w)
    if (w != wall_z_lo) tank.walls[w] = wall_material;  // water surface stays pressure-release
  Environment env{tank};
  WaveSpec wave = WaveSpec::from_frequency(10000.0, tank.sound_speed);
  Vec3 source{0.3, 0.6, 0.4};
  IsmOptions ism{4, false};
  auto truth_at = [&](const Vec3& r) { return abs_value(field_ism(env, wave, source, r, ism)); };

  // 500 samples sweeping a 0.36 x 0.9 x 0.44 m block half a meter from the
  // source; the 278 shallowest become the training region, the 222 deepest
  // the held-out region below it.
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
  for (const auto& r : points) amps.push_back(truth_at(r));
  Dataset ds = make_depth_split_dataset(points, amps, 278, 250, opts.seed);
  if (opts.position_noise < 0.0)
    ds = add_depth_position_noise(ds, 0.02, 0.04, 0.36, opts.seed + 1);
  else if (opts.position_noise > 0.0)
    ds = add_position_noise(ds, opts.position_noise, opts.seed + 1);

  InversionConfig inv;
  inv.environment = env;
  inv.wave = wave;
  inv.source = source;
  inv.max_order = 4;
  inv.layer = RcnnWeights::zeros(16);
  inv.train.loss = LossKind::absolute;
  inv.train.penalties = {0.0, 2.0, 1.0, 1.0};
  inv.train.max_epochs = pick_epochs(opts, 600);
  inv.train.patience = 150;
  inv.train.restarts = pick_restarts(opts, 1);
  inv.train.seed = opts.seed;

  InversionResult res = run_inversion(inv, ds, epoch_logger(opts, "tank-sim"));
  AnyModel model{res.model};

  std::vector<Vec3> test_pos;
  std::vector<double> test_amp;
  for (std::size_t i : ds.indices(Split::test)) {
    test_pos.push_back(ds.records[i].position);
    test_amp.push_back(ds.records[i].amplitude);
  }
  MetricsReport sparse_model = dataset_metrics(model, ds, Split::test);
  MetricsReport sparse_idw = compute_metrics(idw_baseline(ds, test_pos), test_amp);

  GridSpec dense{{0.8, 0.15, 0.13}, {1.16, 1.05, 0.57}, {0.01, 0.01, 0.05}};
  MetricsReport dense_model = grid_metrics(model, dense, truth_at);
  MetricsReport dense_idw = grid_metrics(
      dense, [&](const Vec3& r) { return idw_predict(ds, Split::train, r); }, truth_at);

  json metrics = {{"sparse",
                   {{"model", sparse_model},
                    {"idw", sparse_idw},
                    {"mate_ratio", sparse_idw.mate_linear / sparse_model.mate_linear}}},
                  {"dense", {{"model", dense_model}, {"idw", dense_idw}}}};

  files.write("tank-sim.dataset.csv", dataset_to_csv(ds));
  files.write("tank-sim.checkpoint.json", to_json_text(json(model)));
  files.write("tank-sim.report.json", to_json_text(json(res.report)));
  files.write("tank-sim.metrics.json", to_json_text(metrics));
  files.write("tank-sim.reflection.csv", reflection_curve_to_csv(res.model.reflection));
  files.write("tank-sim.reflection_truth.csv",
              reflection_curve_to_csv(ReflectionModel{wall_material}));
  files.write("tank-sim.grid.csv", grid_to_csv(predict_grid(model, dense)));
  return metrics;
}

}  // namespace detail

/// Run one named end-to-end study and write its artifacts into out_dir.
/// Returns the study's metrics summary plus the list of files written.
[[nodiscard]] inline json run_scenario(const std::string& name, const ScenarioOptions& opts) {
  detail::ArtifactWriter files{std::filesystem::path(opts.out_dir), {}};
  std::filesystem::create_directories(files.dir.empty() ? "." : files.dir);

  json metrics;
  if (name == "far-field")
    metrics = detail::scenario_far_field(opts, files);
  else if (name == "near-field")
    metrics = detail::scenario_near_field(opts, files);
  else if (name == "invert-rcnn")
    metrics = detail::scenario_invert_rcnn(opts, files);
  else if (name == "invert-rayleigh")
    metrics = detail::scenario_invert_rayleigh(opts, files);
  else if (name == "tank-sim")
    metrics = detail::scenario_tank(opts, files);
  else
    throw std::invalid_argument("run_scenario: unknown scenario '" + name + "'");

  return json{{"scenario", name}, {"seed", opts.seed}, {"files", files.names},
              {"metrics", metrics}};
}

}  // namespace raybasis
