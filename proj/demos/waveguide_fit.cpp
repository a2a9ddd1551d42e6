// Recovers the sediment parameters of a shallow waveguide from a simulated
// drift survey, then reports how the fitted model generalizes beyond it.

#include <cstdio>

#include "raybasis/scenario.hpp"

using namespace raybasis;

int main() {
  RayleighBottom truth{1.35, 0.93, 0.002};
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1541.0;
  guide.bottom = truth;
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
  Dataset ds = make_dataset(gen_zigzag_trajectory(traj), env, wave, source, {0.7, 0.3, 0.0}, 21);
  std::printf("fitting bottom parameters from %zu drift samples...\n", ds.records.size());

  InversionConfig inv;
  inv.environment = env;
  inv.wave = wave;
  inv.source = source;
  inv.max_order = 6;
  inv.layer = RayleighBottom{1.2, 1.0, 0.01};  // generic sediment guess
  inv.train.penalties = {0.0, 2.0, 1.0, 0.0};
  inv.train.max_epochs = 3000;
  inv.train.patience = 800;
  inv.train.seed = 22;
  InversionResult res = run_inversion(inv, ds);
  const auto& fit = std::get<RayleighBottom>(res.model.reflection);

  std::printf("\n              truth    fitted\n");
  std::printf("rho ratio     %.4f   %.4f\n", truth.rho_ratio, fit.rho_ratio);
  std::printf("speed ratio   %.4f   %.4f\n", truth.speed_ratio, fit.speed_ratio);
  std::printf("loss tangent  %.4f   %.4f\n", truth.loss_tangent, fit.loss_tangent);

  auto truth_at = [&](const Vec3& r) { return abs_value(field_ism(env, wave, source, r)); };
  MetricsReport val = dataset_metrics(AnyModel{res.model}, ds, Split::validation);
  MetricsReport beyond = grid_metrics(
      AnyModel{res.model}, {{200.0, 0.0, 1.0}, {300.0, 0.0, 29.0}, {1.0, 1.0, 1.0}}, truth_at);
  std::printf("\nvalidation rms     %.3f dB over %zu records\n", val.rms_error_db, val.count);
  std::printf("100 m downrange    %.3f dB over %zu grid nodes\n", beyond.rms_error_db,
              beyond.count);
  return 0;
}
