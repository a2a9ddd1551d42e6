// Prints the interference pattern along a constant-depth transect of a
// shallow waveguide, then the ray fan arriving at one point on it.

#include <cstdio>
#include <string>

#include "raybasis/oracle.hpp"
#include "raybasis/raytrace.hpp"

using namespace raybasis;

int main() {
  Waveguide guide;
  guide.depth = 30.0;
  guide.sound_speed = 1500.0;
  guide.bottom = RayleighBottom{1.5, 0.9, 0.001};
  Environment env{guide};
  WaveSpec wave = WaveSpec::from_frequency(2000.0, guide.sound_speed);
  Vec3 source{0.0, 0.0, 12.0};

  std::printf("|p| along z = 20 m\n");
  for (int i = 0; i <= 40; ++i) {
    double x = 50.0 + 5.0 * i;
    double a = abs_value(field_ism(env, wave, source, {x, 0.0, 20.0}));
    std::printf("%6.1f m  %.5f  %s\n", x, a,
                std::string(static_cast<std::size_t>(a * 800.0), '#').c_str());
  }

  Vec3 receiver{150.0, 0.0, 20.0};
  std::printf("\narrivals at x = 150 m (up to two boundary interactions)\n");
  std::printf("  path      surface  bottom\n");
  for (const auto& ray : nominal_rays(env, source, receiver, 2))
    std::printf("  %7.2f m    %d       %d\n", ray.d, ray.n_s, ray.n_b);
  return 0;
}
