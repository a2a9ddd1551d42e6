#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "raybasis/metrics.hpp"
#include "raybasis/raytrace.hpp"
#include "raybasis/train.hpp"

// Text formats. Doubles are printed with std::to_chars, the shortest string
// that parses back to the same bits, so rewriting a file never perturbs data.

namespace raybasis {

using nlohmann::json;

[[nodiscard]] inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
  double x{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
  return x;
}

namespace detail {

[[nodiscard]] inline std::vector<std::string_view> split_line(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Lines without their terminators; a trailing newline adds no empty line.
[[nodiscard]] inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// ---- files ----

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---- CSV ----

[[nodiscard]] inline std::string dataset_to_csv(const Dataset& ds) {
  std::string out = "x,y,z,amplitude,split\n";
  for (const Record& r : ds.records) {
    out += format_double(r.position.x) + ',' + format_double(r.position.y) + ',' +
           format_double(r.position.z) + ',' + format_double(r.amplitude) + ',' +
           to_string(r.split) + '\n';
  }
  return out;
}

[[nodiscard]] inline Dataset dataset_from_csv(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != "x,y,z,amplitude,split")
    throw std::invalid_argument("dataset CSV: missing 'x,y,z,amplitude,split' header");
  Dataset ds;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = detail::split_line(lines[i], ',');
    if (cells.size() != 5)
      throw std::invalid_argument("dataset CSV: row " + std::to_string(i + 1) +
                                  " needs 5 columns");
    Record r;
    r.position = {parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2])};
    r.amplitude = parse_double(cells[3]);
    r.split = split_from_string(std::string(cells[4]));
    ds.records.push_back(r);
  }
  ds.validate();
  return ds;
}

[[nodiscard]] inline std::string rays_to_csv(const std::vector<NominalRay>& rays) {
  std::string out = "theta,psi,d,n_s,n_b\n";
  for (const NominalRay& r : rays) {
    out += format_double(r.theta) + ',' + format_double(r.psi) + ',' + format_double(r.d) + ',' +
           std::to_string(r.n_s) + ',' + std::to_string(r.n_b) + '\n';
  }
  return out;
}

/// eps/kappa of a reflection layer tabulated over grazing-free incidence,
/// n_angles samples from normal (0) through pi/2.
[[nodiscard]] inline std::string reflection_curve_to_csv(const ReflectionModel& layer,
                                                         int n_angles = 181) {
  if (n_angles < 2) throw std::invalid_argument("reflection curve: need at least two angles");
  std::string out = "gamma,eps,kappa\n";
  for (int i = 0; i < n_angles; ++i) {
    double gamma = (pi / 2.0) * static_cast<double>(i) / static_cast<double>(n_angles - 1);
    EpsKappa ek = reflection_eps_kappa(layer, gamma);
    out += format_double(gamma) + ',' + format_double(ek.eps) + ',' + format_double(ek.kappa) +
           '\n';
  }
  return out;
}

/// Lattice amplitudes, one node per row; a singular node leaves its
/// amplitude cell empty.
[[nodiscard]] inline std::string grid_to_csv(const GridField& f) {
  auto [nx, ny, nz] = f.spec.shape();
  if (f.amplitude.size() != nx * ny * nz)
    throw std::invalid_argument("grid CSV: amplitude count does not match the lattice");
  std::string out = "x,y,z,amplitude\n";
  std::size_t i = 0;
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t iz = 0; iz < nz; ++iz, ++i) {
        Vec3 n = f.spec.node(ix, iy, iz);
        out += format_double(n.x) + ',' + format_double(n.y) + ',' + format_double(n.z) + ',';
        if (!std::isnan(f.amplitude[i])) out += format_double(f.amplitude[i]);
        out += '\n';
      }
  return out;
}

/// One position-amplitude table read back from either CSV shape: dataset rows
/// carry a split column, field rows may leave amplitudes empty (stored as
/// nan). splits stays empty for field tables.
struct FieldTable {
  std::vector<Vec3> positions;
  std::vector<double> amplitudes;
  std::vector<Split> splits;
};

[[nodiscard]] inline FieldTable field_table_from_csv(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty()) throw std::invalid_argument("field CSV: empty input");
  bool has_split = lines[0] == "x,y,z,amplitude,split";
  if (!has_split && lines[0] != "x,y,z,amplitude")
    throw std::invalid_argument("field CSV: missing 'x,y,z,amplitude[,split]' header");
  FieldTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = detail::split_line(lines[i], ',');
    if (cells.size() != (has_split ? 5u : 4u))
      throw std::invalid_argument("field CSV: row " + std::to_string(i + 1) +
                                  " has the wrong column count");
    t.positions.push_back({parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2])});
    t.amplitudes.push_back(cells[3].empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : parse_double(cells[3]));
    if (has_split) t.splits.push_back(split_from_string(std::string(cells[4])));
  }
  return t;
}

[[nodiscard]] inline std::string offsets_to_csv(const std::vector<Vec3>& offsets) {
  std::string out = "dx,dy,dz\n";
  for (const Vec3& o : offsets)
    out += format_double(o.x) + ',' + format_double(o.y) + ',' + format_double(o.z) + '\n';
  return out;
}

// ---- JSON ----

inline void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }

inline void from_json(const json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("Vec3 JSON: need [x, y, z]");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(json& j, const WaveSpec& w) {
  j = {{"frequency_hz", w.frequency_hz},
       {"sound_speed", w.sound_speed},
       {"wavenumber", w.wavenumber}};
}

inline void from_json(const json& j, WaveSpec& w) {
  j.at("frequency_hz").get_to(w.frequency_hz);
  j.at("sound_speed").get_to(w.sound_speed);
  j.at("wavenumber").get_to(w.wavenumber);
  w.validate();
}

inline void to_json(json& j, const ReflectionModel& m) {
  std::visit(
      [&](const auto& layer) {
        using M = std::decay_t<decltype(layer)>;
        if constexpr (std::is_same_v<M, PressureRelease>) {
          j = {{"kind", "pressure_release"}};
        } else if constexpr (std::is_same_v<M, FixedCoeff>) {
          j = {{"kind", "fixed"}, {"re", layer.value.re}, {"im", layer.value.im}};
        } else if constexpr (std::is_same_v<M, RayleighBottom>) {
          j = {{"kind", "rayleigh"},
               {"rho_ratio", layer.rho_ratio},
               {"speed_ratio", layer.speed_ratio},
               {"loss_tangent", layer.loss_tangent}};
        } else {
          j = {{"kind", "rcnn"}, {"hidden", layer.hidden}, {"w1", layer.w1},
               {"b1", layer.b1},  {"w2", layer.w2},         {"b2", layer.b2}};
        }
      },
      m);
}

inline void from_json(const json& j, ReflectionModel& m) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pressure_release") {
    m = PressureRelease{};
  } else if (kind == "fixed") {
    m = FixedCoeff{{j.at("re").get<double>(), j.at("im").get<double>()}};
  } else if (kind == "rayleigh") {
    RayleighBottom r;
    j.at("rho_ratio").get_to(r.rho_ratio);
    j.at("speed_ratio").get_to(r.speed_ratio);
    j.at("loss_tangent").get_to(r.loss_tangent);
    r.validate();
    m = r;
  } else if (kind == "rcnn") {
    RcnnWeights w;
    j.at("hidden").get_to(w.hidden);
    j.at("w1").get_to(w.w1);
    j.at("b1").get_to(w.b1);
    j.at("w2").get_to(w.w2);
    j.at("b2").get_to(w.b2);
    w.validate();
    m = w;
  } else {
    throw std::invalid_argument("reflection JSON: unknown kind '" + kind + "'");
  }
}

inline void to_json(json& j, const Environment& env) {
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, FreeField>) {
          j = {{"kind", "free_field"}, {"sound_speed", e.sound_speed}};
        } else if constexpr (std::is_same_v<E, Waveguide>) {
          j = {{"kind", "waveguide"},
               {"depth", e.depth},
               {"sound_speed", e.sound_speed},
               {"surface", e.surface},
               {"bottom", e.bottom},
               {"absorption_db_per_m", e.absorption_db_per_m}};
        } else {
          j = {{"kind", "box"},
               {"dims", e.dims},
               {"sound_speed", e.sound_speed},
               {"walls", e.walls},
               {"absorption_db_per_m", e.absorption_db_per_m}};
        }
      },
      env);
}

inline void from_json(const json& j, Environment& env) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "free_field") {
    FreeField f;
    j.at("sound_speed").get_to(f.sound_speed);
    env = f;
  } else if (kind == "waveguide") {
    Waveguide w;
    j.at("depth").get_to(w.depth);
    j.at("sound_speed").get_to(w.sound_speed);
    j.at("surface").get_to(w.surface);
    j.at("bottom").get_to(w.bottom);
    j.at("absorption_db_per_m").get_to(w.absorption_db_per_m);
    env = w;
  } else if (kind == "box") {
    Box b;
    j.at("dims").get_to(b.dims);
    j.at("sound_speed").get_to(b.sound_speed);
    auto walls = j.at("walls");
    if (!walls.is_array() || walls.size() != 6)
      throw std::invalid_argument("box JSON: need 6 walls");
    for (std::size_t i = 0; i < 6; ++i) walls[i].get_to(b.walls[i]);
    j.at("absorption_db_per_m").get_to(b.absorption_db_per_m);
    env = b;
  } else {
    throw std::invalid_argument("environment JSON: unknown kind '" + kind + "'");
  }
  validate(env);
}

inline void to_json(json& j, const TrajectoryConfig& c) {
  j = {{"start", c.start},
       {"drift_vx", c.drift_vx},
       {"drift_vy", c.drift_vy},
       {"vertical_speed", c.vertical_speed},
       {"depth_lo", c.depth_lo},
       {"depth_hi", c.depth_hi},
       {"sample_interval", c.sample_interval},
       {"profiles", c.profiles}};
}

inline void from_json(const json& j, TrajectoryConfig& c) {
  j.at("start").get_to(c.start);
  j.at("drift_vx").get_to(c.drift_vx);
  j.at("drift_vy").get_to(c.drift_vy);
  j.at("vertical_speed").get_to(c.vertical_speed);
  j.at("depth_lo").get_to(c.depth_lo);
  j.at("depth_hi").get_to(c.depth_hi);
  j.at("sample_interval").get_to(c.sample_interval);
  j.at("profiles").get_to(c.profiles);
  c.validate();
}

inline void to_json(json& j, const PenaltyConfig& p) {
  j = {{"alpha", p.alpha}, {"zeta0", p.zeta0}, {"beta", p.beta}, {"eta", p.eta}};
}

inline void from_json(const json& j, PenaltyConfig& p) {
  j.at("alpha").get_to(p.alpha);
  j.at("zeta0").get_to(p.zeta0);
  j.at("beta").get_to(p.beta);
  j.at("eta").get_to(p.eta);
  p.validate();
}

inline void to_json(json& j, const TrainConfig& c) {
  j = {{"loss", to_string(c.loss)},
       {"penalties", c.penalties},
       {"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},
       {"patience", c.patience},
       {"restarts", c.restarts},
       {"seed", c.seed}};
}

inline void from_json(const json& j, TrainConfig& c) {
  c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  j.at("penalties").get_to(c.penalties);
  j.at("lr").get_to(c.lr);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("adam_eps").get_to(c.adam_eps);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_epochs").get_to(c.max_epochs);
  j.at("patience").get_to(c.patience);
  j.at("restarts").get_to(c.restarts);
  j.at("seed").get_to(c.seed);
  c.validate();
}

inline void to_json(json& j, const RefineConfig& c) {
  j = {{"loss", to_string(c.loss)}, {"weight", c.weight},     {"lr", c.lr},
       {"beta1", c.beta1},          {"beta2", c.beta2},       {"adam_eps", c.adam_eps},
       {"max_iters", c.max_iters}};
}

inline void from_json(const json& j, RefineConfig& c) {
  c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  j.at("weight").get_to(c.weight);
  j.at("lr").get_to(c.lr);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("adam_eps").get_to(c.adam_eps);
  j.at("max_iters").get_to(c.max_iters);
  c.validate();
}

inline void to_json(json& j, const NominalRay& r) {
  j = {{"theta", r.theta},
       {"psi", r.psi},
       {"d", r.d},
       {"n_s", r.n_s},
       {"n_b", r.n_b},
       {"lossy_per_axis", r.lossy_per_axis},
       {"ref", r.ref}};
}

inline void from_json(const json& j, NominalRay& r) {
  j.at("theta").get_to(r.theta);
  j.at("psi").get_to(r.psi);
  j.at("d").get_to(r.d);
  j.at("n_s").get_to(r.n_s);
  j.at("n_b").get_to(r.n_b);
  j.at("lossy_per_axis").get_to(r.lossy_per_axis);
  j.at("ref").get_to(r.ref);
  r.validate();
}

inline void to_json(json& j, const AnyModel& m) {
  std::visit(
      [&](const auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, PlaneWaveModel>) {
          j = {{"kind", "plane_wave"}, {"wavenumber", mm.wavenumber}, {"amp", mm.amp},
               {"phase", mm.phase},    {"theta", mm.theta},           {"psi", mm.psi},
               {"train_k", mm.train_k}};
        } else if constexpr (std::is_same_v<M, ImageSourceModel>) {
          j = {{"kind", "image_source"},
               {"wavenumber", mm.wavenumber},
               {"ref", mm.ref},
               {"absorption_db_per_m", mm.absorption_db_per_m},
               {"amp", mm.amp},
               {"phase", mm.phase},
               {"theta", mm.theta},
               {"psi", mm.psi},
               {"d", mm.d},
               {"train_k", mm.train_k}};
        } else {
          j = {{"kind", "geometry_aided"},
               {"wavenumber", mm.wavenumber},
               {"absorption_db_per_m", mm.absorption_db_per_m},
               {"nominal", mm.nominal},
               {"reflection", mm.reflection},
               {"e_theta", mm.e_theta},
               {"e_psi", mm.e_psi},
               {"e_d", mm.e_d},
               {"train_k", mm.train_k}};
        }
      },
      m);
}

inline void from_json(const json& j, AnyModel& m) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "plane_wave") {
    PlaneWaveModel p;
    j.at("wavenumber").get_to(p.wavenumber);
    j.at("amp").get_to(p.amp);
    j.at("phase").get_to(p.phase);
    j.at("theta").get_to(p.theta);
    j.at("psi").get_to(p.psi);
    j.at("train_k").get_to(p.train_k);
    m = p;
  } else if (kind == "image_source") {
    ImageSourceModel s;
    j.at("wavenumber").get_to(s.wavenumber);
    j.at("ref").get_to(s.ref);
    j.at("absorption_db_per_m").get_to(s.absorption_db_per_m);
    j.at("amp").get_to(s.amp);
    j.at("phase").get_to(s.phase);
    j.at("theta").get_to(s.theta);
    j.at("psi").get_to(s.psi);
    j.at("d").get_to(s.d);
    j.at("train_k").get_to(s.train_k);
    m = s;
  } else if (kind == "geometry_aided") {
    GeometryAidedModel g;
    j.at("wavenumber").get_to(g.wavenumber);
    j.at("absorption_db_per_m").get_to(g.absorption_db_per_m);
    j.at("nominal").get_to(g.nominal);
    j.at("reflection").get_to(g.reflection);
    j.at("e_theta").get_to(g.e_theta);
    j.at("e_psi").get_to(g.e_psi);
    j.at("e_d").get_to(g.e_d);
    j.at("train_k").get_to(g.train_k);
    m = g;
  } else {
    throw std::invalid_argument("model JSON: unknown kind '" + kind + "'");
  }
  validate(m);
}

inline void to_json(json& j, const GridSpec& g) {
  j = {{"min", g.min}, {"max", g.max}, {"resolution", g.resolution}};
}

inline void from_json(const json& j, GridSpec& g) {
  j.at("min").get_to(g.min);
  j.at("max").get_to(g.max);
  j.at("resolution").get_to(g.resolution);
  g.validate();
}

inline void to_json(json& j, const MetricsReport& m) {
  j = {{"rms_error_db", m.rms_error_db},
       {"mate_linear", m.mate_linear},
       {"mate_db", m.mate_db},
       {"spearman_rho", m.spearman_rho},
       {"count", m.count}};
}

inline void from_json(const json& j, MetricsReport& m) {
  j.at("rms_error_db").get_to(m.rms_error_db);
  j.at("mate_linear").get_to(m.mate_linear);
  j.at("mate_db").get_to(m.mate_db);
  j.at("spearman_rho").get_to(m.spearman_rho);
  j.at("count").get_to(m.count);
}

/// Wall-clock seconds are intentionally not serialized: reports must be
/// byte-identical across reruns of the same seed.
inline void to_json(json& j, const TrainReport& r) {
  j = {{"epochs_run", r.epochs_run},       {"best_epoch", r.best_epoch},
       {"best_val", r.best_val},           {"final_train", r.final_train},
       {"restart_index", r.restart_index}, {"train_curve", r.train_curve},
       {"val_curve", r.val_curve}};
}

inline void from_json(const json& j, TrainReport& r) {
  j.at("epochs_run").get_to(r.epochs_run);
  j.at("best_epoch").get_to(r.best_epoch);
  j.at("best_val").get_to(r.best_val);
  j.at("final_train").get_to(r.final_train);
  j.at("restart_index").get_to(r.restart_index);
  j.at("train_curve").get_to(r.train_curve);
  j.at("val_curve").get_to(r.val_curve);
}

/// Canonical serialized form: 2-space indent and a trailing newline.
[[nodiscard]] inline std::string to_json_text(const json& j) { return j.dump(2) + "\n"; }

[[nodiscard]] inline std::string error_json(const std::string& message) {
  return to_json_text(json{{"error", message}});
}

}  // namespace raybasis
