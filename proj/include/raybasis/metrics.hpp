#pragma once

#include <algorithm>
#include <limits>
#include <numeric>

#include "raybasis/model.hpp"

namespace raybasis {

namespace detail {

inline void check_pairs(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw std::invalid_argument("metrics: need equally sized, non-empty prediction/truth pairs");
}

/// Level difference in dB; predictions are floored so a zero never produces
/// -inf. Reference values must be strictly positive.
[[nodiscard]] inline double db_error(double pred, double truth) {
  if (!(truth > 0.0)) throw std::invalid_argument("metrics: reference amplitude must be positive");
  return to_db(std::max(pred, 1e-30)) - to_db(truth);
}

}  // namespace detail

[[nodiscard]] inline double rms_error_db(std::span<const double> pred,
                                         std::span<const double> truth) {
  detail::check_pairs(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double e = detail::db_error(pred[i], truth[i]);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

[[nodiscard]] inline double mate_db(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pairs(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::abs(detail::db_error(pred[i], truth[i]));
  return sum / static_cast<double>(pred.size());
}

[[nodiscard]] inline double mate_linear(std::span<const double> pred,
                                       std::span<const double> truth) {
  detail::check_pairs(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

/// 1-based ranks with ties sharing their average rank.
[[nodiscard]] inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
    i = j + 1;
  }
  return rank;
}

/// Rank correlation: the linear correlation of the tied-average ranks, so it
/// is exact in the presence of ties. Constant inputs have no defined ranking
/// order and are rejected.
[[nodiscard]] inline double spearman(std::span<const double> a, std::span<const double> b) {
  detail::check_pairs(a, b);
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    double da = ra[i] - ma;
    double db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) throw std::domain_error("spearman: constant input has no ranking");
  return cov / std::sqrt(va * vb);
}

/// Every paired comparison in one pass. Rank correlation needs at least two
/// distinct values on each side.
struct MetricsReport {
  double rms_error_db{};
  double mate_linear{};
  double mate_db{};
  double spearman_rho{};
  std::size_t count{};
};

[[nodiscard]] inline MetricsReport compute_metrics(std::span<const double> pred,
                                                   std::span<const double> truth) {
  MetricsReport r;
  r.rms_error_db = rms_error_db(pred, truth);
  r.mate_linear = mate_linear(pred, truth);
  r.mate_db = mate_db(pred, truth);
  r.spearman_rho = spearman(pred, truth);
  r.count = pred.size();
  return r;
}

/// Axis-aligned sampling lattice: per axis, nodes at min + i * resolution, as
/// many as fit through max (with a tolerance nudge so an exact multiple is
/// kept). A collapsed axis (max == min) holds a single node, giving 2D slices
/// and 1D transects.
struct GridSpec {
  Vec3 min{};
  Vec3 max{};
  Vec3 resolution{1.0, 1.0, 1.0};

  void validate() const {
    if (!finite(min) || !finite(max) || !finite(resolution))
      throw std::invalid_argument("GridSpec: non-finite bounds");
    auto check = [](double lo, double hi, double res) {
      if (hi < lo) throw std::invalid_argument("GridSpec: max below min");
      if (hi > lo && !(res > 0.0))
        throw std::invalid_argument("GridSpec: non-flat axis needs a positive resolution");
    };
    check(min.x, max.x, resolution.x);
    check(min.y, max.y, resolution.y);
    check(min.z, max.z, resolution.z);
  }

  [[nodiscard]] std::array<std::size_t, 3> shape() const {
    auto nodes = [](double lo, double hi, double res) -> std::size_t {
      if (hi <= lo) return 1;
      return static_cast<std::size_t>(std::floor((hi - lo) / res + 1e-9)) + 1;
    };
    return {nodes(min.x, max.x, resolution.x), nodes(min.y, max.y, resolution.y),
            nodes(min.z, max.z, resolution.z)};
  }

  [[nodiscard]] std::size_t count() const {
    auto s = shape();
    return s[0] * s[1] * s[2];
  }

  [[nodiscard]] Vec3 node(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return {min.x + static_cast<double>(ix) * resolution.x,
            min.y + static_cast<double>(iy) * resolution.y,
            min.z + static_cast<double>(iz) * resolution.z};
  }
};

/// Amplitudes over a lattice, x-major with z fastest. A node that coincides
/// with a field singularity holds nan.
struct GridField {
  GridSpec spec;
  std::vector<double> amplitude;
};

template <class F>
[[nodiscard]] GridField sample_grid(const GridSpec& spec, F&& field) {
  spec.validate();
  GridField out{spec, {}};
  auto [nx, ny, nz] = spec.shape();
  out.amplitude.reserve(nx * ny * nz);
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t iz = 0; iz < nz; ++iz) {
        try {
          out.amplitude.push_back(field(spec.node(ix, iy, iz)));
        } catch (const singularity_error&) {
          out.amplitude.push_back(std::numeric_limits<double>::quiet_NaN());
        }
      }
  return out;
}

[[nodiscard]] inline GridField predict_grid(const AnyModel& m, const GridSpec& spec) {
  validate(m);
  auto p = pack(m);
  return sample_grid(spec, [&](const Vec3& r) {
    return abs_value(field_core<double>(m, std::span<const double>(p), r));
  });
}

/// Inverse-distance interpolation over one split of a dataset. A query within
/// 1e-12 of a record returns that record's amplitude outright; everything else
/// is a convex combination, so results stay inside the observed range.
[[nodiscard]] inline double idw_predict(const Dataset& ds, Split use, const Vec3& at,
                                        double power = 2.0) {
  if (!(power > 0.0)) throw std::invalid_argument("idw_predict: power must be positive");
  double wsum = 0.0, asum = 0.0;
  bool any = false;
  for (const Record& rec : ds.records) {
    if (rec.split != use) continue;
    any = true;
    double d = distance(rec.position, at);
    if (d < 1e-12) return rec.amplitude;
    double w = std::pow(d, -power);
    wsum += w;
    asum += w * rec.amplitude;
  }
  if (!any) throw std::invalid_argument("idw_predict: no records in the requested split");
  return asum / wsum;
}

/// The interpolation baseline over a batch of query points, always built on
/// the training split.
[[nodiscard]] inline std::vector<double> idw_baseline(const Dataset& ds,
                                                      std::span<const Vec3> queries,
                                                      double power = 2.0) {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const Vec3& q : queries) out.push_back(idw_predict(ds, Split::train, q, power));
  return out;
}

}  // namespace raybasis
