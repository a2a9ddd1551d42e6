#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "raybasis/autodiff.hpp"
#include "raybasis/model.hpp"

// Gradient training. One templated loss over the packed parameter span serves
// both the double evaluation path and the tape, exactly like the field cores.

namespace raybasis {

enum class LossKind { squared, absolute };

[[nodiscard]] inline const char* to_string(LossKind k) {
  return k == LossKind::squared ? "squared" : "absolute";
}

[[nodiscard]] inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "squared") return LossKind::squared;
  if (s == "absolute") return LossKind::absolute;
  throw std::invalid_argument("unknown loss kind: " + s);
}

/// Regularization weights. Zero disables a term. alpha applies to the
/// amplitude block of plane-wave and image-source models; the rest apply to
/// geometry-aided models: zeta0 scales the per-ray angle-error penalty by
/// zeta0 / (1 + n_s + n_b), beta weights the squared range-error norm, and eta
/// weights the reflected-energy excess max(0, integral of eps^2 - 1).
struct PenaltyConfig {
  double alpha{0.0};
  double zeta0{0.0};
  double beta{0.0};
  double eta{0.0};

  void validate() const {
    if (alpha < 0.0 || zeta0 < 0.0 || beta < 0.0 || eta < 0.0)
      throw std::invalid_argument("PenaltyConfig: negative weight");
  }
};

namespace detail {

constexpr int energy_quadrature_panels = 64;

/// Trapezoid integral of eps(gamma)^2 over [0, pi/2] for the model's
/// reflection layer, evaluated from the packed reflection block.
template <class T, class F>
[[nodiscard]] T reflected_energy(const GeometryAidedModel& m, std::span<const T> refl,
                                 const F& to_scalar) {
  const auto* rcnn = std::get_if<RcnnWeights>(&m.reflection);
  std::size_t h = rcnn ? static_cast<std::size_t>(rcnn->hidden) : 0;
  auto eps_at = [&](double gamma) -> T {
    if (rcnn) {
      T eps = to_scalar(0.0), kappa = to_scalar(0.0);
      (void)rcnn_eval(refl.subspan(0, h), refl.subspan(h, h), refl.subspan(2 * h, 2 * h),
                      refl.subspan(4 * h, 2), to_scalar(gamma), &eps, &kappa);
      return eps;
    }
    // Rayleigh layer: |Gamma| at the packed (rho, c, delta).
    return abs_value(rayleigh_eval_cos(refl[0], refl[1], refl[2], to_scalar(std::cos(gamma))));
  };
  double hstep = (pi / 2.0) / energy_quadrature_panels;
  T eps0 = eps_at(0.0);
  T sum = 0.5 * (eps0 * eps0);
  for (int i = 1; i < energy_quadrature_panels; ++i) {
    T e = eps_at(i * hstep);
    sum = sum + e * e;
  }
  T eend = eps_at(pi / 2.0);
  sum = sum + 0.5 * (eend * eend);
  return sum * hstep;
}

}  // namespace detail

/// Loss of the packed parameters over the listed records: the mean per-record
/// data term plus each enabled penalty added once (not scaled by batch size).
template <class T, class F>
[[nodiscard]] T loss_core(const AnyModel& shape, std::span<const T> p, const Dataset& ds,
                          std::span<const std::size_t> idx, LossKind kind,
                          const PenaltyConfig& pen, const F& to_scalar) {
  using std::abs;
  using std::sqrt;
  if (idx.empty()) throw std::invalid_argument("loss_core: empty record list");

  T total = to_scalar(0.0);
  for (std::size_t j : idx) {
    const Record& rec = ds.records[j];
    Vec3T<T> pos{to_scalar(rec.position.x), to_scalar(rec.position.y), to_scalar(rec.position.z)};
    T amp = abs_value(field_core(shape, p, pos));
    T r = amp - rec.amplitude;
    total = total + (kind == LossKind::squared ? r * r : abs(r));
  }
  T loss = total / static_cast<double>(idx.size());

  if (const auto* geo = std::get_if<GeometryAidedModel>(&shape)) {
    std::size_t n = geo->n_rays();
    if (pen.zeta0 > 0.0) {
      T sumsq = to_scalar(0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const NominalRay& ray = geo->nominal[i];
        double zeta = pen.zeta0 / (1.0 + ray.n_s + ray.n_b);
        T comp = zeta * (p[i] * p[i] + p[n + i] * p[n + i]);
        sumsq = sumsq + comp * comp;
      }
      loss = loss + sqrt(sumsq);
    }
    if (pen.beta > 0.0) {
      T sumsq = to_scalar(0.0);
      for (std::size_t i = 0; i < n; ++i) sumsq = sumsq + p[2 * n + i] * p[2 * n + i];
      loss = loss + pen.beta * sumsq;
    }
    if (pen.eta > 0.0 && geo->reflection_params() > 0) {
      T energy =
          detail::reflected_energy(*geo, p.subspan(3 * n, geo->reflection_params()), to_scalar);
      loss = loss + pen.eta * max0(energy - 1.0);
    }
  } else if (pen.alpha > 0.0) {
    // Both remaining models keep amplitudes in the leading block.
    std::size_t n = std::visit([](const auto& mm) { return mm.n_rays(); }, shape);
    T l1 = abs(p[0]);
    for (std::size_t i = 1; i < n; ++i) l1 = l1 + abs(p[i]);
    loss = loss + pen.alpha * l1;
  }
  return loss;
}

/// Plain-double loss at the model's current parameters.
[[nodiscard]] inline double evaluate_loss(const AnyModel& m, const Dataset& ds,
                                          std::span<const std::size_t> idx, LossKind kind,
                                          const PenaltyConfig& pen = {}) {
  auto p = pack(m);
  return loss_core<double>(m, std::span<const double>(p), ds, idx, kind, pen,
                           [](double x) { return x; });
}

struct LossGrad {
  double value{};
  std::vector<double> grad;
};

/// Loss and its gradient with respect to every packed parameter.
[[nodiscard]] inline LossGrad loss_and_gradient(const AnyModel& m, const Dataset& ds,
                                                std::span<const std::size_t> idx, LossKind kind,
                                                const PenaltyConfig& pen = {}) {
  auto p = pack(m);
  Tape tape;
  auto vars = lift(tape, p);
  Var loss = loss_core<Var>(m, std::span<const Var>(vars), ds, idx, kind, pen,
                            [&](double x) { return tape.leaf(x); });
  tape.backward(loss);
  LossGrad out;
  out.value = loss.v;
  out.grad.reserve(vars.size());
  for (const Var& v : vars) out.grad.push_back(tape.adjoint(v));
  return out;
}

struct TrainConfig {
  LossKind loss{LossKind::squared};
  PenaltyConfig penalties{};
  double lr{1e-2};
  double beta1{0.9};
  double beta2{0.999};
  double adam_eps{1e-8};
  int batch_size{32};
  int max_epochs{5000};
  int patience{500};
  int restarts{1};
  std::uint64_t seed{0};

  void validate() const {
    penalties.validate();
    if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        adam_eps < 0.0)
      throw std::invalid_argument("TrainConfig: bad optimizer constants");
    if (batch_size < 1 || max_epochs < 0 || patience < 1 || restarts < 1)
      throw std::invalid_argument("TrainConfig: bad loop bounds");
  }
};

/// First-moment/second-moment optimizer state over a packed parameter vector.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t t{0};

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One update step. Parameters with v_hat still exactly zero are skipped:
/// their gradient has been zero at every step so far, and 0/0 must not poison
/// them with nan (this also makes the step direction invariant to scaling the
/// whole loss when adam_eps is zero).
inline void adam_step(AdamState& st, std::span<double> params, std::span<const double> grad,
                      std::span<const char> mask, const TrainConfig& cfg) {
  if (params.size() != grad.size() || params.size() != st.m.size() || params.size() != mask.size())
    throw std::invalid_argument("adam_step: size mismatch");
  st.t += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask[i]) continue;
    double g = grad[i];
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = st.m[i] / c1;
    double vhat = st.v[i] / c2;
    if (vhat == 0.0) continue;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

/// True for every parameter the optimizer may move; the trailing wavenumber
/// slot is frozen unless the model asks to train it.
[[nodiscard]] inline std::vector<char> trainable_mask(const AnyModel& m) {
  std::vector<char> mask(param_count(m), 1);
  if (!mask.empty() && !trains_wavenumber(m)) mask.back() = 0;
  return mask;
}

struct TrainReport {
  int epochs_run{0};
  int best_epoch{0};
  double best_val{0.0};
  double final_train{0.0};
  int restart_index{0};
  std::vector<double> train_curve, val_curve;
  double seconds{0.0};  // wall clock; excluded from serialized reports
};

using EpochCallback = std::function<void(int epoch, double train_loss, double val_loss)>;

/// Minibatch training with early stopping on the validation data term
/// (penalties never count toward validation). The model is left at the
/// best-validation snapshot. Records marked test are never touched. With no
/// validation records, the training data term is monitored instead.
inline TrainReport train(AnyModel& model, const Dataset& ds, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  validate(model);
  ds.validate();
  auto train_idx = ds.indices(Split::train);
  auto val_idx = ds.indices(Split::validation);
  if (train_idx.empty()) throw std::invalid_argument("train: no training records");
  const auto& monitor_idx = val_idx.empty() ? train_idx : val_idx;

  auto params = pack(model);
  auto mask = trainable_mask(model);
  AdamState adam(params.size());
  Rng rng(cfg.seed);
  Tape tape;

  auto monitor_loss = [&] {
    unpack(model, params);
    return evaluate_loss(model, ds, monitor_idx, cfg.loss);
  };

  TrainReport report;
  report.best_val = monitor_loss();
  std::vector<double> best_params = params;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double batch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t len =
          std::min(static_cast<std::size_t>(cfg.batch_size), train_idx.size() - start);
      std::span<const std::size_t> batch(train_idx.data() + start, len);

      tape.clear();
      auto vars = lift(tape, params);
      Var loss = loss_core<Var>(model, std::span<const Var>(vars), ds, batch, cfg.loss,
                                cfg.penalties, [&](double x) { return tape.leaf(x); });
      if (!std::isfinite(loss.v)) throw divergence_error("train: non-finite batch loss");
      tape.backward(loss);
      std::vector<double> grad(vars.size());
      for (std::size_t i = 0; i < vars.size(); ++i) grad[i] = tape.adjoint(vars[i]);
      adam_step(adam, params, grad, mask, cfg);

      batch_sum += loss.v;
      ++batches;
    }
    double train_loss = batch_sum / static_cast<double>(batches);
    double val_loss = monitor_loss();
    if (!std::isfinite(val_loss)) throw divergence_error("train: non-finite validation loss");

    report.epochs_run = epoch;
    report.train_curve.push_back(train_loss);
    report.val_curve.push_back(val_loss);
    report.final_train = train_loss;
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    if (val_loss < report.best_val) {
      report.best_val = val_loss;
      report.best_epoch = epoch;
      best_params = params;
    } else if (epoch - report.best_epoch >= cfg.patience) {
      break;
    }
  }

  unpack(model, best_params);
  return report;
}

/// Repeated training from factory-made starts seeded seed, seed+1, ...; the
/// model with the lowest monitored loss wins (first winner on exact ties).
inline TrainReport multi_restart_train(AnyModel& model, const Dataset& ds, const TrainConfig& cfg,
                                       const std::function<AnyModel(std::uint64_t)>& make_start,
                                       const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (!make_start) throw std::invalid_argument("multi_restart_train: missing start factory");
  bool have_best = false;
  TrainReport best_report;
  AnyModel best_model = model;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    AnyModel candidate = make_start(seed);
    TrainConfig sub = cfg;
    sub.seed = seed;
    TrainReport rep = train(candidate, ds, sub, on_epoch);
    rep.restart_index = r;
    if (!have_best || rep.best_val < best_report.best_val) {
      have_best = true;
      best_report = rep;
      best_model = candidate;
    }
  }
  model = best_model;
  return best_report;
}

struct RefineConfig {
  LossKind loss{LossKind::squared};
  double weight{1.0};  // times the squared offset norm, per record
  double lr{1e-2};
  double beta1{0.9};
  double beta2{0.999};
  double adam_eps{1e-8};
  int max_iters{300};

  void validate() const {
    if (weight < 0.0 || !(lr > 0.0) || max_iters < 0)
      throw std::invalid_argument("RefineConfig: bad constants");
  }
};

/// Stage-two position refinement: the model is frozen and each record gets an
/// independent 3-vector offset minimizing its own data term plus
/// weight * |offset|^2. Records are separable, so each one runs its own small
/// optimization. Returns one offset per record, in record order.
[[nodiscard]] inline std::vector<Vec3> refine_positions(const AnyModel& model, const Dataset& ds,
                                                        const RefineConfig& cfg) {
  cfg.validate();
  validate(model);
  ds.validate();
  auto packed = pack(model);
  std::vector<Vec3> offsets(ds.records.size());
  Tape tape;

  TrainConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.beta1 = cfg.beta1;
  adam_cfg.beta2 = cfg.beta2;
  adam_cfg.adam_eps = cfg.adam_eps;

  std::array<char, 3> mask = {1, 1, 1};
  for (std::size_t j = 0; j < ds.records.size(); ++j) {
    const Record& rec = ds.records[j];
    std::array<double, 3> o = {0.0, 0.0, 0.0};
    AdamState adam(3);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      tape.clear();
      auto p = lift(tape, packed);
      std::array<Var, 3> ov = {tape.leaf(o[0]), tape.leaf(o[1]), tape.leaf(o[2])};
      Vec3T<Var> pos{ov[0] + rec.position.x, ov[1] + rec.position.y, ov[2] + rec.position.z};
      Var amp = abs_value(field_core(model, std::span<const Var>(p), pos));
      Var r = amp - rec.amplitude;
      Var loss = cfg.loss == LossKind::squared ? r * r : abs(r);
      loss = loss + cfg.weight * (ov[0] * ov[0] + ov[1] * ov[1] + ov[2] * ov[2]);
      if (!std::isfinite(loss.v)) throw divergence_error("refine_positions: non-finite loss");
      tape.backward(loss);
      std::array<double, 3> grad = {tape.adjoint(ov[0]), tape.adjoint(ov[1]),
                                    tape.adjoint(ov[2])};
      adam_step(adam, o, grad, mask, adam_cfg);
    }
    offsets[j] = {o[0], o[1], o[2]};
  }
  return offsets;
}

/// Dataset with each record moved by its offset.
[[nodiscard]] inline Dataset apply_offsets(const Dataset& ds, const std::vector<Vec3>& offsets) {
  if (offsets.size() != ds.records.size())
    throw std::invalid_argument("apply_offsets: offset count mismatch");
  Dataset out = ds;
  for (std::size_t i = 0; i < out.records.size(); ++i)
    out.records[i].position = out.records[i].position + offsets[i];
  return out;
}

}  // namespace raybasis
