#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "raybasis/scenario.hpp"

using namespace raybasis;

namespace {

struct GlobalOpts {
  std::uint64_t seed{1};
  bool verbose{false};
  std::string out{"."};
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  std::filesystem::path dir = g.out.empty() ? "." : g.out;
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void save(const GlobalOpts& g, const std::string& name, const std::string& content) {
  std::string path = out_path(g, name);
  write_text_file(path, content);
  if (g.verbose) std::fprintf(stderr, "wrote %s\n", path.c_str());
}

json load_json(const std::string& path) { return json::parse(read_text_file(path)); }

EpochCallback progress_logger(const GlobalOpts& g, const std::string& name) {
  if (!g.verbose) return {};
  return [name](int epoch, double train_loss, double val_loss) {
    if (epoch % 100 == 0)
      std::fprintf(stderr, "[%s] epoch %d train %.6g val %.6g\n", name.c_str(), epoch, train_loss,
                   val_loss);
  };
}

/// Pairs two position/amplitude tables row by row for metric computation.
/// Rows must agree on position; pairs with a missing amplitude or truth at
/// (or below) the dB clamp floor are skipped, as are rows outside the
/// requested split when one is given.
MetricsReport eval_tables(const FieldTable& pred, const FieldTable& truth,
                          const std::string& split_name) {
  if (pred.positions.size() != truth.positions.size())
    throw std::invalid_argument("eval: the two tables have different row counts");
  bool filter = !split_name.empty();
  Split want{};
  const std::vector<Split>* splits = nullptr;
  if (filter) {
    want = split_from_string(split_name);
    splits = !truth.splits.empty() ? &truth.splits : &pred.splits;
    if (splits->empty())
      throw std::invalid_argument("eval: --split given but neither table has a split column");
  }
  std::vector<double> p, t;
  for (std::size_t i = 0; i < pred.positions.size(); ++i) {
    Vec3 d = pred.positions[i] - truth.positions[i];
    if (std::abs(d.x) > 1e-9 || std::abs(d.y) > 1e-9 || std::abs(d.z) > 1e-9)
      throw std::invalid_argument("eval: row " + std::to_string(i + 2) +
                                  " positions do not match");
    if (filter && (*splits)[i] != want) continue;
    if (std::isnan(pred.amplitudes[i]) || std::isnan(truth.amplitudes[i])) continue;
    if (!(truth.amplitudes[i] > 1e-30)) continue;
    p.push_back(pred.amplitudes[i]);
    t.push_back(truth.amplitudes[i]);
  }
  return compute_metrics(p, t);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ray-basis acoustic field modeling"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Seed for data generation and scenario runs");
  app.add_flag("--verbose", g.verbose, "Progress notes on stderr");
  app.add_option("--out", g.out, "Directory for every output file");

  // simulate
  std::string sim_config, sim_out = "dataset.csv";
  auto* sim = app.add_subcommand("simulate", "Sample an oracle field along a survey trajectory");
  sim->add_option("--config", sim_config, "SimulateConfig JSON file")->required();
  sim->add_option("--dataset-out", sim_out, "Output dataset CSV name");
  sim->callback([&] {
    auto cfg = load_json(sim_config).get<SimulateConfig>();
    save(g, sim_out, dataset_to_csv(run_simulate(cfg, g.seed)));
  });

  // trace
  std::string trace_config, trace_out = "rays.csv";
  auto* trc = app.add_subcommand("trace", "Tabulate nominal rays for a source/reference pair");
  trc->add_option("--config", trace_config, "TraceConfig JSON file")->required();
  trc->add_option("--rays-out", trace_out, "Output ray CSV name");
  trc->callback([&] {
    auto cfg = load_json(trace_config).get<TraceConfig>();
    save(g, trace_out, rays_to_csv(run_trace(cfg)));
  });

  // train
  std::string train_config, train_dataset;
  std::string train_ckpt = "checkpoint.json", train_report = "report.json";
  auto* trn = app.add_subcommand("train", "Fit a model to a dataset");
  trn->add_option("--config", train_config, "TrainJob JSON file (model + optimizer)")->required();
  trn->add_option("--dataset", train_dataset, "Dataset CSV file")->required();
  trn->add_option("--checkpoint-out", train_ckpt, "Output model JSON name");
  trn->add_option("--report-out", train_report, "Output training report JSON name");
  trn->callback([&] {
    auto job = load_json(train_config).get<TrainJob>();
    Dataset ds = dataset_from_csv(read_text_file(train_dataset));
    TrainOutcome out = run_train(job, ds, progress_logger(g, "train"));
    save(g, train_ckpt, to_json_text(json(out.model)));
    save(g, train_report, to_json_text(json(out.report)));
  });

  // refine-positions
  std::string ref_ckpt, ref_dataset, ref_config;
  std::string ref_offsets = "offsets.csv", ref_out = "refined_dataset.csv";
  auto* ref = app.add_subcommand("refine-positions",
                                 "Estimate per-record position offsets under a frozen model");
  ref->add_option("--checkpoint", ref_ckpt, "Model JSON file")->required();
  ref->add_option("--dataset", ref_dataset, "Dataset CSV file")->required();
  ref->add_option("--config", ref_config, "RefineConfig JSON file (defaults when omitted)");
  ref->add_option("--offsets-out", ref_offsets, "Output offset CSV name");
  ref->add_option("--dataset-out", ref_out, "Output corrected dataset CSV name");
  ref->callback([&] {
    auto model = load_json(ref_ckpt).get<AnyModel>();
    Dataset ds = dataset_from_csv(read_text_file(ref_dataset));
    RefineConfig cfg;
    if (!ref_config.empty()) cfg = load_json(ref_config).get<RefineConfig>();
    auto offsets = refine_positions(model, ds, cfg);
    save(g, ref_offsets, offsets_to_csv(offsets));
    save(g, ref_out, dataset_to_csv(apply_offsets(ds, offsets)));
  });

  // predict
  std::string pred_ckpt, pred_grid, pred_out = "field.csv";
  auto* prd = app.add_subcommand("predict", "Evaluate a model checkpoint over a grid");
  prd->add_option("--checkpoint", pred_ckpt, "Model JSON file")->required();
  prd->add_option("--grid", pred_grid, "GridSpec JSON file")->required();
  prd->add_option("--field-out", pred_out, "Output field CSV name");
  prd->callback([&] {
    auto model = load_json(pred_ckpt).get<AnyModel>();
    auto grid = load_json(pred_grid).get<GridSpec>();
    save(g, pred_out, grid_to_csv(predict_grid(model, grid)));
  });

  // invert-rayleigh / invert-rcnn
  std::string inv_config, inv_dataset;
  std::string inv_ckpt = "checkpoint.json", inv_report = "report.json";
  std::string inv_refl = "reflection.csv", inv_layer = "layer.json";
  auto add_inversion = [&](const char* name, const char* help, bool want_rcnn) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", inv_config, "InversionConfig JSON file")->required();
    cmd->add_option("--dataset", inv_dataset, "Dataset CSV file")->required();
    cmd->add_option("--checkpoint-out", inv_ckpt, "Output model JSON name");
    cmd->add_option("--report-out", inv_report, "Output training report JSON name");
    cmd->add_option("--reflection-out", inv_refl, "Output reflection curve CSV name");
    cmd->add_option("--layer-out", inv_layer, "Output learned layer JSON name");
    cmd->callback([&, name, want_rcnn] {
      auto cfg = load_json(inv_config).get<InversionConfig>();
      bool is_rcnn = std::holds_alternative<RcnnWeights>(cfg.layer);
      bool is_rayleigh = std::holds_alternative<RayleighBottom>(cfg.layer);
      if (want_rcnn ? !is_rcnn : !is_rayleigh)
        throw std::invalid_argument(std::string(name) + ": config layer kind must be " +
                                    (want_rcnn ? "rcnn" : "rayleigh"));
      Dataset ds = dataset_from_csv(read_text_file(inv_dataset));
      InversionResult res = run_inversion(cfg, ds, progress_logger(g, name));
      save(g, inv_ckpt, to_json_text(json(AnyModel{res.model})));
      save(g, inv_report, to_json_text(json(res.report)));
      save(g, inv_refl, reflection_curve_to_csv(res.model.reflection));
      save(g, inv_layer, to_json_text(json(res.model.reflection)));
    });
  };
  add_inversion("invert-rayleigh", "Recover Rayleigh layer parameters from field data", false);
  add_inversion("invert-rcnn", "Learn a reflection curve network from field data", true);

  // eval
  std::string eval_pred, eval_truth, eval_split, eval_out = "metrics.json";
  auto* evl = app.add_subcommand("eval", "Compare two field CSVs row by row");
  evl->add_option("--pred", eval_pred, "Predicted field or dataset CSV file")->required();
  evl->add_option("--truth", eval_truth, "Reference field or dataset CSV file")->required();
  evl->add_option("--split", eval_split, "Restrict to one split (train/validation/test)");
  evl->add_option("--metrics-out", eval_out, "Output metrics JSON name");
  evl->callback([&] {
    FieldTable pred = field_table_from_csv(read_text_file(eval_pred));
    FieldTable truth = field_table_from_csv(read_text_file(eval_truth));
    MetricsReport m = eval_tables(pred, truth, eval_split);
    save(g, eval_out, to_json_text(json(m)));
  });

  // baseline-idw
  std::string idw_dataset, idw_grid, idw_field = "idw.csv", idw_value = "idw.json";
  std::vector<double> idw_at;
  double idw_power = 2.0;
  auto* idw = app.add_subcommand("baseline-idw",
                                 "Inverse-distance interpolation from training records");
  idw->add_option("--dataset", idw_dataset, "Dataset CSV file")->required();
  idw->add_option("--grid", idw_grid, "GridSpec JSON file to interpolate over");
  idw->add_option("--at", idw_at, "Single query point x y z")->expected(3);
  idw->add_option("--power", idw_power, "Inverse-distance exponent");
  idw->add_option("--field-out", idw_field, "Output field CSV name (with --grid)");
  idw->add_option("--value-out", idw_value, "Output value JSON name (with --at)");
  idw->callback([&] {
    Dataset ds = dataset_from_csv(read_text_file(idw_dataset));
    if (!idw_grid.empty()) {
      auto grid = load_json(idw_grid).get<GridSpec>();
      GridField f = sample_grid(
          grid, [&](const Vec3& r) { return idw_predict(ds, Split::train, r, idw_power); });
      save(g, idw_field, grid_to_csv(f));
    } else if (idw_at.size() == 3) {
      Vec3 at{idw_at[0], idw_at[1], idw_at[2]};
      double v = idw_predict(ds, Split::train, at, idw_power);
      save(g, idw_value, to_json_text(json{{"position", at}, {"amplitude", v}}));
    } else {
      throw std::invalid_argument("baseline-idw: need --grid or --at");
    }
  });

  // run-scenario
  std::string scen_name;
  int scen_epochs = -1, scen_restarts = -1;
  double scen_noise = -1.0;
  auto* scn = app.add_subcommand("run-scenario", "Run a named end-to-end study");
  scn->add_option("name", scen_name, "far-field, near-field, invert-rcnn, invert-rayleigh, tank-sim")
      ->required();
  scn->add_option("--epochs", scen_epochs, "Override the scenario's epoch budget");
  scn->add_option("--restarts", scen_restarts, "Override the scenario's restart count");
  scn->add_option("--noise", scen_noise, "Override the position noise bound (0 disables)");
  scn->callback([&] {
    ScenarioOptions so;
    so.out_dir = g.out;
    so.seed = g.seed;
    so.verbose = g.verbose;
    so.epochs = scen_epochs;
    so.restarts = scen_restarts;
    so.position_noise = scen_noise;
    json summary = run_scenario(scen_name, so);
    save(g, scen_name + ".summary.json", to_json_text(summary));
    std::cout << to_json_text(summary);
  });

  // Let --seed/--out/--verbose appear after the subcommand too.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << error_json(e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cout << error_json(e.what());
    return 1;
  }
  return 0;
}
