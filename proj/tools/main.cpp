#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sthcss/checkpoint.hpp"
#include "sthcss/config.hpp"
#include "sthcss/data.hpp"
#include "sthcss/hypergraph.hpp"
#include "sthcss/matrix_io.hpp"
#include "sthcss/model.hpp"
#include "sthcss/pipeline.hpp"
#include "sthcss/training.hpp"

namespace fs = std::filesystem;
using namespace sthcss;

namespace {

// Exit codes: 0 success, 1 config/validation, 2 I/O or format, 3 numerical.
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct FlagOverrides {
  // key -> raw value; applied on top of defaults + config file (flags win)
  std::vector<std::pair<std::string, std::string>> pairs;

  void add_if(const CLI::Option* opt, const std::string& key, const std::string& value) {
    if (opt != nullptr && opt->count() > 0) pairs.emplace_back(key, value);
  }
};

RunConfig resolve_config(const std::string& config_path, const FlagOverrides& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
  for (const auto& [key, value] : overrides.pairs) cfg.set(key, value);
  return cfg;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

DegreeMode degree_mode(const RunConfig& cfg) {
  return cfg.weighted_degrees ? DegreeMode::weight_sum : DegreeMode::incidence_count;
}

void print_metrics(const MetricsReport& m, std::ostream& os) {
  os << "nmae=" << format_double(m.nmae) << " nrmse=" << format_double(m.nrmse) << " mape="
     << (m.mape_defined ? format_double(m.mape) : std::string("undefined"))
     << " r2=" << format_double(m.r2) << '\n';
}

int cmd_gen_data(const RunConfig& cfg, const fs::path& out_path) {
  echo_config(cfg, std::cout);
  const SensorSeries series = synth_generate(cfg.synth);
  write_csv(out_path, series);
  std::cout << "wrote " << out_path.string() << " sensors=" << series.sensors()
            << " rows=" << series.length() << " groups=";
  for (std::size_t i = 0; i < cfg.synth.group_sizes.size(); ++i) {
    if (i) std::cout << ',';
    std::cout << cfg.synth.group_sizes[i];
  }
  std::cout << '\n';
  return 0;
}

int cmd_train(RunConfig cfg, const fs::path& data_path, const fs::path& out_dir) {
  echo_config(cfg, std::cout);
  fs::create_directories(out_dir);

  const SensorSeries series = load_csv(data_path, cfg.target_column);
  cfg.model.sensors = series.sensors();
  cfg.model.validate();
  for (const auto& name : series.names) {
    (void)name;
  }

  PreparedData prep =
      prepare(series, cfg.model.window, cfg.ratios, cfg.knn_k, degree_mode(cfg));
  for (const auto& warn : prep.dataset.stats.constant_sensors) {
    std::cerr << "warning: sensor '" << warn << "' is constant on the training split\n";
  }

  Model model(cfg.model, prep.operators.adjacency);
  TrainResult trained =
      train(model, ModelParams::init(cfg.model, cfg.train.seed), prep.dataset, cfg.train);

  const MetricsReport metrics =
      evaluate(model, trained.params, prep.dataset.test, prep.dataset.stats, prep.target_name);

  CheckpointHeader header;
  header.model = cfg.model;
  header.knn_k = cfg.knn_k;
  header.weighted_degrees = cfg.weighted_degrees;
  header.target_name = prep.target_name;
  header.seed = cfg.train.seed;
  save_checkpoint(out_dir / "checkpoint.sthcss", header, trained.params);
  write_text_file(out_dir / "history.csv", history_to_csv(trained.history));
  write_text_file(out_dir / "metrics.txt", metrics_to_kv(metrics));

  std::cout << "best_epoch=" << trained.best_epoch << " best_val_mse="
            << format_double(trained.best_val_mse) << '\n';
  print_metrics(metrics, std::cout);

  if (cfg.baseline) {
    const RidgeResult ridge =
        ridge_baseline(prep.dataset, prep.dataset.stats, prep.target_name, cfg.ridge_lambda);
    write_text_file(out_dir / "baseline_metrics.txt", metrics_to_kv(ridge.metrics));
    std::cout << "baseline_r2=" << format_double(ridge.metrics.r2) << '\n';
  }
  return 0;
}

int cmd_eval(const fs::path& checkpoint_path, const fs::path& data_path, const fs::path& out_dir,
             const std::optional<std::array<double, 3>>& ratios) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const SensorSeries series = load_csv(data_path, ck.header.target_name);
  if (series.sensors() != ck.header.model.sensors) {
    throw DimensionError("checkpoint was trained on " +
                         std::to_string(ck.header.model.sensors) + " sensors but the data has " +
                         std::to_string(series.sensors()));
  }
  fs::create_directories(out_dir);

  PreparedData prep = prepare(series, ck.header.model.window,
                              ratios.value_or(std::array<double, 3>{0.6, 0.2, 0.2}),
                              ck.header.knn_k,
                              ck.header.weighted_degrees ? DegreeMode::weight_sum
                                                         : DegreeMode::incidence_count);
  Model model(ck.header.model, prep.operators.adjacency);
  const MetricsReport metrics =
      evaluate(model, ck.params, prep.dataset.test, prep.dataset.stats, prep.target_name);
  write_text_file(out_dir / "metrics.txt", metrics_to_kv(metrics));
  print_metrics(metrics, std::cout);
  return 0;
}

int cmd_inspect_graph(const RunConfig& cfg, const fs::path& input_path, const fs::path& out_dir) {
  echo_config(cfg, std::cout);

  std::size_t window = cfg.model.window;
  std::size_t k = cfg.knn_k;
  bool weighted = cfg.weighted_degrees;
  std::string target = cfg.target_column;
  fs::path data_path = input_path;

  // The positional may be a checkpoint; then graph settings come from it and
  // the data file must arrive via --data (already folded into input rules by
  // the caller).
  {
    std::ifstream probe(input_path, std::ios::binary);
    std::string first;
    if (probe && std::getline(probe, first) && first == "STHCSS1") {
      throw ConfigError("'" + input_path.string() +
                        "' is a checkpoint; pass the data CSV and use --checkpoint for graph "
                        "settings");
    }
  }

  const SensorSeries series = load_csv(data_path, target);
  PreparedData prep = prepare(series, window, cfg.ratios, k,
                              weighted ? DegreeMode::weight_sum : DegreeMode::incidence_count);

  fs::create_directories(out_dir);
  write_matrix_csv(out_dir / "adjacency.csv", prep.operators.adjacency);
  write_matrix_pgm(out_dir / "adjacency.pgm", prep.operators.adjacency);
  write_matrix_csv(out_dir / "correlation.csv", prep.correlation);
  write_matrix_pgm(out_dir / "correlation.pgm", prep.correlation);

  const std::optional<double> alignment =
      offdiagonal_alignment(prep.operators.adjacency, prep.correlation);
  std::string alignment_text = alignment ? format_double(*alignment)
                                         : std::string("undefined (N off-diagonal constant)");

  std::ostringstream report;
  report << "sensors=" << series.sensors() << '\n';
  report << "k=" << k << '\n';
  report << "alignment=" << alignment_text << '\n';
  write_text_file(out_dir / "report.txt", report.str());
  std::cout << "alignment=" << alignment_text << '\n';
  return 0;
}

int cmd_sweep(RunConfig cfg, const fs::path& data_path, const fs::path& out_path,
              const std::string& kernels_csv, const std::string& mixers_csv) {
  echo_config(cfg, std::cout);
  const std::vector<std::size_t> kernels =
      kernels_csv.empty() ? std::vector<std::size_t>{cfg.model.kernel_size}
                          : parse_size_list(kernels_csv, "--kernel");
  const std::vector<std::size_t> mixers =
      mixers_csv.empty() ? std::vector<std::size_t>{cfg.model.mixer_blocks}
                         : parse_size_list(mixers_csv, "--mixers");

  const SensorSeries series = load_csv(data_path, cfg.target_column);
  cfg.model.sensors = series.sensors();
  PreparedData prep =
      prepare(series, cfg.model.window, cfg.ratios, cfg.knn_k, degree_mode(cfg));

  const std::vector<SweepPoint> rows =
      hyperparameter_sweep(cfg.model, prep.operators.adjacency, prep.dataset, cfg.train,
                           kernels, mixers, prep.target_name);
  if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
  write_text_file(out_path, sweep_to_csv(rows));

  std::size_t failures = 0;
  for (const auto& r : rows) {
    std::cout << "kernel=" << r.kernel_size << " mixers=" << r.mixer_blocks << ' ';
    if (r.ok) {
      print_metrics(r.metrics, std::cout);
    } else {
      std::cout << "failed: " << r.error << '\n';
      ++failures;
    }
  }
  if (failures == rows.size()) {
    throw NumericError("all " + std::to_string(failures) + " sweep points failed");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal hypergraph convolutional soft sensor"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_value;
  std::string out_value;
  app.add_option("--config", config_path, "key=value configuration file");
  auto* seed_opt = app.add_option("--seed", seed_value, "seed for data, init and training");
  auto* out_opt = app.add_option("--out", out_value, "output directory (or file for gen-data)");

  FlagOverrides overrides;
  std::string window_v, mixers_v, kernel_v, dilation_v, st_blocks_v, channels_v, dropout_v,
      readout_v, epochs_v, batch_v, lr_v, patience_v, k_v, target_v, lambda_v, baseline_v,
      sensors_v, length_v, groups_v, noise_v, recipe_v, segments_v;

  auto add_common = [&](CLI::App* sub) {
    overrides.pairs.clear();
    std::vector<std::pair<const CLI::Option*, std::pair<std::string*, std::string>>> opts;
    auto opt = [&](const char* flag, std::string& store, const char* help, const char* key) {
      const CLI::Option* o = sub->add_option(flag, store, help);
      opts.emplace_back(o, std::make_pair(&store, std::string(key)));
    };
    opt("--window", window_v, "sliding window size W", "window");
    opt("--mixers", mixers_v, "number of mixer blocks", "mixers");
    opt("--kernel", kernel_v, "temporal kernel size", "kernel");
    opt("--dilation", dilation_v, "temporal dilation", "dilation");
    opt("--st-blocks", st_blocks_v, "stacked conv blocks", "st_blocks");
    opt("--channels", channels_v, "per-node channels after the lift", "channels");
    opt("--dropout", dropout_v, "dropout probability", "dropout");
    opt("--readout-hidden", readout_v, "readout hidden width", "readout_hidden");
    opt("--epochs", epochs_v, "training epochs", "epochs");
    opt("--batch", batch_v, "batch size", "batch");
    opt("--lr", lr_v, "learning rate", "lr");
    opt("--patience", patience_v, "early-stop patience (0 = off)", "patience");
    opt("--k", k_v, "KNN neighborhood size", "k");
    opt("--target", target_v, "target column name", "target");
    opt("--lambda", lambda_v, "ridge baseline regularization", "lambda");
    opt("--baseline", baseline_v, "run the ridge baseline (true/false)", "baseline");
    opt("--synth-sensors", sensors_v, "synthetic sensor count", "synth_sensors");
    opt("--synth-length", length_v, "synthetic series length", "synth_length");
    opt("--groups", groups_v, "synthetic group sizes, e.g. 4,4,4", "groups");
    opt("--noise-std", noise_v, "synthetic sensor noise", "noise_std");
    opt("--target-recipe", recipe_v, "synthetic target recipe", "target_recipe");
    opt("--segments", segments_v, "synthetic regime segments", "segments");
    return opts;
  };

  // gen-data ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "write a synthetic sensor CSV");
  gen->fallthrough();
  auto gen_opts = add_common(gen);

  // train ------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train on a CSV and evaluate on the test split");
  tr->fallthrough();
  std::string train_data;
  tr->add_option("data", train_data, "input CSV")->required();
  auto tr_opts = add_common(tr);

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "recompute test metrics from a checkpoint");
  ev->fallthrough();
  std::string eval_ck, eval_data;
  ev->add_option("checkpoint", eval_ck, "checkpoint file")->required();
  ev->add_option("--data", eval_data, "input CSV")->required();

  // inspect-graph ------------------------------------------------------------
  auto* ig = app.add_subcommand("inspect-graph",
                                "export adjacency + correlation heatmaps and their alignment");
  ig->fallthrough();
  std::string inspect_input;
  ig->add_option("input", inspect_input, "data CSV")->required();
  auto ig_opts = add_common(ig);

  // sweep --------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "grid sweep over kernel sizes and mixer counts");
  sw->fallthrough();
  std::string sweep_data, sweep_kernels, sweep_mixers;
  sw->add_option("data", sweep_data, "input CSV")->required();
  sw->add_option("--kernels", sweep_kernels, "comma list of kernel sizes");
  sw->add_option("--mixer-grid", sweep_mixers, "comma list of mixer counts");
  auto sw_opts = add_common(sw);

  CLI11_PARSE(app, argc, argv);

  try {
    auto collect = [&](auto& opts) {
      FlagOverrides ov;
      for (const auto& [option, target] : opts) {
        ov.add_if(option, target.second, *target.first);
      }
      if (seed_opt->count() > 0) ov.pairs.emplace_back("seed", seed_value);
      return ov;
    };
    const fs::path out_dir = out_opt->count() > 0 ? fs::path(out_value) : fs::path(".");

    if (gen->parsed()) {
      RunConfig cfg = resolve_config(config_path, collect(gen_opts));
      cfg.synth.validate();
      const fs::path out_path =
          out_opt->count() > 0 ? fs::path(out_value) : fs::path("synthetic.csv");
      return cmd_gen_data(cfg, out_path);
    }
    if (tr->parsed()) {
      RunConfig cfg = resolve_config(config_path, collect(tr_opts));
      return cmd_train(cfg, train_data, out_dir);
    }
    if (ev->parsed()) {
      return cmd_eval(eval_ck, eval_data, out_dir, std::nullopt);
    }
    if (ig->parsed()) {
      RunConfig cfg = resolve_config(config_path, collect(ig_opts));
      return cmd_inspect_graph(cfg, inspect_input, out_dir);
    }
    if (sw->parsed()) {
      RunConfig cfg = resolve_config(config_path, collect(sw_opts));
      const fs::path out_path =
          out_opt->count() > 0 ? fs::path(out_value) / "sweep.csv" : fs::path("sweep.csv");
      return cmd_sweep(cfg, sweep_data, out_path, sweep_kernels, sweep_mixers);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
