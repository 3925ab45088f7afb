// soilwave - soil humidity estimation from LoRa uplink signal strength.
// One subcommand per pipeline stage; every command writes a run manifest
// next to its primary output and is byte-deterministic for a fixed seed.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "soilwave/energy.hpp"
#include "soilwave/error.hpp"
#include "soilwave/harness.hpp"
#include "soilwave/lstm.hpp"
#include "soilwave/preprocess.hpp"
#include "soilwave/simulator.hpp"
#include "soilwave/svr.hpp"
#include "soilwave/telemetry.hpp"
#include "soilwave/version.hpp"
#include "soilwave/detail/text_util.hpp"

namespace {

namespace sw = soilwave;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sw::StorageError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw sw::StorageError("read failed for '" + path + "'");
  return std::move(ss).str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sw::StorageError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw sw::StorageError("write failed for '" + path + "'");
}

void write_manifest(const std::string& command, const json& resolved, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  if (outputs.empty()) return;
  json manifest{{"command", command},
                {"tool_version", sw::kVersion},
                {"seed", seed},
                {"config_hash", sw::detail::fnv1a_hex(resolved.dump())},
                {"inputs", inputs},
                {"outputs", outputs}};
  write_file(outputs.front() + ".manifest.json", manifest.dump(2) + "\n");
}

sw::telemetry::RecordSet load_records(const std::string& path) {
  if (path == "-") return sw::telemetry::decode_uplink_stream(std::cin);
  return sw::telemetry::load_any(path);
}

// Per-gateway (ts-ordered) series of one signal plus ground-truth humidity.
struct GatewaySeries {
  std::vector<double> humidity;
  std::vector<double> rssi;
  std::vector<double> snr;
  std::vector<std::int64_t> ts;
};

GatewaySeries gateway_series(const sw::telemetry::RecordSet& set, const std::string& gateway,
                             bool need_humidity) {
  GatewaySeries out;
  for (const auto& rec : set.records()) {
    if (rec.gateway_id != gateway) continue;
    if (need_humidity && !rec.soil_humidity) continue;
    out.rssi.push_back(rec.rssi);
    out.snr.push_back(rec.snr);
    out.ts.push_back(rec.ts);
    out.humidity.push_back(rec.soil_humidity.value_or(0.0));
  }
  if (out.ts.empty()) {
    throw sw::ArgumentError("no usable records for gateway '" + gateway + "'");
  }
  return out;
}

std::string default_gateway(const sw::telemetry::RecordSet& set) {
  if (set.gateways().empty()) throw sw::ArgumentError("record set has no gateways");
  return set.gateways().front();
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOpts {
  std::string config;
  std::string out;
  std::string format = "csv";
  double days = 10.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_simulate(const SimulateOpts& opt) {
  sw::sim::SimConfig cfg =
      opt.config.empty() ? sw::sim::default_sim_config() : sw::sim::sim_config_from_json(read_file(opt.config));
  if (opt.seed_given) cfg.seed = opt.seed;

  std::size_t n = opt.samples > 0
                      ? static_cast<std::size_t>(opt.samples)
                      : static_cast<std::size_t>(opt.days * 86400.0 / static_cast<double>(cfg.sample_period));
  auto humidity = sw::sim::simulate_humidity(cfg.humidity, n, cfg.sample_period, cfg.seed);
  auto set = sw::sim::simulate_uplinks(humidity, cfg);

  if (opt.format == "csv") {
    write_file(opt.out, sw::telemetry::to_csv(set));
  } else if (opt.format == "json" || opt.format == "jsonl") {
    write_file(opt.out, sw::telemetry::to_jsonl(set));
  } else if (opt.format == "store") {
    sw::telemetry::store_save(set, opt.out);
  } else {
    throw sw::ArgumentError("unknown format '" + opt.format + "'");
  }

  json resolved = json::parse(sw::sim::to_json(cfg));
  resolved["samples"] = n;
  resolved["output_format"] = opt.format;
  std::vector<std::string> inputs;
  if (!opt.config.empty()) inputs.push_back(opt.config);
  write_manifest("simulate", resolved, cfg.seed, inputs, {opt.out});
}

// ---- ingest -----------------------------------------------------------------

struct IngestOpts {
  std::string in;
  std::string out;
};

void run_ingest(const IngestOpts& opt) {
  auto set = load_records(opt.in);
  sw::telemetry::store_save(set, opt.out);
  json resolved{{"in", opt.in}, {"records", set.size()}};
  write_manifest("ingest", resolved, 0, {opt.in}, {opt.out});
}

// ---- decompose --------------------------------------------------------------

struct DecomposeOpts {
  std::string in;
  std::string out;
  std::string gateway;
  std::string signal = "rssi";
  std::size_t window = 24;
};

void run_decompose(const DecomposeOpts& opt) {
  auto set = load_records(opt.in);
  std::string gateway = opt.gateway.empty() ? default_gateway(set) : opt.gateway;
  auto series = gateway_series(set, gateway, false);
  const auto& signal = opt.signal == "snr" ? series.snr : series.rssi;
  if (opt.signal != "rssi" && opt.signal != "snr") {
    throw sw::ArgumentError("signal must be 'rssi' or 'snr'");
  }
  auto dec = sw::preprocess::decompose_fading(signal, opt.window);

  std::string csv = "ts,raw,long_term,short_term\n";
  for (std::size_t i = 0; i < dec.raw.size(); ++i) {
    csv += std::to_string(series.ts[i]);
    csv.push_back(',');
    csv += sw::detail::format_double(dec.raw[i]);
    csv.push_back(',');
    csv += sw::detail::format_double(dec.long_term[i]);
    csv.push_back(',');
    csv += sw::detail::format_double(dec.short_term[i]);
    csv.push_back('\n');
  }
  write_file(opt.out, csv);
  json resolved{{"gateway", gateway}, {"signal", opt.signal}, {"window", opt.window}};
  write_manifest("decompose", resolved, 0, {opt.in}, {opt.out});
}

// ---- aggregate / plot class scatter -----------------------------------------

struct AggregateOpts {
  std::string in;
  std::string out;
  std::string gateway;
  double low = 29.0;
  double high = 39.0;
  double width = 0.5;
};

std::string class_rows_csv(const std::vector<sw::preprocess::HumidityClassRow>& rows) {
  std::string csv = "class_low,class_high,mean_rssi,mean_snr,count\n";
  for (const auto& r : rows) {
    csv += sw::detail::format_double(r.class_low);
    csv.push_back(',');
    csv += sw::detail::format_double(r.class_high);
    csv.push_back(',');
    csv += sw::detail::format_double(r.mean_rssi);
    csv.push_back(',');
    csv += sw::detail::format_double(r.mean_snr);
    csv.push_back(',');
    csv += std::to_string(r.count);
    csv.push_back('\n');
  }
  return csv;
}

void run_aggregate(const AggregateOpts& opt) {
  auto set = load_records(opt.in);
  std::string gateway = opt.gateway.empty() ? default_gateway(set) : opt.gateway;
  auto series = gateway_series(set, gateway, true);
  auto rows = sw::preprocess::aggregate_classes(series.humidity, series.rssi, series.snr, opt.low,
                                                opt.high, opt.width);
  write_file(opt.out, class_rows_csv(rows));
  json resolved{{"gateway", gateway}, {"low", opt.low}, {"high", opt.high}, {"width", opt.width}};
  write_manifest("aggregate", resolved, 0, {opt.in}, {opt.out});
}

// ---- correlate ---------------------------------------------------------------

struct CorrelateOpts {
  std::string in;
  std::string out;
  std::string primary;
  bool classes = false;
  double low = 29.0;
  double high = 39.0;
  double width = 0.5;
};

void run_correlate(const CorrelateOpts& opt) {
  auto set = load_records(opt.in);
  sw::preprocess::AlignPolicy policy{opt.primary};
  auto ds = sw::preprocess::align_gateways(set, policy);

  std::vector<std::string> labels{"humidity"};
  labels.insert(labels.end(), ds.feature_names.begin(), ds.feature_names.end());

  std::vector<std::vector<double>> series(labels.size());
  if (!opt.classes) {
    series[0].assign(ds.targets.data(), ds.targets.data() + ds.targets.size());
    for (Eigen::Index c = 0; c < ds.cols(); ++c) {
      series[static_cast<std::size_t>(c) + 1].assign(ds.features.col(c).data(),
                                                     ds.features.col(c).data() + ds.rows());
    }
  } else {
    // One row per humidity class: class midpoint vs per-class signal means.
    std::vector<double> humidity(ds.targets.data(), ds.targets.data() + ds.targets.size());
    for (Eigen::Index c = 0; c < ds.cols(); ++c) {
      std::vector<double> col(ds.features.col(c).data(), ds.features.col(c).data() + ds.rows());
      auto rows = sw::preprocess::aggregate_classes(humidity, col, opt.low, opt.high, opt.width);
      if (rows.size() < 2) throw sw::DegenerateInputError("need at least 2 humidity classes");
      if (c == 0) {
        for (const auto& r : rows) series[0].push_back(0.5 * (r.class_low + r.class_high));
      }
      for (const auto& r : rows) series[static_cast<std::size_t>(c) + 1].push_back(r.mean_rssi);
    }
  }

  std::string csv;
  for (const auto& label : labels) {
    csv.push_back(',');
    csv += label;
  }
  csv.push_back('\n');
  for (std::size_t r = 0; r < labels.size(); ++r) {
    csv += labels[r];
    for (std::size_t c = 0; c < labels.size(); ++c) {
      csv.push_back(',');
      double v = r == c ? 1.0 : sw::preprocess::pearson(series[r], series[c]);
      csv += sw::detail::format_double(v);
    }
    csv.push_back('\n');
  }
  write_file(opt.out, csv);
  json resolved{{"primary", opt.primary}, {"classes", opt.classes}};
  write_manifest("correlate", resolved, 0, {opt.in}, {opt.out});
}

// ---- dataset ----------------------------------------------------------------

struct DatasetOpts {
  std::string in;
  std::string out;
  std::string primary;
  double train_fraction = 0.8;
  bool decompose_features = false;
  std::size_t decompose_window = 24;
};

void run_dataset(const DatasetOpts& opt) {
  auto set = load_records(opt.in);
  sw::preprocess::AlignPolicy policy{opt.primary};
  auto ds = sw::preprocess::align_gateways(set, policy);
  if (opt.decompose_features) {
    ds = sw::preprocess::substitute_decomposed(ds, opt.decompose_window);
  }
  auto [train, test] = sw::preprocess::chronological_split(ds, opt.train_fraction);
  write_file(opt.out, sw::preprocess::dataset_pair_to_json(train, test));
  json resolved{{"primary", opt.primary},
                {"train_fraction", opt.train_fraction},
                {"decompose_features", opt.decompose_features},
                {"decompose_window", opt.decompose_window}};
  write_manifest("dataset", resolved, 0, {opt.in}, {opt.out});
}

// ---- train-svr ---------------------------------------------------------------

struct TrainSvrOpts {
  std::string in;
  std::string out;
  double gamma = 1.0;
  double c = 0.1;
  double epsilon = 0.1;
  double tol = 1e-3;
  std::size_t max_passes = 10000;
  std::uint64_t seed = 0;
  bool grid = false;
  std::string grid_out;
  std::vector<double> grid_gamma{1.0};
  std::vector<double> grid_c{0.01, 0.1};
  std::vector<double> grid_eps{0.1};
  std::size_t folds = 3;
  std::size_t jobs = 1;
};

void run_train_svr(const TrainSvrOpts& opt) {
  auto [train, test] = sw::preprocess::dataset_pair_from_json(read_file(opt.in));
  auto lag = sw::preprocess::make_lag_features(train);

  sw::svr::SvrHyper hyper{opt.c, opt.epsilon, opt.gamma};
  std::vector<std::string> outputs{opt.out};
  if (opt.grid) {
    auto result =
        sw::svr::grid_search_svr(lag.features, lag.targets, opt.grid_gamma, opt.grid_c,
                                 opt.grid_eps, opt.folds, opt.tol, opt.max_passes, opt.seed,
                                 opt.jobs);
    hyper = result.best;
    std::string grid_path = opt.grid_out.empty() ? opt.out + ".grid.csv" : opt.grid_out;
    write_file(grid_path, sw::svr::grid_table_to_csv(result));
    outputs.push_back(grid_path);
    std::cout << "grid best: gamma=" << hyper.gamma << " c=" << hyper.c
              << " epsilon=" << hyper.epsilon << "\n";
  }

  auto model = sw::svr::svr_train(lag.features, lag.targets, hyper, opt.tol, opt.max_passes,
                                  opt.seed);
  write_file(opt.out, sw::svr::to_json(model));
  json resolved{{"gamma", hyper.gamma}, {"c", hyper.c},       {"epsilon", hyper.epsilon},
                {"tol", opt.tol},       {"grid", opt.grid},   {"folds", opt.folds},
                {"max_passes", opt.max_passes}};
  write_manifest("train-svr", resolved, opt.seed, {opt.in}, outputs);
}

// ---- train-lstm --------------------------------------------------------------

struct TrainLstmOpts {
  std::string in;
  std::string out;
  std::string history_out;
  std::size_t steps = 18;
  std::size_t layer1 = 32;
  std::size_t layer2 = 32;
  double dropout = 0.2;
  double lr = 0.001;
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

// Final val_fraction of the train windows become the validation slice.
std::pair<sw::preprocess::WindowedDataset, sw::preprocess::WindowedDataset> split_validation(
    const sw::preprocess::WindowedDataset& all, double val_fraction) {
  auto m = all.size();
  auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(m) * val_fraction));
  if (n_val == 0 || n_val >= m) {
    return {all, sw::preprocess::WindowedDataset{{}, Eigen::VectorXd(0), all.steps}};
  }
  sw::preprocess::WindowedDataset train, val;
  train.steps = val.steps = all.steps;
  train.windows.assign(all.windows.begin(), all.windows.begin() + static_cast<long>(m - n_val));
  val.windows.assign(all.windows.begin() + static_cast<long>(m - n_val), all.windows.end());
  train.targets = all.targets.head(static_cast<Eigen::Index>(m - n_val));
  val.targets = all.targets.tail(static_cast<Eigen::Index>(n_val));
  return {train, val};
}

void run_train_lstm(const TrainLstmOpts& opt) {
  auto [train_ds, test_ds] = sw::preprocess::dataset_pair_from_json(read_file(opt.in));
  auto all = sw::preprocess::make_windows(train_ds, opt.steps);
  auto [train, val] = split_validation(all, opt.val_fraction);

  sw::lstm::ModelSpec spec;
  spec.input_width = train_ds.cols();
  spec.layer1_units = static_cast<Eigen::Index>(opt.layer1);
  spec.layer2_units = static_cast<Eigen::Index>(opt.layer2);
  spec.dropout_p = opt.dropout;
  sw::lstm::TrainConfig cfg;
  cfg.lr = opt.lr;
  cfg.epochs = opt.epochs;
  cfg.batch_size = opt.batch;
  cfg.seed = opt.seed;

  auto [model, history] = sw::lstm::train_lstm(train, val, spec, cfg);
  write_file(opt.out, sw::lstm::to_json(model, cfg));
  std::string history_path = opt.history_out.empty() ? opt.out + ".history.csv" : opt.history_out;
  write_file(history_path, sw::lstm::history_to_csv(history));

  json resolved{{"steps", opt.steps},   {"layer1", opt.layer1},
                {"layer2", opt.layer2}, {"dropout", opt.dropout},
                {"lr", opt.lr},         {"epochs", opt.epochs},
                {"batch", opt.batch},   {"val_fraction", opt.val_fraction}};
  write_manifest("train-lstm", resolved, opt.seed, {opt.in}, {opt.out, history_path});
}

// ---- evaluate / plot predictions ----------------------------------------------

struct EvaluateOpts {
  std::string model;
  std::string in;
  std::string out;
  std::string predictions_out;
  std::size_t steps = 18;
};

struct EvalResult {
  Eigen::VectorXd pred;
  Eigen::VectorXd target;
};

EvalResult eval_model_on_test(const std::string& model_text, const sw::preprocess::Dataset& test,
                              std::size_t steps) {
  json peek = json::parse(model_text, nullptr, false);
  std::string format = peek.is_object() ? peek.value("format", "") : "";
  EvalResult r;
  if (format == "soilwave-svr") {
    auto model = sw::svr::svr_model_from_json(model_text);
    auto lag = sw::preprocess::make_lag_features(test);
    r.pred = sw::harness::predictions(model, lag);
    r.target = lag.targets;
  } else if (format == "soilwave-lstm") {
    auto [model, cfg] = sw::lstm::lstm_model_from_json(model_text);
    auto windows = sw::preprocess::make_windows(test, steps);
    r.pred = sw::harness::predictions(model, windows);
    r.target = windows.targets;
  } else {
    throw sw::FormatError("unrecognized model document");
  }
  return r;
}

void run_evaluate(const EvaluateOpts& opt) {
  std::string model_text = read_file(opt.model);
  auto [train, test] = sw::preprocess::dataset_pair_from_json(read_file(opt.in));
  auto r = eval_model_on_test(model_text, test, opt.steps);

  auto metrics = sw::harness::compute_metrics(r.pred, r.target);
  std::string body;
  if (test.norm) {
    const auto& range = test.norm->target;
    Eigen::VectorXd dp(r.pred.size()), dt(r.target.size());
    for (Eigen::Index i = 0; i < r.pred.size(); ++i) {
      dp(i) = sw::preprocess::denormalize(r.pred(i), range);
      dt(i) = sw::preprocess::denormalize(r.target(i), range);
    }
    auto denorm = sw::harness::compute_metrics(dp, dt);
    body = sw::harness::metrics_to_json(metrics, &range, &denorm);
  } else {
    body = sw::harness::metrics_to_json(metrics);
  }
  write_file(opt.out, body + "\n");
  std::vector<std::string> outputs{opt.out};
  if (!opt.predictions_out.empty()) {
    write_file(opt.predictions_out, sw::harness::predictions_to_csv(r.pred, r.target));
    outputs.push_back(opt.predictions_out);
  }
  std::cout << body << "\n";
  json resolved{{"model", opt.model}, {"steps", opt.steps}};
  write_manifest("evaluate", resolved, 0, {opt.model, opt.in}, outputs);
}

// ---- sweep ---------------------------------------------------------------------

struct SweepOpts {
  std::string in;
  std::string out;
  std::size_t steps = 18;
  std::size_t batch = 32;
  double dropout = 0.2;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double epochs_scale = 1.0;
  bool timings = false;
  std::vector<std::size_t> grid_layer1{32};
  std::vector<std::size_t> grid_layer2{16, 32};
  std::vector<double> grid_lr{0.0001, 0.001};
  std::vector<std::size_t> grid_epochs{50, 100, 150, 200, 250};
};

void run_sweep(const SweepOpts& opt) {
  auto [train_ds, test_ds] = sw::preprocess::dataset_pair_from_json(read_file(opt.in));
  auto all = sw::preprocess::make_windows(train_ds, opt.steps);
  auto [train, val] = split_validation(all, opt.val_fraction);

  sw::harness::SweepData data;
  data.train = std::move(train);
  data.val = std::move(val);
  data.test = sw::preprocess::make_windows(test_ds, opt.steps);

  sw::harness::SweepGrid grid;
  grid.layer1 = opt.grid_layer1;
  grid.layer2 = opt.grid_layer2;
  grid.lr = opt.grid_lr;
  grid.epochs = opt.grid_epochs;
  if (opt.epochs_scale != 1.0) {
    for (auto& e : grid.epochs) {
      e = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(e) * opt.epochs_scale)));
    }
  }

  auto rows = sw::harness::sweep_lstm(data, grid, opt.seed, opt.batch, opt.dropout, opt.jobs);
  if (!opt.timings) {
    // Wall-clock readings vary run to run; they are reported only on request
    // so that identical invocations stay byte-identical.
    for (auto& r : rows) r.wall_seconds = 0.0;
  }
  write_file(opt.out, sw::harness::sweep_to_csv(rows));

  std::size_t best = sw::harness::argmin_mse(rows);
  std::cout << "best row " << best << ": layer1=" << rows[best].layer1
            << " layer2=" << rows[best].layer2 << " lr=" << rows[best].lr
            << " epochs=" << rows[best].epochs << " mse=" << rows[best].mse
            << " mae=" << rows[best].mae << "\n";

  json resolved{{"steps", opt.steps},
                {"batch", opt.batch},
                {"dropout", opt.dropout},
                {"val_fraction", opt.val_fraction},
                {"epochs_scale", opt.epochs_scale},
                {"grid",
                 {{"layer1", grid.layer1},
                  {"layer2", grid.layer2},
                  {"lr", grid.lr},
                  {"epochs", grid.epochs}}}};
  write_manifest("sweep", resolved, opt.seed, {opt.in}, {opt.out});
}

// ---- lifetime --------------------------------------------------------------------

struct LifetimeOpts {
  std::string profile = "sensor";
  std::string config;
  std::string mcu;
  std::string out;
};

void run_lifetime(const LifetimeOpts& opt) {
  sw::energy::BatterySpec battery = sw::energy::builtin_profiles().battery;
  sw::energy::EnergyProfile profile;
  if (!opt.config.empty()) {
    profile = sw::energy::profile_from_json(read_file(opt.config), &battery);
  } else {
    profile = sw::energy::builtin_profile(opt.profile);
  }

  json report = json::parse(sw::energy::lifetime_report_json(profile, battery));
  if (!opt.mcu.empty()) {
    const auto& mcus = sw::energy::builtin_profiles().mcus;
    auto it = std::find_if(mcus.begin(), mcus.end(),
                           [&](const auto& m) { return m.name == opt.mcu; });
    if (it == mcus.end()) throw sw::ArgumentError("unknown MCU '" + opt.mcu + "'");
    report["mcu"] = {{"name", it->name}, {"active_ma", it->active_ma}};
  }
  std::string body = report.dump(2);
  std::cout << body << "\n";
  if (!opt.out.empty()) {
    write_file(opt.out, body + "\n");
    json resolved{{"profile", opt.profile}, {"config", opt.config}, {"mcu", opt.mcu}};
    write_manifest("lifetime", resolved, 0,
                   opt.config.empty() ? std::vector<std::string>{} : std::vector<std::string>{opt.config},
                   {opt.out});
  }
}

// ---- plot-data --------------------------------------------------------------------

struct PlotOpts {
  std::string kind;
  std::string in;
  std::string model;
  std::string out;
  std::string gateway;
  double low = 29.0;
  double high = 39.0;
  double width = 0.5;
  std::size_t steps = 18;
};

void run_plot(const PlotOpts& opt) {
  std::vector<std::string> inputs{opt.in};
  if (opt.kind == "class-scatter") {
    auto set = load_records(opt.in);
    std::string gateway = opt.gateway.empty() ? default_gateway(set) : opt.gateway;
    auto series = gateway_series(set, gateway, true);
    auto rows = sw::preprocess::aggregate_classes(series.humidity, series.rssi, series.snr,
                                                  opt.low, opt.high, opt.width);
    std::string csv = "class_mid,mean_rssi,mean_snr,count\n";
    for (const auto& r : rows) {
      csv += sw::detail::format_double(0.5 * (r.class_low + r.class_high));
      csv.push_back(',');
      csv += sw::detail::format_double(r.mean_rssi);
      csv.push_back(',');
      csv += sw::detail::format_double(r.mean_snr);
      csv.push_back(',');
      csv += std::to_string(r.count);
      csv.push_back('\n');
    }
    write_file(opt.out, csv);
  } else if (opt.kind == "predictions") {
    if (opt.model.empty()) throw sw::ArgumentError("plot-data predictions needs --model");
    auto [train, test] = sw::preprocess::dataset_pair_from_json(read_file(opt.in));
    auto r = eval_model_on_test(read_file(opt.model), test, opt.steps);
    write_file(opt.out, sw::harness::predictions_to_csv(r.pred, r.target));
    inputs.push_back(opt.model);
  } else if (opt.kind == "history") {
    // Validate and re-emit a training history table.
    std::string text = read_file(opt.in);
    auto lines = sw::detail::split_lines(text);
    if (lines.empty() || lines[0] != "epoch,train_loss,val_loss") {
      throw sw::FormatError("not a training history CSV");
    }
    std::string csv;
    for (const auto& line : lines) {
      if (line.empty()) continue;
      csv += std::string(line);
      csv.push_back('\n');
    }
    write_file(opt.out, csv);
  } else {
    throw sw::ArgumentError("unknown plot kind '" + opt.kind + "'");
  }
  json resolved{{"kind", opt.kind}};
  write_manifest("plot-data", resolved, 0, inputs, {opt.out});
}

}  // namespace

namespace {

int run_main(int argc, char** argv) {
  CLI::App app{"soil humidity estimation from LoRa uplink signal strength"};
  app.require_subcommand(1);
  std::function<void()> run;

  SimulateOpts sim_opt;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic uplink record set");
  sim->add_option("--config", sim_opt.config, "simulation config JSON");
  sim->add_option("--out", sim_opt.out, "output path")->required();
  sim->add_option("--format", sim_opt.format, "csv|json|jsonl|store")
      ->check(CLI::IsMember({"csv", "json", "jsonl", "store"}));
  sim->add_option("--days", sim_opt.days, "simulated duration in days");
  sim->add_option("--samples", sim_opt.samples, "explicit sample count (overrides --days)");
  sim->add_option("--seed", sim_opt.seed, "PRNG seed (overrides config)")
      ->each([&](const std::string&) { sim_opt.seed_given = true; });
  sim->callback([&] { run = [&] { run_simulate(sim_opt); }; });

  IngestOpts ing_opt;
  auto* ing = app.add_subcommand("ingest", "convert CSV or newline-JSON uplinks into a store");
  ing->add_option("--in", ing_opt.in, "input path or '-' for stdin JSONL")->required();
  ing->add_option("--out", ing_opt.out, "output store path")->required();
  ing->callback([&] { run = [&] { run_ingest(ing_opt); }; });

  DecomposeOpts dec_opt;
  auto* dec = app.add_subcommand("decompose", "split a signal into long/short-term components");
  dec->add_option("--in", dec_opt.in, "record set (csv/jsonl/store)")->required();
  dec->add_option("--out", dec_opt.out, "output CSV")->required();
  dec->add_option("--gateway", dec_opt.gateway, "gateway id (default: first)");
  dec->add_option("--signal", dec_opt.signal, "rssi|snr")
      ->check(CLI::IsMember({"rssi", "snr"}));
  dec->add_option("--window", dec_opt.window, "trailing window length");
  dec->callback([&] { run = [&] { run_decompose(dec_opt); }; });

  AggregateOpts agg_opt;
  auto* agg = app.add_subcommand("aggregate", "per-humidity-class signal means");
  agg->add_option("--in", agg_opt.in, "record set")->required();
  agg->add_option("--out", agg_opt.out, "output CSV")->required();
  agg->add_option("--gateway", agg_opt.gateway, "gateway id (default: first)");
  agg->add_option("--low", agg_opt.low, "lowest class boundary");
  agg->add_option("--high", agg_opt.high, "highest class boundary");
  agg->add_option("--width", agg_opt.width, "class width in percent");
  agg->callback([&] { run = [&] { run_aggregate(agg_opt); }; });

  CorrelateOpts cor_opt;
  auto* cor = app.add_subcommand("correlate", "labeled correlation matrix");
  cor->add_option("--in", cor_opt.in, "record set")->required();
  cor->add_option("--out", cor_opt.out, "output CSV")->required();
  cor->add_option("--primary", cor_opt.primary, "primary gateway for alignment");
  cor->add_flag("--classes", cor_opt.classes, "correlate class means instead of raw samples");
  cor->add_option("--low", cor_opt.low, "lowest class boundary (class mode)");
  cor->add_option("--high", cor_opt.high, "highest class boundary (class mode)");
  cor->add_option("--width", cor_opt.width, "class width (class mode)");
  cor->callback([&] { run = [&] { run_correlate(cor_opt); }; });

  DatasetOpts ds_opt;
  auto* ds = app.add_subcommand("dataset", "build a normalized train/test dataset");
  ds->add_option("--in", ds_opt.in, "record set")->required();
  ds->add_option("--out", ds_opt.out, "output dataset JSON")->required();
  ds->add_option("--primary", ds_opt.primary, "primary gateway for alignment");
  ds->add_option("--train-fraction", ds_opt.train_fraction, "chronological train fraction");
  ds->add_flag("--decompose-features", ds_opt.decompose_features,
               "replace raw columns by long/short components");
  ds->add_option("--decompose-window", ds_opt.decompose_window, "decomposition window");
  ds->callback([&] { run = [&] { run_dataset(ds_opt); }; });

  TrainSvrOpts svr_opt;
  auto* tsvr = app.add_subcommand("train-svr", "train the kernel regression model");
  tsvr->add_option("--in", svr_opt.in, "dataset JSON")->required();
  tsvr->add_option("--out", svr_opt.out, "output model JSON")->required();
  tsvr->add_option("--gamma", svr_opt.gamma, "RBF width");
  tsvr->add_option("--c", svr_opt.c, "regularization weight");
  tsvr->add_option("--epsilon", svr_opt.epsilon, "tube half-width");
  tsvr->add_option("--tol", svr_opt.tol, "convergence tolerance");
  tsvr->add_option("--max-passes", svr_opt.max_passes, "sweep limit");
  tsvr->add_option("--seed", svr_opt.seed, "PRNG seed");
  tsvr->add_flag("--grid", svr_opt.grid, "grid-search hyperparameters first");
  tsvr->add_option("--grid-out", svr_opt.grid_out, "grid table CSV path");
  tsvr->add_option("--grid-gamma", svr_opt.grid_gamma, "gamma grid")->expected(-1);
  tsvr->add_option("--grid-c", svr_opt.grid_c, "C grid")->expected(-1);
  tsvr->add_option("--grid-epsilon", svr_opt.grid_eps, "epsilon grid")->expected(-1);
  tsvr->add_option("--folds", svr_opt.folds, "chronological folds");
  tsvr->add_option("--jobs", svr_opt.jobs, "parallel grid evaluations");
  tsvr->callback([&] { run = [&] { run_train_svr(svr_opt); }; });

  TrainLstmOpts lstm_opt;
  auto* tlstm = app.add_subcommand("train-lstm", "train the recurrent model");
  tlstm->add_option("--in", lstm_opt.in, "dataset JSON")->required();
  tlstm->add_option("--out", lstm_opt.out, "output model JSON")->required();
  tlstm->add_option("--history-out", lstm_opt.history_out, "loss history CSV path");
  tlstm->add_option("--steps", lstm_opt.steps, "window length");
  tlstm->add_option("--layer1", lstm_opt.layer1, "first layer units");
  tlstm->add_option("--layer2", lstm_opt.layer2, "second layer units");
  tlstm->add_option("--dropout", lstm_opt.dropout, "dropout probability");
  tlstm->add_option("--lr", lstm_opt.lr, "learning rate");
  tlstm->add_option("--epochs", lstm_opt.epochs, "training epochs");
  tlstm->add_option("--batch", lstm_opt.batch, "batch size");
  tlstm->add_option("--val-fraction", lstm_opt.val_fraction, "validation slice of train");
  tlstm->add_option("--seed", lstm_opt.seed, "PRNG seed");
  tlstm->callback([&] { run = [&] { run_train_lstm(lstm_opt); }; });

  EvaluateOpts eval_opt;
  auto* ev = app.add_subcommand("evaluate", "metrics of a model on the test split");
  ev->add_option("--model", eval_opt.model, "model JSON")->required();
  ev->add_option("--in", eval_opt.in, "dataset JSON")->required();
  ev->add_option("--out", eval_opt.out, "metrics JSON path")->required();
  ev->add_option("--predictions-out", eval_opt.predictions_out, "predictions CSV path");
  ev->add_option("--steps", eval_opt.steps, "window length (recurrent models)");
  ev->callback([&] { run = [&] { run_evaluate(eval_opt); }; });

  SweepOpts sweep_opt;
  auto* sw_cmd = app.add_subcommand("sweep", "hyperparameter sweep for the recurrent model");
  sw_cmd->add_option("--in", sweep_opt.in, "dataset JSON")->required();
  sw_cmd->add_option("--out", sweep_opt.out, "sweep table CSV")->required();
  sw_cmd->add_option("--steps", sweep_opt.steps, "window length");
  sw_cmd->add_option("--batch", sweep_opt.batch, "batch size");
  sw_cmd->add_option("--dropout", sweep_opt.dropout, "dropout probability");
  sw_cmd->add_option("--val-fraction", sweep_opt.val_fraction, "validation slice of train");
  sw_cmd->add_option("--seed", sweep_opt.seed, "PRNG seed");
  sw_cmd->add_option("--jobs", sweep_opt.jobs, "parallel rows");
  sw_cmd->add_option("--epochs-scale", sweep_opt.epochs_scale,
                     "multiply every epochs value (desk-scale runs)");
  sw_cmd->add_flag("--timings", sweep_opt.timings, "report wall-clock seconds per row");
  sw_cmd->add_option("--grid-layer1", sweep_opt.grid_layer1, "layer1 grid")->expected(-1);
  sw_cmd->add_option("--grid-layer2", sweep_opt.grid_layer2, "layer2 grid")->expected(-1);
  sw_cmd->add_option("--grid-lr", sweep_opt.grid_lr, "learning-rate grid")->expected(-1);
  sw_cmd->add_option("--grid-epochs", sweep_opt.grid_epochs, "epochs grid")->expected(-1);
  sw_cmd->callback([&] { run = [&] { run_sweep(sweep_opt); }; });

  LifetimeOpts life_opt;
  auto* life = app.add_subcommand("lifetime", "battery lifetime from a duty-cycle profile");
  life->add_option("--profile", life_opt.profile, "builtin profile: sensor|beacon")
      ->check(CLI::IsMember({"sensor", "beacon"}));
  life->add_option("--config", life_opt.config, "profile JSON (overrides --profile)");
  life->add_option("--mcu", life_opt.mcu, "include one MCU's active current in the report");
  life->add_option("--out", life_opt.out, "also write the report to this path");
  life->callback([&] { run = [&] { run_lifetime(life_opt); }; });

  PlotOpts plot_opt;
  auto* plot = app.add_subcommand("plot-data", "emit plot-ready CSV tables");
  plot->add_option("--kind", plot_opt.kind, "class-scatter|predictions|history")->required();
  plot->add_option("--in", plot_opt.in, "input artifact")->required();
  plot->add_option("--model", plot_opt.model, "model JSON (predictions)");
  plot->add_option("--out", plot_opt.out, "output CSV")->required();
  plot->add_option("--gateway", plot_opt.gateway, "gateway id (class-scatter)");
  plot->add_option("--low", plot_opt.low, "lowest class boundary");
  plot->add_option("--high", plot_opt.high, "highest class boundary");
  plot->add_option("--width", plot_opt.width, "class width");
  plot->add_option("--steps", plot_opt.steps, "window length (recurrent models)");
  plot->callback([&] { run = [&] { run_plot(plot_opt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (...) {
    std::cerr << "error: unexpected failure\n";
    return 1;
  }
}
