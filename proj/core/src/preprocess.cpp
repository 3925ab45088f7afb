#include "soilwave/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>

#include "soilwave/error.hpp"

namespace soilwave::preprocess {

namespace {

using nlohmann::json;

json dataset_to_json_obj(const Dataset& ds) {
  json features = json::array();
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < ds.cols(); ++c) row.push_back(ds.features(r, c));
    features.push_back(std::move(row));
  }
  json targets = json::array();
  for (Eigen::Index r = 0; r < ds.targets.size(); ++r) targets.push_back(ds.targets(r));
  json obj{{"features", std::move(features)}, {"targets", std::move(targets)}};
  if (!ds.ts.empty()) obj["ts"] = ds.ts;
  return obj;
}

Dataset dataset_from_json_obj(const json& obj, const std::vector<std::string>& names,
                              const std::optional<NormParams>& norm) {
  Dataset ds;
  ds.feature_names = names;
  ds.norm = norm;
  const auto& features = obj.at("features");
  const auto& targets = obj.at("targets");
  if (features.size() != targets.size()) {
    throw DecodeError("dataset features and targets disagree on row count");
  }
  Eigen::Index n = static_cast<Eigen::Index>(features.size());
  Eigen::Index d = static_cast<Eigen::Index>(names.size());
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = features[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw DecodeError("dataset row has wrong width");
    }
    for (Eigen::Index c = 0; c < d; ++c) ds.features(r, c) = row[static_cast<std::size_t>(c)];
    ds.targets(r) = targets[static_cast<std::size_t>(r)].get<double>();
  }
  if (obj.contains("ts")) ds.ts = obj.at("ts").get<std::vector<std::int64_t>>();
  return ds;
}

}  // namespace

FadingDecomposition decompose_fading(const std::vector<double>& raw, std::size_t window_len) {
  if (window_len == 0) throw ArgumentError("window_len must be >= 1");
  if (raw.empty()) throw ArgumentError("series must not be empty");

  FadingDecomposition out;
  out.raw = raw;
  out.window_len = window_len;
  out.long_term.resize(raw.size());
  out.short_term.resize(raw.size());

  // Direct per-window summation, not a running sum: no accumulation drift.
  for (std::size_t t = 0; t < raw.size(); ++t) {
    std::size_t begin = t + 1 >= window_len ? t + 1 - window_len : 0;
    double sum = 0.0;
    for (std::size_t i = begin; i <= t; ++i) sum += raw[i];
    out.long_term[t] = sum / static_cast<double>(t - begin + 1);
    out.short_term[t] = raw[t] - out.long_term[t];
  }
  return out;
}

std::vector<HumidityClassRow> aggregate_classes(const std::vector<double>& humidity,
                                                const std::vector<double>& rssi,
                                                const std::vector<double>& snr, double low,
                                                double high, double width) {
  if (humidity.size() != rssi.size() || (!snr.empty() && snr.size() != humidity.size())) {
    throw ArgumentError("humidity and signal series must have equal lengths");
  }
  if (!(width > 0.0)) throw ArgumentError("class width must be > 0");
  if (!(low < high)) throw ArgumentError("class range requires low < high");

  struct Acc {
    double rssi_sum = 0.0;
    double snr_sum = 0.0;
    std::size_t count = 0;
  };
  std::map<long, Acc> classes;
  for (std::size_t i = 0; i < humidity.size(); ++i) {
    double h = humidity[i];
    if (h < low || h >= high) continue;
    long k = static_cast<long>(std::floor((h - low) / width));
    Acc& acc = classes[k];
    acc.rssi_sum += rssi[i];
    if (!snr.empty()) acc.snr_sum += snr[i];
    acc.count += 1;
  }

  std::vector<HumidityClassRow> rows;
  rows.reserve(classes.size());
  for (const auto& [k, acc] : classes) {
    HumidityClassRow row;
    row.class_low = low + static_cast<double>(k) * width;
    row.class_high = low + static_cast<double>(k + 1) * width;
    row.mean_rssi = acc.rssi_sum / static_cast<double>(acc.count);
    row.mean_snr = snr.empty() ? 0.0 : acc.snr_sum / static_cast<double>(acc.count);
    row.count = acc.count;
    rows.push_back(row);
  }
  return rows;
}

std::vector<HumidityClassRow> aggregate_classes(const std::vector<double>& humidity,
                                                const std::vector<double>& signal, double low,
                                                double high, double width) {
  return aggregate_classes(humidity, signal, {}, low, high, width);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("series must have equal lengths");
  if (x.size() < 2) throw ArgumentError("pearson needs at least 2 samples");

  // One-pass co-moment accumulation (Welford-style).
  double mean_x = 0.0, mean_y = 0.0, m2x = 0.0, m2y = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double n = static_cast<double>(i + 1);
    double dx = x[i] - mean_x;
    double dy = y[i] - mean_y;
    mean_x += dx / n;
    mean_y += dy / n;
    m2x += dx * (x[i] - mean_x);
    m2y += dy * (y[i] - mean_y);
    cxy += dx * (y[i] - mean_y);
  }
  if (m2x == 0.0 || m2y == 0.0) {
    throw DegenerateInputError("pearson is undefined for a zero-variance series");
  }
  double r = cxy / std::sqrt(m2x * m2y);
  return std::min(1.0, std::max(-1.0, r));
}

NormParams fit_minmax(const Dataset& ds) {
  if (ds.rows() == 0) throw ArgumentError("cannot fit normalization on an empty dataset");
  NormParams params;
  params.features.resize(static_cast<std::size_t>(ds.cols()));
  for (Eigen::Index c = 0; c < ds.cols(); ++c) {
    double lo = ds.features.col(c).minCoeff();
    double hi = ds.features.col(c).maxCoeff();
    if (!(hi > lo)) {
      const std::string& name = c < static_cast<Eigen::Index>(ds.feature_names.size())
                                    ? ds.feature_names[static_cast<std::size_t>(c)]
                                    : std::to_string(c);
      throw DegenerateInputError("constant column '" + name + "' cannot be normalized");
    }
    params.features[static_cast<std::size_t>(c)] = {lo, hi};
  }
  double tlo = ds.targets.minCoeff();
  double thi = ds.targets.maxCoeff();
  if (!(thi > tlo)) throw DegenerateInputError("constant column 'target' cannot be normalized");
  params.target = {tlo, thi};
  return params;
}

Dataset apply_minmax(const Dataset& ds, const NormParams& params) {
  if (params.features.size() != static_cast<std::size_t>(ds.cols())) {
    throw ArgumentError("normalization parameters do not match the dataset width");
  }
  Dataset out = ds;
  for (Eigen::Index c = 0; c < ds.cols(); ++c) {
    const auto& r = params.features[static_cast<std::size_t>(c)];
    out.features.col(c) = (ds.features.col(c).array() - r.min) / (r.max - r.min);
  }
  out.targets = (ds.targets.array() - params.target.min) / (params.target.max - params.target.min);
  out.norm = params;
  return out;
}

Dataset normalize_minmax(const Dataset& ds) { return apply_minmax(ds, fit_minmax(ds)); }

std::pair<Dataset, Dataset> split_rows(const Dataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train_fraction must be in (0, 1)");
  }
  Eigen::Index n = ds.rows();
  if (n < 2) throw ArgumentError("split needs at least 2 rows");
  auto n_train =
      static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train < 1 || n_train >= n) {
    throw ArgumentError("train_fraction leaves an empty train or test part");
  }

  auto take = [&](Eigen::Index begin, Eigen::Index count) {
    Dataset part;
    part.feature_names = ds.feature_names;
    part.features = ds.features.middleRows(begin, count);
    part.targets = ds.targets.segment(begin, count);
    part.norm = ds.norm;
    if (!ds.ts.empty()) {
      part.ts.assign(ds.ts.begin() + begin, ds.ts.begin() + begin + count);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n - n_train)};
}

std::pair<Dataset, Dataset> chronological_split(const Dataset& ds, double train_fraction) {
  auto [train, test] = split_rows(ds, train_fraction);
  NormParams params = fit_minmax(train);
  return {apply_minmax(train, params), apply_minmax(test, params)};
}

Dataset make_lag_features(const Dataset& ds) {
  Eigen::Index n = ds.rows();
  if (n < 2) throw ArgumentError("lag features need at least 2 rows");
  Eigen::Index d = ds.cols();

  Dataset out;
  out.feature_names = ds.feature_names;
  for (const auto& name : ds.feature_names) out.feature_names.push_back(name + "_lag1");
  out.features.resize(n - 1, 2 * d);
  out.features.leftCols(d) = ds.features.bottomRows(n - 1);
  out.features.rightCols(d) = ds.features.topRows(n - 1);
  out.targets = ds.targets.tail(n - 1);
  if (!ds.ts.empty()) out.ts.assign(ds.ts.begin() + 1, ds.ts.end());
  if (ds.norm) {
    NormParams params = *ds.norm;
    params.features.insert(params.features.end(), ds.norm->features.begin(),
                           ds.norm->features.end());
    out.norm = params;
  }
  return out;
}

WindowedDataset make_windows(const Dataset& ds, std::size_t steps) {
  if (steps == 0) throw ArgumentError("steps must be >= 1");
  auto n = static_cast<std::size_t>(ds.rows());
  if (n < steps) throw ArgumentError("dataset has fewer rows than one window");

  WindowedDataset out;
  out.steps = steps;
  std::size_t m = n - steps + 1;
  out.windows.reserve(m);
  out.targets.resize(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    out.windows.push_back(
        ds.features.middleRows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(steps)));
    out.targets(static_cast<Eigen::Index>(k)) =
        ds.targets(static_cast<Eigen::Index>(k + steps - 1));
  }
  return out;
}

Dataset align_gateways(const telemetry::RecordSet& set, const AlignPolicy& policy) {
  if (set.empty()) throw ArgumentError("record set must not be empty");
  const auto& gateways = set.gateways();

  std::string primary = policy.primary_gateway.empty() ? gateways.front() : policy.primary_gateway;
  if (std::find(gateways.begin(), gateways.end(), primary) == gateways.end()) {
    throw ArgumentError("primary gateway '" + primary + "' not present in the record set");
  }

  // Per-gateway record indices, already ts-ordered by RecordSet.
  std::map<std::string, std::vector<const telemetry::UplinkRecord*>> per_gw;
  for (const auto& rec : set.records()) per_gw[rec.gateway_id].push_back(&rec);

  Dataset out;
  for (const auto& gw : gateways) {
    out.feature_names.push_back(gw + "_rssi");
    out.feature_names.push_back(gw + "_snr");
  }

  const auto& primary_recs = per_gw.at(primary);
  std::vector<std::size_t> cursor(gateways.size(), 0);
  std::vector<const telemetry::UplinkRecord*> last(gateways.size(), nullptr);

  std::vector<double> targets;
  std::vector<std::int64_t> ts;
  std::vector<double> row(gateways.size() * 2);
  std::vector<std::vector<double>> rows;

  for (const auto* prec : primary_recs) {
    if (!prec->soil_humidity) continue;  // supervised rows need ground truth
    bool complete = true;
    for (std::size_t g = 0; g < gateways.size(); ++g) {
      const auto& recs = per_gw.at(gateways[g]);
      while (cursor[g] < recs.size() && recs[cursor[g]]->ts <= prec->ts) {
        last[g] = recs[cursor[g]];
        ++cursor[g];
      }
      if (last[g] == nullptr) {
        complete = false;  // leading gap: gateway not observed yet
        continue;
      }
      row[2 * g] = last[g]->rssi;
      row[2 * g + 1] = last[g]->snr;
    }
    if (!complete) continue;
    rows.push_back(row);
    targets.push_back(*prec->soil_humidity);
    ts.push_back(prec->ts);
  }

  if (rows.empty()) throw AlignmentError("gateways share no usable overlap");

  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(row.size()));
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    out.targets(static_cast<Eigen::Index>(r)) = targets[r];
  }
  out.ts = std::move(ts);
  return out;
}

Dataset substitute_decomposed(const Dataset& ds, std::size_t window_len) {
  if (ds.rows() == 0) throw ArgumentError("dataset must not be empty");
  Dataset out;
  out.targets = ds.targets;
  out.ts = ds.ts;
  out.features.resize(ds.rows(), ds.cols() * 2);
  for (Eigen::Index c = 0; c < ds.cols(); ++c) {
    std::vector<double> col(ds.features.col(c).data(), ds.features.col(c).data() + ds.rows());
    FadingDecomposition dec = decompose_fading(col, window_len);
    for (Eigen::Index r = 0; r < ds.rows(); ++r) {
      out.features(r, 2 * c) = dec.long_term[static_cast<std::size_t>(r)];
      out.features(r, 2 * c + 1) = dec.short_term[static_cast<std::size_t>(r)];
    }
    const std::string& name = ds.feature_names[static_cast<std::size_t>(c)];
    out.feature_names.push_back(name + "_long");
    out.feature_names.push_back(name + "_short");
  }
  return out;
}

std::string dataset_pair_to_json(const Dataset& train, const Dataset& test) {
  if (!train.norm || !test.norm) {
    throw ArgumentError("dataset pair must be normalized before serialization");
  }
  json norm{{"target", {{"min", train.norm->target.min}, {"max", train.norm->target.max}}}};
  json cols = json::array();
  for (const auto& r : train.norm->features) {
    cols.push_back({{"min", r.min}, {"max", r.max}});
  }
  norm["features"] = std::move(cols);

  json obj{{"format", "soilwave-dataset"},
           {"version", 1},
           {"feature_names", train.feature_names},
           {"norm", std::move(norm)},
           {"train", dataset_to_json_obj(train)},
           {"test", dataset_to_json_obj(test)}};
  return obj.dump();
}

std::pair<Dataset, Dataset> dataset_pair_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed dataset document: ") + e.what());
  }
  if (obj.value("format", "") != "soilwave-dataset") {
    throw FormatError("not a dataset document");
  }
  if (obj.value("version", 0) != 1) {
    throw FormatError("unsupported dataset version " + obj.value("version", json(0)).dump());
  }
  auto names = obj.at("feature_names").get<std::vector<std::string>>();
  NormParams params;
  for (const auto& r : obj.at("norm").at("features")) {
    params.features.push_back({r.at("min").get<double>(), r.at("max").get<double>()});
  }
  params.target = {obj.at("norm").at("target").at("min").get<double>(),
                   obj.at("norm").at("target").at("max").get<double>()};
  return {dataset_from_json_obj(obj.at("train"), names, params),
          dataset_from_json_obj(obj.at("test"), names, params)};
}

}  // namespace soilwave::preprocess
